"""Precision/recall validation of detected communities against ground-truth
households, including the distinct-day guest-device filter."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .community import Partition

NO_MATCH = -1


@dataclass(frozen=True)
class GroundTruthSet:
    communities: list[tuple[str, frozenset[str]]]
    provenance: str = ""

    def __post_init__(self):
        ids = [gt_id for gt_id, _ in self.communities]
        if len(ids) != len(set(ids)):
            raise ValueError("ground-truth ids must be unique")
        for gt_id, members in self.communities:
            if not members:
                raise ValueError(f"ground-truth community {gt_id} is empty")


@dataclass(frozen=True)
class PRRow:
    gt_id: str
    matched_community_id: int  # NO_MATCH when no community overlaps
    intersection_size: int
    precision: float
    recall: float
    no_match: bool = False


@dataclass(frozen=True)
class PRReport:
    rows: list[PRRow]
    mean_precision: float
    mean_recall: float
    count: int
    # size-weighted variants, weighting each household by its member count
    weighted_mean_precision: float
    weighted_mean_recall: float


def read_observations(path) -> list[tuple[str, str, date]]:
    """Read a ground-truth observation CSV: gt_id,device_id,observed_day."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    first = True
    for rec in reader:
        if not rec:
            continue
        if first and rec[0] == "gt_id":
            first = False
            continue
        first = False
        out.append((rec[0], rec[1], date.fromisoformat(rec[2])))
    return out


def guest_filter(
    observations: list[tuple[str, str, date]], min_days: int = 2
) -> GroundTruthSet:
    """Keep devices observed on strictly more than min_days distinct days;
    households left with no devices are dropped."""
    if min_days < 1:
        raise ValueError("min_days must be at least 1")
    days: dict[tuple[str, str], set[date]] = {}
    order: list[str] = []
    for gt_id, device_id, day in observations:
        if gt_id not in order:
            order.append(gt_id)
        days.setdefault((gt_id, device_id), set()).add(day)
    kept: dict[str, set[str]] = {g: set() for g in order}
    dropped_devices = 0
    for (gt_id, device_id), seen in days.items():
        if len(seen) > min_days:
            kept[gt_id].add(device_id)
        else:
            dropped_devices += 1
    communities = [
        (gt_id, frozenset(members)) for gt_id, members in kept.items() if members
    ]
    dropped_households = len(order) - len(communities)
    return GroundTruthSet(
        communities=communities,
        provenance=(
            f"guest_filter(min_days={min_days}): dropped {dropped_devices} guest "
            f"devices, {dropped_households} all-guest households"
        ),
    )


def unfiltered_ground_truth(observations: list[tuple[str, str, date]]) -> GroundTruthSet:
    members: dict[str, set[str]] = {}
    for gt_id, device_id, _ in observations:
        members.setdefault(gt_id, set()).add(device_id)
    return GroundTruthSet(
        communities=[(g, frozenset(m)) for g, m in members.items()],
        provenance="no guest filter applied",
    )


def best_match(gt_community: frozenset[str] | set[str], partition: Partition) -> tuple[int, int]:
    """Community with the largest intersection with the ground-truth set;
    ties broken by lowest community id, (NO_MATCH, 0) when nothing overlaps."""
    counts: dict[int, int] = {}
    for device in gt_community:
        cid = partition.assignment.get(device)
        if cid is not None:
            counts[cid] = counts.get(cid, 0) + 1
    if not counts:
        return NO_MATCH, 0
    best = min(sorted(counts), key=lambda c: (-counts[c], c))
    return best, counts[best]


def precision_recall(gt: GroundTruthSet, partition: Partition) -> PRReport:
    if not gt.communities:
        raise ValueError("ground-truth set is empty")
    sizes: dict[int, int] = {}
    for cid in partition.assignment.values():
        sizes[cid] = sizes.get(cid, 0) + 1
    rows: list[PRRow] = []
    for gt_id, members in sorted(gt.communities):
        cid, inter = best_match(members, partition)
        if cid == NO_MATCH:
            rows.append(PRRow(gt_id, NO_MATCH, 0, 0.0, 0.0, no_match=True))
        else:
            rows.append(
                PRRow(
                    gt_id,
                    cid,
                    inter,
                    precision=inter / sizes[cid],
                    recall=inter / len(members),
                )
            )
    n = len(rows)
    weights = {gt_id: len(members) for gt_id, members in gt.communities}
    wsum = sum(weights.values())
    return PRReport(
        rows=rows,
        mean_precision=sum(r.precision for r in rows) / n,
        mean_recall=sum(r.recall for r in rows) / n,
        count=n,
        weighted_mean_precision=sum(r.precision * weights[r.gt_id] for r in rows) / wsum,
        weighted_mean_recall=sum(r.recall * weights[r.gt_id] for r in rows) / wsum,
    )


def write_report(report: PRReport, path) -> None:
    """CSV of per-household rows followed by a line-JSON aggregate block."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["gt_id", "matched_community_id", "intersection_size", "precision", "recall", "no_match"]
        )
        for r in report.rows:
            writer.writerow(
                [r.gt_id, r.matched_community_id, r.intersection_size,
                 f"{r.precision:.9g}", f"{r.recall:.9g}", int(r.no_match)]
            )
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as fh:
        fh.write(
            json.dumps(
                {
                    "count": report.count,
                    "mean_precision": report.mean_precision,
                    "mean_recall": report.mean_recall,
                    "weighted_mean_precision": report.weighted_mean_precision,
                    "weighted_mean_recall": report.weighted_mean_recall,
                }
            )
            + "\n"
        )
