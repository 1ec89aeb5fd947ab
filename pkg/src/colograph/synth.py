"""Synthetic colocation logs with planted households, workplaces, and a
weekly stay-at-home mixing schedule.

Every household and workplace gets one stable IP from reserved test
ranges.  Each device produces one home event per day; devices of workers
also produce a workplace event on days the worker attends, drawn with
that week's mixing probability.  Generation is deterministic given the
population seed.
"""

from __future__ import annotations

import csv
import ipaddress
import random
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

from .ingest import DAY_SECONDS

HOME_IP_BASE = int(ipaddress.IPv4Address("10.0.0.1"))
WORK_IP_BASE = int(ipaddress.IPv4Address("172.16.0.1"))

# seconds past UTC midnight for the daily home / work / guest sightings
HOME_SECOND = 20 * 3600
WORK_SECOND = 12 * 3600
GUEST_SECOND = 18 * 3600


@dataclass(frozen=True)
class PopulationSpec:
    households: int
    workplaces: int
    household_size_range: tuple[int, int] = (1, 4)
    workplace_assignment_fraction: float = 0.5
    devices_per_person: int = 2
    seed: int = 0
    guest_fraction: float = 0.0  # share of households visited by a guest device

    def __post_init__(self):
        if self.households < 1 or self.workplaces < 1:
            raise ValueError("households and workplaces must be positive")
        lo, hi = self.household_size_range
        if lo < 1 or lo > hi:
            raise ValueError("household_size_range must satisfy 1 <= min <= max")
        if not 0.0 <= self.workplace_assignment_fraction <= 1.0:
            raise ValueError("workplace_assignment_fraction must lie in [0, 1]")
        if self.devices_per_person < 1:
            raise ValueError("devices_per_person must be at least 1")
        if not 0.0 <= self.guest_fraction <= 1.0:
            raise ValueError("guest_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class MixingSchedule:
    """Weekly probabilities that a worker attends the workplace on a day."""

    weekly_mixing: tuple[float, ...]

    def __post_init__(self):
        if not self.weekly_mixing:
            raise ValueError("schedule must cover at least one week")
        if any(not 0.0 <= m <= 1.0 for m in self.weekly_mixing):
            raise ValueError("mixing values must lie in [0, 1]")

    @property
    def weeks(self) -> int:
        return len(self.weekly_mixing)

    @property
    def days(self) -> int:
        return 7 * len(self.weekly_mixing)


@dataclass(frozen=True)
class _Person:
    household: int
    workplace: int | None  # None for non-workers
    devices: tuple[str, ...]


def _build_population(pop: PopulationSpec) -> list[_Person]:
    rng = random.Random(pop.seed)
    persons: list[_Person] = []
    pid = 0
    for h in range(pop.households):
        size = rng.randint(*pop.household_size_range)
        for _ in range(size):
            workplace = None
            if rng.random() < pop.workplace_assignment_fraction:
                workplace = rng.randrange(pop.workplaces)
            devices = tuple(
                f"d{pid:06d}x{k}" for k in range(pop.devices_per_person)
            )
            persons.append(_Person(h, workplace, devices))
            pid += 1
    return persons


def home_ip(household: int) -> str:
    return str(ipaddress.IPv4Address(HOME_IP_BASE + household))


def work_ip(workplace: int) -> str:
    return str(ipaddress.IPv4Address(WORK_IP_BASE + workplace))


def generate_events(
    pop: PopulationSpec,
    schedule: MixingSchedule,
    start_date: date,
    out_dir,
) -> dict:
    """Write events.csv and ground_truth.csv under out_dir.

    Returns a summary with file paths, device counts and day span."""
    persons = _build_population(pop)
    if not persons:
        raise ValueError("population is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events_path = out / "events.csv"
    gt_path = out / "ground_truth.csv"
    rng = random.Random(pop.seed + 1)
    start_ts = None
    from datetime import datetime, timezone

    start_ts = int(
        datetime.combine(start_date, datetime.min.time(), tzinfo=timezone.utc).timestamp()
    )

    # pre-plan guests: (household, sorted days they visit)
    guests: list[tuple[int, list[int]]] = []
    if pop.guest_fraction > 0:
        for h in range(pop.households):
            if rng.random() < pop.guest_fraction:
                n_days = rng.randint(1, 2)
                days = sorted(rng.sample(range(schedule.days), n_days))
                guests.append((h, days))

    n_events = 0
    with open(events_path, "w", newline="", encoding="utf-8") as ef, open(
        gt_path, "w", newline="", encoding="utf-8"
    ) as gf:
        ew = csv.writer(ef)
        gw = csv.writer(gf)
        gw.writerow(["gt_id", "device_id", "observed_day"])
        for day in range(schedule.days):
            m = schedule.weekly_mixing[day // 7]
            day_ts = start_ts + day * DAY_SECONDS
            day_iso = (start_date + timedelta(days=day)).isoformat()
            for person in persons:
                attends = (
                    person.workplace is not None and rng.random() < m
                )
                for device in person.devices:
                    ew.writerow([device, home_ip(person.household), day_ts + HOME_SECOND])
                    gw.writerow([f"h{person.household:06d}", device, day_iso])
                    n_events += 1
                    if attends:
                        ew.writerow([device, work_ip(person.workplace), day_ts + WORK_SECOND])
                        n_events += 1
            for gi, (h, days) in enumerate(guests):
                if day in days:
                    device = f"guest{gi:05d}"
                    ew.writerow([device, home_ip(h), day_ts + GUEST_SECOND])
                    gw.writerow([f"h{h:06d}", device, day_iso])
                    n_events += 1
    return {
        "events": str(events_path),
        "ground_truth": str(gt_path),
        "persons": len(persons),
        "devices": sum(len(p.devices) for p in persons),
        "guests": len(guests),
        "events_written": n_events,
        "days": schedule.days,
    }


def scenario_manifest(
    schedule: MixingSchedule,
    start_date: date,
    events_path,
    out_path,
    span_days: int = 42,
    step_weeks: int = 1,
) -> list[date]:
    """Enumerate window center dates covering the schedule with span_days
    windows stepped by step_weeks, and write the timeline manifest CSV."""
    if span_days % 7 != 0 or span_days <= 0:
        raise ValueError("span_days must be a positive multiple of 7")
    if step_weeks < 1:
        raise ValueError("step_weeks must be at least 1")
    span_weeks = span_days // 7
    if schedule.weeks < span_weeks:
        raise ValueError("schedule is shorter than one window")
    n_windows = (schedule.weeks - span_weeks) // step_weeks + 1
    centers = [
        start_date + timedelta(days=7 * i * step_weeks + span_days // 2)
        for i in range(n_windows)
    ]
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["center_date", "events"])
        for c in centers:
            writer.writerow([c.isoformat(), str(events_path)])
    return centers


def read_manifest(path) -> list[tuple[date, str]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for rec in csv.DictReader(lines):
        rows.append((date.fromisoformat(rec["center_date"]), rec["events"]))
    return rows
