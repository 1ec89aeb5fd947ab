"""Parsing, validation, and epoch-bucketing of raw colocation event logs.

An event is one observation of a device identifier on an IP address at a
point in time.  Events are bucketed into fixed-length epochs inside a
centered analysis window before graph construction.
"""

from __future__ import annotations

import hashlib
import hmac
import ipaddress
import json
import sys
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from functools import lru_cache
from typing import IO, Iterable, NamedTuple

DAY_SECONDS = 86400


class IngestError(Exception):
    """Base class for ingest failures."""


class ValidationError(IngestError):
    """Raised when the input stream is structurally unusable."""


class ColocationEvent(NamedTuple):
    device_id: str
    ip: str
    ts: int


@dataclass(frozen=True)
class FormatSpec:
    """Describes the on-disk layout of an event file.

    kind: "csv" for delimited text, "jsonl" for one JSON object per line.
    columns/keys map the three event fields onto the input layout.
    hash_key, when set, replaces device ids with a keyed hash at parse time.
    """

    kind: str = "csv"
    delimiter: str = ","
    has_header: bool = False
    columns: tuple[str, str, str] = ("device_id", "ip", "ts")
    keys: dict[str, str] = field(
        default_factory=lambda: {"device_id": "device_id", "ip": "ip", "ts": "ts"}
    )
    hash_key: str | None = None

    def __post_init__(self):
        if self.kind not in ("csv", "jsonl"):
            raise ValueError(f"unknown format kind {self.kind!r}")
        if self.kind == "csv" and set(self.columns) != {"device_id", "ip", "ts"}:
            raise ValueError("columns must name device_id, ip and ts exactly once")


@dataclass
class IngestReport:
    parsed: int = 0
    malformed: int = 0
    dropped_outside_window: int = 0
    deduplicated: int = 0
    first_malformed_line: int | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "parsed": self.parsed,
                "malformed": self.malformed,
                "dropped_outside_window": self.dropped_outside_window,
                "deduplicated": self.deduplicated,
            }
        )


@dataclass(frozen=True)
class WindowSpec:
    """A span of whole days centered on a calendar date, cut into epochs."""

    center_date: date
    span_days: int = 42
    epoch_seconds: int = DAY_SECONDS

    def __post_init__(self):
        if self.span_days <= 0 or self.span_days % 7 != 0:
            raise ValueError("span_days must be positive and divisible by 7")
        if self.epoch_seconds <= 0:
            raise ValueError("epoch_seconds must be positive")
        if (self.span_days * DAY_SECONDS) % self.epoch_seconds != 0:
            raise ValueError("window length must be a whole number of epochs")

    @property
    def start_ts(self) -> int:
        start = datetime.combine(
            self.center_date, datetime.min.time(), tzinfo=timezone.utc
        ) - timedelta(days=self.span_days // 2)
        # odd half-week spans start mid-day
        if self.span_days % 2:
            start -= timedelta(hours=12)
        return int(start.timestamp())

    @property
    def end_ts(self) -> int:
        return self.start_ts + self.span_days * DAY_SECONDS

    @property
    def epoch_count(self) -> int:
        return self.span_days * DAY_SECONDS // self.epoch_seconds


@dataclass(frozen=True)
class EpochedEvents:
    """Deduplicated (epoch_index, ip, device_id) entries for one window."""

    window: WindowSpec
    entries: frozenset[tuple[int, str, str]]
    report: IngestReport = field(default_factory=IngestReport, compare=False)

    @property
    def device_ids(self) -> set[str]:
        return {d for _, _, d in self.entries}


@lru_cache(maxsize=1 << 20)
def normalize_ip(raw: str) -> str:
    return str(ipaddress.ip_address(raw.strip()))


def _hash_device_id(device_id: str, key: str) -> str:
    return hmac.new(key.encode(), device_id.encode(), hashlib.sha256).hexdigest()[:16]


def _event_from_fields(device_id: str, ip: str, ts_raw: str, fmt: FormatSpec) -> ColocationEvent:
    if not device_id:
        raise ValueError("empty device_id")
    ts = int(ts_raw)
    if ts < 0:
        raise ValueError("negative timestamp")
    ip_norm = normalize_ip(ip)
    if fmt.hash_key is not None:
        device_id = _hash_device_id(device_id, fmt.hash_key)
    # interning collapses the many repeats of each id/ip across a large log
    return ColocationEvent(sys.intern(device_id), sys.intern(ip_norm), ts)


def parse_events(
    stream: IO[str], fmt: FormatSpec | None = None
) -> tuple[list[ColocationEvent], IngestReport]:
    """Parse an event file into validated events, counting malformed lines.

    Malformed records are skipped and counted.  If more than half of the
    non-empty lines are malformed the whole input is rejected.
    """
    fmt = fmt or FormatSpec()
    report = IngestReport()
    events: list[ColocationEvent] = []
    if fmt.kind == "csv":
        idx = {name: i for i, name in enumerate(fmt.columns)}
    lineno = 0
    try:
        lines = iter(stream)
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if fmt.kind == "csv" and fmt.has_header and lineno == 1:
                continue
            try:
                if fmt.kind == "csv":
                    parts = line.split(fmt.delimiter)
                    ev = _event_from_fields(
                        parts[idx["device_id"]].strip(),
                        parts[idx["ip"]],
                        parts[idx["ts"]].strip(),
                        fmt,
                    )
                else:
                    obj = json.loads(line)
                    ev = _event_from_fields(
                        str(obj[fmt.keys["device_id"]]),
                        str(obj[fmt.keys["ip"]]),
                        str(obj[fmt.keys["ts"]]),
                        fmt,
                    )
            except (ValueError, KeyError, IndexError):
                report.malformed += 1
                if report.first_malformed_line is None:
                    report.first_malformed_line = lineno
                continue
            events.append(ev)
            report.parsed += 1
    except OSError as exc:
        raise IngestError(f"unreadable event stream: {exc}") from exc

    total = report.parsed + report.malformed
    if total and report.malformed * 2 > total:
        raise ValidationError(
            f"{report.malformed}/{total} records malformed; "
            f"first bad line: {report.first_malformed_line}"
        )
    return events, report


def bucket_epochs(
    events: Iterable[ColocationEvent], window: WindowSpec
) -> EpochedEvents:
    """Assign in-window events to epochs, dropping out-of-window events and
    deduplicating repeated sightings of a device on an IP within an epoch."""
    start, end, width = window.start_ts, window.end_ts, window.epoch_seconds
    report = IngestReport()
    entries: set[tuple[int, str, str]] = set()
    for ev in events:
        if not (start <= ev.ts < end):
            report.dropped_outside_window += 1
            continue
        entry = ((ev.ts - start) // width, ev.ip, ev.device_id)
        if entry in entries:
            report.deduplicated += 1
        else:
            entries.add(entry)
    report.parsed = len(entries)
    return EpochedEvents(window=window, entries=frozenset(entries), report=report)


def parse_event_file(
    path, fmt: FormatSpec | None = None, window: WindowSpec | None = None
) -> tuple[EpochedEvents | list[ColocationEvent], IngestReport]:
    """Parse a file and, when a window is given, bucket it in one step.

    Returns the combined ingest report with parse and bucketing counts."""
    with open(path, encoding="utf-8") as fh:
        events, report = parse_events(fh, fmt)
    if window is None:
        return events, report
    epoched = bucket_epochs(events, window)
    report.dropped_outside_window = epoched.report.dropped_outside_window
    report.deduplicated = epoched.report.deduplicated
    return epoched, report
