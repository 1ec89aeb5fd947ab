import io
import random
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colograph.ingest import (
    ColocationEvent,
    EpochedEvents,
    FormatSpec,
    IngestError,
    ValidationError,
    WindowSpec,
    bucket_epochs,
    parse_events,
)

WINDOW = WindowSpec(date(2020, 4, 1))
START = WINDOW.start_ts


def parse(text, **fmt_kwargs):
    return parse_events(io.StringIO(text), FormatSpec(**fmt_kwargs))


class TestParseEvents:
    def test_csv_line_maps_fields(self):
        events, report = parse("dA,10.0.0.1,1579564800\n")
        assert events == [ColocationEvent("dA", "10.0.0.1", 1579564800)]
        assert report.parsed == 1 and report.malformed == 0

    def test_empty_ip_is_malformed(self):
        events, report = parse("dA,,1579564800\ndB,10.0.0.1,1579564800\n")
        assert [e.device_id for e in events] == ["dB"]
        assert report.malformed == 1

    def test_mixed_file_counts(self):
        text = "dA,10.0.0.1,100\nbadline\ndB,10.0.0.2,200\n"
        events, report = parse(text)
        assert len(events) == 2
        assert (report.parsed, report.malformed) == (2, 1)
        assert report.first_malformed_line == 2

    def test_mostly_malformed_raises(self):
        text = "x\ny\ndA,10.0.0.1,100\n"
        with pytest.raises(ValidationError, match="line: 1"):
            parse(text)

    def test_jsonl(self):
        text = '{"id": "dA", "addr": "10.0.0.1", "when": 7}\n'
        events, _ = parse(
            text, kind="jsonl", keys={"device_id": "id", "ip": "addr", "ts": "when"}
        )
        assert events == [ColocationEvent("dA", "10.0.0.1", 7)]

    def test_header_and_delimiter(self):
        text = "device_id|ip|ts\ndA|10.0.0.1|5\n"
        events, _ = parse(text, delimiter="|", has_header=True)
        assert len(events) == 1

    def test_column_reordering(self):
        events, _ = parse("5,dA,10.0.0.1\n", columns=("ts", "device_id", "ip"))
        assert events == [ColocationEvent("dA", "10.0.0.1", 5)]

    def test_ipv6_normalized(self):
        events, _ = parse("dA,2001:DB8:0:0:0:0:0:1,5\n")
        assert events[0].ip == "2001:db8::1"

    def test_negative_ts_malformed(self):
        _, report = parse("dA,10.0.0.1,-5\ndB,10.0.0.1,5\n")
        assert report.malformed == 1

    def test_keyed_hash_is_deterministic_and_opaque(self):
        ev1, _ = parse("dA,10.0.0.1,5\n", hash_key="k")
        ev2, _ = parse("dA,10.0.0.1,5\n", hash_key="k")
        ev3, _ = parse("dA,10.0.0.1,5\n", hash_key="other")
        assert ev1 == ev2
        assert ev1[0].device_id not in ("dA", ev3[0].device_id)


class TestWindowSpec:
    def test_defaults(self):
        assert WINDOW.span_days == 42
        assert WINDOW.epoch_count == 42
        # center is the middle of the 42-day span
        assert WINDOW.end_ts - WINDOW.start_ts == 42 * 86400

    @pytest.mark.parametrize("span", [0, -7, 10])
    def test_bad_span_rejected(self, span):
        with pytest.raises(ValueError):
            WindowSpec(date(2020, 4, 1), span_days=span)

    def test_epoch_must_divide_window(self):
        with pytest.raises(ValueError):
            WindowSpec(date(2020, 4, 1), epoch_seconds=100000)
        WindowSpec(date(2020, 4, 1), epoch_seconds=3600)


class TestBucketEpochs:
    def test_epoch_boundaries(self):
        events = [
            ColocationEvent("d", "10.0.0.1", START),
            ColocationEvent("e", "10.0.0.1", START + 86399),
            ColocationEvent("f", "10.0.0.1", START + 86400),
        ]
        epoched = bucket_epochs(events, WINDOW)
        indices = {d: t for t, _, d in epoched.entries}
        assert indices == {"d": 0, "e": 0, "f": 1}

    def test_outside_window_dropped_and_counted(self):
        events = [
            ColocationEvent("d", "10.0.0.1", START - 1),
            ColocationEvent("d", "10.0.0.1", WINDOW.end_ts),
            ColocationEvent("d", "10.0.0.1", START),
        ]
        epoched = bucket_epochs(events, WINDOW)
        assert len(epoched.entries) == 1
        assert epoched.report.dropped_outside_window == 2

    def test_duplicates_in_epoch_collapse(self):
        events = [
            ColocationEvent("d", "10.0.0.1", START + 10),
            ColocationEvent("d", "10.0.0.1", START + 20),
        ]
        epoched = bucket_epochs(events, WINDOW)
        assert len(epoched.entries) == 1
        assert epoched.report.deduplicated == 1


ts_strategy = st.integers(min_value=START - 86400, max_value=WINDOW.end_ts + 86400)
event_strategy = st.builds(
    ColocationEvent,
    device_id=st.sampled_from(["a", "b", "c", "d"]),
    ip=st.sampled_from(["10.0.0.1", "10.0.0.2"]),
    ts=ts_strategy,
)


@given(st.lists(event_strategy, max_size=50))
@settings(max_examples=60)
def test_window_totality(events):
    epoched = bucket_epochs(events, WINDOW)
    kept = len(epoched.entries)
    assert (
        len(events)
        == kept + epoched.report.dropped_outside_window + epoched.report.deduplicated
    )


@given(st.lists(event_strategy, max_size=50), st.randoms())
@settings(max_examples=60)
def test_order_independence(events, rnd):
    shuffled = list(events)
    rnd.shuffle(shuffled)
    assert bucket_epochs(events, WINDOW).entries == bucket_epochs(shuffled, WINDOW).entries


@given(st.lists(event_strategy, max_size=50))
@settings(max_examples=60)
def test_bucket_idempotence(events):
    once = bucket_epochs(events, WINDOW)
    # flatten entries back to events at the epoch's start instant
    flattened = [
        ColocationEvent(d, ip, START + t * WINDOW.epoch_seconds)
        for t, ip, d in once.entries
    ]
    assert bucket_epochs(flattened, WINDOW).entries == once.entries
