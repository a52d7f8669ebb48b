import csv
import io
import json
from fractions import Fraction

import pytest

from oracles import random_trace

from numabias.hierarchy import HierarchyConfig, run_trace
from numabias.outcome import AccessOutcome, Level, ServedAt, Writeback
from numabias.report import (
    COUNTER_FIELDS,
    Counters,
    DigestMismatch,
    SimReport,
    diff,
    diff_csv,
    emit,
    format_diff,
    load_report,
    record_outcome,
)
from numabias.topology import CacheGeometry, SystemTopology

TOPO = SystemTopology(2, 2)


def config(mode="lru", **kw):
    return HierarchyConfig(TOPO, CacheGeometry(4, 2), CacheGeometry(8, 4), mode=mode, **kw)


def blank():
    return SimReport.for_config(config(), "0" * 64)


def test_record_l1_hit():
    r = record_outcome(blank(), 0, AccessOutcome(ServedAt.L1, 4))
    assert r.total.l1_hits == 1 and r.total.total_latency_cycles == 4
    assert r.per_core[0].l1_hits == 1 and r.per_core[1].accesses == 0


def test_record_remote_dram():
    r = record_outcome(blank(), 1, AccessOutcome(ServedAt.DRAM_REMOTE, 284, l1_miss_was_remote=True))
    assert r.total.dram_remote_fetches == 1 and r.total.remote_l1_misses == 1


def test_record_two_remote_writebacks():
    wbs = (Writeback(1, Level.L1, 0, 0x80000000), Writeback(1, Level.LLC, 0, 0x80000000))
    r = record_outcome(blank(), 0, AccessOutcome(ServedAt.DRAM_LOCAL, 134, writebacks=wbs))
    assert r.total.writebacks_remote == 2 and r.total.writebacks_local == 0


def test_empty_report_serializes_zero_and_null():
    doc = json.loads(emit(blank()))
    assert all(doc["total"][f] == 0 for f in COUNTER_FIELDS)
    assert doc["total"]["amat"] is None
    assert doc["total"]["bias_on_miss_fraction"] is None


def test_fractions_use_six_decimals_and_bytes_are_stable():
    trace = random_trace(500, 4, 16, 2, seed=4)
    report = run_trace(config("biased"), trace)
    a, b = emit(report), emit(report)
    assert a == b
    text = a.decode()
    amat = report.total.amat
    assert f'"amat": {float(amat):.6f}' in text
    assert amat * report.total.accesses == report.total.total_latency_cycles
    report.total.check_conservation()
    for c in report.per_core:
        c.check_conservation()


def test_json_and_csv_agree():
    report = run_trace(config("biased"), random_trace(500, 4, 16, 2, seed=6))
    doc = json.loads(emit(report, "json"))
    rows = list(csv.DictReader(io.StringIO(emit(report, "csv").decode())))
    assert [r["scope"] for r in rows] == ["total", "core0", "core1", "core2", "core3"]
    for row, section in zip(rows, [doc["total"]] + doc["per_core"]):
        for f in COUNTER_FIELDS:
            assert int(row[f]) == section[f]
        assert float(row["amat"]) == section["amat"]


def test_load_round_trip():
    report = run_trace(config("adaptive", window=10), random_trace(800, 4, 16, 2, seed=7))
    again = load_report(emit(report))
    assert emit(again) == emit(report)


def test_diff_deltas():
    a, b = blank(), blank()
    a.total.l1_misses, b.total.l1_misses = 100, 80
    row = {r.field: r for r in diff(a, b)}["l1_misses"]
    assert (row.delta, row.percent) == (-20, -20.0)


def test_diff_identical_is_zero():
    report = run_trace(config(), random_trace(300, 4, 16, 2, seed=1))
    for row in diff(report, report):
        if row.delta is not None:
            assert row.delta == 0
    assert "counter" in format_diff(diff(report, report))
    assert diff_csv(diff(report, report)).startswith(b"counter,a,b,delta,delta_percent\n")


def test_diff_across_policies_same_experiment():
    trace = random_trace(300, 4, 16, 2, seed=1)
    a, b = run_trace(config("lru"), trace), run_trace(config("biased"), trace)
    assert a.digest == b.digest
    diff(a, b)


def test_diff_refuses_different_traces():
    a = run_trace(config(), random_trace(300, 4, 16, 2, seed=1))
    b = run_trace(config(), random_trace(300, 4, 16, 2, seed=2))
    with pytest.raises(DigestMismatch):
        diff(a, b)


def test_lru_mode_has_no_bias_events():
    report = run_trace(config("lru"), random_trace(2000, 4, 16, 2, seed=3))
    assert report.total.remote_skip_events == 0
    assert report.total.remote_threshold_evictions == 0
    assert report.total.bias_on_miss_fraction == 0
    biased = run_trace(config("biased"), random_trace(2000, 4, 16, 2, seed=3))
    assert biased.total.remote_skip_events > 0
    assert biased.total.bias_on_miss_fraction == Fraction(1)


def test_unknown_format():
    with pytest.raises(ValueError):
        emit(blank(), "xml")


def test_counters_from_dict_round_trip():
    c = Counters(accesses=3, l1_hits=1, l1_misses=2, llc_misses=2, dram_local_fetches=2, reads=3)
    assert Counters.from_dict(c.as_dict()) == c
