import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from numabias.topology import SystemTopology, home_node_of, node_of_core
from numabias.trace import (
    Kind,
    Phase,
    SpecError,
    SyntheticSpec,
    TraceError,
    TraceRecord,
    WorkingSet,
    generate,
    parse_lines,
    parse_record,
    spec_from_dict,
    validate_record,
    validate_spec,
    write_trace,
)

TOPO = SystemTopology(2, 2)
NODE1 = TOPO.node_base(1)


def test_parse_examples():
    assert parse_record("0 R 0x1A2B3C40") == TraceRecord(0, Kind.READ, 0x1A2B3C40)
    assert parse_record("3 W 0xFFF0") == TraceRecord(3, Kind.WRITE, 0xFFF0)


@pytest.mark.parametrize("line", ["0 X 0x10", "0 R", "a R 0x10", "0 R 16", "0 R 0xZZ", "0 R 0x1 extra", "-1 R 0x1"])
def test_parse_rejects(line):
    with pytest.raises(TraceError):
        parse_record(line, lineno=7)


def test_errors_carry_line_numbers():
    lines = ["# header", "", "0 R 0x40", "1 Q 0x80"]
    with pytest.raises(TraceError) as e:
        list(parse_lines(lines))
    assert e.value.lineno == 4


def test_range_validation():
    with pytest.raises(TraceError):
        validate_record(TraceRecord(4, Kind.READ, 0), TOPO)
    with pytest.raises(TraceError):
        validate_record(TraceRecord(0, Kind.READ, 1 << 32), TOPO)
    with pytest.raises(TraceError, match="line 2"):
        list(parse_lines(["0 R 0x0", "9 R 0x0"], TOPO))


records = st.builds(
    TraceRecord,
    core=st.integers(0, 3),
    kind=st.sampled_from(list(Kind)),
    addr=st.integers(0, (1 << 32) - 1),
)


@given(recs=st.lists(records, max_size=50))
def test_emit_parse_round_trip(recs):
    buf = io.StringIO()
    write_trace(recs, buf)
    assert list(parse_lines(buf.getvalue().splitlines(), TOPO)) == recs


def phase(**kw):
    base = dict(
        length=10_000,
        local=WorkingSet(0x100000, 64 * 256),
        remote=WorkingSet(NODE1 + 0x100000, 64 * 256),
        remote_fraction=0.5,
        write_fraction=0.25,
        pattern="random",
    )
    base.update(kw)
    return Phase(**base)


def test_zero_remote_fraction_stays_local():
    spec = SyntheticSpec({0: [phase(remote_fraction=0.0)], 2: [phase(
        local=WorkingSet(NODE1, 4096), remote=WorkingSet(0x1000, 4096), remote_fraction=0.0)]})
    for rec in generate(spec, TOPO):
        assert home_node_of(rec.addr, TOPO) == node_of_core(rec.core, TOPO)


def test_generation_is_deterministic():
    spec = SyntheticSpec({0: [phase(), phase(pattern="sequential")], 1: [phase()]}, seed=42)
    assert generate(spec, TOPO) == generate(spec, TOPO)
    other = SyntheticSpec(spec.phases, seed=43)
    assert generate(other, TOPO) != generate(spec, TOPO)


def test_adding_a_core_leaves_other_streams_alone():
    one = SyntheticSpec({0: [phase()]}, seed=9)
    two = SyntheticSpec({0: [phase()], 1: [phase(length=500)]}, seed=9)
    core0 = [r for r in generate(two, TOPO) if r.core == 0]
    assert core0 == generate(one, TOPO)


def test_remote_fraction_is_respected():
    recs = generate(SyntheticSpec({0: [phase()]}, seed=3), TOPO)
    remote = sum(home_node_of(r.addr, TOPO) != 0 for r in recs)
    assert len(recs) == 10_000
    assert abs(remote / len(recs) - 0.5) <= 0.02
    writes = sum(r.kind is Kind.WRITE for r in recs)
    assert abs(writes / len(recs) - 0.25) <= 0.02


def test_round_robin_interleaving():
    spec = SyntheticSpec({0: [phase(length=3)], 1: [phase(length=1)], 3: [phase(length=2, local=WorkingSet(NODE1, 4096), remote=None, remote_fraction=0)]})
    assert [r.core for r in generate(spec, TOPO)] == [0, 1, 3, 0, 3, 0]


def test_sequential_pattern_strides_and_wraps():
    p = phase(length=6, remote_fraction=0.0, local=WorkingSet(0x1000, 4 * 64), pattern="sequential")
    addrs = [r.addr for r in generate(SyntheticSpec({0: [p]}), TOPO)]
    assert addrs == [0x1000, 0x1040, 0x1080, 0x10C0, 0x1000, 0x1040]


@given(seed=st.integers(0, 1000), pattern=st.sampled_from(["random", "sequential"]))
def test_addresses_stay_in_working_sets(seed, pattern):
    p = phase(length=300, pattern=pattern)
    for rec in generate(SyntheticSpec({0: [p]}, seed=seed), TOPO):
        in_local = p.local.base <= rec.addr < p.local.base + p.local.size
        in_remote = p.remote.base <= rec.addr < p.remote.base + p.remote.size
        assert in_local or in_remote
        assert rec.addr % 64 == 0


def test_validate_spec_reports_everything():
    bad = phase(remote=WorkingSet(0x200000, 4096), remote_fraction=1.5, write_fraction=-0.1)
    errors = validate_spec(SyntheticSpec({0: [bad]}), TOPO)
    assert any("own node" in e for e in errors)
    assert any("remote_fraction=1.5" in e for e in errors)
    assert any("write_fraction=-0.1" in e for e in errors)
    assert len(errors) == 3
    with pytest.raises(SpecError) as e:
        generate(SyntheticSpec({0: [bad]}), TOPO)
    assert len(e.value.errors) == 3


def test_validate_spec_ok_and_alignment():
    assert validate_spec(SyntheticSpec({0: [phase()]}), TOPO) == []
    errors = validate_spec(SyntheticSpec({0: [phase(local=WorkingSet(0x1001, 100))]}), TOPO)
    assert len(errors) == 2
    errors = validate_spec(SyntheticSpec({5: [phase()]}), TOPO)
    assert errors == ["core 5 out of range for 4 cores"]


def test_spec_from_dict():
    doc = {
        "seed": 7,
        "cores": {
            "0": [{
                "length": 100,
                "local_working_set": {"base": "0x1000", "size": 4096},
                "remote_working_set": {"base": "0x80000000", "size": 4096, "home": 1},
                "remote_fraction": 0.5,
                "pattern": "random",
            }]
        },
    }
    spec, errors = spec_from_dict(doc)
    assert errors == [] and spec.seed == 7 and spec.total_records == 100
    assert validate_spec(spec, TOPO) == []
    doc["cores"]["0"][0]["remote_working_set"]["home"] = 0
    spec, _ = spec_from_dict(doc)
    assert any("disagrees" in e for e in validate_spec(spec, TOPO))
    doc["cores"]["0"][0]["colour"] = "red"
    _, errors = spec_from_dict(doc)
    assert errors == ["cores.0.phases[0]: unknown key 'colour'"]
