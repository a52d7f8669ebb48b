"""Counters, report serialization and report-to-report comparison.

JSON is the canonical report format. Integers are written as integers and
fractions with exactly six decimals, so equal reports give equal bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Iterable, Optional

from .outcome import AccessOutcome, ServedAt

REPORT_VERSION = 1

# Integer counters in serialization order.
COUNTER_FIELDS = (
    "accesses",
    "reads",
    "writes",
    "l1_hits",
    "l1_misses",
    "remote_l1_misses",
    "llc_hits",
    "llc_misses",
    "dram_local_fetches",
    "dram_remote_fetches",
    "writebacks_local",
    "writebacks_remote",
    "remote_skip_events",
    "remote_threshold_evictions",
    "bias_on_misses",
    "total_latency_cycles",
)
DERIVED_FIELDS = ("bias_on_miss_fraction", "amat")
ALL_FIELDS = COUNTER_FIELDS + DERIVED_FIELDS


@dataclass
class Counters:
    accesses: int = 0
    reads: int = 0
    writes: int = 0
    l1_hits: int = 0
    l1_misses: int = 0
    remote_l1_misses: int = 0
    llc_hits: int = 0
    llc_misses: int = 0
    dram_local_fetches: int = 0
    dram_remote_fetches: int = 0
    writebacks_local: int = 0
    writebacks_remote: int = 0
    remote_skip_events: int = 0
    remote_threshold_evictions: int = 0
    bias_on_misses: int = 0
    total_latency_cycles: int = 0

    def add(self, o: AccessOutcome) -> None:
        self.accesses += 1
        if o.is_write:
            self.writes += 1
        else:
            self.reads += 1
        self.total_latency_cycles += o.latency
        if o.served_at is ServedAt.L1:
            self.l1_hits += 1
            return
        self.l1_misses += 1
        self.remote_l1_misses += o.l1_miss_was_remote
        self.bias_on_misses += o.bias_was_enabled
        if o.served_at is ServedAt.LLC:
            self.llc_hits += 1
        else:
            self.llc_misses += 1
            if o.served_at is ServedAt.DRAM_REMOTE:
                self.dram_remote_fetches += 1
            else:
                self.dram_local_fetches += 1
        for wb in o.writebacks:
            if wb.is_remote:
                self.writebacks_remote += 1
            else:
                self.writebacks_local += 1
        self.remote_skip_events += o.skip_events
        self.remote_threshold_evictions += o.threshold_evictions

    @property
    def dram_fetches(self) -> int:
        return self.dram_local_fetches + self.dram_remote_fetches

    @property
    def amat(self) -> Optional[Fraction]:
        if not self.accesses:
            return None
        return Fraction(self.total_latency_cycles, self.accesses)

    @property
    def bias_on_miss_fraction(self) -> Optional[Fraction]:
        if not self.l1_misses:
            return None
        return Fraction(self.bias_on_misses, self.l1_misses)

    def as_dict(self) -> dict:
        d = {name: getattr(self, name) for name in COUNTER_FIELDS}
        d["bias_on_miss_fraction"] = self.bias_on_miss_fraction
        d["amat"] = self.amat
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Counters":
        return cls(**{name: int(d[name]) for name in COUNTER_FIELDS})

    def check_conservation(self) -> None:
        assert self.l1_hits + self.llc_hits + self.dram_fetches == self.accesses
        assert self.l1_hits + self.l1_misses == self.accesses
        assert self.llc_hits + self.llc_misses == self.l1_misses
        assert self.llc_misses == self.dram_fetches
        assert self.reads + self.writes == self.accesses


@dataclass
class SimReport:
    """Outcome of one simulation.

    ``digest`` covers the machine, cache geometry, latencies and trace but
    not the policy, so reports of different policies on the same experiment
    can be compared.
    """

    digest: str
    policy: dict
    per_core: list[Counters]
    total: Counters = field(default_factory=Counters)
    transitions: list[tuple[int, int, bool]] = field(default_factory=list)

    @classmethod
    def for_config(cls, config, trace_digest: str) -> "SimReport":
        return cls(
            digest=experiment_digest(config, trace_digest),
            policy=policy_of(config),
            per_core=[Counters() for _ in range(config.topology.num_cores)],
        )

    def record_outcome(self, core: int, outcome: AccessOutcome) -> None:
        self.total.add(outcome)
        self.per_core[core].add(outcome)

    @property
    def amat(self) -> Optional[Fraction]:
        return self.total.amat

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "digest": self.digest,
            "policy": self.policy,
            "total": self.total.as_dict(),
            "per_core": [c.as_dict() for c in self.per_core],
            "transitions": [
                {"core": core, "index": index, "state": "on" if on else "off"}
                for core, index, on in self.transitions
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimReport":
        return cls(
            digest=d["digest"],
            policy=d["policy"],
            per_core=[Counters.from_dict(c) for c in d["per_core"]],
            total=Counters.from_dict(d["total"]),
            transitions=[(t["core"], t["index"], t["state"] == "on") for t in d["transitions"]],
        )


def policy_of(config) -> dict:
    return {
        "mode": config.mode,
        "l1_threshold": config.l1_h,
        "llc_threshold": config.llc_h,
        "window": config.window,
        "high_wm": float(config.high_wm),
        "low_wm": float(config.low_wm),
    }


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def trace_digest_of(records: Iterable) -> str:
    h = hashlib.sha256()
    for rec in records:
        h.update(rec.emit().encode())
        h.update(b"\n")
    return h.hexdigest()


def experiment_digest(config, trace_digest: str) -> str:
    topo = config.topology
    doc = {
        "topology": [topo.num_sockets, topo.cores_per_socket, topo.address_bits, topo.line_size],
        "l1": [config.l1.num_sets, config.l1.associativity],
        "llc": [config.llc.num_sets, config.llc.associativity],
        "latencies": [getattr(config.latencies, f.name) for f in fields(config.latencies)],
        "trace": trace_digest,
    }
    return hashlib.sha256(_canonical(doc).encode()).hexdigest()


def record_outcome(report: SimReport, core: int, outcome: AccessOutcome) -> SimReport:
    report.record_outcome(core, outcome)
    return report


# serialization -------------------------------------------------------------


def _num(value) -> str:
    if isinstance(value, (Fraction, float)):
        return f"{float(value):.6f}"
    return str(value)


def _to_json(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, float, Fraction)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _to_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(report: SimReport) -> bytes:
    return (_to_json(report.to_dict()) + "\n").encode("utf-8")


def to_csv(report: SimReport) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scope",) + ALL_FIELDS)
    scopes = [("total", report.total)] + [(f"core{i}", c) for i, c in enumerate(report.per_core)]
    for name, counters in scopes:
        d = counters.as_dict()
        w.writerow([name] + ["" if d[f] is None else _num(d[f]) for f in ALL_FIELDS])
    return buf.getvalue().encode("utf-8")


def emit(report: SimReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")


def load_report(data: bytes | str) -> SimReport:
    return SimReport.from_dict(json.loads(data))


# comparison ----------------------------------------------------------------


class DigestMismatch(ValueError):
    pass


@dataclass(frozen=True)
class DiffRow:
    field: str
    a: object
    b: object
    delta: object
    percent: Optional[float]


def diff(a: SimReport, b: SimReport) -> list[DiffRow]:
    """Per-counter change of ``b`` relative to ``a`` over the global totals."""
    if a.digest != b.digest:
        raise DigestMismatch(f"reports come from different experiments ({a.digest[:12]} vs {b.digest[:12]})")
    da, db = a.total.as_dict(), b.total.as_dict()
    rows = []
    for name in ALL_FIELDS:
        va, vb = da[name], db[name]
        if va is None or vb is None:
            rows.append(DiffRow(name, va, vb, None, None))
            continue
        delta = vb - va
        percent = float(Fraction(delta) / Fraction(va) * 100) if va else None
        rows.append(DiffRow(name, va, vb, delta, percent))
    return rows


def format_diff(rows: list[DiffRow], label_a: str = "a", label_b: str = "b") -> str:
    def cell(v):
        return "-" if v is None else _num(v)

    header = ("counter", label_a, label_b, "delta", "delta_%")
    body = [
        (r.field, cell(r.a), cell(r.b), cell(r.delta), "-" if r.percent is None else f"{r.percent:+.2f}%")
        for r in rows
    ]
    widths = [max(len(str(row[i])) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(str(v).ljust(w) for v, w in zip(header, widths)).rstrip()]
    for row in body:
        lines.append("  ".join(str(v).rjust(w) if i else str(v).ljust(w) for i, (v, w) in enumerate(zip(row, widths))))
    return "\n".join(lines) + "\n"


def diff_csv(rows: list[DiffRow]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("counter", "a", "b", "delta", "delta_percent"))
    for r in rows:
        w.writerow([r.field] + ["" if v is None else _num(v) for v in (r.a, r.b, r.delta)]
                   + ["" if r.percent is None else f"{r.percent:.6f}"])
    return buf.getvalue().encode("utf-8")
