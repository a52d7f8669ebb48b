"""Trace text format and the phased synthetic trace generator.

A trace file holds one access per line::

    # core kind address
    0 R 0x1A2B3C40
    3 W 0xFFF0

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, TextIO

from .topology import SystemTopology, home_node_of, node_of_core


class Kind(enum.Enum):
    READ = "R"
    WRITE = "W"


@dataclass(frozen=True)
class TraceRecord:
    core: int
    kind: Kind
    addr: int

    @property
    def is_write(self) -> bool:
        return self.kind is Kind.WRITE

    def emit(self) -> str:
        return f"{self.core} {self.kind.value} 0x{self.addr:X}"


class TraceError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def parse_record(line: str, lineno: int = 0) -> TraceRecord:
    fields = line.split()
    if len(fields) != 3:
        raise TraceError(lineno, f"expected '<core> <R|W> <0xHEX>', got {line.strip()!r}")
    core_s, kind_s, addr_s = fields
    try:
        core = int(core_s, 10)
    except ValueError:
        raise TraceError(lineno, f"bad core {core_s!r}") from None
    try:
        kind = Kind(kind_s)
    except ValueError:
        raise TraceError(lineno, f"unknown access kind {kind_s!r}") from None
    if not addr_s.lower().startswith("0x"):
        raise TraceError(lineno, f"address must be hex with 0x prefix, got {addr_s!r}")
    try:
        addr = int(addr_s, 16)
    except ValueError:
        raise TraceError(lineno, f"bad address {addr_s!r}") from None
    if core < 0:
        raise TraceError(lineno, f"negative core {core}")
    return TraceRecord(core, kind, addr)


def validate_record(rec: TraceRecord, topo: SystemTopology, lineno: int = 0) -> None:
    if rec.core >= topo.num_cores:
        raise TraceError(lineno, f"core {rec.core} out of range for {topo.num_cores} cores")
    if rec.addr >= topo.address_limit:
        raise TraceError(lineno, f"address 0x{rec.addr:X} exceeds {topo.address_bits} address bits")


def parse_lines(lines: Iterable[str], topo: Optional[SystemTopology] = None) -> Iterator[TraceRecord]:
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rec = parse_record(stripped, lineno)
        if topo is not None:
            validate_record(rec, topo, lineno)
        yield rec


def read_trace(path, topo: Optional[SystemTopology] = None) -> list[TraceRecord]:
    with open(path, encoding="utf-8") as f:
        return list(parse_lines(f, topo))


def write_trace(records: Iterable[TraceRecord], out: TextIO) -> int:
    n = 0
    for rec in records:
        out.write(rec.emit())
        out.write("\n")
        n += 1
    return n


# synthetic generation ------------------------------------------------------

PATTERNS = ("sequential", "random")


@dataclass(frozen=True)
class WorkingSet:
    base: int
    size: int
    home: Optional[int] = None  # optional cross-check against the address bits


@dataclass(frozen=True)
class Phase:
    length: int
    local: WorkingSet
    remote: Optional[WorkingSet] = None
    remote_fraction: float = 0.0
    write_fraction: float = 0.0
    pattern: str = "sequential"
    stride: Optional[int] = None  # bytes; defaults to the line size


@dataclass
class SyntheticSpec:
    phases: dict[int, list[Phase]] = field(default_factory=dict)
    seed: int = 0

    @property
    def total_records(self) -> int:
        return sum(p.length for ps in self.phases.values() for p in ps)


class SpecError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _check_set(errors, where, ws, topo, want_local, node):
    line = topo.line_size
    if ws.base % line:
        errors.append(f"{where}.base=0x{ws.base:X} is not line-aligned")
    if ws.size < line or ws.size % line:
        errors.append(f"{where}.size={ws.size} must be a positive multiple of {line}")
    last = ws.base + max(ws.size, 1) - 1
    if ws.base < 0 or last >= topo.address_limit:
        errors.append(f"{where} [0x{ws.base:X}, 0x{last:X}] exceeds the address space")
        return
    homes = {home_node_of(ws.base, topo), home_node_of(last, topo)}
    if len(homes) != 1:
        errors.append(f"{where} spans more than one home node")
        return
    if ws.home is not None and homes != {ws.home}:
        errors.append(f"{where}.home={ws.home} disagrees with its address bits (node {min(homes)})")
    elif want_local and homes != {node}:
        errors.append(f"{where} is homed at node {homes.pop()}, not the core's node {node}")
    elif not want_local and homes == {node}:
        errors.append(f"{where} is homed at the core's own node {node}")


def validate_spec(spec: SyntheticSpec, topo: SystemTopology) -> list[str]:
    """Every violation in ``spec``; an empty list means it is valid."""
    errors: list[str] = []
    for core, phases in sorted(spec.phases.items()):
        if not 0 <= core < topo.num_cores:
            errors.append(f"core {core} out of range for {topo.num_cores} cores")
            continue
        node = node_of_core(core, topo)
        for i, p in enumerate(phases):
            where = f"cores.{core}.phases[{i}]"
            if p.length < 0:
                errors.append(f"{where}.length={p.length} must be >= 0")
            for name in ("remote_fraction", "write_fraction"):
                value = getattr(p, name)
                if not 0.0 <= value <= 1.0:
                    errors.append(f"{where}.{name}={value} must lie in [0, 1]")
            if p.pattern not in PATTERNS:
                errors.append(f"{where}.pattern={p.pattern!r} must be one of {PATTERNS}")
            if p.stride is not None and (p.stride <= 0 or p.stride % topo.line_size):
                errors.append(f"{where}.stride={p.stride} must be a positive multiple of {topo.line_size}")
            _check_set(errors, f"{where}.local_working_set", p.local, topo, True, node)
            if p.remote is not None:
                _check_set(errors, f"{where}.remote_working_set", p.remote, topo, False, node)
            elif p.remote_fraction > 0:
                errors.append(f"{where}.remote_fraction={p.remote_fraction} needs a remote_working_set")
    return errors


class _Cursor:
    def __init__(self, ws: WorkingSet, pattern: str, stride: int, line: int, rng: random.Random):
        self.ws = ws
        self.pattern = pattern
        self.stride = stride
        self.lines = ws.size // line
        self.line = line
        self.rng = rng
        self.pos = 0

    def next(self) -> int:
        if self.pattern == "random":
            return self.ws.base + self.rng.randrange(self.lines) * self.line
        addr = self.ws.base + self.pos
        self.pos = (self.pos + self.stride) % self.ws.size
        return addr


def _core_stream(core: int, phases: list[Phase], seed: int, topo: SystemTopology) -> Iterator[TraceRecord]:
    rng = random.Random(f"{seed}:{core}")
    for p in phases:
        stride = p.stride or topo.line_size
        local = _Cursor(p.local, p.pattern, stride, topo.line_size, rng)
        remote = _Cursor(p.remote, p.pattern, stride, topo.line_size, rng) if p.remote else None
        for _ in range(p.length):
            use_remote = remote is not None and rng.random() < p.remote_fraction
            addr = remote.next() if use_remote else local.next()
            kind = Kind.WRITE if rng.random() < p.write_fraction else Kind.READ
            yield TraceRecord(core, kind, addr)


def generate(spec: SyntheticSpec, topo: SystemTopology) -> list[TraceRecord]:
    """Deterministic trace for ``spec``; cores are interleaved round-robin.

    Each core draws from its own generator seeded by (seed, core), so adding
    a core leaves the other cores' streams unchanged.
    """
    errors = validate_spec(spec, topo)
    if errors:
        raise SpecError(errors)
    streams = [_core_stream(c, spec.phases[c], spec.seed, topo) for c in sorted(spec.phases)]
    out: list[TraceRecord] = []
    while streams:
        alive = []
        for s in streams:
            rec = next(s, None)
            if rec is not None:
                out.append(rec)
                alive.append(s)
        streams = alive
    return out


def _int(value) -> int:
    if isinstance(value, bool):
        raise TypeError("boolean is not an integer")
    if isinstance(value, str):
        return int(value, 0)
    if isinstance(value, int):
        return value
    raise TypeError(f"expected an integer, got {value!r}")


_PHASE_KEYS = {
    "length", "local_working_set", "remote_working_set",
    "remote_fraction", "write_fraction", "pattern", "stride",
}


def spec_from_dict(doc: dict) -> tuple[SyntheticSpec, list[str]]:
    """Build a spec from its JSON form, collecting structural errors.

    Layout::

        {"seed": 1, "cores": {"0": [{"length": 100, "local_working_set": {...}, ...}]}}
    """
    errors: list[str] = []
    unknown = set(doc) - {"seed", "cores", "topology"}
    for key in sorted(unknown):
        errors.append(f"unknown key {key!r}")
    seed = 0
    try:
        seed = _int(doc.get("seed", 0))
    except (TypeError, ValueError):
        errors.append(f"seed={doc.get('seed')!r} must be an integer")
    phases: dict[int, list[Phase]] = {}
    cores = doc.get("cores", {})
    if not isinstance(cores, dict):
        errors.append("cores must be an object mapping core id to a phase list")
        cores = {}
    for core_key, plist in cores.items():
        try:
            core = int(core_key)
        except ValueError:
            errors.append(f"cores.{core_key}: core id must be an integer")
            continue
        if not isinstance(plist, list):
            errors.append(f"cores.{core_key} must be a list of phases")
            continue
        built = []
        for i, raw in enumerate(plist):
            where = f"cores.{core}.phases[{i}]"
            if not isinstance(raw, dict):
                errors.append(f"{where} must be an object")
                continue
            for key in sorted(set(raw) - _PHASE_KEYS):
                errors.append(f"{where}: unknown key {key!r}")
            try:
                local = _working_set(raw["local_working_set"])
                remote = raw.get("remote_working_set")
                built.append(
                    Phase(
                        length=_int(raw["length"]),
                        local=local,
                        remote=_working_set(remote) if remote is not None else None,
                        remote_fraction=float(raw.get("remote_fraction", 0.0)),
                        write_fraction=float(raw.get("write_fraction", 0.0)),
                        pattern=str(raw.get("pattern", "sequential")),
                        stride=_int(raw["stride"]) if raw.get("stride") is not None else None,
                    )
                )
            except KeyError as e:
                errors.append(f"{where}: missing key {e.args[0]!r}")
            except (TypeError, ValueError) as e:
                errors.append(f"{where}: {e}")
        phases[core] = built
    return SyntheticSpec(phases=phases, seed=seed), errors


def _working_set(raw) -> WorkingSet:
    if not isinstance(raw, dict):
        raise TypeError(f"working set must be an object, got {raw!r}")
    extra = set(raw) - {"base", "size", "home"}
    if extra:
        raise ValueError(f"unknown working-set keys {sorted(extra)}")
    home = raw.get("home")
    return WorkingSet(base=_int(raw["base"]), size=_int(raw["size"]),
                      home=_int(home) if home is not None else None)
