"""Two-level inclusive writeback hierarchy over a multi-socket machine.

Every core has a private L1; every socket has one LLC shared by its cores.
The LLC is inclusive: evicting an LLC line back-invalidates the socket's L1
copies and folds their dirty bits into the LLC writeback. Sockets do not
snoop each other (no coherence protocol).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .adaptive import BiasController, shared_bias
from .cache import (
    Cache,
    PlainLRU,
    RemoteBiased,
    apply_fill,
    default_threshold,
    invalidate,
    lookup,
    select_victim,
    touch_mru,
)
from .outcome import AccessOutcome, Eviction, Level, ServedAt, Writeback
from .topology import (
    CacheGeometry,
    ConfigError,
    SystemTopology,
    decompose,
    home_node_of,
    recombine,
)
from .trace import TraceRecord

POLICY_MODES = ("lru", "biased", "adaptive")


@dataclass(frozen=True)
class Latencies:
    l1_hit: int = 4
    llc_hit: int = 30
    dram_local: int = 100
    dram_remote: int = 250

    def __post_init__(self):
        if not self.dram_remote >= self.dram_local >= self.llc_hit >= self.l1_hit >= 1:
            raise ConfigError(
                "latencies must satisfy dram_remote >= dram_local >= llc_hit >= l1_hit >= 1"
            )


@dataclass(frozen=True)
class HierarchyConfig:
    topology: SystemTopology
    l1: CacheGeometry
    llc: CacheGeometry
    latencies: Latencies = Latencies()
    mode: str = "lru"
    l1_threshold: Optional[int] = None
    llc_threshold: Optional[int] = None
    window: int = 1000
    high_wm: float = 0.5
    low_wm: float = 0.1

    def __post_init__(self):
        topo = self.topology
        if self.mode not in POLICY_MODES:
            raise ConfigError(f"policy mode must be one of {POLICY_MODES}, got {self.mode!r}")
        for name, geom in (("l1", self.l1), ("llc", self.llc)):
            if geom.line_size != topo.line_size:
                raise ConfigError(f"{name}.line_size {geom.line_size} != topology line_size {topo.line_size}")
            tag_bits = topo.address_bits - geom.offset_bits - geom.set_bits
            if tag_bits < max(topo.node_bits, 1):
                raise ConfigError(f"{name}: tag too narrow to hold the home-node bits")
        if self.llc.capacity < self.l1.capacity * topo.cores_per_socket:
            raise ConfigError("llc capacity must be >= l1 capacity x cores_per_socket for inclusion")
        for name in ("l1_threshold", "llc_threshold"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError(f"{name} must be >= 0, got {value}")
        # constructing one validates window and watermarks
        BiasController(self.window, self.high_wm, self.low_wm)

    @property
    def l1_h(self) -> int:
        return default_threshold(self.l1.associativity) if self.l1_threshold is None else self.l1_threshold

    @property
    def llc_h(self) -> int:
        return default_threshold(self.llc.associativity) if self.llc_threshold is None else self.llc_threshold

    def with_mode(self, mode: str) -> "HierarchyConfig":
        return replace(self, mode=mode)


class RecordError(ValueError):
    """A trace record that cannot be simulated; carries its index."""

    def __init__(self, index: int, message: str):
        super().__init__(f"record {index}: {message}")
        self.index = index


@dataclass
class Transition:
    core: int
    index: int
    on: bool


class Hierarchy:
    """Mutable simulation state: caches, controllers and the record counter."""

    def __init__(self, config: HierarchyConfig):
        self.config = config
        topo = config.topology
        if config.mode == "lru":
            l1_mode, llc_mode = PlainLRU(), PlainLRU()
        else:
            l1_mode, llc_mode = RemoteBiased(config.l1_h), RemoteBiased(config.llc_h)
        self.l1s = [
            Cache(config.l1, core // topo.cores_per_socket, l1_mode) for core in range(topo.num_cores)
        ]
        self.llcs = [Cache(config.llc, node, llc_mode) for node in range(topo.num_sockets)]
        self.controllers = [
            BiasController(config.window, config.high_wm, config.low_wm) for _ in range(topo.num_cores)
        ]
        self.transitions: list[Transition] = []
        self.index = 0

    # bias flags -----------------------------------------------------------

    def l1_bias(self, core: int) -> bool:
        mode = self.config.mode
        if mode == "adaptive":
            return self.controllers[core].state
        return mode == "biased"

    def llc_bias(self, node: int) -> bool:
        mode = self.config.mode
        if mode == "adaptive":
            topo = self.config.topology
            return shared_bias(self.controllers[c] for c in topo.cores_of(node))
        return mode == "biased"

    # access path ----------------------------------------------------------

    def access(self, rec: TraceRecord) -> AccessOutcome:
        topo = self.config.topology
        lat = self.config.latencies
        index = self.index
        if not 0 <= rec.core < topo.num_cores:
            raise RecordError(index, f"core {rec.core} out of range for {topo.num_cores} cores")
        if not 0 <= rec.addr < topo.address_limit:
            raise RecordError(index, f"address {rec.addr:#x} exceeds {topo.address_bits} bits")
        self.index += 1

        core = rec.core
        node = core // topo.cores_per_socket
        l1 = self.l1s[core]
        a1 = decompose(rec.addr, topo, self.config.l1)
        s1 = l1.sets[a1.set_index]
        way = lookup(s1, a1.tag)
        if way is not None:
            touch_mru(s1, way)
            if rec.is_write:
                s1.lines[way].dirty = True
            return AccessOutcome(
                ServedAt.L1, lat.l1_hit, bias_was_enabled=self.l1_bias(core), is_write=rec.is_write
            )

        remote = a1.home != node
        if self.config.mode == "adaptive":
            if self.controllers[core].record_miss(remote):
                self.transitions.append(Transition(core, index, self.controllers[core].state))

        writebacks: list[Writeback] = []
        evictions: list[Eviction] = []
        llc = self.llcs[node]
        a2 = decompose(rec.addr, topo, self.config.llc)
        s2 = llc.sets[a2.set_index]
        way2 = lookup(s2, a2.tag)
        llc_flag = None
        if way2 is not None:
            touch_mru(s2, way2)
            served = ServedAt.LLC
            latency = lat.l1_hit + lat.llc_hit
        else:
            llc_flag = self.llc_bias(node)
            self._fill_llc(node, a2.tag, a2.set_index, a2.home, llc_flag, writebacks, evictions)
            if remote:
                served, dram = ServedAt.DRAM_REMOTE, lat.dram_remote
            else:
                served, dram = ServedAt.DRAM_LOCAL, lat.dram_local
            latency = lat.l1_hit + lat.llc_hit + dram

        l1_flag = self.l1_bias(core)
        self._fill_l1(core, a1.tag, a1.set_index, a1.home, rec.is_write, l1_flag, writebacks, evictions)
        return AccessOutcome(
            served,
            latency,
            l1_miss_was_remote=remote,
            writebacks=tuple(writebacks),
            evictions=tuple(evictions),
            bias_was_enabled=l1_flag,
            llc_bias_enabled=llc_flag,
            is_write=rec.is_write,
        )

    def _fill_llc(self, node, tag, set_index, home, flag, writebacks, evictions):
        topo = self.config.topology
        geom = self.config.llc
        llc = self.llcs[node]
        s = llc.sets[set_index]
        way = s.invalid_way()
        if way is None:
            d = select_victim(s, node, llc.mode, flag)
            way = d.way
            s.remote_skip_counter = d.counter_after
            victim = s.lines[way]
            vaddr = recombine(victim.tag, set_index, 0, geom)
            dirty = victim.dirty
            for c in topo.cores_of(node):
                dropped = self._back_invalidate(c, vaddr)
                if dropped is None:
                    continue
                evictions.append(dropped)
                if dropped.dirty:
                    writebacks.append(Writeback(victim.home, Level.L1, node, vaddr))
                    dirty = True
            evictions.append(
                Eviction(
                    Level.LLC, node, set_index, way, vaddr, dirty,
                    skipped_remote=d.skipped_remote,
                    threshold_eviction=d.evicted_remote_due_to_threshold,
                    counter_after=d.counter_after,
                )
            )
            if dirty:
                writebacks.append(Writeback(victim.home, Level.LLC, node, vaddr))
        apply_fill(s, way, tag, home, False)

    def _back_invalidate(self, core: int, addr: int) -> Optional[Eviction]:
        topo = self.config.topology
        a = decompose(addr, topo, self.config.l1)
        s = self.l1s[core].sets[a.set_index]
        way = lookup(s, a.tag)
        if way is None:
            return None
        old = invalidate(s, way)
        return Eviction(Level.L1, core, a.set_index, way, addr, old.dirty, back_invalidate=True,
                        counter_after=s.remote_skip_counter)

    def _fill_l1(self, core, tag, set_index, home, dirty, flag, writebacks, evictions):
        geom = self.config.l1
        l1 = self.l1s[core]
        s = l1.sets[set_index]
        way = s.invalid_way()
        if way is None:
            d = select_victim(s, l1.local_node, l1.mode, flag)
            way = d.way
            s.remote_skip_counter = d.counter_after
            victim = s.lines[way]
            vaddr = recombine(victim.tag, set_index, 0, geom)
            evictions.append(
                Eviction(
                    Level.L1, core, set_index, way, vaddr, victim.dirty,
                    skipped_remote=d.skipped_remote,
                    threshold_eviction=d.evicted_remote_due_to_threshold,
                    counter_after=d.counter_after,
                )
            )
            if victim.dirty:
                self._merge_dirty(l1.local_node, vaddr)
                writebacks.append(Writeback(victim.home, Level.L1, l1.local_node, vaddr))
        apply_fill(s, way, tag, home, dirty)

    def _merge_dirty(self, node: int, addr: int) -> None:
        a = decompose(addr, self.config.topology, self.config.llc)
        s = self.llcs[node].sets[a.set_index]
        way = lookup(s, a.tag)
        if way is None:
            raise AssertionError(f"inclusion violated: {addr:#x} missing from LLC {node}")
        s.lines[way].dirty = True

    # checks ---------------------------------------------------------------

    def check_inclusion(self) -> None:
        """Raise AssertionError if any valid L1 line is absent from its LLC."""
        topo = self.config.topology
        for core, l1 in enumerate(self.l1s):
            llc = self.llcs[l1.local_node]
            for set_index, s in enumerate(l1.sets):
                for line in s.lines:
                    if not line.valid:
                        continue
                    addr = recombine(line.tag, set_index, 0, self.config.l1)
                    a = decompose(addr, topo, self.config.llc)
                    if lookup(llc.sets[a.set_index], a.tag) is None:
                        raise AssertionError(f"L1 of core {core} holds {addr:#x} absent from LLC")
                    if line.home != home_node_of(addr, topo):
                        raise AssertionError(f"stored home of {addr:#x} disagrees with its address")


def iter_outcomes(hier: Hierarchy, records: Iterable[TraceRecord]) -> Iterator[AccessOutcome]:
    for rec in records:
        yield hier.access(rec)


def run_trace(config: HierarchyConfig, records: Iterable[TraceRecord], trace_digest: str | None = None):
    """Simulate ``records`` from cold caches and return the finished report."""
    from .report import SimReport, trace_digest_of

    records = list(records)
    hier = Hierarchy(config)
    report = SimReport.for_config(config, trace_digest or trace_digest_of(records))
    for rec in records:
        report.record_outcome(rec.core, hier.access(rec))
    report.transitions = [(t.core, t.index, t.on) for t in hier.transitions]
    return report


def amat(report) -> Optional[Fraction]:
    """Mean latency per access; None for an empty run."""
    return report.total.amat
