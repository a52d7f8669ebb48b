"""Set-associative cache with LRU recency and remote-biased victim selection.

Each set keeps a recency list of way indices (LRU first, MRU last) and a
remote-line counter. With the bias enabled, a remote line sitting in the LRU
position is spared in favour of the least recently used local line until the
counter exceeds the threshold, at which point the remote line goes and the
counter resets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .topology import CacheGeometry, ConfigError


@dataclass
class CacheLineState:
    valid: bool = False
    tag: int = 0
    home: int = 0
    dirty: bool = False


@dataclass
class CacheSetState:
    lines: list[CacheLineState]
    recency: list[int]
    remote_skip_counter: int = 0

    @classmethod
    def empty(cls, associativity: int) -> "CacheSetState":
        return cls(
            lines=[CacheLineState() for _ in range(associativity)],
            recency=list(range(associativity)),
        )

    @property
    def associativity(self) -> int:
        return len(self.lines)

    def invalid_way(self) -> Optional[int]:
        """Lowest-numbered invalid way, or None when the set is full."""
        for way, line in enumerate(self.lines):
            if not line.valid:
                return way
        return None


@dataclass(frozen=True)
class PlainLRU:
    pass


@dataclass(frozen=True)
class RemoteBiased:
    threshold: int

    def __post_init__(self):
        if self.threshold < 0:
            raise ConfigError(f"threshold must be >= 0, got {self.threshold}")


PolicyMode = Union[PlainLRU, RemoteBiased]


def default_threshold(associativity: int) -> int:
    return associativity // 2


@dataclass(frozen=True)
class VictimDecision:
    way: int
    evicted_remote_due_to_threshold: bool = False
    skipped_remote: bool = False
    counter_after: int = 0


def lookup(s: CacheSetState, tag: int) -> Optional[int]:
    """Way holding ``tag``, or None on a miss. Recency is left untouched."""
    for way, line in enumerate(s.lines):
        if line.valid and line.tag == tag:
            return way
    return None


def touch_mru(s: CacheSetState, way: int) -> CacheSetState:
    if not 0 <= way < s.associativity:
        raise IndexError(f"way {way} out of range")
    if s.recency[-1] != way:
        s.recency.remove(way)
        s.recency.append(way)
    return s


def select_victim(
    s: CacheSetState, local_node: int, mode: PolicyMode, bias_enabled: bool
) -> VictimDecision:
    """Pick a way to evict from a full set.

    Pure: the set is not modified; the caller stores ``counter_after``.
    """
    if not s.lines or not all(line.valid for line in s.lines):
        raise ValueError("select_victim requires a full set")
    counter = s.remote_skip_counter
    lru = s.recency[0]
    if isinstance(mode, PlainLRU) or not bias_enabled:
        return VictimDecision(way=lru, counter_after=counter)
    if s.lines[lru].home == local_node:
        return VictimDecision(way=lru, counter_after=counter)

    local_ways = [w for w in s.recency if s.lines[w].home == local_node]
    if not local_ways:
        return VictimDecision(way=lru, counter_after=counter)
    if counter > mode.threshold:
        return VictimDecision(way=lru, evicted_remote_due_to_threshold=True, counter_after=0)
    return VictimDecision(way=local_ways[0], skipped_remote=True, counter_after=counter + 1)


def apply_fill(s: CacheSetState, way: int, tag: int, home: int, dirty: bool) -> CacheSetState:
    line = s.lines[way]
    line.valid = True
    line.tag = tag
    line.home = home
    line.dirty = dirty
    return touch_mru(s, way)


def invalidate(s: CacheSetState, way: int) -> CacheLineState:
    """Drop the line in ``way`` and return a copy of what it held.

    The way keeps its recency slot; it is refilled before any victim search.
    """
    line = s.lines[way]
    old = CacheLineState(line.valid, line.tag, line.home, line.dirty)
    line.valid = False
    line.dirty = False
    return old


@dataclass
class Cache:
    """One cache instance: ``num_sets`` sets of ``associativity`` ways.

    ``local_node`` is the socket the cache sits on; it decides which lines
    count as remote during victim selection.
    """

    geometry: CacheGeometry
    local_node: int
    mode: PolicyMode = field(default_factory=PlainLRU)
    sets: list[CacheSetState] = field(init=False)

    def __post_init__(self):
        self.sets = [CacheSetState.empty(self.geometry.associativity) for _ in range(self.geometry.num_sets)]

    def counters(self) -> list[int]:
        return [s.remote_skip_counter for s in self.sets]
