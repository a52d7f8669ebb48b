"""Records describing what a single simulated access did."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class ServedAt(enum.Enum):
    L1 = "L1"
    LLC = "LLC"
    DRAM_LOCAL = "DramLocal"
    DRAM_REMOTE = "DramRemote"


class Level(enum.Enum):
    L1 = "L1"
    LLC = "LLC"


@dataclass(frozen=True)
class Writeback:
    """A dirty line leaving ``from_level``.

    L1 writebacks merge into the socket's LLC copy; LLC writebacks go to
    the DRAM of ``home``. ``node`` is the socket the writing cache sits on.
    """

    home: int
    from_level: Level
    node: int
    addr: int

    @property
    def is_remote(self) -> bool:
        return self.home != self.node


@dataclass(frozen=True)
class Eviction:
    """A valid line removed from a cache.

    ``cache`` is the core id for L1 and the socket id for the LLC.
    ``back_invalidate`` marks L1 copies dropped to keep the LLC inclusive;
    those bypass victim selection, so the decision flags stay False.
    """

    level: Level
    cache: int
    set_index: int
    way: int
    addr: int
    dirty: bool
    back_invalidate: bool = False
    skipped_remote: bool = False
    threshold_eviction: bool = False
    counter_after: int = 0


@dataclass(frozen=True)
class AccessOutcome:
    served_at: ServedAt
    latency: int
    l1_miss_was_remote: bool = False
    writebacks: tuple[Writeback, ...] = ()
    evictions: tuple[Eviction, ...] = ()
    bias_was_enabled: bool = False
    llc_bias_enabled: bool | None = None
    is_write: bool = False

    @property
    def l1_hit(self) -> bool:
        return self.served_at is ServedAt.L1

    @property
    def skip_events(self) -> int:
        return sum(e.skipped_remote for e in self.evictions)

    @property
    def threshold_evictions(self) -> int:
        return sum(e.threshold_eviction for e in self.evictions)
