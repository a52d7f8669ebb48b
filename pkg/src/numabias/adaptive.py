"""Per-core on/off control of the replacement bias.

Each core counts its L1 misses in fixed windows of ``window`` misses. At the
end of a window the fraction of remote misses is compared to two watermarks:
above ``high_wm`` turns the bias on, below ``low_wm`` turns it off, anything
in between keeps the previous state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .topology import ConfigError


@dataclass
class BiasController:
    window: int = 1000
    high_wm: float = 0.5
    low_wm: float = 0.1
    state: bool = False
    remote_in_window: int = 0
    total_in_window: int = 0
    last_fraction: float | None = None

    def __post_init__(self):
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if not 0 <= self.low_wm < self.high_wm <= 1:
            raise ConfigError(
                f"watermarks must satisfy 0 <= low_wm < high_wm <= 1, got {self.low_wm}, {self.high_wm}"
            )

    def record_miss(self, is_remote: bool) -> bool:
        """Count one miss. Returns True if the state flipped at this miss."""
        self.total_in_window += 1
        if is_remote:
            self.remote_in_window += 1
        if self.total_in_window < self.window:
            return False
        fraction = self.remote_in_window / self.total_in_window
        self.remote_in_window = 0
        self.total_in_window = 0
        self.last_fraction = fraction
        return self.apply_fraction(fraction)

    def apply_fraction(self, fraction: float) -> bool:
        before = self.state
        if fraction > self.high_wm:
            self.state = True
        elif fraction < self.low_wm:
            self.state = False
        return self.state != before

    @property
    def bias_enabled(self) -> bool:
        return self.state


def bias_enabled(ctrl: BiasController) -> bool:
    return ctrl.state


def shared_bias(ctrls: Iterable[BiasController]) -> bool:
    """OR over the controllers of every core sharing a cache."""
    ctrls = list(ctrls)
    if not ctrls:
        raise ConfigError("shared_bias needs at least one controller")
    return any(c.state for c in ctrls)
