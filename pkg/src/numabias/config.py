"""Run configuration: a strict JSON document.

Example::

    {
      "topology": {"num_sockets": 2, "cores_per_socket": 4},
      "l1": {"num_sets": 64, "associativity": 8},
      "llc": {"num_sets": 1024, "associativity": 16, "threshold": 8},
      "latencies": {"l1_hit": 4, "llc_hit": 30, "dram_local": 100, "dram_remote": 250},
      "policy": {"mode": "adaptive", "window": 1000, "high_wm": 0.5, "low_wm": 0.1},
      "output": {"path": "report.json", "format": "json"}
    }

Omitted keys take their defaults (``threshold`` defaults to associativity
// 2). Unknown keys are rejected so a typo cannot silently fall back to a
default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional

from .hierarchy import HierarchyConfig, Latencies
from .topology import CacheGeometry, ConfigError, SystemTopology

_SECTIONS = {
    "topology": {"num_sockets", "cores_per_socket", "address_bits", "line_size"},
    "l1": {"num_sets", "associativity", "threshold"},
    "llc": {"num_sets", "associativity", "threshold"},
    "latencies": {"l1_hit", "llc_hit", "dram_local", "dram_remote"},
    "policy": {"mode", "window", "high_wm", "low_wm"},
    "output": {"path", "format"},
}
_REQUIRED = {
    "topology": {"num_sockets", "cores_per_socket"},
    "l1": {"num_sets", "associativity"},
    "llc": {"num_sets", "associativity"},
}
_FLOAT_KEYS = {"high_wm", "low_wm"}
_STR_KEYS = {"mode", "path", "format"}


@dataclass(frozen=True)
class RunConfig:
    hierarchy: HierarchyConfig
    output_path: Optional[str] = None
    output_format: str = "json"

    @property
    def topology(self) -> SystemTopology:
        return self.hierarchy.topology


def _typed(section: str, key: str, value: Any):
    where = f"{section}.{key}"
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if key == "threshold" and value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def config_from_dict(doc: Any) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    for section in doc:
        if section not in _SECTIONS:
            raise ConfigError(f"unknown key {section!r}")
    parsed: dict[str, dict] = {}
    for section, allowed in _SECTIONS.items():
        raw = doc.get(section, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"{section}: expected an object")
        for key in raw:
            if key not in allowed:
                raise ConfigError(f"unknown key {section}.{key}")
        for key in sorted(_REQUIRED.get(section, ())):
            if key not in raw:
                raise ConfigError(f"missing key {section}.{key}")
        parsed[section] = {k: _typed(section, k, v) for k, v in raw.items()}

    def build(what, factory, kwargs):
        try:
            return factory(**kwargs)
        except ConfigError as e:
            raise ConfigError(f"{what}: {e}") from None

    topo = build("topology", SystemTopology, parsed["topology"])
    l1_raw = dict(parsed["l1"])
    llc_raw = dict(parsed["llc"])
    l1_h = l1_raw.pop("threshold", None)
    llc_h = llc_raw.pop("threshold", None)
    l1 = build("l1", CacheGeometry, dict(l1_raw, line_size=topo.line_size))
    llc = build("llc", CacheGeometry, dict(llc_raw, line_size=topo.line_size))
    lat = build("latencies", Latencies, parsed["latencies"])
    policy = parsed["policy"]
    hier = build(
        "hierarchy",
        HierarchyConfig,
        dict(
            topology=topo, l1=l1, llc=llc, latencies=lat,
            mode=policy.get("mode", "lru"),
            l1_threshold=l1_h, llc_threshold=llc_h,
            window=policy.get("window", 1000),
            high_wm=policy.get("high_wm", 0.5),
            low_wm=policy.get("low_wm", 0.1),
        ),
    )
    out = parsed["output"]
    fmt = out.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"output.format: expected 'json' or 'csv', got {fmt!r}")
    return RunConfig(hier, out.get("path"), fmt)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
    return config_from_dict(doc)
