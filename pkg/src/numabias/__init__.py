"""Trace-driven ccNUMA cache simulator with remote-biased LRU replacement."""

from .adaptive import BiasController, bias_enabled, shared_bias
from .cache import (
    CacheLineState,
    CacheSetState,
    PlainLRU,
    RemoteBiased,
    VictimDecision,
    apply_fill,
    lookup,
    select_victim,
    touch_mru,
)
from .config import RunConfig, config_from_dict, load_config
from .hierarchy import Hierarchy, HierarchyConfig, Latencies, RecordError, amat, run_trace
from .outcome import AccessOutcome, Eviction, Level, ServedAt, Writeback
from .report import Counters, SimReport, diff, emit
from .topology import (
    CacheGeometry,
    ConfigError,
    DecomposedAddress,
    SystemTopology,
    decompose,
    home_node_of,
    node_of_core,
)
from .trace import Kind, Phase, SyntheticSpec, TraceRecord, WorkingSet, generate, parse_record, validate_spec

__version__ = "0.1.0"
