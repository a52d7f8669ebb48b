"""Machine shape and physical-address arithmetic.

The home node of a line is taken from the top ``log2(num_sockets)`` bits of
its physical address. Cores are grouped into sockets contiguously.
"""

from __future__ import annotations

from dataclasses import dataclass


class ConfigError(ValueError):
    """Invalid machine, cache or policy configuration."""


def is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def log2(n: int) -> int:
    return n.bit_length() - 1


@dataclass(frozen=True)
class SystemTopology:
    num_sockets: int
    cores_per_socket: int
    address_bits: int = 32
    line_size: int = 64

    def __post_init__(self):
        if not is_pow2(self.num_sockets):
            raise ConfigError(f"num_sockets must be a power of two >= 1, got {self.num_sockets}")
        if self.cores_per_socket < 1:
            raise ConfigError(f"cores_per_socket must be >= 1, got {self.cores_per_socket}")
        if not is_pow2(self.line_size) or self.line_size < 8:
            raise ConfigError(f"line_size must be a power of two >= 8, got {self.line_size}")
        min_bits = self.node_bits + self.offset_bits + 1
        if self.address_bits < min_bits:
            raise ConfigError(f"address_bits must be >= {min_bits}, got {self.address_bits}")

    @property
    def num_cores(self) -> int:
        return self.num_sockets * self.cores_per_socket

    @property
    def node_bits(self) -> int:
        return log2(self.num_sockets)

    @property
    def offset_bits(self) -> int:
        return log2(self.line_size)

    @property
    def address_limit(self) -> int:
        return 1 << self.address_bits

    def cores_of(self, node: int) -> range:
        """Core ids attached to socket ``node``."""
        return range(node * self.cores_per_socket, (node + 1) * self.cores_per_socket)

    def node_base(self, node: int) -> int:
        """Lowest physical address homed at ``node``."""
        return node << (self.address_bits - self.node_bits)


@dataclass(frozen=True)
class CacheGeometry:
    num_sets: int
    associativity: int
    line_size: int = 64

    def __post_init__(self):
        if not is_pow2(self.num_sets):
            raise ConfigError(f"num_sets must be a power of two, got {self.num_sets}")
        if self.associativity < 1:
            raise ConfigError(f"associativity must be >= 1, got {self.associativity}")
        if not is_pow2(self.line_size):
            raise ConfigError(f"line_size must be a power of two, got {self.line_size}")

    @property
    def capacity(self) -> int:
        """Capacity in bytes."""
        return self.num_sets * self.associativity * self.line_size

    @property
    def set_bits(self) -> int:
        return log2(self.num_sets)

    @property
    def offset_bits(self) -> int:
        return log2(self.line_size)


@dataclass(frozen=True)
class DecomposedAddress:
    tag: int
    set_index: int
    offset: int
    home: int


def check_address(addr: int, topo: SystemTopology) -> None:
    if not 0 <= addr < topo.address_limit:
        raise ConfigError(
            f"address {addr:#x} outside the {topo.address_bits}-bit physical address space"
        )


def home_node_of(addr: int, topo: SystemTopology) -> int:
    check_address(addr, topo)
    return addr >> (topo.address_bits - topo.node_bits)


def node_of_core(core: int, topo: SystemTopology) -> int:
    if not 0 <= core < topo.num_cores:
        raise ConfigError(f"core {core} out of range for {topo.num_cores} cores")
    return core // topo.cores_per_socket


def is_remote(core: int, addr: int, topo: SystemTopology) -> bool:
    return home_node_of(addr, topo) != node_of_core(core, topo)


def decompose(addr: int, topo: SystemTopology, geometry: CacheGeometry) -> DecomposedAddress:
    """Split ``addr`` into tag, set index and offset.

    The tag keeps every bit above the set index, so the home node can be
    recovered from a stored tag alone (see :func:`home_of_tag`).
    """
    if geometry.line_size != topo.line_size:
        raise ConfigError(
            f"cache line_size {geometry.line_size} != topology line_size {topo.line_size}"
        )
    home = home_node_of(addr, topo)
    off_bits = geometry.offset_bits
    set_bits = geometry.set_bits
    return DecomposedAddress(
        tag=addr >> (off_bits + set_bits),
        set_index=(addr >> off_bits) & (geometry.num_sets - 1),
        offset=addr & (geometry.line_size - 1),
        home=home,
    )


def recombine(tag: int, set_index: int, offset: int, geometry: CacheGeometry) -> int:
    off_bits = geometry.offset_bits
    return (tag << (off_bits + geometry.set_bits)) | (set_index << off_bits) | offset


def home_of_tag(tag: int, topo: SystemTopology, geometry: CacheGeometry) -> int:
    tag_bits = topo.address_bits - geometry.offset_bits - geometry.set_bits
    return tag >> (tag_bits - topo.node_bits)
