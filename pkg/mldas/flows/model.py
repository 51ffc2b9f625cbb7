"""
Flow data model: 5-tuple keys, raw flow-statistics records, the cleaned
15-column rows used for training, and the identifier/rate helpers.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

from ..errors import DatasetValidationError, ParseError

ICMP = 1
TCP = 6
UDP = 17
PROTOCOLS = (ICMP, TCP, UDP)

IDLE_TIMEOUT = 20
HARD_TIMEOUT = 100

NSEC_PER_SEC = 1_000_000_000

# TCP flag bits as carried in the flags bitmask
TCP_FIN = 0x01
TCP_SYN = 0x02
TCP_RST = 0x04
TCP_PSH = 0x08
TCP_ACK = 0x10

FNV64_OFFSET = 0xcbf29ce484222325
FNV64_PRIME = 0x100000001b3
_MASK64 = (1 << 64) - 1

# Raw schema: the recorded metrics, flow_id listed once
RAW_COLUMNS: Tuple[str, ...] = (
    "timestamp",
    "datapath_id",
    "flow_id",
    "ip_src",
    "tp_src",
    "ip_dst",
    "tp_dst",
    "ip_proto",
    "icmp_code",
    "icmp_type",
    "flow_duration_sec",
    "flow_duration_nsec",
    "idle_timeout",
    "hard_timeout",
    "flags",
    "packet_count",
    "byte_count",
    "packet_count_per_sec",
    "packet_count_per_nsec",
    "byte_count_per_sec",
    "byte_count_per_nsec",
    "label",
)

# Prepared schema: invariant columns dropped, IPs integer-encoded
PREPARED_COLUMNS: Tuple[str, ...] = (
    "datapath_id",
    "flow_id",
    "ip_src",
    "tp_src",
    "ip_dst",
    "tp_dst",
    "ip_proto",
    "icmp_code",
    "icmp_type",
    "flow_duration_sec",
    "flow_duration_nsec",
    "packet_count",
    "byte_count",
    "label",
    "inner_time_flow",
)


def encode_ipv4(addr: str) -> int:
    """
    Encode a dotted-quad IPv4 address as a 32-bit unsigned integer.

    Args:
        addr: Address such as "10.0.0.2"

    Returns:
        int: a*2^24 + b*2^16 + c*2^8 + d

    Raises:
        ParseError: malformed string or an octet outside 0-255
    """
    if not isinstance(addr, str):
        raise ParseError(f"IPv4 address must be a string, got {type(addr).__name__}")
    parts = addr.split(".")
    if len(parts) != 4:
        raise ParseError(f"IPv4 address '{addr}' must have 4 octets, found {len(parts)}")

    value = 0
    for position, octet in enumerate(parts, 1):
        if not octet.isdigit() or not octet.isascii():
            raise ParseError(f"IPv4 address '{addr}': octet {position} ('{octet}') is not a number")
        number = int(octet)
        if number > 255:
            raise ParseError(f"IPv4 address '{addr}': octet {position} ({number}) is out of range 0-255")
        value = (value << 8) | number
    return value


def decode_ipv4(value: int) -> str:
    """Inverse of encode_ipv4"""
    if not 0 <= value <= 0xFFFFFFFF:
        raise ParseError(f"{value} is not a 32-bit unsigned integer")
    return ".".join(str((value >> shift) & 0xFF) for shift in (24, 16, 8, 0))


@dataclass(frozen=True)
class FlowKey:
    """Unidirectional flow identity"""
    ip_src: str
    tp_src: int
    ip_dst: str
    tp_dst: int
    ip_proto: int

    def __post_init__(self):
        encode_ipv4(self.ip_src)
        encode_ipv4(self.ip_dst)
        if self.ip_proto not in PROTOCOLS:
            raise DatasetValidationError(f"Invalid ip_proto: {self.ip_proto}")
        for name in ("tp_src", "tp_dst"):
            port = getattr(self, name)
            if not 0 <= port <= 65535:
                raise DatasetValidationError(f"Invalid {name}: {port}")
        if self.ip_proto == ICMP and (self.tp_src != 0 or self.tp_dst != 0):
            raise DatasetValidationError("ICMP flows must have tp_src = tp_dst = 0")

    def canonical(self) -> str:
        return f"{self.ip_src}|{self.tp_src}|{self.ip_dst}|{self.tp_dst}|{self.ip_proto}"

    def reverse(self) -> "FlowKey":
        return FlowKey(self.ip_dst, self.tp_dst, self.ip_src, self.tp_src, self.ip_proto)


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash"""
    value = FNV64_OFFSET
    for byte in data:
        value ^= byte
        value = (value * FNV64_PRIME) & _MASK64
    return value


@lru_cache(maxsize=65536)
def flow_id_of(key: FlowKey) -> int:
    """
    Stable 64-bit identifier of a flow key.

    FNV-1a over the UTF-8 bytes of "ip_src|tp_src|ip_dst|tp_dst|ip_proto",
    so the same key hashes identically across runs and platforms.
    """
    return fnv1a_64(key.canonical().encode("utf-8"))


@dataclass(frozen=True)
class FlowRecord:
    """One flow-statistics row as exported by a switch"""
    timestamp: int
    datapath_id: int
    key: FlowKey
    flow_id: int
    icmp_code: int
    icmp_type: int
    flow_duration_sec: int
    flow_duration_nsec: int
    packet_count: int
    byte_count: int
    label: int = 0
    flags: int = 0
    idle_timeout: int = IDLE_TIMEOUT
    hard_timeout: int = HARD_TIMEOUT

    def __post_init__(self):
        if self.timestamp < 0:
            raise DatasetValidationError(f"Invalid timestamp: {self.timestamp}")
        if self.datapath_id < 1:
            raise DatasetValidationError(f"Invalid datapath_id: {self.datapath_id}")
        if not 0 <= self.flow_id < (1 << 64):
            raise DatasetValidationError(f"Invalid flow_id: {self.flow_id}")
        if self.flow_duration_sec < 0 or not 0 <= self.flow_duration_nsec < NSEC_PER_SEC:
            raise DatasetValidationError(
                f"Invalid duration: {self.flow_duration_sec}s {self.flow_duration_nsec}ns"
            )
        if self.packet_count < 0 or self.byte_count < 0:
            raise DatasetValidationError("Counters must be nonnegative")
        if self.packet_count > 0 and self.byte_count < self.packet_count:
            raise DatasetValidationError(
                f"byte_count {self.byte_count} below packet_count {self.packet_count}"
            )
        if self.label not in (0, 1):
            raise DatasetValidationError(f"Invalid label: {self.label}")
        if self.key.ip_proto != ICMP and (self.icmp_code != -1 or self.icmp_type != -1):
            raise DatasetValidationError("icmp_code/icmp_type must be -1 for non-ICMP flows")

    @classmethod
    def build(cls, timestamp: int, datapath_id: int, key: FlowKey, duration_ns: int,
              packet_count: int, byte_count: int, flags: int = 0, label: int = 0,
              icmp_type: int = -1, icmp_code: int = -1) -> "FlowRecord":
        """Create a record, deriving flow_id and splitting the duration"""
        return cls(
            timestamp=timestamp,
            datapath_id=datapath_id,
            key=key,
            flow_id=flow_id_of(key),
            icmp_code=icmp_code,
            icmp_type=icmp_type,
            flow_duration_sec=duration_ns // NSEC_PER_SEC,
            flow_duration_nsec=duration_ns % NSEC_PER_SEC,
            packet_count=packet_count,
            byte_count=byte_count,
            label=label,
            flags=flags,
        )

    @property
    def duration_ns(self) -> int:
        return self.flow_duration_sec * NSEC_PER_SEC + self.flow_duration_nsec

    @property
    def install_time(self) -> int:
        """Time the flow's first packet was seen (ns)"""
        return self.timestamp - self.duration_ns

    def to_row(self) -> Dict[str, object]:
        """Row in RAW_COLUMNS order, rates included"""
        rates = derive_rates(self)
        return {
            "timestamp": self.timestamp,
            "datapath_id": self.datapath_id,
            "flow_id": self.flow_id,
            "ip_src": self.key.ip_src,
            "tp_src": self.key.tp_src,
            "ip_dst": self.key.ip_dst,
            "tp_dst": self.key.tp_dst,
            "ip_proto": self.key.ip_proto,
            "icmp_code": self.icmp_code,
            "icmp_type": self.icmp_type,
            "flow_duration_sec": self.flow_duration_sec,
            "flow_duration_nsec": self.flow_duration_nsec,
            "idle_timeout": self.idle_timeout,
            "hard_timeout": self.hard_timeout,
            "flags": self.flags,
            "packet_count": self.packet_count,
            "byte_count": self.byte_count,
            "packet_count_per_sec": rates[0],
            "packet_count_per_nsec": rates[1],
            "byte_count_per_sec": rates[2],
            "byte_count_per_nsec": rates[3],
            "label": self.label,
        }


@dataclass(frozen=True)
class PreparedRow:
    """Cleaned 15-column row fed to feature extraction and training"""
    datapath_id: int
    flow_id: int
    ip_src: int
    tp_src: int
    ip_dst: int
    tp_dst: int
    ip_proto: int
    icmp_code: int
    icmp_type: int
    flow_duration_sec: int
    flow_duration_nsec: int
    packet_count: int
    byte_count: int
    label: int
    inner_time_flow: float = field(default=0.0)

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DatasetValidationError(f"Invalid label: {self.label}")
        if self.inner_time_flow < 0:
            raise DatasetValidationError(f"Invalid inner_time_flow: {self.inner_time_flow}")
        if self.ip_proto not in PROTOCOLS:
            raise DatasetValidationError(f"Invalid ip_proto: {self.ip_proto}")
        if not 0 <= self.flow_duration_nsec < NSEC_PER_SEC or self.flow_duration_sec < 0:
            raise DatasetValidationError("Invalid duration")

    def to_row(self) -> Dict[str, object]:
        return {name: getattr(self, name) for name in PREPARED_COLUMNS}


def derive_rates(record: FlowRecord) -> Tuple[float, float, float, float]:
    """
    Packet and byte rates of a record.

    Returns:
        (packet_count_per_sec, packet_count_per_nsec, byte_count_per_sec,
        byte_count_per_nsec); a zero duration unit yields a zero rate
    """
    sec = record.flow_duration_sec
    nsec = record.flow_duration_nsec
    return (
        record.packet_count / sec if sec > 0 else 0.0,
        record.packet_count / nsec if nsec > 0 else 0.0,
        record.byte_count / sec if sec > 0 else 0.0,
        record.byte_count / nsec if nsec > 0 else 0.0,
    )
