"""
Flow data model and dataset CSV schemas.
"""

from .model import (
    ICMP,
    PREPARED_COLUMNS,
    RAW_COLUMNS,
    TCP,
    UDP,
    FlowKey,
    FlowRecord,
    PreparedRow,
    decode_ipv4,
    derive_rates,
    encode_ipv4,
    flow_id_of,
)
from .dataset import Schema, read_dataset, read_frame, write_dataset

__all__ = [
    "ICMP",
    "PREPARED_COLUMNS",
    "RAW_COLUMNS",
    "TCP",
    "UDP",
    "FlowKey",
    "FlowRecord",
    "PreparedRow",
    "Schema",
    "decode_ipv4",
    "derive_rates",
    "encode_ipv4",
    "flow_id_of",
    "read_dataset",
    "read_frame",
    "write_dataset",
]
