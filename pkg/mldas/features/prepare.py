"""
Dataset cleaning: drop the invariant columns, add inner_time_flow and
integer-encode addresses.
"""

import logging
from typing import List, Sequence, Union

from ..errors import OrderingError
from ..flows.model import NSEC_PER_SEC, FlowRecord, PreparedRow, encode_ipv4

logger = logging.getLogger(__name__)

DROPPED_COLUMNS = ("timestamp", "flags", "idle_timeout", "hard_timeout",
                   "packet_count_per_sec", "packet_count_per_nsec",
                   "byte_count_per_sec", "byte_count_per_nsec")


def check_sorted(rows: Sequence[FlowRecord]) -> None:
    for index in range(1, len(rows)):
        if rows[index].timestamp < rows[index - 1].timestamp:
            raise OrderingError(
                f"Rows are not sorted by timestamp: row {index} ({rows[index].timestamp}) "
                f"precedes row {index - 1} ({rows[index - 1].timestamp})"
            )


def prepare(rows: Sequence[Union[FlowRecord, PreparedRow]]) -> List[PreparedRow]:
    """
    Convert raw records to the 15-column prepared schema.

    inner_time_flow is the gap in seconds to the previous record of the
    capture (0 for the first). Already-prepared rows pass through unchanged.

    Raises:
        OrderingError: raw rows are not sorted by timestamp
    """
    rows = list(rows)
    if rows and all(isinstance(row, PreparedRow) for row in rows):
        return rows
    check_sorted(rows)

    prepared: List[PreparedRow] = []
    previous = None
    for row in rows:
        gap = 0.0 if previous is None else (row.timestamp - previous) / NSEC_PER_SEC
        previous = row.timestamp
        prepared.append(PreparedRow(
            datapath_id=row.datapath_id,
            flow_id=row.flow_id,
            ip_src=encode_ipv4(row.key.ip_src),
            tp_src=row.key.tp_src,
            ip_dst=encode_ipv4(row.key.ip_dst),
            tp_dst=row.key.tp_dst,
            ip_proto=row.key.ip_proto,
            icmp_code=row.icmp_code,
            icmp_type=row.icmp_type,
            flow_duration_sec=row.flow_duration_sec,
            flow_duration_nsec=row.flow_duration_nsec,
            packet_count=row.packet_count,
            byte_count=row.byte_count,
            label=row.label,
            inner_time_flow=gap,
        ))
    logger.debug(f"Prepared {len(prepared)} rows")
    return prepared
