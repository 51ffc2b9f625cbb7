"""
Switch-side flow statistics export.

A PacketTrain is every packet of one flow episode. The switch reports the
flow at t_first + k * stats_interval (+ jitter) for k = 1, 2, ... while the
preceding interval still saw packets; counters are cumulative.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from ..flows.model import FlowKey, FlowRecord


@dataclass
class PacketTrain:
    """Packets of one flow, times in seconds relative to an owner-chosen origin"""
    key: FlowKey
    datapath_id: int
    times: np.ndarray
    sizes: np.ndarray
    flags: np.ndarray = None
    icmp_type: int = -1
    icmp_code: int = -1

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        if self.flags is None:
            self.flags = np.zeros(len(self.times), dtype=np.int64)
        self.flags = np.asarray(self.flags, dtype=np.int64)
        order = np.argsort(self.times, kind="stable")
        self.times, self.sizes, self.flags = self.times[order], self.sizes[order], self.flags[order]

    @property
    def first(self) -> float:
        return float(self.times[0])

    @property
    def last(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.times)


def _occupied_bins(train: PacketTrain, stats_interval: float) -> np.ndarray:
    bins = np.floor((train.times - train.times[0]) / stats_interval).astype(np.int64)
    return bins


def record_count(train: PacketTrain, stats_interval: float) -> int:
    """Number of records the train exports: bins up to the first idle interval"""
    occupancy = np.bincount(_occupied_bins(train, stats_interval))
    idle = np.flatnonzero(occupancy == 0)
    return int(idle[0]) if len(idle) else len(occupancy)


class FlowExporter:
    """Turns packet trains into FlowRecords on the scenario clock"""

    def __init__(self, stats_interval: float, rng: np.random.Generator):
        self.stats_interval = stats_interval
        self.rng = rng

    def export(self, train: PacketTrain, offset: float = 0.0, label: int = 0) -> List[FlowRecord]:
        """
        Records of one train.

        Args:
            train: The flow's packets
            offset: Seconds added to every packet time
            label: Label stamped on every record

        Returns:
            list: One FlowRecord per export, oldest first
        """
        if len(train) == 0:
            return []
        bins = _occupied_bins(train, self.stats_interval)
        count = record_count(train, self.stats_interval)
        keep = bins < count
        bins = bins[keep]

        packets = np.cumsum(np.bincount(bins, minlength=count))
        octets = np.cumsum(np.bincount(bins, weights=train.sizes[keep], minlength=count)).astype(np.int64)
        per_bin_flags = np.zeros(count, dtype=np.int64)
        np.bitwise_or.at(per_bin_flags, bins, train.flags[keep])
        flags = np.bitwise_or.accumulate(per_bin_flags)

        jitter = self.rng.uniform(0.0, 0.1 * self.stats_interval, count)
        first = offset + train.first
        first_ns = int(round(first * 1e9))
        export_ns = np.round((first + self.stats_interval * np.arange(1, count + 1) + jitter) * 1e9).astype(np.int64)

        return [
            FlowRecord.build(
                timestamp=int(export_ns[k]),
                datapath_id=train.datapath_id,
                key=train.key,
                duration_ns=int(export_ns[k]) - first_ns,
                packet_count=int(packets[k]),
                byte_count=int(octets[k]),
                flags=int(flags[k]),
                label=label,
                icmp_type=train.icmp_type,
                icmp_code=train.icmp_code,
            )
            for k in range(count)
        ]


def sort_records(records: List[FlowRecord]) -> List[FlowRecord]:
    return sorted(records, key=lambda r: (r.timestamp, r.flow_id))
