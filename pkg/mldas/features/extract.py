"""
Per-flow feature extraction.

The FeatureBuilder folds records one at a time, so the same code serves
offline training and the online controller: every emitted vector only
depends on records seen so far.
"""

import logging
from dataclasses import astuple, dataclass, fields
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import SchemaError
from ..flows.dataset import Schema
from ..flows.model import (
    HARD_TIMEOUT,
    IDLE_TIMEOUT,
    NSEC_PER_SEC,
    TCP_ACK,
    TCP_FIN,
    TCP_SYN,
    FlowRecord,
    encode_ipv4,
)

logger = logging.getLogger(__name__)

IDLE_TIMEOUT_NS = IDLE_TIMEOUT * NSEC_PER_SEC
HARD_TIMEOUT_NS = HARD_TIMEOUT * NSEC_PER_SEC
SWEEP_INTERVAL_NS = NSEC_PER_SEC


class Observation(NamedTuple):
    """Numeric view of one record as the feature builder needs it"""
    timestamp: int
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
    flags: int
    label: int

    @property
    def key(self) -> Tuple[int, int, int, int, int]:
        return (self.ip_src, self.tp_src, self.ip_dst, self.tp_dst, self.ip_proto)

    @property
    def reverse_key(self) -> Tuple[int, int, int, int, int]:
        return (self.ip_dst, self.tp_dst, self.ip_src, self.tp_src, self.ip_proto)

    @property
    def install_time(self) -> int:
        return self.timestamp - (self.flow_duration_sec * NSEC_PER_SEC + self.flow_duration_nsec)

    @classmethod
    def of(cls, record: FlowRecord) -> "Observation":
        key = record.key
        return cls(
            record.timestamp, record.flow_id, encode_ipv4(key.ip_src), key.tp_src,
            encode_ipv4(key.ip_dst), key.tp_dst, key.ip_proto, record.icmp_code, record.icmp_type,
            record.flow_duration_sec, record.flow_duration_nsec, record.packet_count,
            record.byte_count, record.flags, record.label,
        )


@dataclass(frozen=True)
class FeatureVector:
    """
    Behavioural aggregates of a flow followed by the pass-through columns
    of its latest record. packet_count and byte_count are not passed
    through: with cumulative counters they equal packets_per_flow and
    bytes_per_flow.
    """
    packets_per_flow: float
    interarrival_variance: float
    syn_count: float
    bytes_per_flow: float
    flow_duration: float
    avg_packet_size: float
    directionality_ratio: float
    interarrival_mean: float
    ack_count: float
    fin_count: float
    ip_src: float
    tp_src: float
    ip_dst: float
    tp_dst: float
    ip_proto: float
    icmp_code: float
    icmp_type: float
    flow_duration_sec: float
    flow_duration_nsec: float
    inner_time_flow: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


FEATURE_COLUMNS: Tuple[str, ...] = tuple(f.name for f in fields(FeatureVector))
AGGREGATE_COLUMNS = FEATURE_COLUMNS[:10]


class _FlowState:
    __slots__ = ("install", "records", "last_ts", "gap_mean", "gap_m2", "syn", "ack", "fin", "packets")

    def __init__(self, install: int):
        self.install = install
        self.records = 0
        self.last_ts = 0
        self.gap_mean = 0.0
        self.gap_m2 = 0.0
        self.syn = 0
        self.ack = 0
        self.fin = 0
        self.packets = 0

    def add(self, obs: Observation) -> None:
        if self.records:
            # Welford update over within-flow record gaps
            gap = (obs.timestamp - self.last_ts) / NSEC_PER_SEC
            n = self.records
            delta = gap - self.gap_mean
            self.gap_mean += delta / n
            self.gap_m2 += delta * (gap - self.gap_mean)
        self.records += 1
        self.last_ts = obs.timestamp
        self.syn += 1 if obs.flags & TCP_SYN else 0
        self.ack += 1 if obs.flags & TCP_ACK else 0
        self.fin += 1 if obs.flags & TCP_FIN else 0
        self.packets = obs.packet_count

    @property
    def gaps(self) -> int:
        return max(0, self.records - 1)

    @property
    def gap_variance(self) -> float:
        return max(0.0, self.gap_m2 / self.gaps) if self.gaps else 0.0


class FeatureBuilder:
    """
    Causal per-flow accumulator.

    State follows the switch's flow table in simulated time: a flow idle
    for more than IDLE_TIMEOUT seconds, or installed more than
    HARD_TIMEOUT seconds ago, is forgotten and restarts on its next record.
    """

    def __init__(self):
        self._flows: Dict[int, _FlowState] = {}
        # key -> (install, packet_count, last timestamp)
        self._packets_by_key: Dict[Tuple[int, ...], Tuple[int, int, int]] = {}
        self._previous_ts = None
        self._next_sweep = None

    def reset(self) -> None:
        self.__init__()

    def __len__(self) -> int:
        return len(self._flows)

    @staticmethod
    def _expired(install: int, last_ts: int, now: int) -> bool:
        return now - last_ts > IDLE_TIMEOUT_NS or now - install > HARD_TIMEOUT_NS

    def evict(self, now: int) -> int:
        """Drop every flow expired at now (ns); returns how many went"""
        stale = [fid for fid, s in self._flows.items() if self._expired(s.install, s.last_ts, now)]
        for flow_id in stale:
            del self._flows[flow_id]
        keys = [k for k, (install, _, seen) in self._packets_by_key.items() if self._expired(install, seen, now)]
        for key in keys:
            del self._packets_by_key[key]
        if stale:
            logger.debug(f"Evicted {len(stale)} expired flows, {len(self._flows)} left")
        return len(stale)

    def update(self, obs: Observation) -> FeatureVector:
        """Fold one record in and return the flow's features as of this record"""
        now = obs.timestamp
        inner = 0.0 if self._previous_ts is None else max(0, now - self._previous_ts) / NSEC_PER_SEC
        self._previous_ts = now
        if self._next_sweep is None or now >= self._next_sweep:
            self.evict(now)
            self._next_sweep = now + SWEEP_INTERVAL_NS

        install = obs.install_time
        state = self._flows.get(obs.flow_id)
        if state is None or state.install != install or self._expired(state.install, state.last_ts, now):
            state = _FlowState(install)
            self._flows[obs.flow_id] = state
        state.add(obs)
        self._packets_by_key[obs.key] = (install, obs.packet_count, now)

        reverse = self._packets_by_key.get(obs.reverse_key)
        reverse_packets = reverse[1] if reverse and not self._expired(reverse[0], reverse[2], now) else 0
        packets = obs.packet_count
        return FeatureVector(
            packets_per_flow=packets,
            interarrival_variance=state.gap_variance,
            syn_count=state.syn,
            bytes_per_flow=obs.byte_count,
            flow_duration=obs.flow_duration_sec + obs.flow_duration_nsec / NSEC_PER_SEC,
            avg_packet_size=obs.byte_count / packets if packets else 0.0,
            directionality_ratio=packets / reverse_packets if reverse_packets else 0.0,
            interarrival_mean=state.gap_mean if state.gaps else 0.0,
            ack_count=state.ack,
            fin_count=state.fin,
            ip_src=obs.ip_src,
            tp_src=obs.tp_src,
            ip_dst=obs.ip_dst,
            tp_dst=obs.tp_dst,
            ip_proto=obs.ip_proto,
            icmp_code=obs.icmp_code,
            icmp_type=obs.icmp_type,
            flow_duration_sec=obs.flow_duration_sec,
            flow_duration_nsec=obs.flow_duration_nsec,
            inner_time_flow=inner,
        )

    def transform(self, observations: Iterable[Observation]) -> np.ndarray:
        rows = [self.update(obs).as_array() for obs in observations]
        if not rows:
            return np.empty((0, len(FEATURE_COLUMNS)))
        return np.vstack(rows)


def observations_from_records(records: Iterable[FlowRecord]) -> Iterator[Observation]:
    return (Observation.of(record) for record in records)


def observations_from_frame(frame: pd.DataFrame, schema: Schema) -> List[Observation]:
    """
    Observations from a loaded raw dataset.

    Raises:
        SchemaError: the frame is a prepared dataset; it has no timestamps
            or TCP flags, so its flag counts would differ from the ones the
            controller computes online
    """
    if schema is not Schema.RAW:
        raise SchemaError(
            "Training needs the raw dataset (dataset_raw.csv); prepared rows carry no timestamps or TCP flags"
        )
    columns = [
        frame["timestamp"].to_numpy(dtype=np.int64),
        frame["flow_id"].to_numpy(dtype=np.uint64),
        frame["ip_src"].map(encode_ipv4).to_numpy(),
        frame["tp_src"].to_numpy(),
        frame["ip_dst"].map(encode_ipv4).to_numpy(),
        frame["tp_dst"].to_numpy(),
        frame["ip_proto"].to_numpy(),
        frame["icmp_code"].to_numpy(),
        frame["icmp_type"].to_numpy(),
        frame["flow_duration_sec"].to_numpy(),
        frame["flow_duration_nsec"].to_numpy(),
        frame["packet_count"].to_numpy(),
        frame["byte_count"].to_numpy(),
        frame["flags"].to_numpy(dtype=np.int64),
        frame["label"].to_numpy(),
    ]
    return [Observation(*(int(value) for value in row)) for row in zip(*columns)]


def build_matrix(observations: Sequence[Observation]) -> Tuple[np.ndarray, np.ndarray]:
    """Feature matrix (FEATURE_COLUMNS order) and label vector"""
    matrix = FeatureBuilder().transform(observations)
    labels = np.array([obs.label for obs in observations], dtype=np.float64)
    return matrix, labels


def extract_features(groups: Mapping[int, Sequence[FlowRecord]]) -> Dict[int, FeatureVector]:
    """
    Final feature vector of each flow.

    Args:
        groups: flow_id -> that flow's records

    Returns:
        dict: flow_id -> FeatureVector over all the flow's records; empty
        groups are skipped with a warning
    """
    records: List[FlowRecord] = []
    for flow_id, group in groups.items():
        if not group:
            logger.warning(f"Skipping empty flow group {flow_id}")
            continue
        records.extend(group)
    records.sort(key=lambda r: (r.timestamp, r.flow_id))

    builder = FeatureBuilder()
    latest: Dict[int, Tuple[FeatureVector, Observation]] = {}
    final_packets: Dict[Tuple[int, ...], int] = {}
    for obs in observations_from_records(records):
        latest[obs.flow_id] = (builder.update(obs), obs)
        final_packets[obs.key] = obs.packet_count

    vectors: Dict[int, FeatureVector] = {}
    for flow_id, (vector, obs) in latest.items():
        # directionality over the whole capture, not just up to the flow's last record
        reverse = final_packets.get(obs.reverse_key, 0)
        ratio = obs.packet_count / reverse if reverse else 0.0
        vectors[flow_id] = FeatureVector(**{**vector.__dict__, "directionality_ratio": ratio})
    return vectors


def feature_frame(matrix: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame(matrix, columns=list(FEATURE_COLUMNS))

