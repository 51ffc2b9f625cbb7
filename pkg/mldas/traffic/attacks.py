"""
Flood generators: ICMP echo, UDP, TCP SYN and LAND.

Packets leave at exponentially distributed gaps at attack_rate; a small
share of gaps is stretched to mimic controller saturation peaks. Attack
packets carry headers only.
"""

import logging
from collections import OrderedDict
from typing import List, Optional, Tuple

import numpy as np

from ..config.schema import ScenarioConfig
from ..errors import ContractError
from ..flows.model import FlowKey, FlowRecord, TCP_SYN, decode_ipv4, encode_ipv4
from .export import FlowExporter, PacketTrain, sort_records
from .schedule import AttackKind, AttackSchedule
from .topology import Topology

logger = logging.getLogger(__name__)

HEADER_SIZE = {
    AttackKind.ICMP_FLOOD: 42,
    AttackKind.UDP_FLOOD: 42,
    AttackKind.TCP_SYN_FLOOD: 54,
    AttackKind.LAND_FLOOD: 54,
}

SPOOF_LOW = encode_ipv4("1.0.0.0")
SPOOF_HIGH = encode_ipv4("223.255.255.255")

HTTP_PORT = 80
SWEEP_PORTS = np.array([port for port in range(1, 1024) if port != HTTP_PORT])
LAND_PORTS = np.array([port for port in range(1, 65536) if port != HTTP_PORT])


class AttackGenerator:
    """Seeded packet source for the four flood kinds"""

    def __init__(self, config: ScenarioConfig, topology: Topology, rng: np.random.Generator):
        self.config = config
        self.topology = topology
        self.rng = rng
        low, high = int(topology.network.network_address), int(topology.network.broadcast_address)
        self._own_range = (low, high)

    def spoofed_sources(self, n: int) -> List[str]:
        """Uniform addresses in 1.0.0.0-223.255.255.255 outside the topology's subnet"""
        out: List[str] = []
        low, high = self._own_range
        while len(out) < n:
            draws = self.rng.integers(SPOOF_LOW, SPOOF_HIGH + 1, n - len(out))
            draws = draws[(draws < low) | (draws > high)]
            out.extend(decode_ipv4(int(value)) for value in draws)
        return out

    def packet_times(self, start: float, count: Optional[int] = None,
                     deadline: Optional[float] = None) -> np.ndarray:
        """
        Emission times from start at attack_rate. Either an exact count or
        every packet before the deadline (at least one).
        """
        if count is None and deadline is None:
            raise ContractError("packet_times needs a count or a deadline")
        rate = self.config.attack_rate
        n = count if count is not None else max(1, int((deadline - start) * rate * 1.5) + 16)
        gaps = self.rng.exponential(1.0 / rate, n)
        spikes = self.rng.random(n) < self.config.saturation_probability
        gaps[spikes] *= self.rng.uniform(
            self.config.saturation_factor_min, self.config.saturation_factor_max, int(spikes.sum())
        )
        times = start + np.concatenate(([0.0], np.cumsum(gaps[:-1])))
        if count is None:
            times = times[times < deadline]
            if len(times) == 0:
                times = np.array([start])
        return times

    def _ephemeral_ports(self, n: int) -> np.ndarray:
        pool = 65536 - 1024
        if n <= pool:
            return self.rng.choice(pool, n, replace=False) + 1024
        return self.rng.integers(1024, 65536, n)

    def _sources(self, n: int, attacker: str, spoofed: bool) -> List[str]:
        return self.spoofed_sources(n) if spoofed else [attacker] * n

    def flood(self, kind: AttackKind, attacker: str, victim: str, times: np.ndarray,
              spoofed: bool) -> List[PacketTrain]:
        """
        Packet trains of one flood. Packets sharing a 5-tuple form one train;
        with spoofing every packet is its own flow.
        """
        n = len(times)
        ingress = self.topology.switch_of(attacker)
        size = HEADER_SIZE[kind]
        icmp_type, icmp_code = (8, 0) if kind is AttackKind.ICMP_FLOOD else (-1, -1)
        flags = TCP_SYN if kind in (AttackKind.TCP_SYN_FLOOD, AttackKind.LAND_FLOOD) else 0

        if kind is AttackKind.ICMP_FLOOD:
            keys = [FlowKey(src, 0, victim, 0, kind.ip_proto) for src in self._sources(n, attacker, spoofed)]
        elif kind is AttackKind.UDP_FLOOD:
            zero = self.rng.random(n) < self.config.udp_port_zero_share
            dports = np.where(zero, 0, self.rng.integers(1024, 65536, n))
            sports = self._ephemeral_ports(n)
            keys = [
                FlowKey(src, int(sport), victim, int(dport), kind.ip_proto)
                for src, sport, dport in zip(self._sources(n, attacker, spoofed), sports, dports)
            ]
        elif kind is AttackKind.TCP_SYN_FLOOD:
            web = self.rng.random(n) < self.config.syn_port80_share
            sweep = SWEEP_PORTS[(np.cumsum(~web) - 1) % len(SWEEP_PORTS)]
            dports = np.where(web, HTTP_PORT, sweep)
            sports = self._ephemeral_ports(n)
            keys = [
                FlowKey(src, int(sport), victim, int(dport), kind.ip_proto)
                for src, sport, dport in zip(self._sources(n, attacker, spoofed), sports, dports)
            ]
        else:
            # source address and port equal to the destination, a fresh port per packet
            ports = LAND_PORTS[np.arange(n) % len(LAND_PORTS)]
            keys = [FlowKey(victim, int(port), victim, int(port), kind.ip_proto) for port in ports]

        groups: "OrderedDict[FlowKey, List[int]]" = OrderedDict()
        for index, key in enumerate(keys):
            groups.setdefault(key, []).append(index)
        return [
            PacketTrain(
                key, ingress, times[indices], np.full(len(indices), size),
                np.full(len(indices), flags), icmp_type, icmp_code,
            )
            for key, indices in groups.items()
        ]


def run_entry(generator: AttackGenerator, exporter: FlowExporter, kind: AttackKind, attacker: str,
              victim: str, times: np.ndarray, spoofed: bool) -> Tuple[List[FlowRecord], float]:
    """Records of one flood and the timestamp (s) of its last record"""
    records: List[FlowRecord] = []
    for train in generator.flood(kind, attacker, victim, times, spoofed):
        records.extend(exporter.export(train, label=1))
    last = max(record.timestamp for record in records) / 1e9
    return records, last


def run_attack(config: ScenarioConfig, schedule: AttackSchedule,
               topology: Topology = None, rng: np.random.Generator = None) -> List[FlowRecord]:
    """
    Records for every scheduled flood, labelled 1.

    Packets are emitted inside [start, end - 1.1 * stats_interval) so the
    exported records land within the entry's window.

    Returns:
        list: FlowRecords sorted by (timestamp, flow_id); empty for an empty schedule
    """
    if len(schedule) == 0:
        return []
    topology = topology or Topology.from_config(config)
    rng = rng or np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    generator = AttackGenerator(config, topology, rng)
    exporter = FlowExporter(config.stats_interval, rng)
    margin = 1.1 * config.stats_interval

    records: List[FlowRecord] = []
    for entry in schedule:
        times = generator.packet_times(entry.start, deadline=max(entry.start, entry.end - margin))
        entry_records, _ = run_entry(generator, exporter, entry.kind, entry.attacker, entry.victim,
                                     times, entry.spoofed)
        logger.debug(f"{entry.kind.value}: {len(times)} packets, {len(entry_records)} records")
        records.extend(entry_records)
    return sort_records(records)

