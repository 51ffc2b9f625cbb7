"""
Legitimate background traffic.

Each iteration replays the same script between two random client hosts and
the server elected at the start of the run:

1. ICMP echo exchange between the two clients
2. TCP and UDP iperf from the first client to the server (ports 5050/5051)
3. HTTP page fetch from the server, one connection per page object
4. FTP download of an archive (control on 21, data from 20)
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..config.schema import ScenarioConfig
from ..flows.model import (
    ICMP, TCP, TCP_ACK, TCP_FIN, TCP_PSH, TCP_SYN, UDP, FlowKey,
)
from .export import PacketTrain, record_count
from .topology import Host, Topology

logger = logging.getLogger(__name__)

HTTP_PORT = 80
FTP_CONTROL_PORT = 21
FTP_DATA_PORT = 20

ICMP_ECHO_REQUEST = 8
ICMP_ECHO_REPLY = 0
ICMP_ECHO_SIZE = 98

CONTROL_SIZE = (54, 78)
BULK_SIZE = (1000, 1514)
UDP_SIZE = (1000, 1470)
ACK_SIZE = 54

HTTP_OBJECTS = 3
STEP_GAP = 0.05

FLOWS_PER_ITERATION = 2 + 2 + 1 + 2 * HTTP_OBJECTS + 4


@dataclass
class Iteration:
    """Trains of one script run, times relative to the iteration start"""
    index: int
    client: Host
    peer: Host
    trains: List[PacketTrain] = field(default_factory=list)
    think: float = 0.0

    @property
    def duration(self) -> float:
        return max(train.last for train in self.trains)

    def record_count(self, stats_interval: float) -> int:
        return sum(record_count(train, stats_interval) for train in self.trains)


class LegitimateScript:
    """Seeded generator of legitimate iterations"""

    def __init__(self, config: ScenarioConfig, topology: Topology, rng: np.random.Generator):
        self.config = config
        self.topology = topology
        self.rng = rng
        self.server: Host = topology.hosts[int(rng.integers(len(topology.hosts)))]
        self.clients = [host for host in topology.hosts if host is not self.server]
        logger.debug(f"Elected server {self.server.ip}")

    def _ephemeral_port(self) -> int:
        return int(self.rng.integers(32768, 61000))

    def _sizes(self, n: int, bounds: Tuple[int, int]) -> np.ndarray:
        return self.rng.integers(bounds[0], bounds[1] + 1, n)

    def _burst(self, start: float, n: int, mean_gap: float) -> np.ndarray:
        gaps = self.rng.exponential(mean_gap, n - 1)
        return start + np.concatenate(([0.0], np.cumsum(gaps)))

    def _key(self, src: Host, sport: int, dst: Host, dport: int, proto: int) -> FlowKey:
        return FlowKey(src.ip, sport, dst.ip, dport, proto)

    def _train(self, key: FlowKey, src: Host, times, sizes, flags=None, icmp_type: int = -1,
               icmp_code: int = -1) -> PacketTrain:
        return PacketTrain(key, src.datapath_id, times, sizes, flags, icmp_type, icmp_code)

    def _ping(self, a: Host, b: Host, start: float) -> List[PacketTrain]:
        n = self.config.ping_packets
        requests = start + np.arange(n) * self.config.ping_interval
        replies = requests + self.rng.uniform(2e-5, 8e-5, n)
        return [
            self._train(self._key(a, 0, b, 0, ICMP), a, requests,
                        np.full(n, ICMP_ECHO_SIZE), icmp_type=ICMP_ECHO_REQUEST, icmp_code=0),
            self._train(self._key(b, 0, a, 0, ICMP), b, replies,
                        np.full(n, ICMP_ECHO_SIZE), icmp_type=ICMP_ECHO_REPLY, icmp_code=0),
        ]

    def _tcp_exchange(self, client: Host, server: Host, dport: int, start: float, data_packets: int,
                      mean_gap: float, upload: bool, sport: int = None) -> List[PacketTrain]:
        """
        One TCP connection. The sending side carries SYN, bulk PSH/ACK data
        and FIN; the receiving side SYN/ACK, one ACK per two segments and FIN.
        """
        sport = sport or self._ephemeral_port()
        data_times = self._burst(start + 0.001, data_packets, mean_gap)
        ack_times = data_times[1::2] + 2e-4
        fin_time = data_times[-1] + 0.001

        sender_times = np.concatenate(([start], data_times, [fin_time]))
        sender_sizes = np.concatenate(([74], self._sizes(data_packets, BULK_SIZE), [ACK_SIZE]))
        sender_flags = np.concatenate(([TCP_SYN], np.full(data_packets, TCP_PSH | TCP_ACK), [TCP_FIN | TCP_ACK]))

        receiver_times = np.concatenate(([start + 5e-4], ack_times, [fin_time + 5e-4]))
        receiver_sizes = np.concatenate(([74], np.full(len(ack_times), ACK_SIZE), [ACK_SIZE]))
        receiver_flags = np.concatenate(([TCP_SYN | TCP_ACK], np.full(len(ack_times), TCP_ACK), [TCP_FIN | TCP_ACK]))

        if upload:
            forward = self._key(client, sport, server, dport, TCP)
            return [
                self._train(forward, client, sender_times, sender_sizes, sender_flags),
                self._train(forward.reverse(), server, receiver_times, receiver_sizes, receiver_flags),
            ]
        forward = self._key(server, dport, client, sport, TCP)
        return [
            self._train(forward, server, sender_times, sender_sizes, sender_flags),
            self._train(forward.reverse(), client, receiver_times, receiver_sizes, receiver_flags),
        ]

    def _http_object(self, client: Host, start: float) -> List[PacketTrain]:
        sport = self._ephemeral_port()
        request = self._key(client, sport, self.server, HTTP_PORT, TCP)
        response_packets = int(self.rng.integers(2, 31))
        request_times = start + np.array([0.0, 6e-4, 8e-4])
        request_sizes = np.array([74, ACK_SIZE, int(self.rng.integers(300, 600))])
        request_flags = np.array([TCP_SYN, TCP_ACK, TCP_PSH | TCP_ACK])

        response_times = self._burst(start + 0.0015, response_packets, 0.001)
        response_times[0] = start + 3e-4
        response_sizes = np.concatenate(([74], self._sizes(response_packets - 1, BULK_SIZE)))
        response_flags = np.concatenate(([TCP_SYN | TCP_ACK], np.full(response_packets - 1, TCP_PSH | TCP_ACK)))

        end = response_times[-1] + 0.001
        request_times = np.concatenate((request_times, [end]))
        request_sizes = np.concatenate((request_sizes, [ACK_SIZE]))
        request_flags = np.concatenate((request_flags, [TCP_FIN | TCP_ACK]))
        return [
            self._train(request, client, request_times, request_sizes, request_flags),
            self._train(request.reverse(), self.server, response_times, response_sizes, response_flags),
        ]

    def _ftp(self, client: Host, start: float) -> List[PacketTrain]:
        # control channel: short command/response exchange
        commands = int(self.rng.integers(6, 12))
        control_times = self._burst(start, commands, 0.005)
        control_sport = self._ephemeral_port()
        control = self._key(client, control_sport, self.server, FTP_CONTROL_PORT, TCP)
        control_flags = np.full(commands, TCP_PSH | TCP_ACK)
        control_flags[0] = TCP_SYN
        trains = [
            self._train(control, client, control_times, self._sizes(commands, CONTROL_SIZE), control_flags),
            self._train(control.reverse(), self.server, control_times + 4e-4,
                        self._sizes(commands, CONTROL_SIZE), control_flags | TCP_ACK),
        ]
        # active-mode data connection from server port 20
        data_packets = int(self.rng.integers(200, 600))
        trains.extend(self._tcp_exchange(
            client, self.server, FTP_DATA_PORT, control_times[-1] + 0.005, data_packets, 0.001,
            upload=False,
        ))
        return trains

    def iteration(self, index: int) -> Iteration:
        """Trains of one script run starting at relative time 0"""
        client, peer = (self.clients[int(i)] for i in self.rng.choice(len(self.clients), 2, replace=False))
        it = Iteration(index, client, peer)

        t = 0.0
        it.trains.extend(self._ping(client, peer, t))
        t = max(train.last for train in it.trains) + STEP_GAP

        # TCP and UDP iperf run side by side
        rate = self.config.iperf_rate
        tcp_packets = max(2, int(round(rate * self.config.iperf_duration)))
        it.trains.extend(self._tcp_exchange(
            client, self.server, self.config.tcp_iperf_port, t, tcp_packets, 1.0 / rate, upload=True,
        ))
        udp_packets = max(2, int(round(rate / 2 * self.config.iperf_duration)))
        udp_key = self._key(client, self._ephemeral_port(), self.server, self.config.udp_iperf_port, UDP)
        it.trains.append(self._train(
            udp_key, client, self._burst(t, udp_packets, 2.0 / rate), self._sizes(udp_packets, UDP_SIZE),
        ))
        t = max(train.last for train in it.trains) + STEP_GAP

        for _ in range(HTTP_OBJECTS):
            it.trains.extend(self._http_object(peer, t))
            t = max(train.last for train in it.trains) + STEP_GAP / 5

        it.trains.extend(self._ftp(client, t + STEP_GAP))
        it.think = float(self.rng.uniform(0.5, 1.5) * self.config.think_time)
        return it

