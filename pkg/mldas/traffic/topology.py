"""
Desk topology: hosts on one subnet attached round-robin to a line of switches.
"""

import ipaddress
from dataclasses import dataclass
from typing import List, Tuple

from ..config.schema import ScenarioConfig
from ..errors import ConfigError


@dataclass(frozen=True)
class Host:
    index: int
    ip: str
    datapath_id: int


class Topology:
    """
    Hosts 1..N take the first N usable addresses of the subnet; host i
    hangs off switch ((i - 1) mod switch_count) + 1. Switches form a line
    s1 - s2 - ... - sK.
    """

    def __init__(self, host_count: int, switch_count: int = 3, subnet: str = "10.0.0.0/24"):
        if host_count < 3:
            raise ConfigError(f"host_count must be >= 3 (attacker, victim, bystander), got {host_count}")
        self.network = ipaddress.IPv4Network(subnet, strict=False)
        if host_count > self.network.num_addresses - 2:
            raise ConfigError(f"{host_count} hosts do not fit in {subnet}")
        self.switch_count = switch_count
        base = int(self.network.network_address)
        self.hosts: List[Host] = [
            Host(i, str(ipaddress.IPv4Address(base + i)), (i - 1) % switch_count + 1)
            for i in range(1, host_count + 1)
        ]
        self._by_ip = {host.ip: host for host in self.hosts}

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "Topology":
        return cls(config.host_count, config.switch_count, config.subnet)

    def host(self, ip: str) -> Host:
        return self._by_ip[ip]

    def is_internal(self, ip: str) -> bool:
        return ipaddress.IPv4Address(ip) in self.network

    def switch_of(self, ip: str, default: int = 1) -> int:
        host = self._by_ip.get(ip)
        return host.datapath_id if host else default

    def path(self, from_switch: int, to_switch: int) -> Tuple[int, ...]:
        """Switches traversed along the line, both ends included"""
        step = 1 if to_switch >= from_switch else -1
        return tuple(range(from_switch, to_switch + step, step))
