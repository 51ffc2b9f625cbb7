"""
Per-switch flow tables and DROP-rule mitigation.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

from ..config.schema import MonitorConfig
from ..errors import ContractError
from ..flows.model import FlowRecord
from ..traffic.topology import Topology
from .monitor import Verdict

logger = logging.getLogger(__name__)

DROP = "DROP"


@dataclass(frozen=True)
class FlowRule:
    """A DROP rule matching one source address"""
    datapath_id: int
    ip_src: str
    priority: int
    installed_at: float
    action: str = DROP

    def __post_init__(self):
        if self.action != DROP:
            raise ContractError(f"Only DROP rules are installed, got {self.action}")


@dataclass
class SwitchTable:
    """
    One switch's rules, at most one per source address. The table-miss
    forwarding entry sits at forwarding_priority below every DROP rule.
    """
    datapath_id: int
    forwarding_priority: int = 1
    by_source: Dict[str, FlowRule] = field(default_factory=dict)
    hits: Dict[str, int] = field(default_factory=dict)

    @property
    def rules(self) -> List[FlowRule]:
        """Installed rules, highest priority first"""
        return sorted(self.by_source.values(), key=lambda r: -r.priority)

    def rule_for(self, ip_src: str) -> Optional[FlowRule]:
        return self.by_source.get(ip_src)

    def install(self, rule: FlowRule) -> bool:
        """Add the rule unless the source is already dropped here"""
        if rule.priority <= self.forwarding_priority:
            raise ContractError(
                f"DROP priority {rule.priority} must exceed forwarding priority {self.forwarding_priority}"
            )
        if rule.ip_src in self.by_source:
            return False
        self.by_source[rule.ip_src] = rule
        self.hits[rule.ip_src] = 0
        return True

    def lookup(self, ip_src: str, at: float, count: bool = True) -> Optional[FlowRule]:
        """DROP rule in force at `at` for the source, or None (forwarded)"""
        rule = self.by_source.get(ip_src)
        if rule is None or rule.installed_at > at:
            return None
        if count:
            self.hits[ip_src] += 1
        return rule


class SwitchTables:
    """Flow tables of every switch in the topology"""

    def __init__(self, topology: Topology, config: MonitorConfig = None):
        self.topology = topology
        self.config = config or MonitorConfig()
        self.tables: Dict[int, SwitchTable] = {
            dpid: SwitchTable(dpid, self.config.forwarding_priority)
            for dpid in range(1, topology.switch_count + 1)
        }

    def __getitem__(self, datapath_id: int) -> SwitchTable:
        return self.tables[datapath_id]

    def __iter__(self):
        return iter(self.tables.values())

    @property
    def rule_count(self) -> int:
        return sum(len(table.by_source) for table in self.tables.values())

    def blocks(self, record: FlowRecord) -> bool:
        """Whether the record's ingress switch drops its source at the record's time"""
        table = self.tables.get(record.datapath_id)
        return table is not None and table.lookup(record.key.ip_src, record.timestamp / 1e9) is not None

    def path_of(self, record: FlowRecord):
        return self.topology.path(record.datapath_id, self.topology.switch_of(record.key.ip_dst, record.datapath_id))


def mitigate(verdict: Verdict, offending: Iterable[FlowRecord], tables: SwitchTables, at: float) -> List[FlowRule]:
    """
    Drop every distinct source among the attack-predicted records on each
    switch its flows traverse.

    Returns:
        list: rules actually added; sources already dropped add nothing

    Raises:
        ContractError: called for a legitimate verdict
    """
    if verdict is not Verdict.ATTACK:
        raise ContractError("mitigate is only invoked on an Attack verdict")
    installed: List[FlowRule] = []
    for record in offending:
        for dpid in tables.path_of(record):
            rule = FlowRule(dpid, record.key.ip_src, tables.config.drop_priority, at)
            if tables[dpid].install(rule):
                installed.append(rule)
    if installed:
        logger.info(f"Installed {len(installed)} DROP rules at t={at:.3f}s")
    return installed
