"""
Scenario assembly: legitimate iterations and attack phases on one clock,
plus ground-truth labeling against the attack schedule.
"""

import dataclasses
import ipaddress
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config.schema import ScenarioConfig
from ..errors import ConfigError
from ..flows.model import TCP_SYN, FlowRecord
from .attacks import AttackGenerator, run_entry
from .export import FlowExporter, sort_records
from .legitimate import Iteration, LegitimateScript
from .schedule import AttackEntry, AttackKind, AttackSchedule
from .topology import Topology

logger = logging.getLogger(__name__)

ICMP_ECHO_REQUEST = 8

# Realised legitimate share must land within this of the target
RATIO_TOLERANCE = 0.05
# Good enough to stop rescaling
CALIBRATION_TOLERANCE = 0.01
CALIBRATION_PASSES = 3


class Timeline:
    """
    Lays legitimate iterations and attack phases on the scenario clock.

    Legitimate traffic, attacks and export jitter draw from independent
    streams of the scenario seed, so inserting attack phases shifts the
    legitimate iterations in time without changing them.
    """

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.topology = Topology.from_config(config)
        streams = np.random.SeedSequence(config.seed).spawn(3)
        self.legit_rng, self.attack_rng, self.export_rng = (np.random.default_rng(s) for s in streams)

        self.script = LegitimateScript(config, self.topology, self.legit_rng)
        self.iterations: List[Iteration] = [
            self.script.iteration(index) for index in range(config.legit_iterations)
        ]
        self.victim = self.script.server
        self.exporter = FlowExporter(config.stats_interval, self.export_rng)
        self.attacks = AttackGenerator(config, self.topology, self.attack_rng)

    def legit_record_count(self) -> int:
        return sum(it.record_count(self.config.stats_interval) for it in self.iterations)

    def phase_slots(self) -> Dict[int, List[int]]:
        """Completed-iteration count -> phases that run at that point"""
        iterations, phases = self.config.legit_iterations, self.config.attack_phases
        slots: Dict[int, List[int]] = {}
        for phase in range(phases):
            slots.setdefault(int((phase + 0.5) * iterations / phases), []).append(phase)
        return slots

    def entry_counts(self, legit_records: int, scale: float = 1.0) -> List[int]:
        """
        Packets per attack entry so the dataset lands on target_legit_fraction,
        assuming one record per packet; scale corrects that assumption.

        Raises:
            ConfigError: too few attack flows for the phases, or an entry that
                cannot fit in attack_duration at attack_rate
        """
        config = self.config
        entries = 4 * config.attack_phases
        if entries == 0:
            return []
        fraction = config.target_legit_fraction
        total = int(round(legit_records * (1 - fraction) / fraction * scale))
        if total < entries:
            raise ConfigError(
                f"Only {total} attack flows for {entries} attack entries; "
                "raise legit_iterations or lower attack_phases"
            )
        base, remainder = divmod(total, entries)
        counts = [base + (1 if index < remainder else 0) for index in range(entries)]
        capacity = config.attack_rate * config.attack_duration
        if max(counts) > capacity:
            raise ConfigError(
                f"{max(counts)} packets per attack entry exceed attack_rate * attack_duration "
                f"({capacity:.0f}); raise attack_duration, attack_rate or attack_phases"
            )
        return counts

    def _phase(self, phase: int, start: float, counts: Sequence[int],
               records: List[FlowRecord], entries: List[AttackEntry]) -> float:
        candidates = [host for host in self.topology.hosts if host is not self.victim]
        attacker = candidates[int(self.attack_rng.integers(len(candidates)))]
        t = start
        last_record = start
        for offset, kind in enumerate(AttackKind):
            times = self.attacks.packet_times(t, count=counts[4 * phase + offset])
            entry_records, last_record = run_entry(
                self.attacks, self.exporter, kind, attacker.ip, self.victim.ip, times, self.config.spoofed,
            )
            records.extend(entry_records)
            entries.append(AttackEntry(
                kind, attacker.ip, self.victim.ip, float(times[0]), last_record, self.config.spoofed, phase,
            ))
            t = float(times[-1]) + 1.0 / self.config.attack_rate
        logger.debug(f"Attack phase {phase} from {attacker.ip}: {start:.3f}s - {last_record:.3f}s")
        return max(last_record, t)

    def run(self, counts: Optional[Sequence[int]] = None) -> Tuple[List[FlowRecord], AttackSchedule]:
        """Records of the whole scenario (unlabelled attack rows carry 1) and the realised schedule"""
        slots = self.phase_slots() if counts else {}
        records: List[FlowRecord] = []
        entries: List[AttackEntry] = []
        t = 0.0
        for index, iteration in enumerate(self.iterations):
            for phase in slots.get(index, []):
                t = self._phase(phase, t, counts, records, entries) + self.config.think_time
            for train in iteration.trains:
                records.extend(self.exporter.export(train, offset=t))
            t += iteration.duration + iteration.think + 1.1 * self.config.stats_interval
        for phase in slots.get(len(self.iterations), []):
            t = self._phase(phase, t, counts, records, entries) + self.config.think_time
        return sort_records(records), AttackSchedule(entries, self.config.subnet)


def run_legitimate(config: ScenarioConfig) -> List[FlowRecord]:
    """
    Legitimate-only capture, iterations back to back with think gaps.

    Returns:
        list: FlowRecords labelled 0, sorted by (timestamp, flow_id)
    """
    records, _ = Timeline(config).run()
    logger.info(f"Legitimate run: {len(records)} records over {config.legit_iterations} iterations")
    return records


def matches_signature(record: FlowRecord, entry: AttackEntry,
                      network: ipaddress.IPv4Network) -> bool:
    """Whether a record's 5-tuple (and flags) fit the entry's flood"""
    key = record.key
    if key.ip_proto != entry.kind.ip_proto or key.ip_dst != entry.victim:
        return False
    if entry.kind is AttackKind.LAND_FLOOD:
        return key.ip_src == key.ip_dst and key.tp_src == key.tp_dst
    if entry.kind is AttackKind.ICMP_FLOOD and record.icmp_type != ICMP_ECHO_REQUEST:
        return False
    if entry.kind is AttackKind.TCP_SYN_FLOOD and not record.flags & TCP_SYN:
        return False
    if key.ip_src == entry.attacker:
        return True
    return entry.spoofed and ipaddress.IPv4Address(key.ip_src) not in network


def match_entry(record: FlowRecord, schedule: AttackSchedule) -> Optional[int]:
    """Index of the first schedule entry that claims the record"""
    network = ipaddress.IPv4Network(schedule.subnet)
    for index in schedule.active_at(record.timestamp):
        if matches_signature(record, schedule[index], network):
            return index
    return None


def label_flows(rows: Sequence[FlowRecord], schedule: AttackSchedule) -> List[FlowRecord]:
    """
    Label 1 exactly the rows that fall inside an attack window and match
    that entry's signature; everything else 0.
    """
    labelled = []
    for row in rows:
        label = 0 if match_entry(row, schedule) is None else 1
        labelled.append(row if row.label == label else dataclasses.replace(row, label=label))
    return labelled


def legit_fraction(rows: Sequence[FlowRecord]) -> float:
    if not rows:
        return 0.0
    return sum(1 for row in rows if row.label == 0) / len(rows)


def count_flows(rows: Sequence[FlowRecord]) -> int:
    """Distinct flow episodes, identified by flow_id and install time"""
    return len({(row.flow_id, row.install_time) for row in rows})


def generate_dataset(config: ScenarioConfig) -> Tuple[List[FlowRecord], AttackSchedule]:
    """
    Labelled scenario dataset.

    Attack volume is first sized from the legitimate record count, then
    rescaled on the realised attack record count: floods that reuse a
    5-tuple (unspoofed ICMP) fold many packets into few records.

    Returns:
        tuple: (rows sorted by timestamp, realised AttackSchedule)

    Raises:
        ConfigError: the requested ratio is infeasible for the phase layout,
            or the realised legitimate share stays more than
            RATIO_TOLERANCE off target
    """
    target = config.target_legit_fraction
    legit = Timeline(config).legit_record_count()
    scale = 1.0
    for attempt in range(CALIBRATION_PASSES):
        timeline = Timeline(config)
        counts = timeline.entry_counts(legit, scale)
        records, schedule = timeline.run(counts)
        rows = label_flows(records, schedule)
        fraction = legit_fraction(rows)
        attack_rows = sum(row.label for row in rows)
        if not counts or not attack_rows or abs(fraction - target) <= CALIBRATION_TOLERANCE:
            break
        wanted = (len(rows) - attack_rows) * (1 - target) / target
        scale *= wanted / attack_rows
        logger.debug(f"Calibration pass {attempt}: legitimate fraction {fraction:.3f}, attack scale -> {scale:.3f}")

    logger.info(
        f"Generated {len(rows)} records ({len(rows) - attack_rows} legitimate, {len(schedule)} attack entries), "
        f"legitimate fraction {fraction:.3f}"
    )
    if counts and abs(fraction - target) > RATIO_TOLERANCE:
        raise ConfigError(
            f"Legitimate fraction {fraction:.3f} is more than {RATIO_TOLERANCE:.2f} off target {target:.3f}; "
            "adjust attack_rate, attack_duration or attack_phases"
        )
    return rows, schedule
