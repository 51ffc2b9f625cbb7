"""
The simulated controller loop.

A Twisted task.Clock stands in for the reactor: a LoopingCall polls the
switches every poll_interval simulated seconds, full batches are
classified by the selector's active model, and each verdict lands
stats_reply_delay + processing_delay later through callLater, when any
DROP rules are pushed.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from tqdm import tqdm
from twisted.internet import task

from ..config.schema import MonitorConfig, ScenarioConfig, SelectorConfig
from ..errors import ContractError, MissingModelsError, MldasError
from ..features.extract import FeatureBuilder, Observation
from ..flows.model import FlowRecord
from ..ml.kinds import ModelKind
from ..ml.models import predict
from ..selector.degradation import DegradationInjector
from ..selector.mldas import initial_select, step
from ..selector.replay import LabelQueue
from ..selector.state import CandidateProfile, SelectorState, SwitchEvent
from ..traffic.scenario import generate_dataset, match_entry
from ..traffic.schedule import AttackSchedule
from ..traffic.topology import Topology
from .mitigation import FlowRule, SwitchTables, mitigate
from .monitor import RecordFeed, Verdict, classify_batch

logger = logging.getLogger(__name__)

RecordId = Tuple[int, int]


def _record_id(record: FlowRecord) -> RecordId:
    return record.timestamp, record.flow_id


@dataclass
class BatchOutcome:
    batch: int
    time: float
    score: float
    verdict: Verdict
    records: int
    active_model: ModelKind

    def as_row(self) -> dict:
        return {
            "batch": self.batch,
            "time": self.time,
            "score": self.score,
            "verdict": self.verdict.value,
            "records": self.records,
            "active_model": self.active_model.value,
        }


@dataclass
class RunReport:
    """Append-only record of one controller run"""
    batches: List[BatchOutcome] = field(default_factory=list)
    rules: List[FlowRule] = field(default_factory=list)
    switch_log: List[SwitchEvent] = field(default_factory=list)
    polls: List[Tuple[float, int]] = field(default_factory=list)
    phase_starts: Dict[int, float] = field(default_factory=dict)
    delays: Dict[int, float] = field(default_factory=dict)
    blocked: int = 0
    blocked_by_phase: Dict[int, int] = field(default_factory=dict)
    classified: int = 0
    unclassified: int = 0
    final_state: dict = field(default_factory=dict)
    hits: Dict[Tuple[int, str], int] = field(default_factory=dict)
    aborted: Optional[str] = None

    @property
    def attack_verdicts(self) -> int:
        return sum(1 for outcome in self.batches if outcome.verdict is Verdict.ATTACK)

    @property
    def scores(self) -> List[float]:
        return [outcome.score for outcome in self.batches]

    @property
    def undetected_phases(self) -> List[int]:
        return sorted(phase for phase in self.phase_starts if phase not in self.delays)

    @property
    def mean_delay(self) -> Optional[float]:
        return float(np.mean(list(self.delays.values()))) if self.delays else None

    def delay_stats(self) -> Dict[str, Optional[float]]:
        values = np.asarray(list(self.delays.values()), dtype=np.float64)
        if not len(values):
            return {"detections": 0, "mean": None, "min": None, "max": None, "std": None}
        return {
            "detections": len(values),
            "mean": float(values.mean()),
            "min": float(values.min()),
            "max": float(values.max()),
            "std": float(values.std()),
        }

    def rule_rows(self) -> List[dict]:
        return [
            {
                "datapath_id": rule.datapath_id,
                "ip_src": rule.ip_src,
                "priority": rule.priority,
                "installed_at": rule.installed_at,
                "hits": self.hits.get((rule.datapath_id, rule.ip_src), 0),
            }
            for rule in self.rules
        ]


def attack_phases_of(records: Sequence[FlowRecord], schedule: AttackSchedule) -> Dict[RecordId, int]:
    """Attack phase of every attack-labelled record, keyed by (timestamp, flow_id)"""
    phases = {}
    for record in records:
        if record.label != 1:
            continue
        index = match_entry(record, schedule)
        if index is not None:
            phases[_record_id(record)] = schedule[index].phase
    return phases


class Controller:
    """
    State of one run: feed, tables, selector and the pending buffer of
    featurized records not yet classified.
    """

    def __init__(self, records: Sequence[FlowRecord], schedule: AttackSchedule, topology: Topology,
                 profiles: Sequence[CandidateProfile], selector: SelectorConfig, monitor: MonitorConfig,
                 degradation: Optional[DegradationInjector] = None):
        missing = [profile.kind.value for profile in profiles if profile.model is None]
        if missing:
            raise MissingModelsError(f"Candidates without a trained model: {', '.join(missing)}; run 'mldas train'")
        self.profiles = list(profiles)
        self.models = {profile.kind: profile.model for profile in self.profiles}
        self.selector = selector
        self.monitor = monitor
        self.degradation = degradation

        self.feed = RecordFeed(records)
        self.tables = SwitchTables(topology, monitor)
        self.builder = FeatureBuilder()
        self.state: SelectorState = initial_select(self.profiles, selector)
        self.labels = LabelQueue(selector.label_lag)
        self.phases = attack_phases_of(self.feed.records, schedule)

        self.pending: List[Tuple[FlowRecord, np.ndarray]] = []
        self.batch_count = 0
        self.report = RunReport()
        for record_id, phase in self.phases.items():
            start = record_id[0] / 1e9
            self.report.phase_starts[phase] = min(self.report.phase_starts.get(phase, start), start)
        self.clock = task.Clock()

    def poll(self) -> None:
        now = self.clock.seconds()
        records = self.feed.poll(now)
        self.report.polls.append((now, len(records)))
        for record in records:
            if self.tables.blocks(record):
                self.report.blocked += 1
                phase = self.phases.get(_record_id(record))
                if phase is not None:
                    self.report.blocked_by_phase[phase] = self.report.blocked_by_phase.get(phase, 0) + 1
                continue
            features = self.builder.update(Observation.of(record)).as_array()
            self.pending.append((record, features))
        while len(self.pending) >= self.monitor.min_batch:
            batch, self.pending = self.pending[:self.monitor.min_batch], self.pending[self.monitor.min_batch:]
            self.classify(batch, now)

    def _degrade(self, kind: ModelKind, first_flow: int):
        if self.degradation is None:
            return None
        return lambda outputs: self.degradation.apply(kind, first_flow, outputs)

    def classify(self, batch: List[Tuple[FlowRecord, np.ndarray]], now: float) -> None:
        records = [record for record, _ in batch]
        X = np.vstack([features for _, features in batch])
        first_flow = self.report.classified
        active = self.state.current

        result = classify_batch(X, self.models[active], self.monitor, self._degrade(active, first_flow))
        outputs = {active: result.outputs}
        for kind, model in self.models.items():
            if kind is active:
                continue
            raw = predict(model, X)
            degrade = self._degrade(kind, first_flow)
            outputs[kind] = degrade(raw) if degrade else raw
        self.report.classified += len(records)

        index = self.batch_count
        self.batch_count += 1
        verdict_time = now + self.monitor.stats_reply_delay + self.monitor.processing_delay
        offending = [record for record, cls in zip(records, result.classes) if cls == 1]
        phases = {self.phases[_record_id(r)] for r in records if _record_id(r) in self.phases}
        self.clock.callLater(
            verdict_time - now, self.deliver,
            BatchOutcome(index, verdict_time, result.score, result.verdict, len(records), active),
            offending, phases,
        )
        self.labels.push(outputs, [record.label for record in records])
        released = self.labels.release()
        if released is not None:
            step(self.state, self.profiles, released[0], released[1], self.selector)

    def deliver(self, outcome: BatchOutcome, offending: List[FlowRecord], phases: Set[int]) -> None:
        self.report.batches.append(outcome)
        logger.debug(
            f"t={outcome.time:.3f}s batch {outcome.batch}: score {outcome.score:.2f} -> {outcome.verdict.value}"
        )
        if outcome.verdict is not Verdict.ATTACK:
            return
        self.report.rules.extend(mitigate(outcome.verdict, offending, self.tables, outcome.time))
        for phase in phases:
            if phase not in self.report.delays:
                self.report.delays[phase] = outcome.time - self.report.phase_starts[phase]
                logger.info(f"Attack phase {phase} detected after {self.report.delays[phase]:.3f}s")

    def finish(self) -> RunReport:
        report = self.report
        if len(report.batches) != self.batch_count:
            raise ContractError("A batch verdict was never delivered")
        report.unclassified = len(self.pending)
        report.switch_log = list(self.state.switch_log)
        report.final_state = self.state.snapshot()
        report.hits = {
            (table.datapath_id, ip_src): count for table in self.tables for ip_src, count in table.hits.items()
        }
        if report.unclassified:
            logger.info(f"{report.unclassified} trailing records stayed below min_batch and were not classified")
        return report


def run_scenario(scenario: ScenarioConfig, selector: SelectorConfig, monitor: MonitorConfig,
                 profiles: Sequence[CandidateProfile], records: Optional[Sequence[FlowRecord]] = None,
                 schedule: Optional[AttackSchedule] = None, degradation: Optional[DegradationInjector] = None,
                 progress: bool = False) -> RunReport:
    """
    Drive the controller over one scenario in simulated time.

    Args:
        scenario: generator settings, also used for the topology
        selector: selection thresholds
        monitor: polling, verdict and mitigation settings
        profiles: trained candidates, each carrying its model
        records: labelled records to replay instead of generating the scenario
        schedule: attack schedule of the given records
        degradation: optional prediction-error injector
        progress: show a tqdm bar over poll ticks

    Returns:
        RunReport: per-batch scores and verdicts, rules, switch log and delays

    Raises:
        MissingModelsError: a profile carries no model
        MldasError: any component error; the partial report rides on the
            exception as `report`
    """
    if records is None:
        records, schedule = generate_dataset(scenario)
    schedule = schedule if schedule is not None else AttackSchedule((), scenario.subnet)
    controller = Controller(records, schedule, Topology.from_config(scenario), profiles,
                            selector, monitor, degradation)

    failures = []
    loop = task.LoopingCall(controller.poll)
    loop.clock = controller.clock
    loop.start(monitor.poll_interval, now=False).addErrback(failures.append)

    horizon = controller.feed.last_timestamp + monitor.stats_reply_delay + monitor.processing_delay
    ticks = int(math.ceil(horizon / monitor.poll_interval)) + 1
    logger.info(
        f"Running controller over {len(controller.feed)} records, {ticks} polls, "
        f"initial model {controller.state.current.value}"
    )
    try:
        for _ in tqdm(range(ticks), desc="Controller", ncols=100, disable=not progress):
            controller.clock.advance(monitor.poll_interval)
            if failures:
                failures[0].raiseException()
        if loop.running:
            loop.stop()
        # verdicts still in flight
        controller.clock.advance(monitor.stats_reply_delay + monitor.processing_delay)
        report = controller.finish()
    except MldasError as e:
        if loop.running:
            loop.stop()
        partial = controller.report
        partial.aborted = str(e)
        partial.switch_log = list(controller.state.switch_log)
        partial.final_state = controller.state.snapshot()
        e.report = partial
        raise

    logger.info(
        f"Run done: {len(report.batches)} batches, {report.attack_verdicts} attack verdicts, "
        f"{len(report.rules)} rules, {len(report.switch_log)} switches, {report.blocked} blocked records"
    )
    return report
