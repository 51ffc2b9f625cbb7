"""
Simulated SDN controller: polling, batch verdicts and DROP mitigation.
"""

from .monitor import BatchVerdict, RecordFeed, Verdict, classify_batch, poll, verdict_of
from .mitigation import FlowRule, SwitchTable, SwitchTables, mitigate
from .runner import BatchOutcome, Controller, RunReport, attack_phases_of, run_scenario

__all__ = [
    "BatchOutcome",
    "BatchVerdict",
    "Controller",
    "FlowRule",
    "RecordFeed",
    "RunReport",
    "SwitchTable",
    "SwitchTables",
    "Verdict",
    "attack_phases_of",
    "classify_batch",
    "mitigate",
    "poll",
    "run_scenario",
    "verdict_of",
]
