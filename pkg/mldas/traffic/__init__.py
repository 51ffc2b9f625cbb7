"""
Seeded discrete-event traffic generation: legitimate script, floods,
scenario assembly and labeling.
"""

from .attacks import AttackGenerator, run_attack
from .scenario import (
    Timeline,
    count_flows,
    generate_dataset,
    label_flows,
    legit_fraction,
    match_entry,
    run_legitimate,
)
from .schedule import AttackEntry, AttackKind, AttackSchedule
from .topology import Topology

__all__ = [
    "AttackEntry",
    "AttackGenerator",
    "AttackKind",
    "AttackSchedule",
    "Timeline",
    "Topology",
    "count_flows",
    "generate_dataset",
    "label_flows",
    "legit_fraction",
    "match_entry",
    "run_attack",
    "run_legitimate",
]
