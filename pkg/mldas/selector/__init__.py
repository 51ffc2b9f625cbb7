"""
Dynamic model selection over the trained candidates.
"""

from .degradation import DegradationInjector
from .mldas import (
    derive_s_min,
    improvement,
    initial_select,
    needs_reevaluation,
    observe,
    pinned_state,
    reevaluate,
    rescore,
    step,
)
from .replay import LabelQueue, ReplayResult, replay
from .state import CandidateProfile, SelectorState, SwitchEvent, load_candidates, save_candidates

__all__ = [
    "CandidateProfile",
    "DegradationInjector",
    "LabelQueue",
    "ReplayResult",
    "SelectorState",
    "SwitchEvent",
    "derive_s_min",
    "improvement",
    "initial_select",
    "load_candidates",
    "needs_reevaluation",
    "observe",
    "pinned_state",
    "reevaluate",
    "replay",
    "rescore",
    "save_candidates",
    "step",
]
