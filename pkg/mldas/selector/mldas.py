"""
Dynamic model selection: quality filter, latency argmin, rolling-window
monitoring, periodic and event triggers, and dwell/improvement hysteresis.
"""

import dataclasses
import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..config.schema import SelectorConfig, SelectorPolicy
from ..errors import ContractError, SelectionError
from ..ml.kinds import ModelKind
from .state import CandidateProfile, SelectorState, SwitchEvent

logger = logging.getLogger(__name__)

EPS = 1e-12

Predictions = Union[np.ndarray, Sequence[float], Mapping[ModelKind, np.ndarray]]


def derive_s_min(profiles: Sequence[CandidateProfile], config: SelectorConfig) -> float:
    """
    Configured s_min, or the multiplier times the worst tree validation
    RMSE, floored at s_min_floor.
    """
    if config.s_min is not None:
        return config.s_min
    tree_errors = [profile.rmse for profile in profiles if profile.kind.is_tree]
    worst = max(tree_errors) if tree_errors else 0.0
    return max(config.s_min_multiplier * worst, config.s_min_floor)


def _best(profiles: Sequence[CandidateProfile]) -> CandidateProfile:
    return min(profiles, key=CandidateProfile.selection_key)


def initial_select(profiles: Sequence[CandidateProfile], config: SelectorConfig) -> SelectorState:
    """
    Filter candidates by s_min and start with the fastest predictor;
    train time, then kind order, break ties.

    Raises:
        SelectionError: no candidate meets s_min
    """
    if not profiles:
        raise SelectionError("No candidate profiles to select from")
    s_min = derive_s_min(profiles, config)
    admitted = [profile for profile in profiles if profile.rmse <= s_min]
    if not admitted:
        raise SelectionError(f"No candidate meets S_min = {s_min:.6g}")
    chosen = _best(admitted)
    logger.info(
        f"Initial model {chosen.kind.value} (s_min {s_min:.6g}, "
        f"admitted {[profile.kind.value for profile in admitted]})"
    )
    return SelectorState(current=chosen.kind, window_w=config.window_w, s_min=s_min, rmse_current=chosen.rmse)


def pinned_state(profiles: Sequence[CandidateProfile], kind: ModelKind, config: SelectorConfig) -> SelectorState:
    """State running one given model; used for the static baselines"""
    profile = next((p for p in profiles if p.kind is kind), None)
    if profile is None:
        raise SelectionError(f"No profile for {kind.value}")
    return SelectorState(current=kind, window_w=config.window_w, s_min=derive_s_min(profiles, config),
                         rmse_current=profile.rmse)


def observe(state: SelectorState, predictions: Predictions, labels, config: SelectorConfig) -> SelectorState:
    """
    Feed a labelled batch. predictions is either the active model's output
    or a mapping of every candidate's output, which fills the shadow
    buffers too.
    """
    labels = np.asarray(labels).astype(np.int64).ravel()
    if len(labels) == 0:
        raise ContractError("observe needs a nonempty batch")
    if isinstance(predictions, Mapping):
        per_kind = {ModelKind.parse(kind): np.asarray(values, dtype=np.float64).ravel()
                    for kind, values in predictions.items()}
    else:
        per_kind = {state.current: np.asarray(predictions, dtype=np.float64).ravel()}
    for kind, values in per_kind.items():
        if len(values) != len(labels):
            raise ContractError(f"{kind.value}: {len(values)} predictions for {len(labels)} labels")
        state.buffer_of(kind).extend(zip(values.tolist(), labels.tolist()))

    before = state.flows_processed
    state.flows_processed += len(labels)
    if state.flows_processed // config.window_w > before // config.window_w:
        state.periodic_due = True
    return state


def needs_reevaluation(state: SelectorState, config: SelectorConfig) -> Tuple[bool, str]:
    """
    Whether a re-evaluation is due and which triggers fired ("periodic",
    "rmse", "accuracy", joined with '+').
    """
    reasons: List[str] = []
    if config.mode.periodic and state.flows_processed > 0 and (
            state.periodic_due or state.flows_processed % config.window_w == 0):
        reasons.append("periodic")
    if config.mode.event and len(state.buffer):
        if state.rmse_roll > state.rmse_current + config.eps_err:
            reasons.append("rmse")
        if state.acc_roll < config.a_min:
            reasons.append("accuracy")
    return bool(reasons), "+".join(reasons)


def rescore(state: SelectorState, profiles: Sequence[CandidateProfile]) -> List[CandidateProfile]:
    """
    Profiles with rmse replaced by the rolling RMSE of each candidate's
    shadow buffer. Candidates with an empty buffer keep their validation RMSE.
    """
    live = []
    for profile in profiles:
        buffer = state.buffer_of(profile.kind)
        live.append(dataclasses.replace(profile, rmse=state.rmse_of(profile.kind)) if buffer else profile)
    return live


def improvement(best: CandidateProfile, current: CandidateProfile, state: Optional[SelectorState] = None) -> float:
    """
    Relative gain of switching from current to best. Rolling RMSE decides;
    when both RMSEs agree within 1e-12 the relative prediction-latency
    reduction is used instead. Never negative.
    """
    if abs(current.rmse - best.rmse) > EPS:
        gain = (current.rmse - best.rmse) / max(current.rmse, EPS)
    else:
        gain = (current.pred_time - best.pred_time) / current.pred_time
    return max(0.0, gain)


def reevaluate(state: SelectorState, live_profiles: Sequence[CandidateProfile], config: SelectorConfig,
               reason: str = "periodic") -> SelectorState:
    """
    Apply the hysteresis rules and switch when every gate passes: an
    admitted candidate, dwell time elapsed, improvement above tau_switch.
    """
    state.reevaluations += 1
    state.periodic_due = False
    if config.policy is SelectorPolicy.STATIC:
        return state

    admitted = [profile for profile in live_profiles if profile.rmse <= state.s_min]
    if not admitted:
        logger.debug(f"[{state.flows_processed}] no candidate within S_min, keeping {state.current.value}")
        return state
    best = _best(admitted)
    if best.kind is state.current:
        return state

    if state.flows_processed - state.last_switch < config.t_dwell:
        logger.debug(f"[{state.flows_processed}] dwell blocks switch to {best.kind.value}")
        return state

    current = next((p for p in live_profiles if p.kind is state.current), None)
    gain = improvement(best, current, state) if current is not None else 1.0
    if gain < config.tau_switch:
        logger.debug(f"[{state.flows_processed}] improvement {gain:.4f} < tau_switch, keeping {state.current.value}")
        return state

    event = SwitchEvent(state.flows_processed, state.current, best.kind, reason, state.rmse_roll, state.acc_roll)
    state.switch_log.append(event)
    logger.info(
        f"[{state.flows_processed}] switch {state.current.value} -> {best.kind.value} "
        f"({reason}, improvement {gain:.3f})"
    )
    state.current = best.kind
    state.last_switch = state.flows_processed
    state.rmse_current = best.rmse
    return state


def step(state: SelectorState, profiles: Sequence[CandidateProfile], predictions: Dict[ModelKind, np.ndarray],
         labels, config: SelectorConfig) -> SelectorState:
    """observe, then re-evaluate when a trigger fires"""
    observe(state, predictions, labels, config)
    due, reason = needs_reevaluation(state, config)
    if due:
        reevaluate(state, rescore(state, profiles), config, reason)
    return state
