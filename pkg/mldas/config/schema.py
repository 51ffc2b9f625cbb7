"""
Configuration schemas for validation and type safety.
"""

import ipaddress
from enum import Enum
from itertools import product
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..ml.kinds import CLASSIFIER_CRITERIA, REGRESSOR_CRITERIA, Hyperparams, ModelKind


class SelectorMode(str, Enum):
    """Which re-evaluation triggers are active"""
    PERIODIC = "periodic"
    EVENT = "event"
    BOTH = "both"

    @property
    def periodic(self) -> bool:
        return self in (SelectorMode.PERIODIC, SelectorMode.BOTH)

    @property
    def event(self) -> bool:
        return self in (SelectorMode.EVENT, SelectorMode.BOTH)


class SelectorPolicy(str, Enum):
    """Dynamic selection or a model frozen at initialization"""
    DYNAMIC = "dynamic"
    STATIC = "static"


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class ScenarioConfig(BaseModel):
    """Traffic generator settings"""
    seed: int = Field(default=1, ge=0, le=2**64 - 1)
    host_count: int = Field(default=6, ge=3, le=250)
    switch_count: int = Field(default=3, ge=1, le=64)
    subnet: str = "10.0.0.0/24"

    legit_iterations: int = Field(default=50, ge=1)
    ping_packets: int = Field(default=100, ge=2)
    ping_interval: float = Field(default=0.0002, gt=0)
    tcp_iperf_port: int = Field(default=5050, ge=1, le=65535)
    udp_iperf_port: int = Field(default=5051, ge=1, le=65535)
    iperf_duration: float = Field(default=8.0, gt=0)
    iperf_rate: float = Field(default=400.0, gt=0)
    think_time: float = Field(default=1.0, ge=0)
    stats_interval: float = Field(default=0.1, gt=0)

    attack_phases: int = Field(default=10, ge=0)
    attack_rate: float = Field(default=2000.0, gt=0)
    attack_duration: float = Field(default=2.0, gt=0)
    target_legit_fraction: float = Field(default=0.66, gt=0, lt=1)
    spoofed: bool = True
    udp_port_zero_share: float = Field(default=0.2, ge=0, le=1)
    syn_port80_share: float = Field(default=0.8, ge=0, le=1)
    saturation_probability: float = Field(default=0.02, ge=0, le=1)
    saturation_factor_min: float = Field(default=5.0, ge=1)
    saturation_factor_max: float = Field(default=20.0, ge=1)

    @field_validator("subnet")
    @classmethod
    def validate_subnet(cls, v):
        network = ipaddress.IPv4Network(v, strict=False)
        if network.num_addresses < 8:
            raise ValueError("subnet must hold at least 8 addresses")
        return str(network)

    @model_validator(mode="after")
    def validate_ranges(self):
        if self.saturation_factor_max < self.saturation_factor_min:
            raise ValueError("saturation_factor_max must be >= saturation_factor_min")
        if self.host_count > ipaddress.IPv4Network(self.subnet).num_addresses - 2:
            raise ValueError("host_count does not fit in subnet")
        if self.tcp_iperf_port == self.udp_iperf_port:
            raise ValueError("tcp_iperf_port and udp_iperf_port must differ")
        return self


class SelectorConfig(BaseModel):
    """
    Model-selection thresholds. Aliases carry the operational parameter
    names used in config files (s_min, W, A_min, eps_err, T_dwell,
    tau_switch, mode).
    """
    model_config = ConfigDict(populate_by_name=True)

    s_min: Optional[float] = Field(default=None, gt=0)
    window_w: int = Field(default=200, ge=1, alias="W")
    a_min: float = Field(default=0.98, gt=0, lt=1, alias="A_min")
    eps_err: float = Field(default=0.002, gt=0)
    t_dwell: int = Field(default=600, ge=1, alias="T_dwell")
    tau_switch: float = Field(default=0.05, gt=0, lt=1)
    mode: SelectorMode = SelectorMode.BOTH
    policy: SelectorPolicy = SelectorPolicy.DYNAMIC
    s_min_multiplier: float = Field(default=10.0, gt=0)
    s_min_floor: float = Field(default=0.01, gt=0)
    label_lag: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_dwell(self):
        if self.t_dwell < self.window_w:
            raise ValueError("T_dwell must be >= W")
        return self


class MonitorConfig(BaseModel):
    """Controller polling, verdict and mitigation settings"""
    poll_interval: float = Field(default=1.0, gt=0)
    min_batch: int = Field(default=100, ge=1)
    verdict_threshold: float = Field(default=0.98, gt=0, le=1)
    stats_reply_delay: float = Field(default=0.5, ge=0)
    processing_delay: float = Field(default=0.2, ge=0)
    drop_priority: int = Field(default=65000, ge=2, le=65535)
    forwarding_priority: int = Field(default=1, ge=0, le=65534)

    @model_validator(mode="after")
    def validate_priorities(self):
        if self.drop_priority <= self.forwarding_priority:
            raise ValueError("drop_priority must exceed forwarding_priority")
        return self


class SplitSpec(BaseModel):
    """Chronological train/test split"""
    train_fraction: float = Field(default=0.70, gt=0, lt=1)
    tolerance_pp: float = Field(default=5.0, ge=0, le=100)
    check_sessions: bool = True
    balanced_batch_size: Optional[int] = Field(default=None, ge=2)


class GridConfig(BaseModel):
    """Hyperparameter grids, one list per searched field"""
    dtc_criterion: List[str] = Field(default_factory=lambda: list(CLASSIFIER_CRITERIA))
    dtc_min_samples_split: List[int] = Field(default_factory=lambda: [2, 3, 4])
    dtr_criterion: List[str] = Field(default_factory=lambda: list(REGRESSOR_CRITERIA))
    dtr_min_samples_split: List[int] = Field(default_factory=lambda: [2, 3])
    dtr_max_depth: List[int] = Field(default_factory=lambda: [2, 3, 4])
    rf_criterion: List[str] = Field(default_factory=lambda: list(CLASSIFIER_CRITERIA))
    rf_n_estimators: List[int] = Field(default_factory=lambda: [2, 5, 10])
    lr_fit_intercept: List[bool] = Field(default_factory=lambda: [True, False])
    lr_normalize: List[bool] = Field(default_factory=lambda: [True, False])

    @field_validator("*", mode="before")
    @classmethod
    def split_lists(cls, v):
        return _split_list(v)

    @model_validator(mode="after")
    def validate_grids(self):
        for name, value in self:
            if not value:
                raise ValueError(f"grid '{name}' is empty")
        for criterion in self.dtc_criterion + self.rf_criterion:
            if criterion not in CLASSIFIER_CRITERIA:
                raise ValueError(f"unknown classifier criterion '{criterion}'")
        for criterion in self.dtr_criterion:
            if criterion not in REGRESSOR_CRITERIA:
                raise ValueError(f"unknown regressor criterion '{criterion}'")
        if min(self.dtc_min_samples_split + self.dtr_min_samples_split) < 2:
            raise ValueError("min_samples_split must be >= 2")
        if min(self.dtr_max_depth) < 1 or min(self.rf_n_estimators) < 1:
            raise ValueError("max_depth and n_estimators must be >= 1")
        return self

    def combinations(self, kind: ModelKind) -> List[Hyperparams]:
        """Grid points for a model kind, in listing order"""
        if kind is ModelKind.DT_CLASSIFIER:
            return [Hyperparams(criterion=c, min_samples_split=s)
                    for c, s in product(self.dtc_criterion, self.dtc_min_samples_split)]
        if kind is ModelKind.DT_REGRESSOR:
            return [Hyperparams(criterion=c, min_samples_split=s, max_depth=d)
                    for c, s, d in product(self.dtr_criterion, self.dtr_min_samples_split, self.dtr_max_depth)]
        if kind is ModelKind.RF_CLASSIFIER:
            return [Hyperparams(criterion=c, n_estimators=n)
                    for c, n in product(self.rf_criterion, self.rf_n_estimators)]
        return [Hyperparams(fit_intercept=f, normalize=n)
                for f, n in product(self.lr_fit_intercept, self.lr_normalize)]


class DegradationConfig(BaseModel):
    """Periodic prediction-error bursts injected into selected candidates"""
    enabled: bool = False
    period: int = Field(default=4000, ge=1)
    duration: int = Field(default=300, ge=1)
    error_rate: float = Field(default=0.1, ge=0, le=1)
    kinds: List[ModelKind] = Field(
        default_factory=lambda: [ModelKind.DT_CLASSIFIER, ModelKind.DT_REGRESSOR]
    )

    @field_validator("kinds", mode="before")
    @classmethod
    def parse_kinds(cls, v):
        return [ModelKind.parse(item) for item in _split_list(v)]

    @model_validator(mode="after")
    def validate_burst(self):
        if self.duration > self.period:
            raise ValueError("duration must not exceed period")
        return self


class RunConfig(BaseModel):
    """Everything one experiment needs"""
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    selector: SelectorConfig = Field(default_factory=SelectorConfig)
    monitor: MonitorConfig = Field(default_factory=MonitorConfig)
    split: SplitSpec = Field(default_factory=SplitSpec)
    grid: GridConfig = Field(default_factory=GridConfig)
    degradation: DegradationConfig = Field(default_factory=DegradationConfig)

    seeds: List[int] = Field(default_factory=lambda: [1, 2, 3])
    output_dir: str = "runs"
    cv_folds: int = Field(default=10, ge=2)
    latency_repetitions: int = Field(default=5, ge=1)
    quiet: bool = False

    @field_validator("seeds", mode="before")
    @classmethod
    def parse_seeds(cls, v):
        return _split_list(v)

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v):
        if not v:
            raise ValueError("seed list must not be empty")
        return v
