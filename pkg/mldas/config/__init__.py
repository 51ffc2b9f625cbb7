"""
Typed run configuration and its INI loader.
"""

from .schema import (
    DegradationConfig,
    GridConfig,
    MonitorConfig,
    RunConfig,
    ScenarioConfig,
    SelectorConfig,
    SelectorMode,
    SelectorPolicy,
    SplitSpec,
)
from .loader import config_fingerprint, dump_run_config, dumps_run_config, load_run_config

__all__ = [
    "DegradationConfig",
    "GridConfig",
    "MonitorConfig",
    "RunConfig",
    "ScenarioConfig",
    "SelectorConfig",
    "SelectorMode",
    "SelectorPolicy",
    "SplitSpec",
    "config_fingerprint",
    "dump_run_config",
    "dumps_run_config",
    "load_run_config",
]
