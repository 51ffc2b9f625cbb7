import os
import shutil
import sys
import tempfile
from pathlib import Path

import pytest

# Ensure the project root is on the Python path so that `mldas` can be imported
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from mldas.config.schema import GridConfig, RunConfig, ScenarioConfig, SplitSpec  # noqa: E402
from mldas.experiment import dataset_from_records, run_training  # noqa: E402
from mldas.traffic.scenario import generate_dataset  # noqa: E402

# A quick scenario: 20 legitimate iterations with the default 10 attack phases
SMALL_SCENARIO = ScenarioConfig(seed=7, legit_iterations=20, attack_phases=10)

# One grid point per family, 3 folds, one seed
FAST_GRID = GridConfig(
    dtc_criterion=["gini"], dtc_min_samples_split=[2],
    dtr_criterion=["mse"], dtr_min_samples_split=[2], dtr_max_depth=[4],
    rf_criterion=["gini"], rf_n_estimators=[5],
    lr_fit_intercept=[True], lr_normalize=[False],
)


def fast_run_config(**updates) -> RunConfig:
    config = RunConfig(
        scenario=SMALL_SCENARIO,
        grid=FAST_GRID,
        split=SplitSpec(check_sessions=False, tolerance_pp=15.0),
        seeds=[1],
        cv_folds=3,
        latency_repetitions=1,
        quiet=True,
    )
    return config.model_copy(update=updates)


@pytest.fixture(scope="function")
def temp_test_dir():
    """Create a temporary directory for test files"""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)


@pytest.fixture(scope="session")
def small_scenario():
    """(rows, schedule) of the small seeded scenario, generated once"""
    return generate_dataset(SMALL_SCENARIO)


@pytest.fixture(scope="session")
def training_outcome(small_scenario):
    rows, schedule = small_scenario
    return run_training(dataset_from_records(rows, schedule), fast_run_config())


@pytest.fixture(scope="session")
def trained_candidates(training_outcome):
    """Candidate profiles with their fitted models"""
    return training_outcome.profiles


@pytest.fixture(scope="function")
def run_config():
    return fast_run_config(output_dir=os.path.join(tempfile.gettempdir(), "mldas-tests"))
