"""
Tests for the mldas command line: subcommands, outputs and exit codes.
"""

import hashlib
import os

import pytest

from mldas.cli import PREPARED_DATASET, RAW_DATASET, SCHEDULE_FILE, build_parser, main

FAST_GRID_INI = """
[grid]
dtc_criterion = gini
dtc_min_samples_split = 2
dtr_criterion = mse
dtr_min_samples_split = 2
dtr_max_depth = 4
rf_criterion = gini
rf_n_estimators = 5
lr_fit_intercept = true
lr_normalize = false

[run]
latency_repetitions = 1
"""


def sha256_of(path):
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def generate(out, *extra):
    return main(["-q", "-o", out, "-s", "11", "generate", "--legit-iterations", "4", "--attack-phases", "2", *extra])


@pytest.mark.unit
class TestParser:

    def test_global_flags_and_overrides(self):
        args = build_parser().parse_args(["-s", "5", "simulate", "--W", "300", "--no-spoof", "--degrade"])
        assert (args.seed, args.window_w, args.spoofed, args.degrade) == (5, 300, False, True)
        assert args.debug_activated is False
        assert args.func.__name__ == "cmd_simulate"

    def test_unset_flags_are_none(self):
        args = build_parser().parse_args(["train"])
        assert args.check_sessions is None
        assert args.a_min is None

    def test_usage_error_exits_one(self):
        with pytest.raises(SystemExit) as ctx:
            main(["generate", "--hosts", "many"])
        assert ctx.value.code == 1

    def test_no_subcommand(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().out


@pytest.mark.integration
class TestCommands:

    def test_generate_is_deterministic(self, temp_test_dir):
        first, second = os.path.join(temp_test_dir, "a"), os.path.join(temp_test_dir, "b")
        assert generate(first) == 0
        assert generate(second) == 0
        for name in (RAW_DATASET, PREPARED_DATASET, SCHEDULE_FILE):
            assert sha256_of(os.path.join(first, name)) == sha256_of(os.path.join(second, name))
        assert os.path.exists(os.path.join(first, "config.ini"))
        assert os.listdir(os.path.join(first, "logs"))

    def test_seed_changes_output(self, temp_test_dir):
        first, second = os.path.join(temp_test_dir, "a"), os.path.join(temp_test_dir, "b")
        generate(first)
        main(["-q", "-o", second, "-s", "12", "generate", "--legit-iterations", "4", "--attack-phases", "2"])
        assert sha256_of(os.path.join(first, RAW_DATASET)) != sha256_of(os.path.join(second, RAW_DATASET))

    def test_infeasible_scenario_is_a_config_error(self, temp_test_dir):
        assert main(["-q", "-o", temp_test_dir, "generate", "--legit-iterations", "1", "--attack-phases", "100"]) == 1

    def test_bad_config_file(self, temp_test_dir):
        path = os.path.join(temp_test_dir, "bad.ini")
        with open(path, "w") as f:
            f.write("[monitor]\nmin_batch = -4\n")
        assert main(["-q", "-o", temp_test_dir, "-c", path, "generate"]) == 1

    def test_report_on_empty_directory(self, temp_test_dir, capsys):
        empty = os.path.join(temp_test_dir, "empty")
        os.makedirs(empty)
        assert main(["-q", "-o", temp_test_dir, "report", empty]) == 2
        assert "error" in capsys.readouterr().err

    def test_simulate_without_models(self, temp_test_dir):
        assert main(["-q", "-o", temp_test_dir, "simulate", "-m", os.path.join(temp_test_dir, "none")]) == 1

    def test_simulate_rejects_prepared_dataset(self, temp_test_dir, trained_candidates):
        from mldas.selector import save_candidates

        generate(temp_test_dir)
        models = os.path.join(temp_test_dir, "models")
        os.makedirs(models)
        save_candidates(trained_candidates, os.path.join(models, "models.json"))
        code = main(["-q", "-o", temp_test_dir, "simulate", "-m", models,
                     "-d", os.path.join(temp_test_dir, PREPARED_DATASET)])
        assert code == 2

    def test_train_rejects_prepared_dataset(self, temp_test_dir):
        generate(temp_test_dir)
        code = main(["-q", "-o", temp_test_dir, "train", "-d", os.path.join(temp_test_dir, PREPARED_DATASET)])
        assert code == 2

    def test_missing_inputs_are_config_errors(self, temp_test_dir):
        absent = os.path.join(temp_test_dir, "absent.csv")
        assert main(["-q", "-o", temp_test_dir, "train", "-d", absent]) == 1
        generate(temp_test_dir)
        raw = os.path.join(temp_test_dir, RAW_DATASET)
        assert main(["-q", "-o", temp_test_dir, "train", "-d", raw, "--schedule", absent]) == 1


@pytest.mark.slow
@pytest.mark.e2e
def test_generate_train_simulate_report(temp_test_dir, capsys):
    config = os.path.join(temp_test_dir, "fast.ini")
    with open(config, "w") as f:
        f.write(FAST_GRID_INI)
    common = ["-q", "-o", temp_test_dir, "-c", config, "-s", "7", "--seeds", "1"]
    raw = os.path.join(temp_test_dir, RAW_DATASET)
    schedule = os.path.join(temp_test_dir, SCHEDULE_FILE)

    assert main(common + ["generate", "--legit-iterations", "20"]) == 0
    assert main(common + ["train", "-d", raw, "--schedule", schedule, "-k", "3",
                          "--tolerance-pp", "15", "--no-session-check"]) == 0
    models = os.path.join(temp_test_dir, "models")
    assert os.path.exists(os.path.join(models, "models.json"))

    assert main(common + ["simulate", "-d", raw, "--schedule", schedule]) == 0
    run_dir = os.path.join(temp_test_dir, "run")
    for table in ("scores.csv", "rules.csv", "switches.csv", "polls.csv", "detections.csv", "summary.txt"):
        assert os.path.exists(os.path.join(run_dir, table))

    again = os.path.join(temp_test_dir, "run-again")
    assert main(common + ["simulate", "-d", raw, "--schedule", schedule, "-r", again]) == 0
    for table in ("scores.csv", "rules.csv", "switches.csv", "summary.txt"):
        assert sha256_of(os.path.join(run_dir, table)) == sha256_of(os.path.join(again, table)), table

    capsys.readouterr()
    assert main(["-q", "-o", temp_test_dir, "report", run_dir]) == 0
    assert "mldas run summary" in capsys.readouterr().out
