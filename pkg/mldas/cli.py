#!/usr/bin/env python3

import argparse
import datetime
import os
import sys

from . import __version__
from .config.loader import dump_run_config, load_run_config
from .config.schema import RunConfig
from .controller.runner import run_scenario
from .errors import MldasError, SchemaError
from .experiment import generated_dataset, load_dataset, run_training
from .features.prepare import prepare
from .flows.dataset import Schema, read_dataset, write_dataset
from .logging_config import get_logger, setup_logging
from .reporting import SUMMARY_FILE, summarize_run, training_summary, write_run_report, write_training_reports
from .selector.degradation import DegradationInjector
from .selector.state import load_candidates
from .traffic.scenario import generate_dataset, legit_fraction
from .traffic.schedule import AttackSchedule

logger = get_logger(__name__)

RAW_DATASET = "dataset_raw.csv"
PREPARED_DATASET = "dataset.csv"
SCHEDULE_FILE = "schedule.csv"
MODELS_DIR = "models"
RUN_DIR = "run"

# argparse dest -> "section.key" understood by load_run_config
OVERRIDES = {
    "seed": "scenario.seed",
    "hosts": "scenario.host_count",
    "switches": "scenario.switch_count",
    "legit_iterations": "scenario.legit_iterations",
    "attack_phases": "scenario.attack_phases",
    "legit_fraction": "scenario.target_legit_fraction",
    "spoofed": "scenario.spoofed",
    "seeds": "seeds",
    "output_dir": "output_dir",
    "quiet": "quiet",
    "cv_folds": "cv_folds",
    "train_fraction": "split.train_fraction",
    "tolerance_pp": "split.tolerance_pp",
    "balanced_batch_size": "split.balanced_batch_size",
    "check_sessions": "split.check_sessions",
    "s_min": "selector.s_min",
    "window_w": "selector.W",
    "a_min": "selector.A_min",
    "eps_err": "selector.eps_err",
    "t_dwell": "selector.T_dwell",
    "tau_switch": "selector.tau_switch",
    "mode": "selector.mode",
    "policy": "selector.policy",
    "label_lag": "selector.label_lag",
    "poll_interval": "monitor.poll_interval",
    "min_batch": "monitor.min_batch",
    "verdict_threshold": "monitor.verdict_threshold",
    "stats_reply_delay": "monitor.stats_reply_delay",
    "processing_delay": "monitor.processing_delay",
    "drop_priority": "monitor.drop_priority",
    "degrade": "degradation.enabled",
    "degrade_period": "degradation.period",
    "degrade_duration": "degradation.duration",
    "degrade_error_rate": "degradation.error_rate",
}


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1 like configuration errors"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def set_logs(args, config: RunConfig) -> str:
    log_dir = os.path.join(config.output_dir, "logs")
    os.makedirs(log_dir, exist_ok=True)
    log_filename = os.path.join(
        log_dir,
        "mldas-{}-{}.log".format(
            args.subparser_name,
            datetime.datetime.today().strftime("%Y-%m-%d_%H-%M-%S")
        )
    )
    level = "DEBUG" if args.debug_activated else "INFO"
    setup_logging(level, log_filename, console_level="WARNING" if config.quiet else level)
    print("mldas log will be saved here: {}".format(log_filename))
    return log_filename


def resolve_config(args) -> RunConfig:
    overrides = {OVERRIDES[name]: value for name, value in vars(args).items() if name in OVERRIDES}
    return load_run_config(args.config_file, overrides)


def cmd_generate(args, config: RunConfig):
    """Generate the labelled dataset in both schemas plus the attack schedule."""
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    rows, schedule = generate_dataset(config.scenario)
    write_dataset(rows, os.path.join(out, RAW_DATASET))
    write_dataset(prepare(rows), os.path.join(out, PREPARED_DATASET))
    schedule.write_csv(os.path.join(out, SCHEDULE_FILE))
    dump_run_config(config, os.path.join(out, "config.ini"))
    print(f"{len(rows)} records, legitimate fraction {legit_fraction(rows):.3f}, "
          f"{len(schedule)} attack entries -> {out}")


def cmd_train(args, config: RunConfig):
    """Cross-validate, tune and evaluate the four candidates."""
    if args.dataset:
        dataset = load_dataset(args.dataset, args.schedule, config.scenario.subnet)
    else:
        logger.info("No dataset given, generating one from the scenario settings")
        dataset = generated_dataset(config)
    outcome = run_training(dataset, config, progress=not config.quiet)
    models_dir = args.models_dir or os.path.join(config.output_dir, MODELS_DIR)
    write_training_reports(outcome, config, models_dir)
    print(training_summary(outcome))
    print(f"Models and reports saved to {models_dir}")


def _scenario_records(args, config: RunConfig):
    if not args.dataset:
        return None, None
    rows, schema = read_dataset(args.dataset)
    if schema is not Schema.RAW:
        raise SchemaError("simulate replays raw flow records; prepared datasets carry no timestamps")
    schedule = AttackSchedule.read_csv(args.schedule, config.scenario.subnet) if args.schedule else None
    return rows, schedule


def cmd_simulate(args, config: RunConfig):
    """Run the controller loop over a scenario with the trained candidates."""
    models_dir = args.models_dir or os.path.join(config.output_dir, MODELS_DIR)
    profiles = load_candidates(models_dir)
    records, schedule = _scenario_records(args, config)
    degradation = DegradationInjector(config.degradation, config.seeds[0]) if config.degradation.enabled else None
    run_dir = args.run_dir or os.path.join(config.output_dir, RUN_DIR)
    try:
        report = run_scenario(config.scenario, config.selector, config.monitor, profiles, records, schedule,
                              degradation, progress=not config.quiet)
    except MldasError as e:
        partial = getattr(e, "report", None)
        if partial is not None:
            write_run_report(partial, config, run_dir, models_dir)
            logger.error(f"Run aborted, partial report written to {run_dir}")
        raise
    write_run_report(report, config, run_dir, models_dir)
    with open(os.path.join(run_dir, SUMMARY_FILE), encoding="utf-8") as f:
        print(f.read(), end="")


def cmd_report(args, config: RunConfig):
    """Summarize a run directory."""
    summary = summarize_run(args.run_dir)
    with open(os.path.join(args.run_dir, SUMMARY_FILE), "w", encoding="utf-8", newline="\n") as f:
        f.write(summary)
    print(summary, end="")


def _add_scenario_flags(parser):
    group = parser.add_argument_group("scenario")
    group.add_argument("--hosts", type=int, help="Number of hosts")
    group.add_argument("--switches", type=int, help="Number of switches in the line")
    group.add_argument("--legit-iterations", type=int, help="Legitimate script iterations")
    group.add_argument("--attack-phases", type=int, help="Attack phases (0 for legitimate only)")
    group.add_argument("--legit-fraction", type=float, help="Target share of legitimate records")
    group.add_argument("--no-spoof", dest="spoofed", action="store_const", const=False,
                       help="Floods use the attacker's own address")


def _add_selector_flags(parser):
    group = parser.add_argument_group("selector")
    group.add_argument("--s-min", type=float, help="RMSE admission bound (default derived)")
    group.add_argument("--W", dest="window_w", type=int, help="Rolling window, flows")
    group.add_argument("--A-min", dest="a_min", type=float, help="Rolling accuracy floor")
    group.add_argument("--eps-err", type=float, help="Rolling RMSE tolerance")
    group.add_argument("--T-dwell", dest="t_dwell", type=int, help="Minimum flows between switches")
    group.add_argument("--tau-switch", type=float, help="Minimum relative improvement to switch")
    group.add_argument("--mode", choices=["periodic", "event", "both"], help="Re-evaluation triggers")
    group.add_argument("--policy", choices=["dynamic", "static"], help="Dynamic selection or a frozen model")
    group.add_argument("--label-lag", type=int, help="Flows before ground truth reaches the selector")


def _add_monitor_flags(parser):
    group = parser.add_argument_group("monitor")
    group.add_argument("--poll-interval", type=float, help="Seconds between flow-stats polls")
    group.add_argument("--min-batch", type=int, help="Records per classified batch")
    group.add_argument("--verdict-threshold", type=float, help="Legitimate share below which a batch is an attack")
    group.add_argument("--stats-reply-delay", type=float, help="Seconds from poll to stats reply")
    group.add_argument("--processing-delay", type=float, help="Seconds to classify and push rules")
    group.add_argument("--drop-priority", type=int, help="Priority of installed DROP rules")


def _add_degradation_flags(parser):
    group = parser.add_argument_group("degradation")
    group.add_argument("--degrade", action="store_const", const=True, help="Inject prediction-error bursts")
    group.add_argument("--degrade-period", type=int, help="Flows between burst starts")
    group.add_argument("--degrade-duration", type=int, help="Flows per burst")
    group.add_argument("--degrade-error-rate", type=float, help="Flip probability inside a burst")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog="mldas",
        description="SDN DDoS detection lab: traffic generation, model training and controller simulation.")
    parser.set_defaults(func=None)
    parser.add_argument("-V", "--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-b", "--debug",
                        dest="debug_activated", action="store_true")
    parser.add_argument("-c", "--config", dest="config_file", help="INI configuration file")
    parser.add_argument("-o", "--output-dir", help="Directory for every output (default: runs)")
    parser.add_argument("-s", "--seed", type=int, help="Scenario seed")
    parser.add_argument("--seeds", help="Comma-separated training seeds, e.g. 1,2,3")
    parser.add_argument("-q", "--quiet", action="store_const", const=True, help="No progress bars, warnings only")
    subparsers = parser.add_subparsers(dest="subparser_name")

    p_generate = subparsers.add_parser("generate", help="Generate a labelled dataset")
    _add_scenario_flags(p_generate)
    p_generate.set_defaults(func=cmd_generate)

    p_train = subparsers.add_parser("train", help="Train and evaluate the candidate models")
    p_train.add_argument("-d", "--dataset", help="Raw dataset CSV (default: generate one)")
    p_train.add_argument("--schedule", help="Attack schedule CSV of the dataset")
    p_train.add_argument("-m", "--models-dir", help="Where to write models and reports")
    p_train.add_argument("-k", "--folds", dest="cv_folds", type=int, help="Cross-validation folds")
    p_train.add_argument("--train-fraction", type=float, help="Chronological train share")
    p_train.add_argument("--tolerance-pp", type=float, help="Allowed class-ratio drift, percentage points")
    p_train.add_argument("--balanced-batch-size", type=int, help="Train on 1:1 class batches of this size")
    p_train.add_argument("--no-session-check", dest="check_sessions", action="store_const", const=False,
                         help="Allow an attack session to straddle the train/test boundary")
    _add_scenario_flags(p_train)
    _add_selector_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_simulate = subparsers.add_parser("simulate", help="Run the controller over a scenario")
    p_simulate.add_argument("-m", "--models-dir", help="Directory holding models.json")
    p_simulate.add_argument("-r", "--run-dir", help="Where to write the run report")
    p_simulate.add_argument("-d", "--dataset", help="Raw dataset CSV to replay instead of generating")
    p_simulate.add_argument("--schedule", help="Attack schedule CSV of the replayed dataset")
    _add_scenario_flags(p_simulate)
    _add_selector_flags(p_simulate)
    _add_monitor_flags(p_simulate)
    _add_degradation_flags(p_simulate)
    p_simulate.set_defaults(func=cmd_simulate)

    p_report = subparsers.add_parser("report", help="Summarize a run directory")
    p_report.add_argument("run_dir", help="Directory written by simulate")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.func is None:
        parser.print_help()
        return 1
    try:
        config = resolve_config(args)
        set_logs(args, config)
        args.func(args, config)
    except MldasError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Internal error: {e}")
        print(f"internal error: {e}", file=sys.stderr)
        return 3
    return 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
