"""
Report files: the training tables, the controller run directory and the
text summary rebuilt from a run directory's CSVs.
"""

import logging
import shutil
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd

from .config.loader import dump_run_config
from .config.schema import RunConfig
from .controller.runner import RunReport
from .errors import SchemaError
from .experiment import TrainingOutcome
from .ml.kinds import ModelKind
from .selector.state import CANDIDATES_FILE, save_candidates

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CONFIG_FILE = "config.ini"
EVALUATION_FILE = "evaluation.csv"
SUMMARY_FILE = "summary.txt"
COUNTERS_FILE = "counters.csv"

RUN_TABLES = {
    "scores.csv": ["batch", "time", "score", "verdict", "records", "active_model"],
    "rules.csv": ["datapath_id", "ip_src", "priority", "installed_at", "hits"],
    "switches.csv": ["flow_counter", "from_kind", "to_kind", "reason", "rmse_roll", "acc_roll"],
    "polls.csv": ["time", "records"],
    "detections.csv": ["phase", "first_record", "delay"],
}


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8", float_format="%.17g")
    return path


def write_training_reports(outcome: TrainingOutcome, config: RunConfig, out_dir: PathLike) -> Path:
    """
    Write the cross-validation, grid, comparison, importance and evaluation
    tables plus the candidates file.

    Returns:
        Path: the output directory
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = config.cv_folds

    cv_rows = []
    for kind, result in outcome.default_cv.items():
        folds = result.fold_frame(k)
        summary = pd.DataFrame([
            {"model": kind.value, "seed": "", "fold": "mean", "rmse": result.mean},
            {"model": kind.value, "seed": "", "fold": "std", "rmse": result.std},
        ])
        cv_rows.extend([folds, summary])
    _write_csv(pd.concat(cv_rows, ignore_index=True), out / "cv.csv")

    for kind, grid in outcome.grids.items():
        _write_csv(grid.table(), out / f"grid_{kind.value}.csv")
    _write_csv(outcome.rmse_comparison(), out / "rmse_comparison.csv")

    importance = []
    for kind, ranked in outcome.importances.items():
        importance.append(ranked.assign(model=kind.value)[["model", "rank", "feature", "importance"]])
    _write_csv(pd.concat(importance, ignore_index=True), out / "importance.csv")

    _write_csv(outcome.evaluation_frame(), out / EVALUATION_FILE)
    if outcome.correlation is not None:
        _write_csv(outcome.correlation, out / "correlation.csv")
    if outcome.baselines is not None:
        _write_csv(outcome.baselines, out / "baselines.csv")

    save_candidates(outcome.profiles, out / CANDIDATES_FILE)
    dump_run_config(config, str(out / CONFIG_FILE))
    logger.info(f"Training reports written to {out}")
    return out


def run_frames(report: RunReport) -> Dict[str, pd.DataFrame]:
    """The run directory's tables, keyed by file name"""
    detections = [
        {"phase": phase, "first_record": report.phase_starts[phase], "delay": delay}
        for phase, delay in sorted(report.delays.items())
    ]
    rows = {
        "scores.csv": [outcome.as_row() for outcome in report.batches],
        "rules.csv": report.rule_rows(),
        "switches.csv": [event.as_row() for event in report.switch_log],
        "polls.csv": [{"time": time, "records": count} for time, count in report.polls],
        "detections.csv": detections,
    }
    return {name: pd.DataFrame(rows[name], columns=columns) for name, columns in RUN_TABLES.items()}


def write_run_report(report: RunReport, config: RunConfig, run_dir: PathLike,
                     models_dir: Optional[PathLike] = None) -> Path:
    """
    Write a controller run as a directory of CSVs, the resolved config and
    the summary. The held-out evaluation of the models is copied alongside
    when models_dir has one.
    """
    out = Path(run_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, frame in run_frames(report).items():
        _write_csv(frame, out / name)
    if models_dir is not None and (Path(models_dir) / EVALUATION_FILE).exists():
        shutil.copyfile(Path(models_dir) / EVALUATION_FILE, out / EVALUATION_FILE)
    dump_run_config(config, str(out / CONFIG_FILE))

    counters = [
        ("attack phases", len(report.phase_starts)),
        ("undetected phases", len(report.undetected_phases)),
        ("blocked records", report.blocked),
        ("classified records", report.classified),
        ("unclassified tail", report.unclassified),
    ]
    if report.aborted:
        counters.append(("aborted", report.aborted))
    _write_csv(pd.DataFrame(counters, columns=["name", "value"]), out / COUNTERS_FILE)
    summary = summarize_run(out)
    (out / SUMMARY_FILE).write_text(summary, encoding="utf-8")
    logger.info(f"Run report written to {out}")
    return out


def _read(run_dir: Path, name: str) -> pd.DataFrame:
    path = run_dir / name
    if not path.exists():
        raise SchemaError(f"{run_dir} is not a run directory: missing {name}")
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path} is empty")
    if list(frame.columns) != RUN_TABLES[name]:
        raise SchemaError(f"Unexpected header in {path}: {','.join(frame.columns)}")
    return frame


def _fmt(value: Optional[float], digits: int = 3) -> str:
    return "n/a" if value is None or pd.isna(value) else f"{value:.{digits}f}"


def summarize_run(run_dir: PathLike) -> str:
    """
    Text summary of a run directory: verdicts, rules, switches, delay
    statistics and the held-out accuracy per model when available.

    Raises:
        SchemaError: the directory misses a table or a table is malformed
    """
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise SchemaError(f"Run directory not found: {run_dir}")
    scores = _read(run_dir, "scores.csv")
    rules = _read(run_dir, "rules.csv")
    switches = _read(run_dir, "switches.csv")
    polls = _read(run_dir, "polls.csv")
    detections = _read(run_dir, "detections.csv")

    attack = scores[scores["verdict"] == "Attack"]
    delays = detections["delay"]
    lines: List[str] = [
        "mldas run summary",
        "",
        f"batches              {len(scores)}",
        f"attack verdicts      {len(attack)}",
        f"score min / max      {_fmt(scores['score'].min())} / {_fmt(scores['score'].max())}",
        f"polls                {len(polls)}",
        f"records polled       {int(polls['records'].sum())}",
        f"peak records / poll  {int(polls['records'].max()) if len(polls) else 0}",
        f"rules installed      {len(rules)}",
        f"sources blocked      {rules['ip_src'].nunique()}",
        f"rule hits            {int(rules['hits'].sum())}",
        f"model switches       {len(switches)}",
    ]
    if len(switches):
        spacing = switches["flow_counter"].diff().dropna()
        lines.append(f"switch spacing mean  {_fmt(spacing.mean() if len(spacing) else None, 1)}")
    models = scores["active_model"].value_counts().sort_index()
    for model, count in models.items():
        lines.append(f"  batches on {model:<24} {count}")

    lines += [
        "",
        f"detections           {len(detections)}",
        f"mean delay (s)       {_fmt(delays.mean() if len(delays) else None)}",
        f"min / max delay (s)  {_fmt(delays.min() if len(delays) else None)} / "
        f"{_fmt(delays.max() if len(delays) else None)}",
    ]
    counters = run_dir / COUNTERS_FILE
    if counters.exists():
        for row in pd.read_csv(counters, encoding="utf-8", dtype=str).itertuples(index=False):
            lines.append(f"{row.name:<21}{row.value}")

    evaluation = run_dir / EVALUATION_FILE
    if evaluation.exists():
        frame = pd.read_csv(evaluation, encoding="utf-8")
        lines += ["", "held-out accuracy"]
        for row in frame.itertuples(index=False):
            lines.append(f"  {row.model:<24} {_fmt(row.accuracy, 4)}")
    return "\n".join(lines) + "\n"


def training_summary(outcome: TrainingOutcome) -> str:
    """One line per model for the console"""
    lines = []
    for kind in ModelKind:
        if kind not in outcome.evaluations:
            continue
        report = outcome.evaluations[kind]
        lines.append(
            f"{kind.value:<24} cv_rmse={_fmt(outcome.grids[kind].best_result.mean, 6)} "
            f"accuracy={_fmt(report.accuracy, 4)} f1={_fmt(report.f1, 4)}"
        )
    return "\n".join(lines)
