"""
Pairwise feature correlation diagnostic. Nothing is dropped automatically.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["feature_a", "feature_b", "abs_r"]


def correlation_report(features: pd.DataFrame) -> pd.DataFrame:
    """
    |Pearson r| for every feature pair a < b in column order.

    Zero-variance columns have an undefined correlation and come out as NaN.
    """
    names = list(features.columns)
    matrix = features.astype(np.float64).corr(method="pearson").abs()
    pairs = [
        (a, b, matrix.iat[i, j])
        for i, a in enumerate(names)
        for j, b in enumerate(names)
        if i < j
    ]
    report = pd.DataFrame(pairs, columns=REPORT_COLUMNS)
    strong = report[report["abs_r"] >= 0.95]
    for row in strong.itertuples(index=False):
        logger.info(f"Strongly correlated features: {row.feature_a} / {row.feature_b} (|r|={row.abs_r:.3f})")
    return report


def write_correlation_report(features: pd.DataFrame, path: Union[str, Path]) -> pd.DataFrame:
    report = correlation_report(features)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(path, index=False, lineterminator="\n", float_format="%.6f")
    return report
