"""
Ordinary least squares with optional intercept and z-score standardization.
"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class LinearModel:
    """
    Coefficients are kept in the units of the raw features, so prediction
    never needs the scaling constants. mean and scale are stored for every
    fit; they only shape the solve when both fit_intercept and normalize
    are set.
    """
    coef: np.ndarray
    intercept: float
    mean: np.ndarray
    scale: np.ndarray
    fit_intercept: bool = True
    normalize: bool = False

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept


def scaling_constants(X: np.ndarray):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def fit_linear(X, y, fit_intercept: bool = True, normalize: bool = False) -> LinearModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    mean, scale = scaling_constants(X)
    standardize = fit_intercept and normalize

    design = (X - mean) / scale if standardize else X
    if fit_intercept:
        design = np.column_stack((design, np.ones(len(design))))
    solution, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        logger.debug(f"Least squares design is rank deficient ({rank} < {design.shape[1]})")

    weights = solution[:-1] if fit_intercept else solution
    intercept = float(solution[-1]) if fit_intercept else 0.0
    if standardize:
        coef = weights / scale
        intercept -= float(np.dot(coef, mean))
    else:
        coef = weights
    return LinearModel(coef, intercept, mean, scale, fit_intercept, normalize)
