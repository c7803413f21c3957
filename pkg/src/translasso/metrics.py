"""Estimation, prediction and variable-selection metrics, and log-log slopes."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from .datagen import ParameterError, RegressionProblem

TEST_SIZE = 1000


@dataclass(frozen=True)
class SelectionScores:
    f1: float
    sensitivity: float
    specificity: float
    ppv: float
    n_active: int
    active_ratio: float


@dataclass(frozen=True)
class MetricsRecord:
    l2_error: float
    rmse: float
    f1: float
    sensitivity: float
    specificity: float
    ppv: float
    n_active: int
    active_ratio: float
    invariant_ratio: float  # nan when the true support is empty

    def as_dict(self) -> dict:
        return asdict(self)


def selection_scores(beta_hat, beta_star) -> SelectionScores:
    """Compare the estimated support ``{j : b_j != 0}`` with the true one.

    With nothing selected, precision is 1 if the true support is empty and 0
    otherwise; F1 is 0 whenever precision or recall is 0.  An empty true
    support has recall 1 and an all-active truth has specificity 1.
    """
    beta_hat = np.asarray(beta_hat)
    beta_star = np.asarray(beta_star)
    if beta_hat.shape != beta_star.shape:
        raise ParameterError("beta_hat and beta_star must have equal length")
    sel = beta_hat != 0
    true = beta_star != 0
    tp = int(np.sum(sel & true))
    n_sel = int(sel.sum())
    n_true = int(true.sum())
    n_false = true.size - n_true
    sensitivity = tp / n_true if n_true else 1.0
    specificity = int(np.sum(~sel & ~true)) / n_false if n_false else 1.0
    if n_sel:
        ppv = tp / n_sel
    else:
        ppv = 1.0 if n_true == 0 else 0.0
    f1 = 0.0 if ppv * sensitivity == 0 else 2 * ppv * sensitivity / (ppv + sensitivity)
    active_ratio = float(np.mean(sel == true))
    return SelectionScores(f1, sensitivity, specificity, ppv, n_sel, active_ratio)


def invariant_ratio(beta_hat, beta_tilde, beta_star) -> float | None:
    """Fraction of truly active coordinates left exactly at the initial estimate.

    Returns ``None`` when the true support is empty.
    """
    beta_hat = np.asarray(beta_hat)
    beta_tilde = np.asarray(beta_tilde)
    beta_star = np.asarray(beta_star)
    if not beta_hat.shape == beta_tilde.shape == beta_star.shape:
        raise ParameterError("all vectors must have equal length")
    S = beta_star != 0
    if not S.any():
        return None
    return float(np.mean(beta_hat[S] == beta_tilde[S]))


def prediction_rmse(beta_hat, test_problem: RegressionProblem) -> float:
    if test_problem.n == 0:
        raise ParameterError("test set is empty")
    r = test_problem.response - test_problem.design @ np.asarray(beta_hat, dtype=float)
    return float(np.sqrt(np.mean(r * r)))


def loglog_slope(points: Iterable[tuple[float, float]]) -> float:
    """Least-squares slope of mean log error against ``log n``.

    ``points`` are ``(n, mean log error)`` pairs.
    """
    pts = list(points)
    ns = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    if np.unique(ns).size != ns.size:
        raise ParameterError("duplicate sample sizes in slope fit")
    if ns.size < 2:
        raise ParameterError("need at least two distinct sample sizes")
    x = np.log(ns)
    xc = x - x.mean()
    return float(xc @ (ys - ys.mean()) / (xc @ xc))


def evaluate(beta_hat, beta_tilde, beta_star, test_problem: RegressionProblem | None = None) -> MetricsRecord:
    """All metrics for one fitted coefficient vector."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    sel = selection_scores(beta_hat, beta_star)
    inv = None if beta_tilde is None else invariant_ratio(beta_hat, beta_tilde, beta_star)
    rmse = np.nan if test_problem is None else prediction_rmse(beta_hat, test_problem)
    return MetricsRecord(
        l2_error=float(np.linalg.norm(beta_hat - np.asarray(beta_star))),
        rmse=rmse,
        f1=sel.f1,
        sensitivity=sel.sensitivity,
        specificity=sel.specificity,
        ppv=sel.ppv,
        n_active=sel.n_active,
        active_ratio=sel.active_ratio,
        invariant_ratio=np.nan if inv is None else inv,
    )


def mean_and_stderr(values) -> tuple[float, float]:
    """Mean and sample-SD / sqrt(count), ignoring NaNs."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return np.nan, np.nan
    if v.size == 1:
        return float(v[0]), np.nan
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))
