"""Initial estimators computed on source data.

``ols``, ``ridge``, ``ridgeless`` (minimum l2-norm least squares), ``lassoless``
(minimum l1-norm least squares) and ``lasso``.  OLS, ridge and lasso with a
given strength also accept a :class:`~translasso.datagen.SourceSummary`, which
is how the simulation studies handle sources with millions of rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .datagen import ParameterError, RegressionProblem, SourceSummary

METHODS = ("ols", "lasso", "ridge", "ridgeless", "lassoless")
RANK_RTOL = 1e-10
CLIP_FLOOR = 1e-3


class InitialEstimatorError(ValueError):
    """The requested estimator cannot be computed on this source."""


@dataclass(frozen=True)
class InitialEstimatorSpec:
    method: str = "ols"
    hyper: float | None = None
    clip: float = CLIP_FLOOR
    folds: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown initial estimator {self.method!r}; choose from {METHODS}")
        if not self.clip > 0:
            raise ParameterError(f"clip must be positive, got {self.clip}")
        if self.hyper is not None and self.hyper < 0:
            raise ParameterError(f"hyper must be nonnegative, got {self.hyper}")


def clip_small(beta_tilde, floor: float = CLIP_FLOOR) -> np.ndarray:
    """Magnitudes ``|b~_j|`` with everything at or below ``floor`` raised to ``floor``.

    Only for building weights; the anchor itself is never clipped.
    """
    if not floor > 0:
        raise ParameterError(f"floor must be positive, got {floor}")
    mag = np.abs(np.asarray(beta_tilde, dtype=float))
    return np.where(mag <= floor, floor, mag)


def _as_summary(source) -> SourceSummary:
    if isinstance(source, SourceSummary):
        return source
    return SourceSummary.from_problem(source)


def ols(source) -> np.ndarray:
    s = _as_summary(source)
    if s.m < s.p:
        raise InitialEstimatorError(
            f"OLS needs at least p={s.p} source rows, got m={s.m}; use 'ridge', 'ridgeless' or 'lassoless'"
        )
    if s.factor is not None:
        # gram = B B' with B lower triangular
        z = linalg.solve_triangular(s.factor, s.xty, lower=True)
        return linalg.solve_triangular(s.factor.T, z, lower=False)
    try:
        c, low = linalg.cho_factor(s.gram, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise InitialEstimatorError(
            "source design is rank deficient; use 'ridge', 'ridgeless' or 'lassoless'"
        ) from exc
    d = np.diag(c)
    if d.min() <= np.sqrt(RANK_RTOL) * d.max():
        raise InitialEstimatorError(
            "source design is numerically rank deficient; use 'ridge', 'ridgeless' or 'lassoless'"
        )
    return linalg.cho_solve((c, low), s.xty)


def ridge(source, alpha: float) -> np.ndarray:
    s = _as_summary(source)
    return linalg.solve(s.gram + alpha * np.eye(s.p), s.xty, assume_a="sym")


def ridgeless(source: RegressionProblem) -> np.ndarray:
    """Minimum l2-norm least-squares solution via a truncated SVD pseudoinverse."""
    X, y = source.design, source.response
    U, sv, Vt = linalg.svd(X, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return np.zeros(X.shape[1])
    keep = sv > RANK_RTOL * sv[0]
    return Vt[keep].T @ ((U[:, keep].T @ y) / sv[keep])


def lassoless(source: RegressionProblem) -> np.ndarray:
    """Minimum l1-norm solution among all least-squares solutions.

    The least-squares set is ``{b : V_r' b = V_r' b_mn}`` with ``V_r`` the
    right singular vectors of the numerical row space and ``b_mn`` the
    minimum-norm solution; this full-rank form of the normal equations is
    solved as a linear program in ``b = u - v``, ``u, v >= 0``.
    """
    X, y = source.design, source.response
    p = X.shape[1]
    U, sv, Vt = linalg.svd(X, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return np.zeros(p)
    keep = sv > RANK_RTOL * sv[0]
    Vr = Vt[keep]
    if Vr.shape[0] == p:
        return Vr.T @ ((U[:, keep].T @ y) / sv[keep])
    rhs = (U[:, keep].T @ y) / sv[keep]
    A_eq = np.hstack([Vr, -Vr])
    res = optimize.linprog(np.ones(2 * p), A_eq=A_eq, b_eq=rhs, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"lassoless linear program failed: {res.message}")
    return res.x[:p] - res.x[p:]


def _ridge_cv(source: RegressionProblem, folds: int, seed: int, grid_size: int = 50) -> float:
    from .selection import fold_assignments

    scale = float(np.trace(source.gram)) / source.p
    alphas = scale * np.logspace(-6, 3, grid_size)
    assign = fold_assignments(source.n, folds, seed)
    err = np.zeros(grid_size)
    for k in range(folds):
        test = assign == k
        train = source.subset(~test)
        hold = source.subset(test)
        for i, a in enumerate(alphas):
            b = ridge(train, a)
            r = hold.response - hold.design @ b
            err[i] += r @ r
    # ties resolve to the stronger penalty
    best = np.flatnonzero(err == err.min())[-1]
    return float(alphas[best])


def estimate_initial(source, spec: InitialEstimatorSpec = InitialEstimatorSpec()) -> np.ndarray:
    """Estimate the initial coefficient vector from source data."""
    if isinstance(source, RegressionProblem) and source.n == 0:
        raise ParameterError("source data is empty")
    method = spec.method
    if method == "ols":
        return ols(source)
    if method == "ridge":
        alpha = spec.hyper
        if alpha is None:
            alpha = _ridge_cv(_require_rows(source, method), spec.folds, spec.seed)
        return ridge(source, alpha)
    if method == "lasso":
        from .selection import MethodConfig, cross_validate
        from .solver import PenaltySpec, fit_gram

        if spec.hyper is not None:
            s = _as_summary(source)
            return fit_gram(s.gram, s.xty, s.m, PenaltySpec.lasso(spec.hyper, s.p)).beta_hat
        report = cross_validate(_require_rows(source, method), MethodConfig("lasso"), None,
                                k=spec.folds, seed=spec.seed)
        return report.fit.beta_hat
    if method == "ridgeless":
        return ridgeless(_require_rows(source, method))
    return lassoless(_require_rows(source, method))


def _require_rows(source, method) -> RegressionProblem:
    if not isinstance(source, RegressionProblem):
        raise ParameterError(f"{method!r} needs the source rows, not only a summary")
    return source
