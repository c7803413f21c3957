"""Penalty construction, strength grids and k-fold cross-validation."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .datagen import ParameterError, RegressionProblem, stream
from .initial import CLIP_FLOOR, clip_small
from .solver import KKT_TOL, MAX_SWEEPS, TOL, FitResult, PenaltySpec, _descend, fit, lambda_max

FAMILIES = ("lasso", "adaptive_lasso", "transfer_lasso", "adaptive_transfer_lasso")
ALPHAS = (0.75, 0.5, 0.25)
GAMMAS = (0.5, 1.0, 2.0)
GAMMA_PAIRS = ((0.5, 0.5), (1.0, 1.0), (2.0, 2.0))


@dataclass(frozen=True)
class MethodConfig:
    """One member of the estimator family plus the shape of its strength grid.

    ``alpha = lam / (lam + eta)`` is used by the two transfer families only.
    """

    family: str
    gamma: float = 1.0
    gamma1: float = 1.0
    gamma2: float = 1.0
    alpha: float = 1.0
    grid_size: int = 100
    grid_ratio: float = 1e-6

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 < self.grid_ratio < 1.0:
            raise ParameterError(f"grid_ratio must lie in (0, 1), got {self.grid_ratio}")
        if self.grid_size < 1:
            raise ParameterError("grid_size must be positive")

    @property
    def uses_initial(self) -> bool:
        return self.family != "lasso"

    @property
    def mixing(self) -> float:
        """Effective ``lam / (lam + eta)``; 1 for the families without an anchor term."""
        return self.alpha if self.family in ("transfer_lasso", "adaptive_transfer_lasso") else 1.0

    def label(self) -> str:
        if self.family == "adaptive_lasso":
            return f"gamma={self.gamma:g}"
        if self.family == "transfer_lasso":
            return f"alpha={self.alpha:g}"
        if self.family == "adaptive_transfer_lasso":
            return f"gamma1={self.gamma1:g},gamma2={self.gamma2:g},alpha={self.alpha:g}"
        return ""

    def grid(self, kappa_max: float) -> np.ndarray:
        """Log-spaced, strictly decreasing strengths from ``kappa_max`` down."""
        return kappa_max * np.logspace(0.0, np.log10(self.grid_ratio), self.grid_size)


def search_space(family: str, **grid) -> list[MethodConfig]:
    """Candidate settings swept by cross-validation for ``family``."""
    if family == "lasso":
        return [MethodConfig("lasso", **grid)]
    if family == "adaptive_lasso":
        return [MethodConfig("adaptive_lasso", gamma=g, **grid) for g in GAMMAS]
    if family == "transfer_lasso":
        return [MethodConfig("transfer_lasso", alpha=a, **grid) for a in ALPHAS]
    if family == "adaptive_transfer_lasso":
        return [
            MethodConfig("adaptive_transfer_lasso", gamma1=g1, gamma2=g2, alpha=a, **grid)
            for (g1, g2), a in product(GAMMA_PAIRS, ALPHAS)
        ]
    raise ParameterError(f"unknown family {family!r}; choose from {FAMILIES}")


def build_penalty(config: MethodConfig, beta_tilde, clip_floor: float = CLIP_FLOOR,
                  kappa: float = 1.0, p: int | None = None) -> PenaltySpec:
    """Map a family member and total strength ``kappa`` to a :class:`PenaltySpec`."""
    fam = config.family
    if beta_tilde is None:
        if config.uses_initial:
            raise ParameterError(f"{fam} needs an initial estimator")
        if p is None:
            raise ParameterError("pass p when no initial estimator is given")
    else:
        beta_tilde = np.asarray(beta_tilde, dtype=float)
        if p is not None and beta_tilde.size != p:
            raise ParameterError(f"initial estimator has length {beta_tilde.size}, expected {p}")
        p = beta_tilde.size
    ones = np.ones(p)
    if fam == "lasso":
        return PenaltySpec(kappa, 0.0, ones, ones, np.zeros(p))
    mag = clip_small(beta_tilde, clip_floor)
    if fam == "adaptive_lasso":
        return PenaltySpec(kappa, 0.0, 1.0 / mag ** config.gamma, ones, np.zeros(p))
    lam = config.alpha * kappa
    eta = (1.0 - config.alpha) * kappa
    if fam == "transfer_lasso":
        return PenaltySpec(lam, eta, ones, ones, beta_tilde)
    return PenaltySpec(lam, eta, 1.0 / mag ** config.gamma1, mag ** config.gamma2, beta_tilde)


def schedule_value(n: int, delta: float) -> float:
    """Strength ``n ** delta`` of a power-law schedule."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return float(n) ** float(delta)


def fold_assignments(n: int, k: int, seed) -> np.ndarray:
    """Fold label of every row: a seeded shuffle cut into ``k`` contiguous blocks."""
    if k < 2:
        raise ParameterError(f"need at least 2 folds, got {k}")
    if n < k:
        raise ParameterError(f"cannot split {n} rows into {k} non-empty folds")
    perm = np.random.default_rng(stream(seed, 0xCF)).permutation(n)
    labels = np.empty(n, dtype=np.int64)
    for f, block in enumerate(np.array_split(perm, k)):
        labels[block] = f
    return labels


@dataclass(frozen=True, eq=False)
class CvReport:
    configs: tuple[MethodConfig, ...]
    kappas: np.ndarray        # (n_configs, grid_size)
    cv_mean: np.ndarray       # flattened over configs x grid points
    cv_se: np.ndarray
    fold_assignments: np.ndarray
    best_index: int
    fit: FitResult
    penalty: PenaltySpec

    @property
    def grid_size(self) -> int:
        return self.kappas.shape[1]

    @property
    def best_config(self) -> MethodConfig:
        return self.configs[self.best_index // self.grid_size]

    @property
    def best_grid_index(self) -> int:
        return self.best_index % self.grid_size

    @property
    def best_kappa(self) -> float:
        return float(self.kappas.flat[self.best_index])

    @property
    def best(self) -> dict:
        cfg = self.best_config
        return {"family": cfg.family, "gamma": cfg.gamma, "gamma1": cfg.gamma1,
                "gamma2": cfg.gamma2, "alpha": cfg.alpha, "kappa": self.best_kappa,
                "grid_index": self.best_grid_index}


def _path_errors(train: RegressionProblem, hold: RegressionProblem, shape: PenaltySpec,
                 alpha: float, kappas: np.ndarray) -> np.ndarray:
    G, xty, n = train.gram, train.xty, float(train.n)
    v_n, w_n = shape.v / n, shape.w / n
    beta = np.zeros(train.p)
    out = np.empty(kappas.size)
    for i, kappa in enumerate(kappas):
        pen0 = (alpha * kappa) * v_n
        pen1 = ((1.0 - alpha) * kappa) * w_n
        _descend(G, xty, n, pen0, pen1, shape.anchor, beta, TOL, MAX_SWEEPS, KKT_TOL)
        r = hold.response - hold.design @ beta
        out[i] = r @ r / hold.n
    return out


def cross_validate(
    problem: RegressionProblem,
    config: MethodConfig | Sequence[MethodConfig],
    beta_tilde=None,
    k: int = 10,
    seed=0,
    *,
    folds: np.ndarray | None = None,
    clip_floor: float = CLIP_FLOOR,
) -> CvReport:
    """Select a family member and strength by k-fold validation MSE, then refit.

    Every config gets its own grid from ``kappa_max`` (computed on all of
    ``problem``) down by ``grid_ratio``; each fold walks the grid from the
    top with warm starts.  The minimum mean validation MSE wins, exact ties
    going to the larger strength.
    """
    configs = (config,) if isinstance(config, MethodConfig) else tuple(config)
    if not configs:
        raise ParameterError("no configurations to cross-validate")
    n, p = problem.n, problem.p
    if folds is None:
        folds = fold_assignments(n, k, seed)
    else:
        folds = np.asarray(folds)
        if folds.shape != (n,):
            raise ParameterError("fold assignment must label every row")
        k = int(folds.max()) + 1
        if k < 2:
            raise ParameterError(f"need at least 2 folds, got {k}")
    counts = np.bincount(folds, minlength=k)
    if np.any(counts == 0):
        raise ParameterError(f"fold(s) {np.flatnonzero(counts == 0).tolist()} have no rows")

    sizes = {c.grid_size for c in configs}
    if len(sizes) != 1:
        raise ParameterError("all configs must share one grid size")
    grid_size = sizes.pop()

    shapes = [build_penalty(c, beta_tilde, clip_floor, 1.0, p=p) for c in configs]
    kappas = np.empty((len(configs), grid_size))
    for i, (cfg, shape) in enumerate(zip(configs, shapes)):
        kmax = lambda_max(problem, shape.v, shape.w, shape.anchor, cfg.mixing)
        kappas[i] = cfg.grid(kmax)

    errors = np.empty((k, len(configs), grid_size))
    for f in range(k):
        test = folds == f
        train, hold = problem.subset(~test), problem.subset(test)
        for i, (cfg, shape) in enumerate(zip(configs, shapes)):
            errors[f, i] = _path_errors(train, hold, shape, cfg.mixing, kappas[i])

    mean = errors.mean(axis=0).ravel()
    se = (errors.std(axis=0, ddof=1) / np.sqrt(k)).ravel()
    flat_kappa = kappas.ravel()
    ties = np.flatnonzero(mean == mean.min())
    best = int(ties[np.argmax(flat_kappa[ties])])

    cfg = configs[best // grid_size]
    penalty = build_penalty(cfg, beta_tilde, clip_floor, float(flat_kappa[best]), p=p)
    result = fit(problem, penalty)
    return CvReport(configs, kappas, mean, se, folds, best, result, penalty)
