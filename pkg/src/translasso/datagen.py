"""Synthetic source/target regression problems.

Rows of the design are i.i.d. N(0, Sigma) with an AR(1) covariance
``Sigma_jk = rho ** |j - k|`` and the response is ``X @ beta_star + sigma * eps``.

Every random draw is taken from a stream keyed by a tuple of integers
(experiment seed, study, cell, sample size, replicate, role), so that
replicates and sweep cells never share random numbers no matter in which
order or process they are executed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import linalg

ROLES = {"source": 0, "target": 1, "test": 2}

DEFAULT_BETA = (3.0, 1.5, 0.0, 0.0, 2.0)


class ParameterError(ValueError):
    """Raised when an input violates a documented precondition."""


def stream(seed, *key: int) -> np.random.SeedSequence:
    """Return the seed sequence for the stream identified by ``key``.

    ``seed`` is either an integer experiment seed or an existing
    ``SeedSequence``; in the latter case ``key`` extends its spawn key.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(
            entropy=seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(int(k) for k in key)
        )
    if isinstance(seed, (tuple, list)):
        return np.random.SeedSequence(entropy=int(seed[0]),
                                      spawn_key=tuple(int(k) for k in seed[1:]) + tuple(int(k) for k in key))
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(stream(seed))


@dataclass(frozen=True, eq=False)
class TrueModel:
    """Ground truth of a linear Gaussian model."""

    beta_star: np.ndarray
    sigma: float = 1.0
    covariance_rho: float = 0.5

    def __post_init__(self):
        beta = np.asarray(self.beta_star, dtype=float).copy()
        if beta.ndim != 1 or beta.size == 0:
            raise ParameterError("beta_star must be a non-empty vector")
        beta.setflags(write=False)
        object.__setattr__(self, "beta_star", beta)
        if not self.sigma >= 0:
            raise ParameterError(f"sigma must be nonnegative, got {self.sigma}")
        if not 0.0 <= self.covariance_rho < 1.0:
            raise ParameterError(f"covariance_rho must lie in [0, 1), got {self.covariance_rho}")

    @property
    def p(self) -> int:
        return self.beta_star.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta_star)

    @cached_property
    def covariance(self) -> np.ndarray:
        return make_ar1_covariance(self.p, self.covariance_rho)

    @cached_property
    def cholesky(self) -> np.ndarray:
        return linalg.cholesky(self.covariance, lower=True)

    def with_beta(self, beta) -> "TrueModel":
        beta = np.asarray(beta, dtype=float)
        if beta.shape != self.beta_star.shape:
            raise ParameterError(
                f"override has length {beta.size}, expected {self.p}"
            )
        return replace(self, beta_star=beta)


def default_truth(p: int = 10, sigma: float = 1.0, rho: float = 0.5) -> TrueModel:
    """The standard preset ``beta* = [3, 1.5, 0, 0, 2, 0, ..., 0]``, zero padded to ``p``."""
    if p < len(DEFAULT_BETA):
        raise ParameterError(f"the default preset needs p >= {len(DEFAULT_BETA)}, got {p}")
    beta = np.zeros(p)
    beta[: len(DEFAULT_BETA)] = DEFAULT_BETA
    return TrueModel(beta, sigma=sigma, covariance_rho=rho)


def inconsistent_source_beta(truth: TrueModel, case: str) -> np.ndarray:
    """Source-side coefficients for the two misspecified-source cases.

    Case ``A`` makes coordinate 6 (1-based) active on the source only;
    case ``B`` removes coordinate 5 from the source support.
    """
    beta = truth.beta_star.copy()
    case = case.upper()
    if case == "A":
        beta[5] = 2.0
    elif case == "B":
        beta[4] = 0.0
    else:
        raise ParameterError(f"unknown inconsistent-source case {case!r}; expected 'A' or 'B'")
    return beta


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """A design matrix with its response and, for synthetic data, the truth."""

    design: np.ndarray
    response: np.ndarray
    truth: TrueModel | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.ascontiguousarray(self.design, dtype=float)
        y = np.ascontiguousarray(self.response, dtype=float)
        if X.ndim != 2:
            raise ParameterError("design must be a 2-d array")
        if y.shape != (X.shape[0],):
            raise ParameterError(
                f"response has shape {y.shape}, expected ({X.shape[0]},)"
            )
        if self.truth is not None and self.truth.p != X.shape[1]:
            raise ParameterError("truth dimension does not match the design")
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "response", y)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @cached_property
    def gram(self) -> np.ndarray:
        return self.design.T @ self.design

    @cached_property
    def xty(self) -> np.ndarray:
        return self.design.T @ self.response

    @cached_property
    def yty(self) -> float:
        return float(self.response @ self.response)

    def subset(self, rows) -> "RegressionProblem":
        return RegressionProblem(self.design[rows], self.response[rows], self.truth)


@dataclass(frozen=True, eq=False)
class SourceSummary:
    """Sufficient statistics ``X'X`` and ``X'y`` of a source sample of size ``m``.

    Used instead of a materialized :class:`RegressionProblem` when ``m`` is
    too large to hold in memory (``m = n**2`` reaches 2.5e7 rows).
    """

    gram: np.ndarray
    xty: np.ndarray
    m: int
    truth: TrueModel | None = field(default=None, compare=False)
    # Lower-triangular factor with gram = factor @ factor.T, when known.
    factor: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def p(self) -> int:
        return self.xty.size

    @classmethod
    def from_problem(cls, problem: RegressionProblem) -> "SourceSummary":
        return cls(problem.gram, problem.xty, problem.n, problem.truth)


@dataclass(frozen=True, eq=False)
class SourceTargetPair:
    source: RegressionProblem
    target: RegressionProblem
    truth: TrueModel


def make_ar1_covariance(p: int, rho: float) -> np.ndarray:
    """AR(1) covariance matrix with entries ``rho ** |j - k|``."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    if not 0.0 <= rho < 1.0:
        raise ParameterError(f"rho must lie in [0, 1), got {rho}")
    idx = np.arange(p)
    lag = np.abs(idx[:, None] - idx[None, :])
    return np.power(float(rho), lag)


def sample_problem(truth: TrueModel, n: int, seed) -> RegressionProblem:
    """Draw ``n`` rows from ``truth``.

    Identical ``(truth, n, seed)`` give bit-identical problems.  Features and
    noise are taken from one generator in a fixed order (features first).
    """
    if n < 0:
        raise ParameterError(f"n must be nonnegative, got {n}")
    rng = _rng(seed)
    L = truth.cholesky
    assert np.all(np.diag(L) > 0)
    Z = rng.standard_normal((n, truth.p))
    X = Z @ L.T
    eps = rng.standard_normal(n)
    y = X @ truth.beta_star + truth.sigma * eps
    return RegressionProblem(X, y, truth)


def sample_source_summary(truth: TrueModel, m: int, seed) -> SourceSummary:
    """Draw the sufficient statistics of an ``m``-row sample without the rows.

    ``X'X`` follows Wishart(m, Sigma), drawn by the Bartlett decomposition
    ``X'X = B B'`` with ``B = L A``, and given ``X'X`` the cross product
    ``X'eps`` is N(0, sigma^2 X'X), drawn as ``sigma * B z``.  The joint law
    of (X'X, X'y) equals that of a materialized sample, so OLS computed from
    the summary has exactly the finite-sample OLS distribution.
    """
    p = truth.p
    if m < p:
        raise ParameterError(f"summary sampling needs m >= p ({m} < {p})")
    rng = _rng(seed)
    A = np.zeros((p, p))
    dof = m - np.arange(p)
    A[np.diag_indices(p)] = np.sqrt(rng.chisquare(dof))
    rows, cols = np.tril_indices(p, -1)
    A[rows, cols] = rng.standard_normal(rows.size)
    B = truth.cholesky @ A
    gram = B @ B.T
    z = rng.standard_normal(p)
    xty = gram @ truth.beta_star + truth.sigma * (B @ z)
    return SourceSummary(gram, xty, m, truth, factor=B)


def make_source_target(
    truth: TrueModel,
    m: int,
    n: int,
    seed,
    source_beta_override=None,
) -> SourceTargetPair:
    """Draw a source sample of size ``m`` and a target sample of size ``n``.

    Source and target come from disjoint streams derived from ``seed``.  When
    ``source_beta_override`` is given only the source uses it.
    """
    if m < 0:
        raise ParameterError(f"m must be >= 0, got {m}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    source_truth = truth if source_beta_override is None else truth.with_beta(source_beta_override)
    source = sample_problem(source_truth, m, stream(seed, ROLES["source"]))
    target = sample_problem(truth, n, stream(seed, ROLES["target"]))
    return SourceTargetPair(source, target, truth)


PRESET_KEYS = ("p", "sigma", "rho", "beta")


def truth_from_config(values: dict[str, str]) -> TrueModel:
    """Build a :class:`TrueModel` from ``key = value`` strings.

    Recognised keys are ``p``, ``sigma``, ``rho`` and ``beta`` (comma
    separated, zero padded to ``p`` when shorter).
    """
    unknown = set(values) - set(PRESET_KEYS)
    if unknown:
        raise ParameterError(
            f"unknown truth keys {sorted(unknown)}; valid keys: {', '.join(PRESET_KEYS)}"
        )
    sigma = float(values.get("sigma", 1.0))
    rho = float(values.get("rho", 0.5))
    if "beta" in values:
        beta = [float(b) for b in str(values["beta"]).split(",") if b.strip()]
        p = int(values.get("p", len(beta)))
        if p < len(beta):
            raise ParameterError(f"p={p} is shorter than the given beta ({len(beta)} entries)")
        full = np.zeros(p)
        full[: len(beta)] = beta
        return TrueModel(full, sigma=sigma, covariance_rho=rho)
    return default_truth(int(values.get("p", 10)), sigma=sigma, rho=rho)


def load_truth(path) -> TrueModel:
    """Read a truth preset from a plain-text ``key = value`` file."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
    return truth_from_config(values)
