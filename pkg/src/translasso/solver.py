"""Coordinate descent for the anchored weighted-L1 least-squares problem.

The objective is::

    (1/n) ||y - X b||^2 + (lam/n) sum_j v_j |b_j| + (eta/n) sum_j w_j |b_j - anchor_j|

which covers the Lasso (``eta = 0, v = 1``), the Adaptive Lasso
(``eta = 0``, ``v_j = 1/|b~_j|^gamma``), the Transfer Lasso (``v = w = 1``)
and the Adaptive Transfer Lasso (``v_j = 1/|b~_j|^g1``, ``w_j = |b~_j|^g2``).

Each coordinate update is an exact scalar minimization with two kinks, at 0
and at the anchor.  Kink solutions are returned bit-exactly, so that
``beta_hat[j] == anchor[j]`` is a meaningful test downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .datagen import ParameterError, RegressionProblem

TOL = 1e-10
MAX_SWEEPS = 100_000
KKT_TOL = 1e-8


@njit(cache=True)
def _prox(a, c, pw, qw, t):
    # argmin_b a b^2 - 2 c b + pw |b| + qw |b - t|,  a > 0
    if t == 0.0:
        lam = pw + qw
        if 2.0 * c > lam:
            return (2.0 * c - lam) / (2.0 * a)
        if 2.0 * c < -lam:
            return (2.0 * c + lam) / (2.0 * a)
        return 0.0
    s = 1.0 if t > 0.0 else -1.0
    # 0 is optimal iff 2c + qw*s lies in [-pw, pw]; checked first so ties go to 0
    if abs(2.0 * c + qw * s) <= pw:
        return 0.0
    if abs(2.0 * a * t - 2.0 * c + pw * s) <= qw:
        return t
    lo = min(0.0, t)
    hi = max(0.0, t)
    b = (2.0 * c + pw + qw) / (2.0 * a)
    if b < lo:
        return b
    b = (2.0 * c - pw - qw) / (2.0 * a)
    if b > hi:
        return b
    b = (2.0 * c - pw * s + qw * s) / (2.0 * a)
    return min(max(b, lo), hi)


@njit(cache=True)
def _sweep(G, xty, n, pen0, pen1, anchor, beta):
    p = beta.size
    q = xty - G @ beta
    maxd = 0.0
    for j in range(p):
        old = beta[j]
        a = G[j, j] / n
        if a <= 0.0:
            # zero column: only the penalty depends on b_j
            new = 0.0 if pen0[j] >= pen1[j] else anchor[j]
        else:
            c = (q[j] + G[j, j] * old) / n
            new = _prox(a, c, pen0[j], pen1[j], anchor[j])
        d = new - old
        if d != 0.0:
            beta[j] = new
            for k in range(p):
                q[k] -= G[k, j] * d
            if abs(d) > maxd:
                maxd = abs(d)
    return maxd


@njit(cache=True)
def _kkt(q, n, pen0, pen1, anchor, beta):
    # q = X'(y - X beta)
    worst = 0.0
    for j in range(beta.size):
        g = -2.0 * q[j] / n
        b = beta[j]
        if b == 0.0:
            lo = -pen0[j]
            hi = pen0[j]
        else:
            lo = hi = pen0[j] * (1.0 if b > 0.0 else -1.0)
        if b == anchor[j]:
            lo -= pen1[j]
            hi += pen1[j]
        else:
            s = pen1[j] * (1.0 if b > anchor[j] else -1.0)
            lo += s
            hi += s
        # 0 in g + [lo, hi]  <=>  -g in [lo, hi]
        v = max(lo + g, -g - hi, 0.0)
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def _descend(G, xty, n, pen0, pen1, anchor, beta, tol, max_sweeps, kkt_tol):
    for it in range(1, max_sweeps + 1):
        maxd = _sweep(G, xty, n, pen0, pen1, anchor, beta)
        if maxd < tol * (1.0 + np.max(np.abs(beta))):
            if _kkt(xty - G @ beta, n, pen0, pen1, anchor, beta) <= kkt_tol:
                return it, True
    return max_sweeps, False


def prox_two_kink(a: float, c: float, p_w: float, q_w: float, t: float) -> float:
    """Exact minimizer of ``a b^2 - 2 c b + p_w |b| + q_w |b - t|``.

    Returns exactly ``0.0`` or ``t`` when the minimizer is a kink.  When both
    kinks are optimal (possible only if they coincide) ``0.0`` is returned.
    """
    if not a > 0:
        raise ParameterError(f"quadratic coefficient must be positive, got {a}")
    if p_w < 0 or q_w < 0:
        raise ParameterError("kink weights must be nonnegative")
    return float(_prox(float(a), float(c), float(p_w), float(q_w), float(t)))


class PenaltySpec:
    """Global strengths, per-coordinate weights and the anchor of one fit.

    Two specs compare equal only if every field is bit-identical.
    """

    __slots__ = ("lam", "eta", "v", "w", "anchor")

    def __init__(self, lam, eta, v, w, anchor):
        v = np.array(v, dtype=float)
        w = np.array(w, dtype=float)
        anchor = np.array(anchor, dtype=float)
        if v.ndim != 1 or v.shape != w.shape or v.shape != anchor.shape:
            raise ParameterError(
                f"v, w and anchor must be vectors of one length, got {v.shape}, {w.shape}, {anchor.shape}"
            )
        if not (lam >= 0 and eta >= 0):
            raise ParameterError(f"strengths must be nonnegative, got lam={lam}, eta={eta}")
        if np.any(~(v >= 0)) or np.any(~(w >= 0)):
            raise ParameterError("weights must be nonnegative")
        if not np.all(np.isfinite(anchor)):
            raise ParameterError("anchor must be finite")
        for arr in (v, w, anchor):
            arr.setflags(write=False)
        object.__setattr__(self, "lam", float(lam))
        object.__setattr__(self, "eta", float(eta))
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "anchor", anchor)

    def __setattr__(self, name, value):
        raise AttributeError("PenaltySpec is immutable")

    @classmethod
    def lasso(cls, lam: float, p: int) -> "PenaltySpec":
        return cls(lam, 0.0, np.ones(p), np.ones(p), np.zeros(p))

    @property
    def p(self) -> int:
        return self.v.size

    def scaled(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate kink weights ``lam v / n`` and ``eta w / n``."""
        return self.lam * self.v / n, self.eta * self.w / n

    def value(self, beta) -> float:
        """Unscaled penalty ``lam sum v|b| + eta sum w|b - anchor|``."""
        beta = np.asarray(beta, dtype=float)
        return float(self.lam * np.sum(self.v * np.abs(beta))
                     + self.eta * np.sum(self.w * np.abs(beta - self.anchor)))

    def __eq__(self, other):
        if not isinstance(other, PenaltySpec):
            return NotImplemented
        return (
            self.lam == other.lam
            and self.eta == other.eta
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.w, other.w)
            and np.array_equal(self.anchor, other.anchor)
        )

    __hash__ = None

    def __repr__(self):
        return (f"PenaltySpec(lam={self.lam!r}, eta={self.eta!r}, v={self.v!r}, "
                f"w={self.w!r}, anchor={self.anchor!r})")


@dataclass(frozen=True, eq=False)
class FitResult:
    beta_hat: np.ndarray
    iterations: int
    converged: bool
    kkt_residual: float
    objective: float
    anchor: np.ndarray
    objective_trace: tuple[float, ...] | None = None

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.beta_hat != 0.0)

    @property
    def anchored_set(self) -> np.ndarray:
        return np.flatnonzero(self.beta_hat == self.anchor)

    @property
    def fully_anchored(self) -> bool:
        """True when every coefficient sits on a kink (0 or the anchor)."""
        return bool(np.all((self.beta_hat == 0.0) | (self.beta_hat == self.anchor)))


def objective(problem: RegressionProblem, penalty: PenaltySpec, beta) -> float:
    beta = np.asarray(beta, dtype=float)
    r = problem.response - problem.design @ beta
    return float(r @ r / problem.n + penalty.value(beta) / problem.n)


def _gram_objective(G, xty, yty, n, penalty, beta):
    sse = yty - 2.0 * beta @ xty + beta @ G @ beta
    return float((sse + penalty.value(beta)) / n)


def kkt_certificate(problem: RegressionProblem, penalty: PenaltySpec, beta_hat) -> float:
    """Largest distance of ``-grad_j`` from the subdifferential of the penalty.

    Zero means ``beta_hat`` satisfies the optimality conditions exactly.  The
    gradient is recomputed from the design, independently of the solver's
    running cross products.
    """
    beta = np.asarray(beta_hat, dtype=float)
    if beta.shape != (problem.p,) or penalty.p != problem.p:
        raise ParameterError("beta_hat, penalty and problem dimensions disagree")
    q = problem.design.T @ (problem.response - problem.design @ beta)
    pen0, pen1 = penalty.scaled(problem.n)
    return float(_kkt(q, float(problem.n), pen0, pen1, penalty.anchor, beta))


def fit_gram(
    gram: np.ndarray,
    xty: np.ndarray,
    n: int,
    penalty: PenaltySpec,
    *,
    tol: float = TOL,
    max_iter: int = MAX_SWEEPS,
    warm_start=None,
    yty: float | None = None,
    kkt_tol: float = KKT_TOL,
) -> FitResult:
    """Coordinate descent on precomputed ``X'X`` and ``X'y``."""
    if penalty.p != xty.size:
        raise ParameterError(f"penalty has dimension {penalty.p}, problem has {xty.size}")
    if n < 1:
        raise ParameterError("need at least one observation")
    beta = np.zeros(xty.size) if warm_start is None else np.array(warm_start, dtype=float)
    pen0, pen1 = penalty.scaled(n)
    iters, converged = _descend(gram, xty, float(n), pen0, pen1, penalty.anchor, beta,
                                float(tol), int(max_iter), float(kkt_tol))
    kkt = float(_kkt(xty - gram @ beta, float(n), pen0, pen1, penalty.anchor, beta))
    obj = np.nan if yty is None else _gram_objective(gram, xty, yty, n, penalty, beta)
    return FitResult(beta, int(iters), bool(converged), kkt, obj, penalty.anchor)


def fit(
    problem: RegressionProblem,
    penalty: PenaltySpec,
    *,
    tol: float = TOL,
    max_iter: int = MAX_SWEEPS,
    warm_start=None,
    kkt_tol: float = KKT_TOL,
    record_objective: bool = False,
) -> FitResult:
    """Minimize the anchored weighted-L1 objective by cyclic coordinate descent.

    Sweeps stop once the largest coordinate change in a sweep falls below
    ``tol * (1 + max|beta|)`` and the KKT residual is below ``kkt_tol``;
    otherwise the result is returned with ``converged=False`` after
    ``max_iter`` sweeps.

    With ``record_objective`` the objective is evaluated after every sweep
    and a ``RuntimeError`` is raised if it ever increases beyond rounding.
    """
    if penalty.p != problem.p:
        raise ParameterError(f"penalty has dimension {penalty.p}, problem has {problem.p}")
    if problem.n < 1:
        raise ParameterError("need at least one observation")
    if not record_objective:
        res = fit_gram(problem.gram, problem.xty, problem.n, penalty, tol=tol,
                       max_iter=max_iter, warm_start=warm_start, yty=problem.yty,
                       kkt_tol=kkt_tol)
        kkt = kkt_certificate(problem, penalty, res.beta_hat)
        return FitResult(res.beta_hat, res.iterations, res.converged and kkt <= kkt_tol,
                         kkt, res.objective, penalty.anchor)

    G, xty, n = problem.gram, problem.xty, float(problem.n)
    beta = np.zeros(problem.p) if warm_start is None else np.array(warm_start, dtype=float)
    pen0, pen1 = penalty.scaled(problem.n)
    trace = [objective(problem, penalty, beta)]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        maxd = _sweep(G, xty, n, pen0, pen1, penalty.anchor, beta)
        trace.append(objective(problem, penalty, beta))
        if trace[-1] > trace[-2] + 1e-12 * (1.0 + abs(trace[-2])):
            raise RuntimeError(f"objective increased at sweep {it}: {trace[-2]} -> {trace[-1]}")
        if maxd < tol * (1.0 + np.max(np.abs(beta))):
            if kkt_certificate(problem, penalty, beta) <= kkt_tol:
                converged = True
                break
    kkt = kkt_certificate(problem, penalty, beta)
    return FitResult(beta, it, converged, kkt, trace[-1], penalty.anchor, tuple(trace))


def is_saturated(penalty: PenaltySpec, beta) -> bool:
    """True when ``beta`` stays optimal for every larger multiple of the penalty.

    Each coordinate must sit at a kink whose subdifferential contains zero
    (0 with ``lam v_j >= eta w_j``, the anchor with ``eta w_j >= lam v_j``),
    or, where ``lam v_j == eta w_j`` and the penalty is flat between the
    kinks, anywhere on that segment.  When no coordinate has equal weights
    this is the same as every coefficient being 0 or the anchor.
    """
    beta = np.asarray(beta, dtype=float)
    P = penalty.lam * penalty.v
    Q = penalty.eta * penalty.w
    t = penalty.anchor
    at_zero = (beta == 0.0) & ((P >= Q) | (t == 0.0))
    at_anchor = (beta == t) & (Q >= P)
    lo = np.minimum(0.0, t)
    hi = np.maximum(0.0, t)
    on_flat = (P == Q) & (beta >= lo) & (beta <= hi)
    return bool(np.all(at_zero | at_anchor | on_flat))


def _saturated_fit(gram, xty, n, shape_v, shape_w, anchor, alpha, kappa, warm):
    pen = PenaltySpec(alpha * kappa, (1.0 - alpha) * kappa, shape_v, shape_w, anchor)
    res = fit_gram(gram, xty, n, pen, warm_start=warm)
    return res.converged and is_saturated(pen, res.beta_hat), res.beta_hat


def lambda_max(problem, v, w, anchor, alpha: float, *, max_steps: int = 200) -> float:
    """Smallest total strength ``kappa = lam + eta``, on a halving/doubling
    lattice, beyond which the fit no longer changes.

    ``lam = alpha * kappa`` and ``eta = (1 - alpha) * kappa``.  The search
    starts from ``2 max_j(|x_j'y| + |x_j'(y - X anchor)|) / max(alpha, 1 - alpha)``,
    then halves while the certified fit stays saturated (see
    :func:`is_saturated`), or doubles until it is.  Away from ties
    ``lam v_j == eta w_j`` a saturated fit has every coefficient at 0 or the
    anchor.  ``problem`` needs ``gram``, ``xty`` and ``n`` attributes.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    G, xty, n = problem.gram, problem.xty, problem.n
    resid_corr = xty - G @ anchor
    kappa = 2.0 * float(np.max(np.abs(xty) + np.abs(resid_corr))) / max(alpha, 1.0 - alpha)
    if not kappa > 0:
        kappa = 1.0
    ok, warm = _saturated_fit(G, xty, n, v, w, anchor, alpha, kappa, None)
    if ok:
        for _ in range(max_steps):
            ok_half, beta = _saturated_fit(G, xty, n, v, w, anchor, alpha, kappa / 2.0, warm)
            if not ok_half:
                break
            kappa /= 2.0
            warm = beta
        return kappa
    for _ in range(max_steps):
        kappa *= 2.0
        ok, warm = _saturated_fit(G, xty, n, v, w, anchor, alpha, kappa, warm)
        if ok:
            return kappa
    raise RuntimeError("no saturating strength found")
