"""Penalty contours and the prior density implied by the anchored penalty."""

from __future__ import annotations

from itertools import product

import numpy as np

from ..datagen import ParameterError
from ..initial import clip_small
from .harness import SweepResult

CONTOUR_TILDE = (0.5, 2.0)
CONTOUR_STRENGTHS = (0.0, 0.5, 1.0)
CONTOUR_GAMMAS = ((0.0, 0.0), (1.0, 1.0))
CONTOUR_AXIS = tuple(np.round(np.linspace(-1.0, 3.0, 41), 10).tolist())

PRIOR_TILDES = (0.5, 2.0)
PRIOR_STRENGTHS = ((1.0, 0.0), (1.0, 0.5), (1.0, 1.0), (0.5, 1.0), (0.0, 1.0))
PRIOR_AXIS = tuple(np.round(np.linspace(-3.0, 5.0, 161), 10).tolist())


def penalty_weights(beta_tilde, gamma1: float, gamma2: float, clip: float = 1e-3):
    """``v = 1/|b~|**gamma1`` and ``w = |b~|**gamma2`` on clipped magnitudes."""
    mag = clip_small(beta_tilde, clip)
    return 1.0 / mag ** gamma1, mag ** gamma2


def contour_value(beta, lam: float, eta: float, gamma1: float, gamma2: float, beta_tilde,
                  clip: float = 1e-3) -> float:
    """Penalty ``lam*sum(v|b|) + eta*sum(w|b - b~|)`` at ``beta``.

    ``gamma1 = gamma2 = 0`` gives the plain Transfer Lasso penalty and
    ``eta = 0`` the (adaptive) Lasso one.
    """
    beta = np.asarray(beta, dtype=float)
    beta_tilde = np.asarray(beta_tilde, dtype=float)
    if beta.shape != beta_tilde.shape:
        raise ParameterError("beta and beta_tilde must have equal shape")
    v, w = penalty_weights(beta_tilde, gamma1, gamma2, clip)
    return float(lam * np.sum(v * np.abs(beta)) + eta * np.sum(w * np.abs(beta - beta_tilde)))


def contour_family(eta: float, gamma1: float) -> str:
    if eta == 0:
        return "lasso" if gamma1 == 0 else "adaptive_lasso"
    return "transfer_lasso" if gamma1 == 0 else "adaptive_transfer_lasso"


def log_normalizer(lam: float, eta: float, v: float, w: float, beta_tilde: float) -> float:
    """``log Z`` for the density proportional to ``exp(-a|b| - c|b - t|)``.

    With ``a = lam*v``, ``c = eta*w``, ``t = |b~|`` and ``m = min(a, c)``,
    ``Z e^{mt} = (e^{-(c-m)t} + e^{-(a-m)t})/(a+c) + (1 - e^{-|c-a|t})/|c-a|``.
    The last term tends to ``t`` as ``a -> c``, so equal strengths need no
    special case.
    """
    a = float(lam) * float(v)
    c = float(eta) * float(w)
    t = abs(float(beta_tilde))
    if a < 0 or c < 0:
        raise ParameterError("strengths and weights must be nonnegative")
    if a + c == 0:
        raise ParameterError("improper prior: lam*v and eta*w are both zero")
    m = min(a, c)
    y = abs(c - a) * t
    middle = t if y == 0 else t * -np.expm1(-y) / y
    scaled = (np.exp(-(c - m) * t) + np.exp(-(a - m) * t)) / (a + c) + middle
    return float(np.log(scaled) - m * t)


def prior_density(b, lam: float, eta: float, v_j: float, w_j: float, beta_tilde_j: float):
    """Normalized density ``exp(-lam v|b| - eta w|b - b~|) / Z``."""
    log_z = log_normalizer(lam, eta, v_j, w_j, beta_tilde_j)
    b = np.asarray(b, dtype=float)
    out = np.exp(-lam * v_j * np.abs(b) - eta * w_j * np.abs(b - beta_tilde_j) - log_z)
    return float(out) if out.ndim == 0 else out


def run_contours(clip: float = 1e-3) -> SweepResult:
    """Penalty values on a square grid of 2-vectors with ``b~ = (0.5, 2)``."""
    out = SweepResult("contours", ("gamma1", "gamma2", "lambda", "eta", "beta1", "beta2"))
    tilde = np.array(CONTOUR_TILDE)
    for (g1, g2), lam, eta in product(CONTOUR_GAMMAS, CONTOUR_STRENGTHS, CONTOUR_STRENGTHS):
        if lam == 0 and eta == 0:
            continue
        family = contour_family(eta, g1)
        coords = {"gamma1": g1, "gamma2": g2, "lambda": lam, "eta": eta}
        for b1, b2 in product(CONTOUR_AXIS, CONTOUR_AXIS):
            value = contour_value((b1, b2), lam, eta, g1, g2, tilde, clip)
            out.add(family, {**coords, "beta1": b1, "beta2": b2}, "penalty", value, np.nan, 1)
    return out


def run_priors() -> SweepResult:
    """Prior densities on a grid of ``b`` for non-adaptive and adaptive weights."""
    out = SweepResult("priors", ("beta_tilde", "lambda", "eta", "v", "w", "b"))
    for t, (lam, eta), adaptive in product(PRIOR_TILDES, PRIOR_STRENGTHS, (False, True)):
        v, w = (1.0 / t, t) if adaptive else (1.0, 1.0)
        family = contour_family(eta, 1.0 if adaptive else 0.0)
        dens = prior_density(np.array(PRIOR_AXIS), lam, eta, v, w, t)
        coords = {"beta_tilde": t, "lambda": lam, "eta": eta, "v": v, "w": w}
        for b, d in zip(PRIOR_AXIS, dens):
            out.add(family, {**coords, "b": b}, "density", float(d), np.nan, 1)
    return out
