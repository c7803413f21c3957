"""The simulation studies: convergence rates, phase diagrams and CV comparisons."""

from __future__ import annotations

from functools import partial
from itertools import product

import numpy as np

from ..datagen import (
    ParameterError,
    TrueModel,
    inconsistent_source_beta,
    sample_problem,
    sample_source_summary,
)
from ..initial import InitialEstimatorSpec, estimate_initial, ols
from ..metrics import evaluate, invariant_ratio, loglog_slope, mean_and_stderr, selection_scores
from ..selection import MethodConfig, build_penalty, cross_validate, schedule_value, search_space
from ..solver import PenaltySpec, fit
from .config import ExperimentConfig, Schedule
from .harness import SweepResult, delta_key, run_tasks, task_stream

RECORD_METRICS = ("l2_error", "rmse", "f1", "sensitivity", "specificity", "ppv",
                  "n_active", "active_ratio", "invariant_ratio")


def scheduled_penalty(schedule: Schedule, n: int, beta_tilde, clip: float) -> PenaltySpec:
    """Penalty with strengths ``n**delta`` for one scheduled method."""
    cfg = MethodConfig(schedule.family, gamma=schedule.gamma, gamma1=schedule.gamma1,
                       gamma2=schedule.gamma2)
    shape = build_penalty(cfg, beta_tilde, clip, 1.0)
    lam = schedule_value(n, schedule.delta_lambda)
    eta = 0.0 if schedule.delta_eta is None else schedule_value(n, schedule.delta_eta)
    if eta and schedule.family in ("lasso", "adaptive_lasso"):
        raise ParameterError(f"{schedule.family} takes no anchor strength")
    return PenaltySpec(lam, eta, shape.v, shape.w, shape.anchor)


def _slope_with_se(ns, means, ses) -> tuple[float, float]:
    x = np.log(np.asarray(ns, dtype=float))
    xc = x - x.mean()
    coef = xc / (xc @ xc)
    slope = loglog_slope(zip(ns, means))
    se = float(np.sqrt(np.sum(coef ** 2 * np.asarray(ses, dtype=float) ** 2)))
    return slope, se


# -- convergence ------------------------------------------------------------

def _convergence_task(config: ExperimentConfig, task):
    n, r = task
    truth = config.truth
    m = config.source_size(n)
    src = sample_source_summary(truth, m, task_stream(config.seed, "convergence", (0,), n, r, "source"))
    tgt = sample_problem(truth, n, task_stream(config.seed, "convergence", (0,), n, r, "target"))
    beta_tilde = ols(src)
    out = []
    for sched in config.schedules:
        res = fit(tgt, scheduled_penalty(sched, n, beta_tilde, config.clip))
        err = float(np.linalg.norm(res.beta_hat - truth.beta_star))
        out.append((res.converged, err))
    return out


def run_convergence(config: ExperimentConfig, jobs: int | None = None) -> SweepResult:
    """Estimation error against n for each scheduled method and region.

    Emits per-n rows (``log_l2_error``, ``l2_error``) and one ``slope`` row per
    region, fitted over ``n >= slope_min_n``.
    """
    if config.m_rule != "square":
        raise ParameterError("the convergence study uses m = n**2")
    assert all(config.source_size(n) >= config.truth.p for n in config.n_grid)
    tasks = list(product(config.n_grid, range(config.replicates)))
    results = run_tasks(partial(_convergence_task, config), tasks, jobs)

    out = SweepResult("convergence", ("region", "n"), replicates=config.replicates)
    for s_idx, sched in enumerate(config.schedules):
        ns, means, ses = [], [], []
        for n in config.n_grid:
            vals = [res[s_idx] for (tn, _), res in zip(tasks, results) if tn == n]
            ok = [e for conv, e in vals if conv]
            bad = len(vals) - len(ok)
            logm, logse = mean_and_stderr(np.log(ok)) if ok else (np.nan, np.nan)
            em, ese = mean_and_stderr(ok) if ok else (np.nan, np.nan)
            coords = {"region": sched.region, "n": n}
            out.add(sched.family, coords, "log_l2_error", logm, logse, len(ok), bad)
            out.add(sched.family, coords, "l2_error", em, ese, len(ok), bad)
            if n >= config.slope_min_n:
                ns.append(n)
                means.append(logm)
                ses.append(logse if np.isfinite(logse) else 0.0)
        if len(ns) >= 2:
            slope, se = _slope_with_se(ns, means, ses)
            out.add(sched.family, {"region": sched.region, "n": None}, "slope", slope, se,
                    config.replicates)
    return out


# -- phase diagram ----------------------------------------------------------

def phase_cells(config: ExperimentConfig) -> list[tuple[float, float]]:
    if config.cells is not None:
        return [tuple(map(float, c)) for c in config.cells]
    return [(a, b) for a, b in product(config.deltas, config.deltas)]


def _phase_schedule(family: str, dl: float, de: float) -> Schedule:
    if family == "transfer_lasso":
        return Schedule(family, "", dl, de)
    if family == "adaptive_transfer_lasso":
        return Schedule(family, "", dl, de, gamma1=1.0, gamma2=1.0)
    raise ParameterError(f"phase diagrams cover the transfer families only, not {family!r}")


def _phase_task(config: ExperimentConfig, task):
    (dl, de), n, r = task
    truth = config.truth
    cell = (delta_key(dl), delta_key(de))
    src = sample_source_summary(truth, config.source_size(n),
                                task_stream(config.seed, "phase_diagram", cell, n, r, "source"))
    tgt = sample_problem(truth, n, task_stream(config.seed, "phase_diagram", cell, n, r, "target"))
    beta_tilde = ols(src)
    out = []
    for family in config.methods:
        res = fit(tgt, scheduled_penalty(_phase_schedule(family, dl, de), n, beta_tilde, config.clip))
        err = float(np.linalg.norm(res.beta_hat - truth.beta_star))
        active = selection_scores(res.beta_hat, truth.beta_star).active_ratio
        inv = invariant_ratio(res.beta_hat, beta_tilde, truth.beta_star)
        out.append((res.converged, err, active, np.nan if inv is None else inv))
    return out


def run_phase_diagram(config: ExperimentConfig, jobs: int | None = None) -> SweepResult:
    """Two-point convergence slope and selection ratios over a grid of exponents.

    For every ``(delta_lambda, delta_eta)`` cell: the slope of mean log error
    between the two ``phase_n`` sizes, and the active and invariant selection
    ratios at the larger size.
    """
    n_lo, n_hi = config.phase_n
    cells = phase_cells(config)
    tasks = [(c, n, r) for c in cells for n in (n_lo, n_hi) for r in range(config.replicates)]
    results = run_tasks(partial(_phase_task, config), tasks, jobs)

    by_key: dict = {}
    for (c, n, _), res in zip(tasks, results):
        by_key.setdefault((c, n), []).append(res)

    out = SweepResult("phase_diagram", ("delta_lambda", "delta_eta"), replicates=config.replicates)
    for c in cells:
        coords = {"delta_lambda": c[0], "delta_eta": c[1]}
        for k, family in enumerate(config.methods):
            stats = {}
            for n in (n_lo, n_hi):
                rows = [res[k] for res in by_key[(c, n)]]
                ok = [row for row in rows if row[0]]
                stats[n] = (ok, len(rows) - len(ok))
                logm, logse = mean_and_stderr(np.log([row[1] for row in ok])) if ok else (np.nan, np.nan)
                stats[n] += (logm, logse)
                out.add(family, coords, f"log_l2_error_n{n}", logm, logse, len(ok), stats[n][1])
            lo, hi = stats[n_lo], stats[n_hi]
            scale = np.log(n_hi / n_lo)
            slope = (hi[2] - lo[2]) / scale
            slope_se = float(np.hypot(np.nan_to_num(lo[3]), np.nan_to_num(hi[3]))) / scale
            out.add(family, coords, "slope", slope, slope_se, min(len(lo[0]), len(hi[0])),
                    lo[1] + hi[1])
            ok_hi = hi[0]
            am, ase = mean_and_stderr([row[2] for row in ok_hi]) if ok_hi else (np.nan, np.nan)
            im, ise = mean_and_stderr([row[3] for row in ok_hi]) if ok_hi else (np.nan, np.nan)
            out.add(family, coords, "active_ratio", am, ase, len(ok_hi), hi[1])
            out.add(family, coords, "invariant_ratio", im, ise, len(ok_hi), hi[1])
    return out


# -- CV comparison ----------------------------------------------------------

def _padded_truth(base: TrueModel, p: int, sigma: float) -> TrueModel:
    beta = base.beta_star
    if p < beta.size and np.any(beta[p:] != 0):
        raise ParameterError(f"p={p} would drop nonzero coefficients of the truth")
    full = np.zeros(p)
    k = min(p, beta.size)
    full[:k] = beta[:k]
    return TrueModel(full, sigma=sigma, covariance_rho=base.covariance_rho)


def _comparison_task(config: ExperimentConfig, task):
    sigma, p, n, r = task
    study = config.study
    truth = _padded_truth(config.truth, p, sigma)
    source_truth = truth
    if study == "inconsistent_source":
        source_truth = truth.with_beta(inconsistent_source_beta(truth, config.case))
    cell = (int(round(sigma * 1000)), p)
    # both studies draw from the comparison streams, so a misspecified source
    # differs from its baseline only through the coefficient override
    key = partial(task_stream, config.seed, "comparison", cell, n, r)
    m = config.source_size(n)
    src = sample_problem(source_truth, m, key("source"))
    tgt = sample_problem(truth, n, key("target"))
    test = sample_problem(truth, config.test_size, key("test"))
    spec = InitialEstimatorSpec(config.initial, folds=min(config.folds, m), seed=key("source"),
                                clip=config.clip)
    beta_tilde = estimate_initial(src, spec)
    out = []
    for family in config.methods:
        configs = search_space(family, grid_size=config.grid_size, grid_ratio=config.grid_ratio)
        report = cross_validate(tgt, configs, None if family == "lasso" else beta_tilde,
                                k=min(config.folds, n), seed=key("target"), clip_floor=config.clip)
        rec = evaluate(report.fit.beta_hat, beta_tilde, truth.beta_star, test)
        out.append((report.fit.converged, rec.as_dict()))
    return out


def run_comparison(config: ExperimentConfig, jobs: int | None = None) -> SweepResult:
    """Cross-validated comparison of the methods over (sigma, p, n) cells."""
    cells = list(product(config.sigmas, config.ps, config.n_grid))
    tasks = [(s, p, n, r) for (s, p, n) in cells for r in range(config.replicates)]
    results = run_tasks(partial(_comparison_task, config), tasks, jobs)

    coords_names = ("sigma", "p", "n") if config.study == "comparison" else ("case", "sigma", "p", "n")
    out = SweepResult(config.study, coords_names, replicates=config.replicates)
    grouped: dict = {}
    for (s, p, n, _), res in zip(tasks, results):
        grouped.setdefault((s, p, n), []).append(res)
    for (s, p, n) in cells:
        coords = {"sigma": s, "p": p, "n": n}
        if config.study == "inconsistent_source":
            coords = {"case": config.case.upper(), **coords}
        for k, family in enumerate(config.methods):
            rows = [res[k] for res in grouped[(s, p, n)]]
            ok = [rec for conv, rec in rows if conv]
            bad = len(rows) - len(ok)
            for metric in RECORD_METRICS:
                vals = [rec[metric] for rec in ok]
                mean, se = mean_and_stderr(vals) if vals else (np.nan, np.nan)
                out.add(family, coords, metric, mean, se, len(ok), bad)
    return out


def run_inconsistent_source(config: ExperimentConfig, jobs: int | None = None) -> SweepResult:
    """The comparison pipeline with a source drawn from a misspecified truth."""
    if config.study != "inconsistent_source":
        raise ParameterError("config.study must be 'inconsistent_source'")
    if config.case.upper() not in ("A", "B"):
        raise ParameterError(f"case must be A or B, got {config.case!r}")
    return run_comparison(config, jobs)
