"""Acceptance criteria 1-9.

Each test records a one-line PASS/FAIL verdict (shown in the terminal summary
and printed with ``-s``) and then asserts it.  Thresholds are the stated ones.
"""

import time

import numpy as np
import pytest
from scipy import integrate

from conftest import ACCEPTANCE, FIT_LOG
from oracles import enumerate_anchored, two_stage_grid_argmin
from translasso.datagen import RegressionProblem, default_truth, sample_problem
from translasso.experiments import default_config, run_study
from translasso.experiments.analysis import prior_density
from translasso.experiments.harness import task_stream
from translasso.initial import InitialEstimatorSpec, estimate_initial
from translasso.metrics import selection_scores
from translasso.selection import MethodConfig, build_penalty, schedule_value
from translasso.solver import KKT_TOL, PenaltySpec, fit, prox_two_kink

SEED = 0


def verdict(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE[k] = line
    print(line)
    assert ok, line


def test_criterion_1_prox_oracle():
    rng = np.random.default_rng(SEED)
    worst_x = worst_gap = 0.0
    start = time.perf_counter()
    for _ in range(1000):
        a, c = rng.uniform(1, 4), rng.uniform(-4, 4)
        pw, qw, t = rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(-5, 5)
        b = prox_two_kink(a, c, pw, qw, t)
        g, fg = two_stage_grid_argmin(a, c, pw, qw, t)
        fb = a * b * b - 2 * c * b + pw * abs(b) + qw * abs(b - t)
        worst_x = max(worst_x, abs(b - g))
        worst_gap = max(worst_gap, fb - fg)
    elapsed = time.perf_counter() - start
    ok = worst_x <= 1e-5 and worst_gap <= 1e-10 and elapsed < 10
    verdict(1, ok, f"1000 instances, max |b - grid| = {worst_x:.2e}, max objective gap = "
                   f"{worst_gap:.2e}, {elapsed:.1f} s")


def test_criterion_2_kkt_certification():
    # a battery across all families on top of every fit made earlier in the run
    truth = default_truth()
    for r in range(10):
        prob = sample_problem(truth, 50 + 20 * r, task_stream(SEED, "convergence", (99,), 0, r, "target"))
        tilde = truth.beta_star + 0.1 * np.random.default_rng(r).standard_normal(10)
        for cfg in (MethodConfig("lasso"), MethodConfig("adaptive_lasso"),
                    MethodConfig("transfer_lasso", alpha=0.5),
                    MethodConfig("adaptive_transfer_lasso", alpha=0.25)):
            for kappa in (0.1, 3.0, 50.0):
                fit(prob, build_penalty(cfg, tilde, 1e-3, kappa, p=10))
    converged = [k for ok, k in FIT_LOG if ok]
    worst = max(converged)
    ok = worst <= KKT_TOL
    verdict(2, ok, f"{len(converged)} converged fits, max kkt_residual = {worst:.2e}")


def test_criterion_3_reductions():
    tilde = np.array([2.0, -0.3, 0.0, 1e-4, 0.8])
    atl = build_penalty(MethodConfig("adaptive_transfer_lasso", gamma1=0, gamma2=0, alpha=0.25),
                        tilde, kappa=7.0)
    tl = build_penalty(MethodConfig("transfer_lasso", alpha=0.25), tilde, kappa=7.0)
    same_spec = atl == tl
    worst_nest = worst_path = 0.0
    for s in range(20):
        rng = np.random.default_rng(1000 + s)
        n, p = 30, 5
        X = rng.standard_normal((n, p))
        y = X @ (rng.standard_normal(p) * (rng.random(p) < 0.6)) + rng.standard_normal(n)
        prob = RegressionProblem(X, y)
        a = fit(prob, atl if s == 0 else build_penalty(
            MethodConfig("adaptive_transfer_lasso", gamma1=0, gamma2=0, alpha=0.5), y[:p], kappa=5.0))
        b = fit(prob, tl if s == 0 else build_penalty(MethodConfig("transfer_lasso", alpha=0.5), y[:p],
                                                       kappa=5.0))
        worst_nest = max(worst_nest, np.max(np.abs(a.beta_hat - b.beta_hat)))
        kmax = 2 * np.max(np.abs(prob.xty))
        warm = None
        for kappa in kmax * np.logspace(0, -3, 8):
            pen = PenaltySpec.lasso(kappa, p)
            res = fit(prob, pen, warm_start=warm)
            warm = res.beta_hat
            ref = enumerate_anchored(prob, pen)
            worst_path = max(worst_path, np.max(np.abs(res.beta_hat - ref)))
    ok = same_spec and worst_nest <= 1e-10 and worst_path <= 1e-6
    verdict(3, ok, f"PenaltySpec identical: {same_spec}, max |ATL - TL| = {worst_nest:.1e}, "
                   f"max |path - reference lasso| = {worst_path:.1e} over 20 problems")


@pytest.mark.slow
def test_criterion_4_convergence_slopes():
    cfg = default_config("convergence", n_grid=(500, 1000, 2000, 5000), replicates=10, seed=SEED)
    start = time.perf_counter()
    res = run_study(cfg)
    elapsed = time.perf_counter() - start
    slope = {(r["method"], r["region"]): r["mean"] for r in res.select(metric="slope")}
    checks = {
        ("transfer_lasso", "i"): (-1.15, -0.85),
        ("adaptive_transfer_lasso", "i"): (-1.15, -0.85),
        ("adaptive_transfer_lasso", "ii"): (-1.15, -0.85),
        ("lasso", "i"): (-0.65, -0.35),
        ("lasso", "ii"): (-0.65, -0.35),
        ("adaptive_lasso", "i"): (-0.65, -0.35),
        ("adaptive_lasso", "ii"): (-0.65, -0.35),
        ("adaptive_lasso", "iii"): (-0.45, np.inf),
        ("transfer_lasso", "iii"): (-0.45, np.inf),
    }
    failed = [f"{m} ({r}) = {slope[(m, r)]:.3f}" for (m, r), (lo, hi) in checks.items()
              if not lo <= slope[(m, r)] <= hi or (hi == np.inf and slope[(m, r)] == lo)]
    summary = ", ".join(f"{m.replace('_lasso', '').replace('_', '-')}({r})={slope[(m, r)]:.2f}"
                        for m, r in checks)
    ok = not failed and elapsed <= 15 * 60
    verdict(4, ok, f"{summary}; {elapsed:.1f} s" + (f"; out of range: {failed}" if failed else ""))


def _window(lo_l, hi_l, lo_e, hi_e):
    return tuple((a, b) for a in np.linspace(lo_l, hi_l, 5) for b in np.linspace(lo_e, hi_e, 5))


def _oracle_region(dl, de):
    return dl > -0.5 and dl + 1 <= de < dl + 2 and de > 0.5


@pytest.mark.slow
def test_criterion_5_phase_regions():
    start = time.perf_counter()
    atl_cells = _window(0.0, 1.0, 1.0, 2.0)
    atl = run_study(default_config("phase_diagram", cells=atl_cells, replicates=10, seed=SEED,
                                   methods=("adaptive_transfer_lasso",)))
    tl_cells = _window(-0.5, 0.5, 1.0, 2.0)
    tl = run_study(default_config("phase_diagram", cells=tl_cells, replicates=10, seed=SEED,
                                  methods=("transfer_lasso",)))
    elapsed = time.perf_counter() - start

    def avg(res, cells, metric):
        return float(np.mean([res.value(delta_lambda=a, delta_eta=b, metric=metric) for a, b in cells]))

    inside = [c for c in atl_cells if _oracle_region(*c)]
    a_act, a_inv, a_slope = (avg(atl, inside, m) for m in ("active_ratio", "invariant_ratio", "slope"))
    t_act, t_inv = avg(tl, tl_cells, "active_ratio"), avg(tl, tl_cells, "invariant_ratio")
    ok = (a_act >= 0.95 and a_inv >= 0.9 and a_slope <= -0.85 and t_inv >= 0.9 and t_act < 0.95
          and elapsed <= 30 * 60)
    verdict(5, ok, f"adaptive transfer oracle cells ({len(inside)}): active {a_act:.3f}, invariant "
                   f"{a_inv:.3f}, slope {a_slope:.3f}; transfer region (i) window: invariant "
                   f"{t_inv:.3f}, active {t_act:.3f}; {elapsed:.1f} s")


@pytest.mark.slow
def test_criterion_6_cv_comparison():
    res = run_study(default_config("comparison", sigmas=(1.0,), ps=(10,), n_grid=(50, 200),
                                   replicates=10, seed=SEED))
    parts, ok = [], True
    for n in (50, 200):
        err = {m: res.value(n=n, method=m, metric="l2_error") for m in
               ("lasso", "adaptive_lasso", "transfer_lasso", "adaptive_transfer_lasso")}
        f1 = {m: res.value(n=n, method=m, metric="f1") for m in ("lasso", "adaptive_transfer_lasso")}
        cell_ok = (err["lasso"] > err["adaptive_lasso"] >= max(err["transfer_lasso"],
                                                              err["adaptive_transfer_lasso"])
                   and f1["adaptive_transfer_lasso"] >= f1["lasso"])
        ok &= cell_ok
        parts.append(f"n={n}: l2 L={err['lasso']:.3f} AL={err['adaptive_lasso']:.3f} "
                     f"TL={err['transfer_lasso']:.3f} ATL={err['adaptive_transfer_lasso']:.3f}, "
                     f"F1 ATL={f1['adaptive_transfer_lasso']:.3f} L={f1['lasso']:.3f}")
    verdict(6, ok, "; ".join(parts))


def test_criterion_7_prior_normalization():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for i in range(50):
        lam, v, w, t = rng.uniform(0.1, 3), rng.uniform(0.2, 3), rng.uniform(0.2, 3), rng.uniform(-4, 4)
        eta = lam * v / w if i % 5 == 0 else rng.uniform(0.0, 3)
        rate = min(lam * v + eta * w, lam * v if lam * v > 0 else np.inf)
        span = abs(t) + 60.0 / rate
        f = lambda b: prior_density(b, lam, eta, v, w, t)
        total = integrate.quad(f, -span, span, points=sorted({0.0, t}), epsabs=1e-13,
                               epsrel=1e-12, limit=200)[0]
        worst = max(worst, abs(total - 1))
    verdict(7, worst <= 1e-6, f"50 tuples (10 with lam*v = eta*w), max |integral - 1| = {worst:.1e}")


def test_criterion_8_determinism():
    configs = [
        default_config("convergence", n_grid=(20, 50), replicates=2, seed=SEED),
        default_config("phase_diagram", cells=((0.5, 0.75), (-1.0, 1.0)), replicates=2, seed=SEED),
        default_config("comparison", sigmas=(1.0,), ps=(10,), n_grid=(50,), replicates=2, seed=SEED,
                       grid_size=20),
        default_config("inconsistent_source", sigmas=(1.0,), ps=(10,), n_grid=(50,), replicates=2,
                       seed=SEED, grid_size=20, case="B"),
        default_config("contours"),
        default_config("priors"),
    ]
    same = []
    for cfg in configs:
        first = run_study(cfg).to_csv().encode()
        same.append(first == run_study(cfg).to_csv().encode())
    parallel = run_study(configs[0], jobs=2).to_csv().encode() == run_study(configs[0], jobs=1).to_csv().encode()
    ok = all(same) and parallel
    verdict(8, ok, f"byte-identical reruns for {sum(same)}/{len(same)} studies; "
                   f"2 workers vs 1 identical: {parallel}")


def test_criterion_9_oracle_spot_check():
    truth = default_truth()
    n = 5000
    hits = 0
    for r in range(20):
        src = sample_problem(truth, n, task_stream(SEED, "convergence", (9,), n, r, "source"))
        tgt = sample_problem(truth, n, task_stream(SEED, "convergence", (9,), n, r, "target"))
        tilde = estimate_initial(src, InitialEstimatorSpec("ols"))
        pen = build_penalty(MethodConfig("adaptive_lasso", gamma=1.0), tilde, 1e-3, schedule_value(n, 0.25))
        res = fit(tgt, pen)
        hits += res.converged and selection_scores(res.beta_hat, truth.beta_star).active_ratio == 1
    verdict(9, hits >= 18, f"active_ratio = 1 in {hits}/20 replicates")
