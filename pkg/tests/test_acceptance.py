"""One test per acceptance criterion, each at its stated tolerance and time budget.

Every test prints a PASS/FAIL line (also collected into the terminal summary).
"""
import math
import time

import numpy as np
import pytest

from kstrip.depth import DepthIndex, build_R, exact_depths, extract_and_validate_sequence
from kstrip.experiments import ExperimentConfig, run_scaling, run_trial
from kstrip.hypergraph import sample_simple, sample_truncated_multinomial
from kstrip.numeric import g_k, lambda_of, poisson_tail, psi, truncated_poisson_pmf
from kstrip.stripping import check_trace, naive_core, parallel_strip, slow_strip
from kstrip.thresholds import ParamsRK, solve_critical, solve_supercritical, verify_identities, x_star_margin
from conftest import ACCEPTANCE, critical_density, small_instance

GRID_RK = [(r, k) for r in range(2, 7) for k in range(2, 7) if (r, k) != (2, 2)]
SCALING_GRID = tuple(2 ** e for e in range(14, 21))


def record(number, title, passed, detail):
    label = f"criterion {number} ({title})"
    ACCEPTANCE.append((label, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
    assert passed, detail


def test_criterion_01_threshold_identities():
    t0 = time.perf_counter()
    worst, failed = 0.0, []
    for r, k in GRID_RK:
        checks = verify_identities(ParamsRK(r, k))
        for name in ("degree_k_share", "critical_ratio", "psi_at_zeta"):
            worst = max(worst, checks[name].residual)
        for name, chk in checks.items():
            if not chk.passed:
                failed.append((r, k, name))
    elapsed = time.perf_counter() - t0
    record(1, "threshold identities", not failed and worst <= 1e-8 and elapsed < 1,
           f"{len(GRID_RK)} pairs, max residual {worst:.2e}, failures {failed}, {elapsed:.2f}s")


def test_criterion_02_monotonicity():
    t0 = time.perf_counter()
    bad = []
    lam = np.linspace(0.01, 60, 1000)
    for k in range(2, 7):
        if not np.all(np.diff(g_k(k, lam)) > 0):
            bad.append(("g_k", k))
        x = np.linspace(k + 0.01, k + 40, 1000)
        if not np.all(np.diff(psi(k, x)) < 0):
            bad.append(("psi", k))
    tail_margin = math.inf
    for mu in np.linspace(2.0, 60.0, 200):
        for k in range(1, math.floor(mu)):
            tail_margin = min(tail_margin, poisson_tail(k, float(mu)) - 0.5)
    ratio_margin = min(x_star_margin(r, k) for r, k in GRID_RK)
    elapsed = time.perf_counter() - t0
    ok = not bad and tail_margin > 0 and ratio_margin > 0 and elapsed < 1
    record(2, "monotonicity", ok, f"violations {bad}, min f_k - 1/2 = {tail_margin:.3e}, "
           f"min x* ratio margin = {ratio_margin:.3e}, {elapsed:.2f}s")


def test_criterion_03_oracle_core_equivalence():
    slow_strip(sample_simple(10, 5, 2, 0), 2, 0)   # compile outside the timer
    t0 = time.perf_counter()
    mismatches = 0
    for seed in range(1000):
        g, k = small_instance(seed, n_min=2, n_max=12)
        v0, e0 = naive_core(g, k)
        par = parallel_strip(g, k)
        tr = slow_strip(g, k, seed)
        same = (np.array_equal(v0, par.core_vertices) and np.array_equal(e0, par.core_edges)
                and np.array_equal(v0, tr.core_vertices) and np.array_equal(e0, tr.core_edges))
        mismatches += not same
    elapsed = time.perf_counter() - t0
    record(3, "oracle core equivalence", mismatches == 0 and elapsed < 10,
           f"1000 instances, {mismatches} mismatches, {elapsed:.2f}s")


@pytest.mark.slow
def test_criterion_04_core_size():
    t0 = time.perf_counter()
    n, trials = 200_000, 20
    band = 5 * n ** 0.75
    details, ok = [], True
    for r, k in [(3, 2), (2, 3)]:
        p = ParamsRK(r, k)
        crit = solve_critical(p)
        sup = solve_supercritical(p, crit.c_rk + 0.1, crit=crit)
        cfg = ExperimentConfig(params=p, n_grid=(n,), trials_per_n=trials, seed=404,
                               c_mode="absolute", c=crit.c_rk + 0.1, diagnostics_trials=0)
        recs = [run_trial(cfg, n, t, crit) for t in range(trials)]
        v_hits = sum(abs(x.core_v - sup.alpha_c * n) <= band for x in recs)
        e_hits = sum(abs(x.core_e - sup.beta_c * n) <= band for x in recs)
        worst = max(max(abs(x.core_v - sup.alpha_c * n), abs(x.core_e - sup.beta_c * n))
                    for x in recs)
        ok &= v_hits >= 18 and e_hits >= 18
        details.append(f"(r,k)=({r},{k}) vertices {v_hits}/20 edges {e_hits}/20 "
                       f"worst dev {worst:.0f} vs band {band:.0f}")
    elapsed = time.perf_counter() - t0
    record(4, "core-size reproduction", ok and elapsed < 120, "; ".join(details) + f"; {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_05_subcritical_emptiness():
    t0 = time.perf_counter()
    n = 200_000
    p = ParamsRK(3, 2)
    cfg = ExperimentConfig(params=p, n_grid=(n,), trials_per_n=20, seed=505,
                           c_mode="critical_minus_ndelta", delta=0.3, diagnostics_trials=0)
    crit = solve_critical(p)
    empty = sum(run_trial(cfg, n, t, crit).core_v == 0 for t in range(20))
    elapsed = time.perf_counter() - t0
    record(5, "subcritical emptiness", empty >= 18 and elapsed < 120,
           f"empty core in {empty}/20 trials, {elapsed:.1f}s")


def _scaling(c_mode, **kw):
    cfg = ExperimentConfig(params=ParamsRK(3, 2), n_grid=SCALING_GRID, trials_per_n=20,
                           seed=2024, c_mode=c_mode, diagnostics_trials=0, **kw)
    return run_scaling(cfg)[1]["rounds"]


@pytest.mark.slow
def test_criterion_06_stripping_number_scaling():
    t0 = time.perf_counter()
    fit = _scaling("critical_plus_ndelta", delta=0.4)
    elapsed = time.perf_counter() - t0
    ok = 0.10 <= fit.exponent_estimate <= 0.30 and fit.ci_low <= 0.20 <= fit.ci_high
    record(6, "stripping-number scaling", ok and elapsed < 1800,
           f"exponent {fit.exponent_estimate:.4f}, 95% CI [{fit.ci_low:.4f}, {fit.ci_high:.4f}], "
           f"R^2 {fit.r_squared:.3f}, target 0.20, {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_07_constant_density_contrast():
    t0 = time.perf_counter()
    fit = _scaling("absolute", c=critical_density(3, 2) + 0.2)
    elapsed = time.perf_counter() - t0
    record(7, "constant-c contrast", fit.exponent_estimate <= 0.05 and elapsed < 600,
           f"exponent {fit.exponent_estimate:.4f} (limit 0.05), 95% CI "
           f"[{fit.ci_low:.4f}, {fit.ci_high:.4f}], {elapsed:.1f}s")


def test_criterion_08_depth_sandwich():
    t0 = time.perf_counter()
    violations, invalid, checked = 0, 0, 0
    for seed in range(500):
        g, k = small_instance(10_000 + seed, n_min=3, n_max=10)
        index = DepthIndex(g, k)
        for v, d in exact_depths(g, k).items():
            cert = build_R(index, v)
            checked += 1
            violations += not (cert.lower_bound <= d <= cert.upper_bound)
            invalid += not extract_and_validate_sequence(index, cert).ok
    elapsed = time.perf_counter() - t0
    record(8, "depth sandwich", violations == 0 and invalid == 0 and elapsed < 300,
           f"{checked} non-core vertices in 500 instances, {violations} sandwich violations, "
           f"{invalid} invalid sequences, {elapsed:.1f}s")


def test_criterion_09_truncated_multinomial_law():
    t0 = time.perf_counter()
    N = 100_000
    tol = 5 * N ** -0.5 * math.log(N)
    details, ok = [], True
    for r, k in [(3, 2), (2, 3)]:
        zeta = solve_critical(ParamsRK(r, k)).zeta
        D = math.ceil(zeta * N)
        lam = lambda_of(k, D / N)
        j = np.arange(k, k + 11)
        law = truncated_poisson_pmf(k, lam, j)
        good, worst = 0, 0.0
        for seed in range(20):
            deg = sample_truncated_multinomial(N, D, k, seed=seed).degrees
            emp = np.bincount(deg, minlength=k + 11)[k:k + 11] / N
            dev = float(np.abs(emp - law).max())
            worst = max(worst, dev)
            good += dev <= tol
        ok &= good >= 19
        details.append(f"k={k} (zeta of ({r},{k})): {good}/20 seeds within {tol:.4f}, "
                       f"worst {worst:.4f}")
    elapsed = time.perf_counter() - t0
    record(9, "truncated multinomial law", ok and elapsed < 60, "; ".join(details) + f"; {elapsed:.1f}s")


def test_criterion_10_trace_identities():
    failures = []
    runs = 0
    cases = [(small_instance(s, n_min=5, n_max=200) , s) for s in range(200)]
    n = 100_000
    for r, k in [(3, 2), (2, 3)]:
        m = math.floor((critical_density(r, k) + n ** -0.4) * n + 0.5)
        cases.append(((sample_simple(n, m, r, seed=r * 10 + k), k), 7))
    for (g, k), seed in cases:
        tr = slow_strip(g, k, seed)
        checks = check_trace(g, tr)
        runs += 1
        bad = [name for name, passed in checks.items() if not passed]
        if bad:
            failures.append((g.n, k, bad))
    record(10, "deterministic trace identities", not failures,
           f"{runs} runs, {len(failures)} with a failed identity {failures[:3]}")
