"""Exit criteria. Each test records one PASS/FAIL line, printed at the end of the run."""

import math
import time

import numpy as np
import pytest

from mixbound import bounds
from mixbound.chains import generate_chain
from mixbound.exact import coupling_moment, coupling_tail, exact_second_moment
from mixbound.kernel import mixing_time, require_tau, stationary_distribution
from mixbound.montecarlo import CertifyConfig, certify, estimate_moment, estimate_R_ks, estimate_tail, summarize
from mixbound.poisson import (
    asymptotic_variance_poisson,
    asymptotic_variance_series,
    decomposition_level,
    poisson_sup_cap,
    poisson_residual,
    solve_poisson_direct,
    solve_poisson_series,
)
from mixbound.report import ReportRow, to_csv

from conftest import doeblin_suite

RESULTS = {}


def record(num, ok, detail):
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[num] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def accept_suite():
    out = []
    for m in doeblin_suite(50):
        pi = stationary_distribution(m.kernel)
        out.append((m, pi, require_tau(m.kernel)))
    return out


def two_state():
    return generate_chain("two_state", {"p": 0.3, "q": 0.3})


def test_criterion_01_poisson(accept_suite):
    t0 = time.perf_counter()
    worst_gap = worst_res = worst_cap = 0.0
    for m, pi, tau in accept_suite:
        d = solve_poisson_direct(m.kernel, m.f, pi)
        s = solve_poisson_series(m.kernel, m.f, pi, tau=tau)
        worst_gap = max(worst_gap, float(np.max(np.abs(d.g - s.g))))
        worst_res = max(worst_res, poisson_residual(m.kernel, d.g, m.f, pi),
                        poisson_residual(m.kernel, s.g, m.f, pi))
        worst_cap = max(worst_cap, d.sup_norm / poisson_sup_cap(tau, m.f))
    dt = time.perf_counter() - t0
    ok = worst_gap <= 1e-9 and worst_res <= 1e-10 and worst_cap <= 1.0 and dt < 10
    record(1, ok, f"solver gap {worst_gap:.2e} <= 1e-9, residual {worst_res:.2e} <= 1e-10, "
                  f"|g|/cap {worst_cap:.3f} <= 1, {dt:.2f}s < 10s")


def test_criterion_02_variance_identity(accept_suite):
    worst_s = worst_g = 0.0
    for m, pi, tau in accept_suite:
        ser = asymptotic_variance_series(m.kernel, m.f, pi, tau=tau)
        g = solve_poisson_direct(m.kernel, m.f, pi).g
        poi = asymptotic_variance_poisson(m.f, g, pi)
        g1 = decomposition_level(m.kernel, g, pi, 1).g_k
        worst_s = max(worst_s, abs(ser - poi))
        worst_g = max(worst_g, abs(float(pi @ g1) - poi))
    m = two_state()
    pi = stationary_distribution(m.kernel)
    s2 = asymptotic_variance_series(m.kernel, m.f, pi)
    p = q = 0.3
    closed = p * q * (2 - p - q) / (p + q) ** 3
    ok = worst_s <= 1e-8 and worst_g <= 1e-8 and abs(s2 - closed) <= 1e-8
    record(2, ok, f"|series-poisson| {worst_s:.2e}, |pi(g_1)-sigma2| {worst_g:.2e}, "
                  f"two_state {s2:.10f} vs {closed:.10f}")


def test_criterion_03_second_moment_bounds(accept_suite):
    t0 = time.perf_counter()
    c = (1 + 4 / math.sqrt(3)) ** 2
    worst = 0.0
    for m, pi, tau in accept_suite:
        var = asymptotic_variance_series(m.kernel, m.f, pi, tau=tau)
        sigma = math.sqrt(max(var, 0.0))
        scale = float(np.max(np.abs(m.f)))
        for n in (1, 10, 100, 1000, 10_000):
            exact = exact_second_moment(m.kernel, m.f, pi, n, tau=tau)
            # both bounds are stated for ||f|| <= 1; rescale by ||f||^2
            bound = min(c * n * tau * scale**2, (math.sqrt(n) * sigma + 16 / 3 * tau * scale) ** 2)
            worst = max(worst, exact - bound)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 30
    record(3, ok, f"max(exact - bound) {worst:.3e} <= 1e-9, {dt:.2f}s < 30s")


def test_criterion_04_rosenthal_certification():
    t0 = time.perf_counter()
    models = [two_state(), generate_chain("iid", {"size": 3})]
    models += [generate_chain("random_doeblin", {"size": 10, "epsilon": 0.5}, s) for s in range(5)]
    cfg = CertifyConfig(p_list=(2, 4, 8), n_list=(10, 100, 1000), replications=10_000, seed=2024,
                        delta_list=(), start_state=0, include_auxiliary=False)
    cells = []
    for m in models:
        cells += certify(m, cfg)
    dt = time.perf_counter() - t0
    names = {v.bound_name for v in cells}
    bad = [v for v in cells if not v.holds]
    ratios = [v.ratio for v in cells if v.ratio is not None]
    ok = (names == {"rosenthal_stationary", "rosenthal_initial"} and len(cells) == 7 * 18
          and not bad and min(ratios) >= 10 and dt < 300)
    record(4, ok, f"{len(cells) - len(bad)}/{len(cells)} cells hold, min ratio {min(ratios):.1f} >= 10, "
                  f"{dt:.1f}s < 300s")


def test_criterion_05_bernstein_certification():
    t0 = time.perf_counter()
    m = two_state()
    s = summarize(m)
    parts = []
    ok = True
    for delta in (math.exp(-2), 0.01):
        thr = bounds.bernstein_threshold(delta, 1000, s.tau, s.sigma).conservative
        freq = estimate_tail(m, 1000, thr, 100_000, seed=7)
        ok &= freq <= delta
        parts.append(f"delta={delta:.4f}: freq {freq:.1e}")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    record(5, ok, ", ".join(parts) + f", {dt:.1f}s < 120s")


def test_criterion_06_coupling_moments(accept_suite):
    t0 = time.perf_counter()
    worst = 0.0
    for m, pi, tau in accept_suite:
        for z in range(m.kernel.size):
            xi = np.zeros(m.kernel.size)
            xi[z] = 1.0
            prof = coupling_tail(m.kernel, xi, pi, tau=tau)
            for p in (1, 2, 3, 4):
                worst = max(worst, coupling_moment(prof, p) / bounds.coupling_moment_bound(p, tau))
    dt = time.perf_counter() - t0
    ok = worst <= 1.0 and dt < 10
    record(6, ok, f"max E[T^p] / bound {worst:.4f} <= 1, {dt:.2f}s < 10s")


def _scalar_unroll(a, b, c, r_m):
    r = r_m
    for k in reversed(range(len(a))):
        r = a[k] * math.sqrt(r) + b[k] + c[k]
    return r


def test_criterion_07_recursion_bounds():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    worst_eq = 0.0
    for _ in range(1000):
        m = int(rng.integers(2, 9))
        a, b, c = (rng.uniform(0, 5, m - 1) for _ in range(3))
        r_m = rng.uniform(0, 100)
        cf = bounds.recursion_closed_form(a, b, c, r_m)
        brute = _scalar_unroll(a, b, c, r_m)
        worst_eq = max(worst_eq, abs(cf - brute) / max(1.0, abs(brute)))
    worst_dom = 0.0
    for _ in range(1000):
        s = int(rng.integers(2, 11))
        alpha, beta, gamma, k0, k1 = rng.uniform(1, 10, 5)
        r_last = rng.uniform(0, 1e3)
        a, b, c = bounds.corollary_coefficients(alpha, beta, gamma, k0, k1, s)
        cf = bounds.recursion_closed_form(a, b, c, r_last)
        cor = bounds.recursion_corollary_bound(alpha, beta, gamma, k0, k1, s, r_last)
        worst_dom = max(worst_dom, (cf - cor) / cor)
    dt = time.perf_counter() - t0
    ok = worst_eq <= 1e-10 and worst_dom <= 1e-12 and dt < 5
    record(7, ok, f"closed form vs unroll rel gap {worst_eq:.3e} <= 1e-10, "
                  f"corollary excess {worst_dom:.2e} <= 0, {dt:.2f}s < 5s")


def _recurrence_check(m, n, reps):
    tau = require_tau(m.kernel)
    cache = {}

    def R(k, s):
        if (k, s) not in cache:
            cache[k, s] = estimate_R_ks(m, n, k, s, reps, seed=31)
        return cache[k, s]

    parts = []
    ok = True
    for k, s in ((1, 3), (2, 3), (1, 4)):
        lhs, nxt = R(k, s), R(k + 1, s)
        rhs = bounds.level_recurrence_rhs(nxt.value, k, s, n, tau)
        # d rhs / d R_{k+1,s} for the error propagation
        slope = math.sqrt(bounds.CONSTANTS.C_rm1) * 2 ** ((s - k) / 4) * 0.5 / math.sqrt(max(nxt.value, 1e-300))
        se = math.hypot(lhs.std_error, slope * nxt.std_error)
        ok &= lhs.value <= rhs + 3 * se
        parts.append(f"R_{k},{s} {lhs.value:.3g} <= {rhs:.3g}")
    return ok, parts


def test_criterion_08_recurrence_spot_check():
    # symmetric two_state has g = +-c, so every g_k is constant; the
    # asymmetric chain keeps the left-hand sides non-zero
    ok, parts = _recurrence_check(two_state(), 100, 10_000)
    ok2, parts2 = _recurrence_check(generate_chain("two_state", {"p": 0.2, "q": 0.4}), 100, 10_000)
    record(8, ok and ok2, "two_state(.3,.3): " + ", ".join(parts) + "; two_state(.2,.4): " + ", ".join(parts2))


def test_criterion_09_determinism():
    models = [two_state(), generate_chain("random_doeblin", {"size": 8, "epsilon": 0.4}, 9)]

    def csv_for(workers):
        cfg = CertifyConfig(p_list=(2, 4, 8), n_list=(10, 100, 1000), replications=10_000, seed=99,
                            workers=workers)
        rows = []
        for m in models:
            s = summarize(m)
            rows += [ReportRow.from_verdict(m.name, s.tau, s.sigma, v) for v in certify(m, cfg, s)]
        return to_csv(rows).encode()

    a, b, c = csv_for(1), csv_for(1), csv_for(8)
    ok = a == b == c
    record(9, ok, f"{len(a)} CSV bytes identical across 2 runs and workers 1/8")


def test_criterion_10_lazy_scaling():
    base = np.asarray(two_state().kernel)
    n = 1000
    c = (1 + 4 / math.sqrt(3)) ** 2
    parts = []
    ok = True
    for lam in (0.0, 0.5, 0.75):
        m = generate_chain("lazy", {"base": "two_state", "lam": lam, "p": 0.3, "q": 0.3})
        np.testing.assert_allclose(np.asarray(m.kernel), lam * np.eye(2) + (1 - lam) * base, atol=1e-15)
        tau = mixing_time(m.kernel).tau
        est = estimate_moment(m, n, 2, 10_000, seed=5)
        emp = est.value**2 / n**2
        se = 2 * est.value * est.std_error / n**2
        bound = c * tau / n
        ok &= emp <= bound + 3 * se
        parts.append(f"lam={lam}: tau={tau} {emp:.2e} <= {bound:.2e}")
    record(10, ok, ", ".join(parts))
