import math

import numpy as np
import pytest

from mixbound.chains import generate_chain
from mixbound.exact import exact_second_moment
from mixbound.kernel import ChainModel, KernelError, stationary_distribution
from mixbound.montecarlo import (
    CertifyConfig,
    Verdict,
    additive_sums,
    certify,
    estimate_moment,
    estimate_R_ks,
    estimate_tail,
    moment_from_sums,
    simulate_paths,
)
from mixbound.poisson import decomposition_level, solve_poisson_direct


def test_iid_marginals_binomial():
    model = generate_chain("iid", {"mu": [0.2, 0.5, 0.3]})
    paths = simulate_paths(model, 10, 10_000, seed=3)
    freq = np.bincount(paths.ravel(), minlength=3) / paths.size
    pi = np.array([0.2, 0.5, 0.3])
    assert np.all(np.abs(freq - pi) <= 4 * np.sqrt(pi * (1 - pi) / paths.size))


def test_simulation_is_deterministic(two_state):
    a = simulate_paths(two_state, 50, 200, seed=9)
    b = simulate_paths(two_state, 50, 200, seed=9)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, simulate_paths(two_state, 50, 200, seed=10))


def test_replication_streams_independent_of_count(two_state):
    a = simulate_paths(two_state, 40, 100, seed=4)
    b = simulate_paths(two_state, 40, 250, seed=4)
    np.testing.assert_array_equal(a, b[:100])


def test_point_mass_paths(two_state):
    m = ChainModel(two_state.kernel, two_state.f, np.array([0.0, 1.0]))
    paths = simulate_paths(m, 1, 100, seed=1)
    assert np.all(paths == 1)


def test_parallel_matches_serial():
    model = generate_chain("random_doeblin", {"size": 12, "epsilon": 0.3}, 5)
    import mixbound.montecarlo as mc
    old = mc.CHUNK_CELLS
    mc.CHUNK_CELLS = 4096  # force many chunks
    try:
        a = additive_sums(model, 100, 1000, 3, model.f, workers=1)
        b = additive_sums(model, 100, 1000, 3, model.f, workers=8)
    finally:
        mc.CHUNK_CELLS = old
    np.testing.assert_array_equal(a, b)


def test_moment_constant_f(two_state):
    m = ChainModel(two_state.kernel, np.array([0.4, 0.4]))
    est = estimate_moment(m, 100, 4, 200, seed=1)
    assert est.value == 0.0 and est.std_error == 0.0


def test_second_moment_matches_exact(two_state):
    pi = stationary_distribution(two_state.kernel)
    exact = exact_second_moment(two_state.kernel, two_state.f, pi, 100)
    est = estimate_moment(two_state, 100, 2, 10_000, seed=21)
    # std error of value^2 by the delta method
    se2 = 2 * est.value * est.std_error
    assert abs(est.value**2 - exact) <= 4 * se2


def test_iid_variance(iid3):
    pi = stationary_distribution(iid3.kernel)
    var = float(pi @ (iid3.f - pi @ iid3.f) ** 2)
    est = estimate_moment(iid3, 200, 2, 10_000, seed=2)
    assert abs(est.value**2 / 200 - var) <= 4 * 2 * est.value * est.std_error / 200


def test_moment_from_sums_delta_method():
    S = np.array([1.0, -2.0, 3.0, 0.0])
    est = moment_from_sums(S, 2, 5, 0)
    m = np.mean(S**2)
    assert est.value == pytest.approx(math.sqrt(m))
    se_m = np.std(S**2, ddof=1) / 2
    assert est.std_error == pytest.approx(0.5 / math.sqrt(m) * se_m)
    with pytest.raises(OverflowError):
        moment_from_sums(np.array([1e200, 1.0]), 8, 1, 0)


def test_lyapunov_ordering(two_state):
    pi = stationary_distribution(two_state.kernel)
    S = additive_sums(two_state, 200, 5000, 8, two_state.f - pi @ two_state.f)[:, 0]
    e2 = moment_from_sums(S, 2, 200, 8)
    e4 = moment_from_sums(S, 4, 200, 8)
    assert e2.value <= e4.value + 3 * math.hypot(e2.std_error, e4.std_error)


def test_estimate_tail_examples(two_state):
    assert estimate_tail(two_state, 50, 0.0, 500, seed=1) == 1.0
    assert estimate_tail(two_state, 50, 50 * 0.5 + 1e-9, 500, seed=1) == 0.0


def test_R_ks(two_state):
    pi = stationary_distribution(two_state.kernel)
    g = solve_poisson_direct(two_state.kernel, two_state.f, pi).g
    est = estimate_R_ks(two_state, 100, 2, 3, 10_000, seed=5)
    g2 = decomposition_level(two_state.kernel, g, pi, 2).g_k
    exact = exact_second_moment(two_state.kernel, g2, pi, 100)
    # R_{s-1,s}^2 is the square root of a second moment
    assert est.p == 2.0
    assert abs(est.value**4 - exact) <= 4 * 4 * est.value**3 * est.std_error + 1e-12
    const = ChainModel(two_state.kernel, np.array([1.0, 1.0]))
    assert estimate_R_ks(const, 100, 1, 3, 200, seed=5).value == 0.0
    with pytest.raises(ValueError):
        estimate_R_ks(two_state, 100, 0, 3, 200, seed=5)
    with pytest.raises(ValueError):
        estimate_R_ks(two_state, 100, 1, 7, 200, seed=5)


def test_verdict_ratio_and_grace():
    v = Verdict("x", 2, 10, 5.0, 2.0, 0.1)
    assert v.ratio == 2.5 and v.holds
    assert Verdict("x", 2, 10, 1.0, 0.0, 0.0).ratio is None
    assert Verdict("x", 2, 10, 1.0, 1.2, 0.1).holds
    assert not Verdict("x", 2, 10, 1.0, 1.4, 0.1).holds


def test_certify_small_grid(two_state):
    cfg = CertifyConfig(p_list=(2, 4), n_list=(10, 100), replications=1000, seed=3)
    out = certify(two_state, cfg)
    names = {v.bound_name for v in out}
    assert names == {"rosenthal_stationary", "rosenthal_auxiliary", "variance_crude",
                     "variance_poisson", "bernstein_tail", "rosenthal_initial"}
    assert all(v.holds for v in out)
    assert all(v.ratio > 1 for v in out if v.ratio is not None)
    assert certify(two_state, cfg) == out


def test_certify_constant_f(two_state):
    m = ChainModel(two_state.kernel, np.array([0.5, 0.5]))
    out = certify(m, CertifyConfig(p_list=(2,), n_list=(10,), replications=200))
    assert all(v.empirical_value == 0.0 and v.holds for v in out)


def test_certify_requires_bounded_f(two_state):
    m = ChainModel(two_state.kernel, np.array([2.0, 0.0]))
    with pytest.raises(KernelError):
        certify(m, CertifyConfig(replications=200))


@pytest.mark.parametrize("kw", [dict(replications=10), dict(p_list=(1,)), dict(p_list=(32,)),
                                dict(delta_list=(0.5,)), dict(n_list=(0,)), dict(workers=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        CertifyConfig(**kw)
