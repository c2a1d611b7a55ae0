"""Seeded Monte-Carlo estimates of additive-functional moments and tails.

Replication ``r`` of a run draws its uniforms from a Philox stream whose key
is derived from ``(seed, *tags)`` and whose counter starts at ``r``, so every
replication is reproducible on its own and results do not depend on chunking
or on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import bounds
from ._backend import get_backend
from .kernel import ChainModel, KernelError, require_tau, stationary_distribution, validate_distribution
from .poisson import (
    asymptotic_variance_series,
    centered,
    decomposition_level,
    solve_poisson_direct,
)

MIN_REPLICATIONS = 100
MAX_P = 16
GRACE = 3.0
CHUNK_CELLS = 2**21


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    n: int
    replications: int
    value: float
    std_error: float
    seed: int


@dataclass(frozen=True)
class Verdict:
    bound_name: str
    p: float
    n: int
    bound_value: float
    empirical_value: float
    std_error: float

    @property
    def ratio(self) -> Optional[float]:
        if self.empirical_value > 0:
            return self.bound_value / self.empirical_value
        return None

    @property
    def holds(self) -> bool:
        return self.bound_value >= self.empirical_value - GRACE * self.std_error


@dataclass
class CertifyConfig:
    p_list: Sequence[float] = (2, 4, 8)
    n_list: Sequence[int] = (10, 100, 1000)
    replications: int = 10_000
    seed: int = 0
    delta_list: Sequence[float] = field(default_factory=lambda: (math.exp(-2.0), 1e-2))
    tail_replications: Optional[int] = None
    start_state: Optional[int] = 0
    include_auxiliary: bool = True
    workers: int = 1
    backend: Optional[str] = None

    def __post_init__(self):
        if self.replications < MIN_REPLICATIONS:
            raise ValueError(f"replications must be >= {MIN_REPLICATIONS}")
        for p in self.p_list:
            if not 2 <= p <= MAX_P:
                raise ValueError(f"moment order {p} outside [2, {MAX_P}]")
        for n in self.n_list:
            if int(n) != n or n < 1:
                raise ValueError(f"n={n} must be a positive integer")
        for d in self.delta_list:
            if not 0 < d <= math.exp(-2.0):
                raise ValueError(f"delta={d} outside (0, e^-2]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


def stream_key(seed: int, tags: Tuple[int, ...] = ()) -> np.ndarray:
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(t) for t in tags))
    return ss.generate_state(2, np.uint64)


def draw_uniforms(key: np.ndarray, start: int, stop: int, n: int) -> np.ndarray:
    U = np.empty((stop - start, n))
    for i, r in enumerate(range(start, stop)):
        gen = np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, r]))
        gen.random(out=U[i])
    return U


def _cumulative(P: np.ndarray) -> np.ndarray:
    cum = np.cumsum(P, axis=-1)
    return np.ascontiguousarray(cum / cum[..., -1:])


def _initial_law(model: ChainModel, pi: np.ndarray, initial) -> np.ndarray:
    if initial is None:
        initial = model.initial
    if isinstance(initial, str):
        return pi
    return validate_distribution(initial, model.kernel.size)


def _chunks(reps: int, n: int):
    size = max(1, CHUNK_CELLS // max(n, 1))
    return [(a, min(a + size, reps)) for a in range(0, reps, size)]


def additive_sums(
    model: ChainModel,
    n: int,
    replications: int,
    seed: int,
    funcs,
    initial=None,
    tags: Tuple[int, ...] = (),
    workers: int = 1,
    backend: Optional[str] = None,
    pi: Optional[np.ndarray] = None,
) -> np.ndarray:
    """``sum_{t<n} funcs[Z_t, j]`` for every replication, shape ``(replications, m)``.

    ``initial`` overrides the model's initial law (a vector or ``"stationary"``).
    """
    if n < 1:
        raise ValueError("n must be positive")
    impl = get_backend(backend)
    if pi is None:
        pi = stationary_distribution(model.kernel)
    F = np.ascontiguousarray(np.asarray(funcs, dtype=float).reshape(model.kernel.size, -1))
    cum = _cumulative(np.asarray(model.kernel))
    init_cum = _cumulative(_initial_law(model, pi, initial))
    key = stream_key(seed, tags)

    def run(bounds_):
        a, b = bounds_
        return impl.simulate_sums(cum, init_cum, draw_uniforms(key, a, b, n), F)

    chunks = _chunks(replications, n)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    if not parts:
        return np.zeros((0, F.shape[1]))
    return np.concatenate(parts, axis=0)


def simulate_paths(
    model: ChainModel,
    n: int,
    replications: int,
    seed: int,
    tags: Tuple[int, ...] = (),
    backend: Optional[str] = None,
) -> np.ndarray:
    """Full state trajectories, shape ``(replications, n)``."""
    impl = get_backend(backend)
    pi = stationary_distribution(model.kernel)
    cum = _cumulative(np.asarray(model.kernel))
    init_cum = _cumulative(_initial_law(model, pi, None))
    U = draw_uniforms(stream_key(seed, tags), 0, replications, n)
    return impl.simulate_states(cum, init_cum, U)


def moment_from_sums(S: np.ndarray, p: float, n: int, seed: int) -> MomentEstimate:
    """``(mean |S|^p)^(1/p)`` with a delta-method standard error."""
    a = np.abs(np.asarray(S, dtype=float))
    R = a.size
    top = float(a.max()) if R else 0.0
    if top > 0 and p * math.log(top) > bounds.EXP_OVERFLOW:
        raise OverflowError(f"|S|^{p} overflows (max |S| = {top:.4g})")
    # scale by the maximum before powering to keep the moments well inside range
    if top == 0.0:
        return MomentEstimate(p, n, R, 0.0, 0.0, seed)
    x = (a / top) ** p
    m = float(x.mean())
    se_m = float(x.std(ddof=1)) / math.sqrt(R) if R > 1 else 0.0
    value = top * m ** (1.0 / p)
    se = top * (1.0 / p) * m ** (1.0 / p - 1.0) * se_m if m > 0 else 0.0
    return MomentEstimate(p, n, R, value, se, seed)


def _fbar_column(model: ChainModel, pi: np.ndarray) -> np.ndarray:
    return centered(model.f, pi)[:, None]


def estimate_moment(
    model: ChainModel,
    n: int,
    p: float,
    replications: int,
    seed: int,
    workers: int = 1,
    backend: Optional[str] = None,
    initial=None,
) -> MomentEstimate:
    """Empirical ``E^{1/p} |S_n|^p`` with ``S_n = sum_{i<n} (f(Z_i) - pi(f))``."""
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if replications < MIN_REPLICATIONS:
        raise ValueError(f"replications must be >= {MIN_REPLICATIONS}")
    pi = stationary_distribution(model.kernel)
    S = additive_sums(
        model, n, replications, seed, _fbar_column(model, pi),
        initial=initial, workers=workers, backend=backend, pi=pi,
    )[:, 0]
    return moment_from_sums(S, p, n, seed)


def estimate_tail(
    model: ChainModel,
    n: int,
    threshold: float,
    replications: int,
    seed: int,
    workers: int = 1,
    backend: Optional[str] = None,
) -> float:
    """Empirical ``P(|S_n| >= threshold)``."""
    pi = stationary_distribution(model.kernel)
    S = additive_sums(
        model, n, replications, seed, _fbar_column(model, pi),
        workers=workers, backend=backend, pi=pi,
    )[:, 0]
    return float(np.mean(np.abs(S) >= threshold))


def estimate_R_ks(
    model: ChainModel,
    n: int,
    k: int,
    s: int,
    replications: int,
    seed: int,
    workers: int = 1,
    backend: Optional[str] = None,
) -> MomentEstimate:
    """Empirical ``R_{k,s}`` where ``R_{k,s}^2 = E_pi^{1/q} |sum g_k(Z_i) - pi(g_k)|^q``, ``q = 2^(s-k)``.

    Always simulated from the stationary start. ``k = s`` (a first absolute
    moment) is accepted because the recurrence for ``k = s - 1`` refers to it.
    """
    if not (1 <= k <= s and s <= 6):
        raise ValueError(f"(k, s) = ({k}, {s}) outside 1 <= k <= s <= 6")
    pi = stationary_distribution(model.kernel)
    g = solve_poisson_direct(model.kernel, model.f, pi).g
    gk = decomposition_level(model.kernel, g, pi, k).g_k
    col = (gk - float(pi @ gk))[:, None]
    S = additive_sums(
        model, n, replications, seed, col, initial="stationary",
        tags=(k, s), workers=workers, backend=backend, pi=pi,
    )[:, 0]
    q = 2.0 ** (s - k)
    est = moment_from_sums(S, q, n, seed)
    # R = (q-th root moment)^(1/2)
    if est.value == 0.0:
        return MomentEstimate(q, n, est.replications, 0.0, 0.0, seed)
    value = math.sqrt(est.value)
    return MomentEstimate(q, n, est.replications, value, 0.5 * est.std_error / value, seed)


@dataclass(frozen=True)
class ChainSummary:
    pi: np.ndarray
    tau: int
    sigma: float


def summarize(model: ChainModel) -> ChainSummary:
    pi = stationary_distribution(model.kernel)
    tau = require_tau(model.kernel)
    var = asymptotic_variance_series(model.kernel, model.f, pi, tau=tau)
    return ChainSummary(pi, tau, math.sqrt(max(var, 0.0)))


def _tail_verdict(S, delta, n, threshold):
    R = S.size
    freq = float(np.mean(np.abs(S) >= threshold))
    se = math.sqrt(freq * (1.0 - freq) / R)
    return Verdict("bernstein_tail", math.log(1.0 / delta), n, delta, freq, se)


def certify(model: ChainModel, config: CertifyConfig, summary: Optional[ChainSummary] = None) -> List[Verdict]:
    """Check every bound in the configured grid against seeded simulation.

    Rows come out grouped by ``n``: stationary-start moment bounds, the
    second-moment bounds, the tail bound per ``delta``, then the bounds for
    the non-stationary start.
    """
    if float(np.max(np.abs(model.f))) > 1.0 + 1e-12:
        raise KernelError("certify requires ||f||_inf <= 1; rescale f first")
    if summary is None:
        summary = summarize(model)
    pi, tau, sigma = summary.pi, summary.tau, summary.sigma
    col = _fbar_column(model, pi)
    seed = _check_seed(config.seed)
    run = dict(workers=config.workers, backend=config.backend, pi=pi)
    reps = config.replications
    tail_reps = config.tail_replications or reps

    xi = None
    if not model.is_stationary:
        xi = model.initial
    elif config.start_state is not None:
        xi = np.zeros(model.kernel.size)
        xi[config.start_state] = 1.0

    out: List[Verdict] = []
    for n in config.n_list:
        n = int(n)
        S = additive_sums(model, n, reps, seed, col, initial="stationary", tags=(0, n), **run)[:, 0]
        for p in config.p_list:
            est = moment_from_sums(S, p, n, seed)
            b = bounds.rosenthal_bound(p, n, tau, sigma, True).total
            out.append(Verdict("rosenthal_stationary", p, n, b, est.value, est.std_error))
            if config.include_auxiliary:
                b = bounds.auxiliary_rosenthal_bound(p, n, tau).total
                out.append(Verdict("rosenthal_auxiliary", p, n, b, est.value, est.std_error))
        if config.include_auxiliary:
            est = moment_from_sums(S, 2, n, seed)
            out.append(Verdict("variance_crude", 2, n, bounds.crude_variance_bound(n, tau), est.value, est.std_error))
            out.append(Verdict("variance_poisson", 2, n, bounds.poisson_variance_bound(n, tau, sigma), est.value, est.std_error))
        if config.delta_list:
            St = S if tail_reps == reps else additive_sums(
                model, n, tail_reps, seed, col, initial="stationary", tags=(1, n), **run
            )[:, 0]
            for delta in config.delta_list:
                thr = bounds.bernstein_threshold(delta, n, tau, sigma).conservative
                out.append(_tail_verdict(St, delta, n, thr))
        if xi is not None:
            Sx = additive_sums(model, n, reps, seed, col, initial=xi, tags=(2, n), **run)[:, 0]
            for p in config.p_list:
                est = moment_from_sums(Sx, p, n, seed)
                b = bounds.rosenthal_bound(p, n, tau, sigma, False).total
                out.append(Verdict("rosenthal_initial", p, n, b, est.value, est.std_error))
    return out
