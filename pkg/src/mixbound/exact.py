"""Sampling-free second moments of ``S_n`` and coupling-time moments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernel import (
    MAX_POWER,
    KernelError,
    StochasticKernel,
    require_tau,
    tv_distance,
    uge_tail_sum,
    validate_distribution,
)
from .poisson import autocovariances, centered

REMAINDER_LIMIT = 0.01


@dataclass(frozen=True)
class CouplingTailProfile:
    """``tail[k] = P(T > k) = 0.5 ||xi Q^k - xi' Q^k||_TV`` for ``k = 0..horizon``.

    ``truncation_bound`` caps ``P(T > k)`` for every ``k > horizon``.
    """

    tail: np.ndarray
    tau: int
    truncation_bound: float

    @property
    def horizon(self) -> int:
        return self.tail.size - 1

    def envelope(self, k: int) -> float:
        """Certified bound on ``P(T > k)``: the Dobrushin envelope ``(1/4)^floor(k/tau)``."""
        return min(1.0, 0.25 ** (k // self.tau))


def exact_second_moment(
    Q: StochasticKernel, f, pi, n: int, tau: Optional[int] = None
) -> float:
    """``E_pi |sum_{i<n} fbar(Z_i)|^2`` from the autocovariance sequence.

    ``n gamma(0) + 2 sum_{k=1}^{n-1} (n - k) gamma(k)``. Lags whose certified
    contribution is below ``1e-16`` relative to ``n gamma(0)`` are dropped.
    """
    if n < 1:
        raise KernelError("n must be positive")
    fbar = centered(f, pi)
    g0 = float(pi @ fbar**2)
    if g0 == 0.0:
        return 0.0
    if tau is None:
        tau = require_tau(Q)
    sup2 = float(np.max(np.abs(fbar))) ** 2
    # |gamma(k)| <= 2 ||fbar||^2 (1/4)^floor(k/tau); weight at most 2n
    K = 0
    while K < n - 1 and 4.0 * n * sup2 * uge_tail_sum(K, tau) > 1e-16 * n * g0:
        K += 1
    gam = autocovariances(Q, f, pi, K)
    k = np.arange(1, K + 1)
    return float(n * gam[0] + 2.0 * np.sum((n - k) * gam[1:]))


def coupling_horizon(tau: int, p_max: float = 4.0, rel: float = 1e-10) -> int:
    """First ``k`` with ``2 (1/4)^floor(k/tau) (k+1)^p_max < rel``."""
    k = 0
    while 2.0 * 0.25 ** (k // tau) * (k + 1.0) ** p_max >= rel:
        k += 1
        if k > MAX_POWER:
            raise KernelError("coupling horizon exceeds 1e6")
    return k


def coupling_tail(
    Q: StochasticKernel,
    xi,
    xi_prime,
    horizon: Optional[int] = None,
    tau: Optional[int] = None,
    p_max: float = 4.0,
) -> CouplingTailProfile:
    """TV tail of the maximal exact coupling of the chains started at ``xi`` and ``xi_prime``."""
    P = np.asarray(Q)
    xi = validate_distribution(xi, P.shape[0])
    xi_prime = validate_distribution(xi_prime, P.shape[0])
    if tau is None:
        tau = require_tau(Q)
    if horizon is None:
        horizon = coupling_horizon(tau, p_max)
    if horizon > MAX_POWER:
        raise KernelError(f"horizon {horizon} exceeds {MAX_POWER}")
    tail = np.empty(horizon + 1)
    a, b = xi.copy(), xi_prime.copy()
    for k in range(horizon + 1):
        tail[k] = tv_distance(a, b)
        a = a @ P
        b = b @ P
    return CouplingTailProfile(tail, tau, min(1.0, 0.25 ** ((horizon + 1) // tau)))


def _remainder(profile: CouplingTailProfile, p: float) -> float:
    # sum_{k >= horizon + 2} (k^p - (k-1)^p) * envelope(k - 1)
    total = 0.0
    k = profile.horizon + 2
    block = max(64, 4 * profile.tau)
    while True:
        ks = np.arange(k, k + block, dtype=float)
        w = (ks**p - (ks - 1.0) ** p) * 0.25 ** ((ks.astype(np.int64) - 1) // profile.tau)
        s = float(w.sum())
        total += s
        k += block
        if s <= 1e-17 * max(total, 1e-300) or s == 0.0:
            return total


def coupling_moment(profile: CouplingTailProfile, p: float, with_error: bool = False):
    """``E[T^p] = 1 + sum_{k>=2} (k^p - (k-1)^p) P(T > k-1)`` with ``T >= 1``.

    The point value only uses the computed tail. The geometric envelope beyond
    the horizon is returned as an error bar when ``with_error`` is set.
    """
    if not p >= 1.0:
        raise KernelError("p must be >= 1")
    K = profile.horizon
    k = np.arange(2, K + 2, dtype=float)
    weights = k**p - (k - 1.0) ** p
    value = 1.0 + math.fsum(weights * profile.tail[1:K + 1])
    err = _remainder(profile, p)
    if err > REMAINDER_LIMIT * value:
        raise KernelError(
            f"coupling tail horizon {K} too short: remainder {err:.3g} exceeds 1% of {value:.6g}"
        )
    return (value, err) if with_error else value
