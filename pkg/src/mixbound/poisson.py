"""Poisson equation, asymptotic variance and the power decomposition of ``g``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernel import (
    MAX_POWER,
    KernelError,
    StochasticKernel,
    require_tau,
    uge_tail_sum,
)

MAX_LEVEL = 16


@dataclass(frozen=True)
class PoissonSolution:
    g: np.ndarray
    residual: float
    sup_norm: float
    method: str


@dataclass(frozen=True)
class DecompositionLevel:
    k: int
    g_k: np.ndarray
    h_k: np.ndarray
    sup_h: float


def centered(f, pi) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return f - float(pi @ f)


def poisson_residual(Q: StochasticKernel, g, f, pi) -> float:
    P = np.asarray(Q)
    return float(np.max(np.abs(g - P @ g - centered(f, pi))))


def _solution(Q, g, f, pi, method) -> PoissonSolution:
    g = g - float(pi @ g)
    return PoissonSolution(
        g=g,
        residual=poisson_residual(Q, g, f, pi),
        sup_norm=float(np.max(np.abs(g))),
        method=method,
    )


def poisson_sup_cap(tau: int, f) -> float:
    """``(8/3) tau ||f||_inf``, the sup-norm cap on the Poisson solution."""
    return 8.0 / 3.0 * tau * float(np.max(np.abs(f)))


def solve_poisson_direct(Q: StochasticKernel, f, pi) -> PoissonSolution:
    """Solve ``(I - Q) g = f - pi(f)`` normalised by ``pi(g) = 0``.

    The equation at the state of largest stationary mass is redundant and is
    swapped for the normalisation, which removes the rank deficiency.
    """
    P = np.asarray(Q)
    size = P.shape[0]
    fbar = centered(f, pi)
    A = np.eye(size) - P
    b = fbar.copy()
    drop = int(np.argmax(pi))
    A[drop, :] = pi
    b[drop] = 0.0
    try:
        g = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise KernelError("Poisson system is singular; kernel is not ergodic") from exc
    g += np.linalg.solve(A, b - A @ g)
    sol = _solution(Q, g, f, pi, "direct-solve")
    if not np.isfinite(sol.residual) or sol.residual > 1e-6:
        raise KernelError("Poisson system is ill-posed; kernel is not ergodic")
    return sol


def series_length(tau: int, scale: float, tol: float) -> int:
    """First ``K`` whose certified tail ``scale * sum_{j>K} (1/4)^floor(j/tau)`` is below ``tol``."""
    if scale == 0.0:
        return 0
    # the tail shrinks by 4 every tau steps, so jump in blocks and then refine
    K = 0
    while scale * uge_tail_sum(K, tau) > tol:
        K += tau
        if K > MAX_POWER:
            raise KernelError(f"series needs more than {MAX_POWER} terms")
    while K > 0 and scale * uge_tail_sum(K - 1, tau) <= tol:
        K -= 1
    return K


def solve_poisson_series(
    Q: StochasticKernel, f, pi, tol: float = 1e-12, tau: Optional[int] = None
) -> PoissonSolution:
    """``g = sum_{k>=0} (Q^k f - pi(f))`` truncated by the a-priori geometric tail."""
    if tau is None:
        tau = require_tau(Q)
    P = np.asarray(Q)
    fbar = centered(f, pi)
    K = series_length(tau, 2.0 * float(np.max(np.abs(f))), tol)
    g = np.zeros_like(fbar)
    term = fbar.copy()
    for _ in range(K + 1):
        g += term
        term = P @ term
    return _solution(Q, g, f, pi, "series")


def autocovariances(Q: StochasticKernel, f, pi, max_lag: int) -> np.ndarray:
    """``gamma[k] = pi(fbar * Q^k fbar)`` for ``k = 0..max_lag``."""
    P = np.asarray(Q)
    fbar = centered(f, pi)
    w = pi * fbar
    out = np.empty(max_lag + 1)
    term = fbar.copy()
    for k in range(max_lag + 1):
        out[k] = float(w @ term)
        term = P @ term
    return out


def asymptotic_variance_series(
    Q: StochasticKernel, f, pi, tol: float = 1e-12, tau: Optional[int] = None
) -> float:
    """``pi(fbar^2) + 2 sum_{l>=1} pi(fbar Q^l fbar)``, clamped at zero."""
    if tau is None:
        tau = require_tau(Q)
    fbar = centered(f, pi)
    sup = float(np.max(np.abs(fbar)))
    # |pi(fbar Q^l fbar)| <= ||fbar|| * 2 ||fbar|| (1/4)^floor(l/tau), doubled in the sum
    L = series_length(tau, 4.0 * sup * sup, tol)
    gam = autocovariances(Q, f, pi, max(L, 1))
    value = float(gam[0] + 2.0 * gam[1:L + 1].sum())
    if value < 0.0 and value > -tol:
        value = 0.0
    return value


def asymptotic_variance_poisson(f, g, pi) -> float:
    """``pi(fbar (2 g - fbar))``; invariant under constant shifts of ``g``."""
    fbar = centered(f, pi)
    return float(pi @ (fbar * (2.0 * np.asarray(g) - fbar)))


def decomposition_level(Q: StochasticKernel, g, pi, k: int) -> DecompositionLevel:
    """``g_k = Q(g^(2^k)) - (Qg)^(2^k)`` and ``h_k = g^(2^k) - (Qg)^(2^k)``."""
    if not 1 <= k <= MAX_LEVEL:
        raise KernelError(f"level k={k} outside 1..{MAX_LEVEL}")
    P = np.asarray(Q)
    g = np.asarray(g, dtype=float)
    e = 2**k
    Qg = P @ g
    with np.errstate(over="raise"):
        try:
            gp = g**e
            Qgp = Qg**e
        except FloatingPointError as exc:
            raise KernelError(f"g ** {e} overflows") from exc
    h = gp - Qgp
    return DecompositionLevel(k=k, g_k=P @ gp - Qgp, h_k=h, sup_h=float(np.max(np.abs(h))))


def h_factorized(Q: StochasticKernel, g, k: int) -> np.ndarray:
    """``h_k`` as ``(g - Qg)(g + Qg)(g^2 + (Qg)^2)...(g^(2^(k-1)) + (Qg)^(2^(k-1)))``."""
    P = np.asarray(Q)
    g = np.asarray(g, dtype=float)
    Qg = P @ g
    out = g - Qg
    for j in range(k):
        out = out * (g ** (2**j) + Qg ** (2**j))
    return out


def h_sup_cap(k: int, tau: int) -> float:
    """``2^(k-1) ((8/3) tau)^(2^k - 1)``, the sup-norm cap on ``h_k`` for ``||f|| <= 1``."""
    return 2.0 ** (k - 1) * (8.0 / 3.0 * tau) ** (2**k - 1)
