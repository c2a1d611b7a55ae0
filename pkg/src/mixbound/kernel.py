"""Exact analysis of finite-state Markov kernels.

States are labelled ``0, ..., size - 1``. Distributions and test functions are
plain one-dimensional float arrays; kernels are wrapped in
:class:`StochasticKernel` so that validation happens once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

ROW_SUM_TOL = 1e-9
MAX_POWER = 10**6
DEFAULT_HORIZON = 10**4
MIXING_THRESHOLD = 0.25

STATIONARY = "stationary"


class KernelError(ValueError):
    """Raised for malformed kernels, distributions and non-ergodic input."""


@dataclass(frozen=True)
class StochasticKernel:
    rows: np.ndarray

    def __post_init__(self):
        self.rows.setflags(write=False)

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.rows, dtype=dtype)


@dataclass
class ChainModel:
    """A kernel, a test function ``f`` and an initial law (or ``"stationary"``)."""

    kernel: StochasticKernel
    f: np.ndarray
    initial: Union[np.ndarray, str] = STATIONARY
    name: str = "chain"

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        if self.f.shape != (self.kernel.size,):
            raise KernelError(
                f"f has length {self.f.size}, kernel has {self.kernel.size} states"
            )
        if not np.all(np.isfinite(self.f)):
            raise KernelError("f must be finite")
        if isinstance(self.initial, str):
            if self.initial != STATIONARY:
                raise KernelError(f"unknown initial tag {self.initial!r}")
        else:
            self.initial = validate_distribution(self.initial, self.kernel.size)

    @property
    def is_stationary(self) -> bool:
        return isinstance(self.initial, str)


@dataclass(frozen=True)
class MixingProfile:
    """Dobrushin coefficients ``deltas[t-1] = Delta(Q^t)`` and the threshold time.

    ``tau`` is ``None`` when no ``t <= horizon`` brings the coefficient down to
    1/4. In that case ``deltas`` only holds a short probe prefix.
    """

    deltas: np.ndarray
    tau: Optional[int]
    horizon: int = field(default=DEFAULT_HORIZON)

    @property
    def found(self) -> bool:
        return self.tau is not None


def validate_kernel(rows) -> StochasticKernel:
    """Check that ``rows`` is a square row-stochastic matrix and wrap it.

    Row sums may deviate from one by at most ``1e-9``. Rows off by more
    than rounding are renormalised; the rest are kept bit-for-bit, so
    validating an already valid kernel is the identity.
    """
    Q = np.array(rows, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] == 0:
        raise KernelError(f"kernel must be a non-empty square matrix, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise KernelError("kernel entries must be finite")
    bad = np.argwhere(Q < 0)
    if bad.size:
        i, j = bad[0]
        raise KernelError(f"negative entry Q[{i},{j}] = {Q[i, j]!r}")
    bad = np.argwhere(Q > 1)
    if bad.size:
        i, j = bad[0]
        raise KernelError(f"entry Q[{i},{j}] = {Q[i, j]!r} exceeds 1")
    sums = Q.sum(axis=1)
    off = np.abs(sums - 1.0)
    if np.any(off > ROW_SUM_TOL):
        i = int(np.argmax(off))
        raise KernelError(f"row {i} sums to {sums[i]!r}, not 1")
    fix = off > 1e-12
    Q[fix] /= sums[fix, None]
    return StochasticKernel(Q)


def validate_distribution(weights, size: Optional[int] = None) -> np.ndarray:
    w = np.array(weights, dtype=float)
    if w.ndim != 1:
        raise KernelError("distribution must be a vector")
    if size is not None and w.size != size:
        raise KernelError(f"distribution has length {w.size}, expected {size}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise KernelError("distribution entries must be finite and non-negative")
    if abs(w.sum() - 1.0) > ROW_SUM_TOL:
        raise KernelError(f"distribution sums to {w.sum()!r}, not 1")
    return w / w.sum()


def point_mass(z: int, size: int) -> np.ndarray:
    if not 0 <= z < size:
        raise KernelError(f"state {z} outside 0..{size - 1}")
    e = np.zeros(size)
    e[z] = 1.0
    return e


def stationary_distribution(Q: StochasticKernel) -> np.ndarray:
    """Unique invariant law of ``Q`` from the linear system ``pi (Q - I) = 0``.

    One redundant equation is replaced by the normalisation ``sum(pi) = 1``.
    Raises :class:`KernelError` when the eigenvalue 1 has geometric
    multiplicity above one (tolerance ``1e-8`` on singular values).
    """
    P = np.asarray(Q)
    size = P.shape[0]
    A = P.T - np.eye(size)
    sv = np.linalg.svd(A, compute_uv=False)
    if np.count_nonzero(sv <= 1e-8) > 1:
        raise KernelError("kernel has more than one invariant distribution")
    A[-1, :] = 1.0
    b = np.zeros(size)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
        # one step of iterative refinement
        pi += np.linalg.solve(A, b - A @ pi)
    except np.linalg.LinAlgError as exc:
        raise KernelError("invariant distribution is not unique") from exc
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if np.abs(pi @ P - pi).sum() > 1e-10:
        raise KernelError("invariant distribution solve did not converge")
    return pi


def stationary_distribution_power(
    Q: StochasticKernel, tol: float = 1e-13, max_iter: int = 10**6
) -> np.ndarray:
    """Power-iteration cross-check for :func:`stationary_distribution`.

    Only meaningful for aperiodic kernels; raises if ``max_iter`` is reached.
    """
    P = np.asarray(Q)
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = pi @ P
        if np.abs(nxt - pi).sum() <= tol:
            return nxt / nxt.sum()
        pi = nxt
    raise KernelError("power iteration did not converge")


def tv_distance(mu, nu) -> float:
    """Total variation distance ``0.5 * sum |mu - nu|``."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise KernelError(f"length mismatch: {mu.shape} vs {nu.shape}")
    return 0.5 * float(np.abs(mu - nu).sum())


def _row_dobrushin(P: np.ndarray) -> float:
    worst = 0.0
    for i in range(P.shape[0] - 1):
        d = 0.5 * np.abs(P[i + 1:] - P[i]).sum(axis=1).max()
        worst = max(worst, float(d))
    return min(worst, 1.0)


def matrix_power(Q: StochasticKernel, t: int) -> np.ndarray:
    if t < 0 or t > MAX_POWER:
        raise KernelError(f"power {t} outside 0..{MAX_POWER}")
    return np.linalg.matrix_power(np.asarray(Q), int(t))


def dobrushin_coefficient(Q: StochasticKernel, t: int = 1) -> float:
    """``Delta(Q^t)``: the largest TV distance between two rows of ``Q^t``."""
    if t < 1:
        raise KernelError("t must be a positive integer")
    return _row_dobrushin(matrix_power(Q, t))


def mixing_time(Q: StochasticKernel, horizon: int = DEFAULT_HORIZON) -> MixingProfile:
    """Smallest ``t <= horizon`` with ``Delta(Q^t) <= 1/4``.

    Submultiplicativity of the Dobrushin coefficient then gives
    ``0.5 * ||Q^n(z, .) - pi||_TV <= (1/4) ** (n // tau)`` for every ``n``.
    """
    if horizon < 1:
        raise KernelError("horizon must be positive")
    if horizon > MAX_POWER:
        raise KernelError(f"horizon above {MAX_POWER}")
    # Delta(Q^t) is non-increasing in t, so one check at the horizon settles
    # the non-mixing case without a linear scan.
    if _row_dobrushin(matrix_power(Q, horizon)) > MIXING_THRESHOLD:
        probe = [dobrushin_coefficient(Q, t) for t in range(1, min(horizon, 64) + 1)]
        return MixingProfile(np.array(probe), None, horizon)
    P = np.asarray(Q)
    Pt = P.copy()
    deltas = []
    for t in range(1, horizon + 1):
        if t > 1:
            Pt = Pt @ P
        d = _row_dobrushin(Pt)
        deltas.append(d)
        if d <= MIXING_THRESHOLD:
            return MixingProfile(np.array(deltas), t, horizon)
    raise AssertionError("unreachable: horizon check said the chain mixes")


def require_tau(Q: StochasticKernel, horizon: int = DEFAULT_HORIZON) -> int:
    prof = mixing_time(Q, horizon)
    if prof.tau is None:
        raise KernelError(
            f"no mixing time found within {horizon} steps "
            "(periodic, reducible or very slowly mixing kernel)"
        )
    return prof.tau


def kernel_power_apply(Q: StochasticKernel, v, t: int) -> np.ndarray:
    """``Q^t v`` by ``t`` repeated matrix-vector products."""
    P = np.asarray(Q)
    out = np.array(v, dtype=float)
    if out.shape != (P.shape[0],):
        raise KernelError(f"vector length {out.size} does not match kernel size {P.shape[0]}")
    if t < 0:
        raise KernelError("t must be non-negative")
    for _ in range(int(t)):
        out = P @ out
    return out


def uge_envelope(n, tau: int):
    """``(1/4) ** floor(n / tau)``, the uniform ergodicity envelope."""
    return 0.25 ** (np.asarray(n) // tau)


def uge_tail_sum(K: int, tau: int) -> float:
    """``sum_{j > K} (1/4) ** floor(j / tau)`` in closed form."""
    first = K + 1
    q0, r0 = divmod(first, tau)
    return (tau - r0) * 0.25**q0 + tau * 0.25**q0 / 3.0
