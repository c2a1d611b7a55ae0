"""Closed-form moment and deviation bounds with their absolute constants.

Every bound is returned either as a float or as a :class:`BoundBreakdown`
whose named terms add up to the total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Sequence

E = math.e
LN4 = math.log(4.0)
MIN_DELTA_EXPONENT = 2.0
EXP_OVERFLOW = 700.0


class BoundDomainError(ValueError):
    pass


@dataclass(frozen=True)
class ConstantTable:
    """Martingale Rosenthal constants and the constants derived from them."""

    C_rm1: float = 60.0 * E
    C_rm2: float = 60.0

    @property
    def D_aux1(self) -> float:
        return 16.0 / 3.0 * self.C_rm1

    @property
    def D_aux2(self) -> float:
        return 8.0 * self.C_rm2

    @property
    def D_rec1(self) -> float:
        return math.sqrt(19.0 / 3.0) * math.sqrt(self.C_rm1)

    @property
    def D_rec2(self) -> float:
        return 3.0 * math.sqrt(self.C_rm2)

    @property
    def D_thm1(self) -> float:
        return 16.0 / 3.0 * math.sqrt(19.0 / 3.0) * self.C_rm1

    @property
    def D_thm2(self) -> float:
        return 64.0 / 3.0 * (math.sqrt(self.C_rm2) * self.C_rm1**2 + self.C_rm2)

    def as_dict(self) -> Dict[str, float]:
        names = ("C_rm1", "C_rm2", "D_aux1", "D_aux2", "D_rec1", "D_rec2", "D_thm1", "D_thm2")
        return {k: getattr(self, k) for k in names}


CONSTANTS = ConstantTable()


@dataclass(frozen=True)
class BoundBreakdown:
    terms: Dict[str, float]
    inputs: Dict[str, object] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return math.fsum(self.terms.values())


@dataclass(frozen=True)
class BernsteinThreshold:
    """Both readings of the high-probability threshold at level ``delta``.

    ``literal`` drops the factor ``e`` from every term; ``conservative`` is
    ``e * phi(ln(1/delta))`` with ``phi`` the full Rosenthal bound, the form
    Markov's inequality at ``p = ln(1/delta)`` actually delivers. ``value``
    is the conservative one.
    """

    delta: float
    log_inv_delta: float
    literal: float
    conservative: float

    @property
    def value(self) -> float:
        return self.conservative


def _check_p(p: float, lo: float = 2.0) -> None:
    if not p >= lo:
        raise BoundDomainError(f"moment order p={p} must be >= {lo}")


def p_log2_2p(p: float) -> float:
    return p * math.log2(2.0 * p)


def rosenthal_bound(
    p: float,
    n: int,
    tau: int,
    sigma: float,
    from_stationary: bool = True,
    constants: ConstantTable = CONSTANTS,
) -> BoundBreakdown:
    """Rosenthal-type bound on ``E^{1/p} |S_n|^p`` for ``||f||_inf <= 1``.

    With ``from_stationary=False`` the bound covers an arbitrary initial law
    and carries the extra ``2 D_thm2 tau p log2(2p)`` correction.
    """
    _check_p(p)
    c = constants
    plog = p_log2_2p(p)
    terms = {
        "variance": c.C_rm1 * math.sqrt(2.0) * math.sqrt(p) * math.sqrt(n) * sigma,
        "quarter": c.D_thm1 * n**0.25 * tau**0.75 * plog,
        "tau": c.D_thm2 * tau * plog,
    }
    if not from_stationary:
        terms["ksi_correction"] = 2.0 * c.D_thm2 * tau * plog
    return BoundBreakdown(
        terms, dict(p=p, n=n, tau=tau, sigma=sigma, from_stationary=from_stationary)
    )


def dyadic_rosenthal_bound(
    s: int, n: int, tau: int, sigma: float, constants: ConstantTable = CONSTANTS
) -> BoundBreakdown:
    """The intermediate bound at ``p = 2^s`` before Lyapunov interpolation.

    The ``tau`` term uses ``D_thm2 / 2``; the printed display has ``D_thm1 / 2``
    there, which the preceding derivation does not support.
    """
    if s < 1:
        raise BoundDomainError("s must be >= 1")
    c = constants
    p = 2.0**s
    plog = p * s
    terms = {
        "variance": c.C_rm1 * math.sqrt(p) * math.sqrt(n) * sigma,
        "quarter": c.D_thm1 / 2.0 * n**0.25 * tau**0.75 * plog,
        "tau": c.D_thm2 / 2.0 * tau * plog,
    }
    return BoundBreakdown(terms, dict(p=p, n=n, tau=tau, sigma=sigma, from_stationary=True))


def auxiliary_rosenthal_bound(
    p: float, n: int, tau: int, constants: ConstantTable = CONSTANTS
) -> BoundBreakdown:
    _check_p(p)
    c = constants
    terms = {
        "sqrt": c.D_aux1 * math.sqrt(n * tau * p),
        "linear": c.D_aux2 * tau * p,
    }
    return BoundBreakdown(terms, dict(p=p, n=n, tau=tau))


def crude_variance_bound(n: int, tau: int) -> float:
    """``(1 + 4/sqrt(3)) sqrt(n tau)`` on ``E^{1/2} |S_n|^2``."""
    return (1.0 + 4.0 / math.sqrt(3.0)) * math.sqrt(n * tau)


def poisson_variance_bound(n: int, tau: int, sigma: float) -> float:
    """``sqrt(n) sigma + (16/3) tau`` on ``E^{1/2} |S_n|^2``."""
    return math.sqrt(n) * sigma + 16.0 / 3.0 * tau


def _log_inv_delta(delta: float) -> float:
    if not 0.0 < delta <= math.exp(-MIN_DELTA_EXPONENT):
        raise BoundDomainError(f"delta={delta} outside (0, e^-2]")
    # guard against ln(1/e^-2) rounding to just below 2
    return max(-math.log(delta), MIN_DELTA_EXPONENT)


def tilde_ln(s: float) -> float:
    """``ln(s) log2(2 ln(s))``."""
    ls = math.log(s)
    return ls * math.log2(2.0 * ls)


def deviation_from_moments(phi: Callable[[float], float], delta: float) -> float:
    """Threshold ``e * phi(ln(1/delta))`` exceeded with probability at most ``delta``."""
    return E * phi(_log_inv_delta(delta))


def bernstein_threshold(
    delta: float,
    n: int,
    tau: int,
    sigma: float,
    constants: ConstantTable = CONSTANTS,
) -> BernsteinThreshold:
    lp = _log_inv_delta(delta)
    c = constants
    tl = lp * math.log2(2.0 * lp)
    literal = (
        c.C_rm1 * math.sqrt(2.0) * math.sqrt(n * lp) * sigma
        + c.D_thm1 * n**0.25 * tau**0.75 * tl
        + c.D_thm2 * tau * tl
    )
    conservative = deviation_from_moments(
        lambda p: rosenthal_bound(p, n, tau, sigma, True, c).total, delta
    )
    return BernsteinThreshold(delta, lp, literal, conservative)


def coupling_moment_bound(p: float, tau: int) -> float:
    """``1 + 128 (tau / ln 4)^p Gamma(p + 1)``; ``inf`` when the term overflows."""
    if not p >= 1.0:
        raise BoundDomainError(f"p={p} must be >= 1")
    log_term = p * math.log(tau / LN4) + math.lgamma(p + 1.0)
    if log_term > EXP_OVERFLOW:
        return math.inf
    return 1.0 + 128.0 * math.exp(log_term)


def _check_nonneg(name: str, values: Sequence[float]) -> None:
    for v in values:
        if v < 0 or math.isnan(v):
            raise BoundDomainError(f"{name} entries must be non-negative, got {v}")


def recursion_closed_form(a, b, c, r_m: float) -> float:
    """Upper bound on ``r_1`` when ``r_k <= a_k sqrt(r_{k+1}) + b_k + c_k``, ``k < m``."""
    a, b, c = list(a), list(b), list(c)
    if not len(a) == len(b) == len(c):
        raise BoundDomainError("a, b, c must have equal length m - 1")
    _check_nonneg("a", a)
    _check_nonneg("b", b)
    _check_nonneg("c", c)
    _check_nonneg("r_m", [r_m])
    m = len(a) + 1
    prefix = 1.0
    tail = []
    for ell in range(1, m):
        w = 0.5 ** (ell - 1)
        tail.append(prefix * (b[ell - 1] ** w + c[ell - 1] ** w))
        prefix *= a[ell - 1] ** w
    return prefix * r_m ** (0.5 ** (m - 1)) + math.fsum(tail)


def corollary_coefficients(alpha, beta, gamma, kappa0, kappa1, s):
    """The ``(a_k, b_k, c_k)``, ``k = 1..s-2``, fed to :func:`recursion_closed_form`."""
    ks = range(1, s - 1)
    a = [alpha**0.5 * 2.0 ** ((s - k) / 4.0) for k in ks]
    b = [kappa0 * beta ** (2 ** (k - 1)) * 2.0 ** (k / 4.0) * 2.0 ** (s / 4.0) for k in ks]
    c = [kappa1 * gamma ** (2 ** (k - 1)) * 2.0 ** (s / 2.0) for k in ks]
    return a, b, c


def recursion_corollary_bound(alpha, beta, gamma, kappa0, kappa1, s: int, r_last: float) -> float:
    """``alpha 2^{s/2} r_last^{1/2^{s-2}} + alpha (beta kappa0 + gamma kappa1) 2^{s/2} (s-2)``."""
    if s < 2 or int(s) != s:
        raise BoundDomainError("s must be an integer >= 2")
    for name, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        if not v >= 1.0:
            raise BoundDomainError(f"{name}={v} must be >= 1")
    _check_nonneg("kappa", [kappa0, kappa1])
    _check_nonneg("r_last", [r_last])
    head = alpha * 2.0 ** (s / 2.0) * r_last ** (0.5 ** (s - 2))
    return head + alpha * (beta * kappa0 + gamma * kappa1) * 2.0 ** (s / 2.0) * (s - 2)


def level_recurrence_rhs(r_next: float, k: int, s: int, n: int, tau: int, constants: ConstantTable = CONSTANTS) -> float:
    """Right-hand side of the recurrence bounding ``R_{k,s}`` by ``R_{k+1,s}``."""
    c = constants
    base = (8.0 * tau / 3.0) ** (2 ** (k - 1))
    return (
        math.sqrt(c.C_rm1) * 2.0 ** ((s - k) / 4.0) * math.sqrt(r_next)
        + (16.0 / 3.0) ** -0.5 * tau**-0.25 * c.D_rec1 * n**0.25 * base * 2.0 ** ((s + k) / 4.0)
        + c.D_rec2 * 2.0 ** (s / 2.0) * base
    )
