"""Concentration bounds for additive functionals of finite uniformly ergodic chains."""

from ._backend import DEFAULT as BACKEND
from .bounds import (
    CONSTANTS,
    BoundBreakdown,
    auxiliary_rosenthal_bound,
    bernstein_threshold,
    coupling_moment_bound,
    crude_variance_bound,
    deviation_from_moments,
    poisson_variance_bound,
    recursion_closed_form,
    recursion_corollary_bound,
    rosenthal_bound,
)
from .chains import generate_chain, parse_chain_spec
from .exact import coupling_moment, coupling_tail, exact_second_moment
from .kernel import (
    ChainModel,
    KernelError,
    MixingProfile,
    StochasticKernel,
    dobrushin_coefficient,
    kernel_power_apply,
    mixing_time,
    stationary_distribution,
    tv_distance,
    validate_kernel,
)
from .montecarlo import (
    CertifyConfig,
    MomentEstimate,
    Verdict,
    certify,
    estimate_moment,
    estimate_R_ks,
    estimate_tail,
    simulate_paths,
)
from .poisson import (
    asymptotic_variance_poisson,
    asymptotic_variance_series,
    decomposition_level,
    solve_poisson_direct,
    solve_poisson_series,
)

__version__ = "0.1.0"
