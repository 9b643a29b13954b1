"""Quenched large-deviation numerics for random walks in random environment.

Library + CLI covering: environment laws and potentials, the staircase
good-environment event, exact birth-death chain first-passage quantities,
Monte Carlo verification of the hitting-time lemma chain, the annealed
cumulant function with its curvature criterion, and the Bessel-ratio rate
functions of the continuous (drifted Brownian potential) model.
"""

__version__ = "0.1.0"

from .envmodel import (  # noqa: F401
    EnvDistribution,
    Environment,
    GoodEnvParams,
    GoodEnvReport,
    Potential,
    Valley,
    check_good_environment,
    classify_regime,
    good_env_params,
    locate_right_valley,
    potential,
    sample_environment,
    scan_good_environments,
)
from .chainexact import (  # noqa: F401
    LaplaceEval,
    expected_exit_time_bound,
    expected_exit_time_exact,
    hit_prob_before,
    quenched_laplace,
    single_excursion_escape_prob,
)
from .mcsim import (  # noqa: F401
    Estimate,
    HitSample,
    estimate_annealed_damped_moment,
    estimate_quenched_interval_prob,
    simulate_hitting_time,
    sinai_scaling_sample,
    verify_lemma_chain,
    wilson_interval,
)
from .ratediscrete import (  # noqa: F401
    CGFPoint,
    RatePoint,
    annealed_cgf,
    curvature_trend,
    rate_function_table,
)
from .specialcont import (  # noqa: F401
    ContRatePoint,
    asymptotic_checks,
    bessel_k_ratio,
    inverse_speed_rate,
    laplace_exponent,
    riccati_residual,
    speed_rate_point,
    verify_bessel_inequalities,
)
from .kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
