"""Generalized high-moment Jarque-Bera goodness-of-fit tests.

Tests whether data follow an arbitrary hypothesized distribution with enough
finite moments, using normalized centered moments of orders up to ``2k`` and
exact asymptotic variances built from influence polynomials.
"""

from .errors import (
    DegenerateSample,
    HMJBError,
    InvalidParam,
    NoCdf,
    NotSampleable,
    NotSymmetric,
    OrderExceeded,
    SingularCovariance,
)
from .families import FunctionFamily, exact_T, square_family, theta_power_family
from .harness import SimulationConfig, SimulationResult, run_replications, sample_model
from .influence import build_A, build_B, build_C, build_D, build_influence, jb_coefficients, plugin_sigma2
from .moments import (
    MomentModel,
    central_from_raw,
    double_gamma_moments,
    empirical_moments,
    laplace_moments,
    normal_moments,
    theoretical_ncem,
)
from .polymoment import MomentSequence, Polynomial, covariance, expect, variance
from .stats import (
    TestReport,
    chi2_general,
    chi2_symmetric,
    classical_jb,
    general_test,
    ks_test,
    sample_ncem,
    statistic_T,
)

__version__ = "0.1.0"
