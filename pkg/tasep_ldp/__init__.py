"""
tasep-ldp - Block-density large deviations of the semi-infinite TASEP.

This package provides the exact matrix product stationary measure, the
normal-ordering coefficients of (e^theta D + E)^n, the cumulant generating
function with its bounds, the rate function and a kinetic Monte Carlo
simulator to check them against.
"""

__version__ = "0.1.0"

# Import core functionality with explicit __all__ to avoid F403/F401 issues
from .acceptance import *  # noqa: F403, F401
from .cgf import *  # noqa: F403, F401
from .core import *  # noqa: F403, F401
from .ldp import *  # noqa: F403, F401
from .mpa import *  # noqa: F403, F401
from .normalorder import *  # noqa: F403, F401
from .params import *  # noqa: F403, F401
from .reports import *  # noqa: F403, F401
from .sim import *  # noqa: F403, F401

# The command line lives in tasep_ldp.cli and is not imported here
# Import with: from tasep_ldp.cli import run_cli

# Define what gets imported with "from tasep_ldp import *"
__all__ = [
    # Errors and parsing
    "TasepError",
    "OutOfRange",
    "UncoveredRegime",
    "TruncationTooSmall",
    "DegenerateSpectrum",
    "DivergentSeries",
    "EmptyWeightInterval",
    "NoConvergence",
    "UsageError",
    "CheckFailed",
    "as_rational",
    # Parameters
    "Regime",
    "Params",
    "ThetaBreakpoints",
    "classify_regime",
    "make_params",
    "theta_breakpoints",
    # Matrix product measure
    "TruncatedSystem",
    "build_truncated_system",
    "verify_mpa_relations",
    "wv_closed",
    "wDv_closed",
    "wDv_truncated",
    "contraction",
    "moment_power",
    "measure_prob",
    "configuration_probabilities",
    "DensityDistribution",
    "block_density_distribution",
    "liggett_relations_check",
    # Normal ordering
    "CoeffTable",
    "coeff_table_rec1",
    "coeff_table_rec2",
    "coeff_tables",
    "f_pp_closed",
    "f_p0_closed",
    "check_symmetry",
    "binom_identity_sides",
    "table_mass",
    "reconstruct_moment_sum",
    # Cumulant generating function
    "Branch",
    "CgfValue",
    "ToeplitzWeight",
    "weight_interval",
    "symbol",
    "spectral_radius_weighted",
    "symbol_image_max_modulus",
    "cgf_upper",
    "cgf_lower",
    "cgf_closed",
    "cgf_finite_n",
    "variational_lb_numeric",
    # Rate function
    "Piece",
    "RatePoint",
    "PhaseReport",
    "rate_closed",
    "rate_numeric",
    "phase_points",
    "default_z_grid",
    # Simulation
    "InitialCondition",
    "SimConfig",
    "SimState",
    "EmpiricalDistribution",
    "init_chain",
    "advance",
    "sample_block_density",
    "empirical_rate_curve",
    "run_replicas",
    # Verification
    "RelationCheck",
    "CheckReport",
    "AcceptanceRunner",
]
