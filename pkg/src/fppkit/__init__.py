"""First-passage percolation on Z^d: geodesic lengths, restricted passage times and shift duality."""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    Bernoulli,
    Deterministic,
    Exponential,
    FiniteAtoms,
    UniformContinuous,
    WeightDistribution,
    parse_dist,
)
from .errors import ConfigError, FppError, InconclusiveError, NegativeWeightError, PreconditionError  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .lattice import Environment, Window, parse_window, sample_environment, shift_environment  # noqa: E402
from .standard import (  # noqa: E402
    geodesic_shift_monotonicity,
    geodesic_stats,
    max_length_geodesic,
    min_length_geodesic,
    passage_times,
    shift_sandwich,
)
from .restricted import (  # noqa: E402
    check_G_zero_relation,
    check_T_from_G,
    check_tail_bound,
    estimate_shape,
    restricted_passage,
    restricted_profile,
    shape_point,
)
from .duality import (  # noqa: E402
    build_radial_curve,
    check_derivative_limit,
    check_strict_concavity,
    direct_shift_curve,
    dual_shift_curve,
    find_detour_params,
    lambda_interval,
    mu_from_g,
    trichotomy_report,
)
from .blackbox import BlackBoxParams, Box, box_statistics, boxes_in, crossing, is_black  # noqa: E402
from .experiments import (  # noqa: E402
    ExperimentReport,
    SingularitySet,
    black_box_experiment,
    enumerate_singularity_shifts,
    geodesic_ratio_experiment,
    hw_sandwich_experiment,
    length_gap_experiment,
    singularity_experiment,
)
