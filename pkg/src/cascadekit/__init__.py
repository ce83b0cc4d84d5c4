"""Mandelbrot multiplicative cascades acting on measures over b-adic symbolic spaces."""

from .analysis import DimensionEstimate, dimension_bounds_check, estimate_limit_dimension, riesz_energy_partial
from .applications import CarpetModel, carpet_dimension, carpet_local_dim_estimate, self_similar_dimension
from .cascade import (
    CascadeTree,
    MassTrajectory,
    conditional_increment,
    limit_cylinder_mass,
    mass_trajectory,
    node_log_weight,
    partition_mass,
    subtree_mass,
)
from .errors import (
    CascadeError,
    InputError,
    NullPathError,
    OutsideSupportError,
    PreconditionError,
    ResourceGuardError,
)
from .measures import (
    Bernoulli,
    Markov,
    MeasureModel,
    Mixture,
    Uniform,
    cylinder_mass,
    entropy,
    local_dimension_trace,
    lq_sum,
    sample_prefix,
)
from .spine import (
    Classification,
    SpineSample,
    Verdict,
    L_statistic,
    S_statistic,
    classify_regularity,
    sample_spine,
    sample_spines,
    walk_trace,
)
from .symbolic import Alphabet, Word, child, format_word, parse_word, ultrametric_distance
from .weights import (
    Discrete,
    LogNormal,
    QAlpha,
    VectorWeightModel,
    WeightModel,
    h_V_nu,
    h_X,
    is_Qalpha_type,
    sample_size_biased_log_weight,
    sample_weight,
)
