"""Finite-horizon toolkit for ideal limit points, densities and submeasure norms."""

from .ideal import (
    IdealSpec,
    TruncatedSet,
    Verdict,
    WeightFunction,
    compose,
    dominates,
    parse_set_descriptor,
    scale,
    stretchability_check,
    summable_tail,
    upper_alpha_density,
    weighted_upper_density,
)
from .limit_points import (
    IdealLimitPointEstimator,
    cluster_points_estimate,
    diagonal_construct,
    limit_points_estimate,
    neighborhood_index_set,
)
from .sequences import SequenceSource, lpf_sieve, make_sequence, parse_sequence_descriptor
from .submeasure import (
    build_blocks,
    doubling_blocks,
    norm_estimate,
    thinnability_strong_ii_check,
    thinnability_strong_iii_check,
)
from .subsequences import (
    lambda_agreement_experiment,
    lambda_gamma_zero_one_experiment,
    relative_density,
    restrict,
    sample_omega,
)

__version__ = "0.1.0"
