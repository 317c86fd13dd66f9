"""Two-timescale training of shallow step networks.

A numpy/scipy library for studying gradient-based training of univariate
(and additive multivariate) shallow networks whose inner layer only
translates a localized non-linearity.  It provides exact population losses
and gradients for staircase targets, the reduced and smooth two-timescale
limit flows, the full coupled gradient flow, the two-timescale SGD iteration,
initialization certificates, and slow brute-force oracles that certify every
closed form.
"""

from .activation import Activation, heaviside, relu, smooth_sigmoid
from .dynamics import (
    FlowAbort,
    FlowConfig,
    alignment_report,
    integrate_full_flow,
    integrate_limit_reduced,
    integrate_limit_smooth,
    recovery_horizon,
)
from .initialization import GoodnessReport, estimate_good_probability, is_spread_good, sample_init
from .network import AdditiveNetworkState, NetworkState, forward, population_gradient, sample_gradient
from .quadratic import (
    Spacing,
    best_fit,
    best_fit_heaviside,
    hessian,
    linear_term,
    loss,
    min_eigenvalue,
    min_gap,
    reduced_loss,
    spacing,
    step_fit,
)
from .records import RunRecord
from .sgd import SgdConfig, l2_distance_estimate, sample_batch, sgd_step, train
from .targets import (
    AdditiveTarget,
    ClassParams,
    PiecewiseConstantTarget,
    ReluAffineTarget,
    sample_target,
    validate_class,
)

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "AdditiveNetworkState",
    "AdditiveTarget",
    "ClassParams",
    "FlowAbort",
    "FlowConfig",
    "GoodnessReport",
    "NetworkState",
    "PiecewiseConstantTarget",
    "ReluAffineTarget",
    "RunRecord",
    "SgdConfig",
    "Spacing",
    "alignment_report",
    "best_fit",
    "best_fit_heaviside",
    "estimate_good_probability",
    "forward",
    "heaviside",
    "hessian",
    "integrate_full_flow",
    "integrate_limit_reduced",
    "integrate_limit_smooth",
    "is_spread_good",
    "l2_distance_estimate",
    "linear_term",
    "loss",
    "min_eigenvalue",
    "min_gap",
    "population_gradient",
    "recovery_horizon",
    "reduced_loss",
    "relu",
    "sample_batch",
    "sample_gradient",
    "sample_init",
    "sample_target",
    "sgd_step",
    "smooth_sigmoid",
    "spacing",
    "step_fit",
    "train",
    "validate_class",
]
