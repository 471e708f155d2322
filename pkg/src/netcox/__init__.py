"""Gaussian processes and Cox point processes on linear networks.

Networks are built from vertex coordinates and segments
(:func:`build_network`).  Distances use either the geodesic metric or the
effective resistance metric (:func:`make_metric`); isotropic covariances
of the resistance metric are valid on every network, geodesic ones only
on 1-sums of trees and loops.  On top of that sit Gaussian field
simulators, log-Gaussian, interrupted and permanental Cox processes,
kernel estimators of the pair correlation and K functions, minimum
contrast fitting and global envelope tests.
"""
__version__ = "0.1.0"

from .covariance import (
    BernsteinMixture,
    Dagum,
    Degenerate,
    Gamma,
    GeneralizedCauchy,
    GeneralizedInverseGaussian,
    InverseGamma,
    IsotropicCovariance,
    Matern,
    PoweredExponential,
    validate_for_network,
)
from .cox import (
    Constant,
    CoxModel,
    CoxSimulator,
    PiecewiseConstant,
    PointPattern,
    cluster_index,
    mean_selection_prob,
    pcf_closed_form,
    simulate_cox,
    simulate_poisson,
)
from .estimators import (
    IntensityEstimator,
    KFunctionEstimator,
    MinContrastCoxEstimator,
    PCFEstimator,
)
from .exceptions import NetcoxError
from .gp_sim import simulate_gp
from .inference import (
    ContrastConfig,
    estimate_intensity,
    estimate_K,
    estimate_pcf,
    fit_min_contrast,
    fit_pattern,
)
from .metrics import (
    build_resistance,
    geodesic_distance,
    make_metric,
    resistance_derivative,
    resistance_distance,
    weight_w,
)
from .network import LinearNetwork, NetPoint, build_network, make_grid
from .summaries import empirical_FGJ, envelope_pipeline, global_envelope_test
