"""Holomorphic functional calculus for operators on calibrated spaces."""
from .calib import (
    Calibration,
    DerivedSeminorm,
    MixedSeminormValue,
    WeightedSup,
    is_quotient_bounded,
    is_universally_bounded,
    mixed_seminorm,
    mixed_seminorm_estimate,
    norm_P,
    phat,
    principal_closure,
    q_equivalent,
)
from .contour import Circle, Contour, Domain, build_cauchy_contour, cluster_spectrum, winding_number
from .errors import (
    ContourError,
    ConvergenceError,
    DimensionError,
    HolocalcError,
    PreconditionError,
    SingularResolventError,
)
from .funcalc import (
    FuncalcResult,
    OperatorValuedFun,
    apply_funcalc,
    apply_operator_valued,
    composition_check,
    funcalc,
    funcalc_power_series,
    spectral_mapping_check,
    taylor_operators,
)
from .holofun import Compose, Exp, HoloFun, Poly, PowerSeries, Product, Rational, parse_function
from .perturb import PerturbationResult, is_quasinilpotent, perturbation_series
from .projections import (
    ProjectionReport,
    SpectralSet,
    projection_algebra_check,
    resolvent_lower_bound_check,
    spectral_projection,
    verify_resolvent_power_bound,
)
from .renorm import (
    RenormedCalibration,
    SpectrumClassification,
    classify_spectrum,
    joint_renorm_commuting,
    lb_radius,
    renorm_bounded,
    renorm_spectral,
    spectrum_coincidence,
    spectrum_intersection_check,
)
from .spectral import (
    ResolventCache,
    SpectralRadiusEstimate,
    Spectrum,
    eigenvalues,
    neumann_resolvent,
    resolvent_direct,
    spectral_radius,
    verify_resolvent_identities,
)

__version__ = "0.1.0"
