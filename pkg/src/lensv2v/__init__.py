"""Lens-array V2V angle-of-arrival localization toolkit.

Signal synthesis for lens and uniform linear arrays, low-complexity AoA
estimation, analytic variance and position/orientation error bounds,
an intersection scenario generator, a cooperative pose solver, and a
seeded Monte Carlo experiment harness.
"""

from .array_model import (
    ArrayConfig,
    ArrayKind,
    SteeringAmplitude,
    critical_angles,
    critical_sines,
    lens_amplitude,
    ula_steering,
)
from .crlb import (
    Fim,
    FimVariant,
    Mu2Convention,
    MuVectors,
    PebReport,
    build_fim,
    crlb_lens,
    crlb_lens_simplified,
    crlb_ula,
    lens_crlb_bounds,
    mu_vectors,
    peb,
    superiority_focal_limit,
)
from .errors import (
    ConfigError,
    DegenerateGeometry,
    DomainError,
    GaugeDeficient,
    LensV2VError,
    RankError,
    SingularFim,
    SingularGeometry,
)
from .estimators import (
    AoAEstimate,
    Dictionary,
    Method,
    max_select,
    ml_grid,
    ml_refined,
    ms_estimate,
    multi_no_sic,
    music,
    r2sa,
    r2sa_opcount,
    sic_multi,
)
from .experiments import (
    ExperimentConfig,
    ResultTable,
    outage_probability,
    rmse_combined,
    rmse_orientation,
    rmse_position,
    run_sweep,
    separation_probability,
)
from .localization import (
    AnchorSpec,
    AoAMeasurementSet,
    Feasibility,
    GaugeMode,
    Measurement,
    PoseEstimate,
    SolverOptions,
    align_similarity,
    discard_low_power,
    feasibility_check,
    objective,
    solve_ml,
    solve_se,
)
from .scenario import (
    ArrayFace,
    IntersectionSpec,
    Link,
    Scenario,
    VehiclePose,
    build_scenario,
    drop_vehicles,
    facing_array,
    pathloss_inv,
    true_aoa,
    wrap_angle,
)
from .signal_model import PathSpec, Snapshot, snr_to_sigma2, synthesize

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig",
    "ArrayKind",
    "SteeringAmplitude",
    "critical_angles",
    "critical_sines",
    "lens_amplitude",
    "ula_steering",
    "Fim",
    "FimVariant",
    "Mu2Convention",
    "MuVectors",
    "PebReport",
    "build_fim",
    "crlb_lens",
    "crlb_lens_simplified",
    "crlb_ula",
    "lens_crlb_bounds",
    "mu_vectors",
    "peb",
    "superiority_focal_limit",
    "ConfigError",
    "DegenerateGeometry",
    "DomainError",
    "GaugeDeficient",
    "LensV2VError",
    "RankError",
    "SingularFim",
    "SingularGeometry",
    "AoAEstimate",
    "Dictionary",
    "Method",
    "max_select",
    "ml_grid",
    "ml_refined",
    "ms_estimate",
    "multi_no_sic",
    "music",
    "r2sa",
    "r2sa_opcount",
    "sic_multi",
    "ExperimentConfig",
    "ResultTable",
    "outage_probability",
    "rmse_combined",
    "rmse_orientation",
    "rmse_position",
    "run_sweep",
    "separation_probability",
    "AnchorSpec",
    "AoAMeasurementSet",
    "Feasibility",
    "GaugeMode",
    "Measurement",
    "PoseEstimate",
    "SolverOptions",
    "align_similarity",
    "discard_low_power",
    "feasibility_check",
    "objective",
    "solve_ml",
    "solve_se",
    "ArrayFace",
    "IntersectionSpec",
    "Link",
    "Scenario",
    "VehiclePose",
    "build_scenario",
    "drop_vehicles",
    "facing_array",
    "pathloss_inv",
    "true_aoa",
    "wrap_angle",
    "PathSpec",
    "Snapshot",
    "snr_to_sigma2",
    "synthesize",
]
