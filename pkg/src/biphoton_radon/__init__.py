"""Simulation and analysis of position-momentum entangled photon pairs with Radon tomography."""

from .config import RunConfig, config_hash, load_config, parse_config, serialize_config
from .detection import (
    Basis,
    CoincidenceHistogram,
    DetectorConfig,
    PhiSweep,
    bin_joint_probabilities,
    phi_sweep,
    sample_coincidences,
    sweep_angles,
)
from .errors import (
    BiphotonRadonError,
    ConfigError,
    DegenerateStateError,
    IncomparableSettingsError,
    InsufficientAnglesError,
    InvalidParametersError,
    MissingDataError,
    PhaseWrapWarning,
    UndefinedDeviationError,
    UndefinedDistributionError,
)
from .information import (
    MIKind,
    MIResult,
    RadonMode,
    mi_closed_form,
    mi_discrete,
    mi_radon_full,
    mi_shannon_additive,
    theoretical_max,
)
from .pipeline import RunReport, emit_figure_data, run_pipeline
from .separability import SepBoundReport, compare_settings, conditional_entropy_sum, sep_bound_report
from .state import BiphotonParams, GaussianState4, covariance_from_params, rotate_arm_b
from .tomography import (
    DFTMode,
    Grid2D,
    Sinogram,
    polar_spectrum,
    polar_to_cartesian,
    radon_forward,
    radon_gaussian_analytic,
    reconstruct,
    slice_theorem_check,
)

__version__ = "0.1.0"
