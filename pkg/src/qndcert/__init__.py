"""Gaussian model of pulsed QND spin measurement with certification.

The package follows one experiment shape end to end: a polarized atomic
ensemble is probed by up to three light pulses whose meter quadratures
pick up the spin component being measured, losses and added technical
noise degrade both, and the recorded meter statistics (minus the
no-atoms reference) are inverted to certify or refute QND behaviour.

Typical entry points: :func:`make_initial_state` and :func:`apply_pulse`
for the covariance-matrix model, :func:`predicted_moments` and
:func:`delta_stats` for the closed-form statistics, :func:`certify` for
the verdicts, and :func:`simulate_shots` for synthetic records.
"""

from .certification import (
    CertificationReport,
    FiguresOfMerit,
    NonClassicality,
    certify,
    holland_figures,
    nonclassicality,
)
from .conditioning import (
    condition_on_component,
    conditional_variance_general,
    conditional_variance_ideal,
)
from .config import ExperimentConfig, load_config
from .core import (
    AtomicBlock,
    GaussianState,
    Layout,
    OpticalBlock,
    get_entry,
    make_initial_state,
)
from .dynamics import (
    ExperimentParams,
    NoiseModel,
    apply_pulse,
    exchange_matrix,
    interaction_matrix,
    noise_matrix,
)
from .errors import (
    ConfigError,
    DegenerateCaseError,
    DimensionMismatchError,
    InconsistentDataError,
    LayoutError,
    NotPositiveSemidefiniteError,
    NotSymmetricError,
    PositivityWarning,
    QndError,
    RecordError,
    SamplerUnsupportedError,
    UndefinedInputError,
    UninformativeCouplingError,
)
from .estimation import (
    EstimatedModel,
    EstimatedNoise,
    estimate_kappa_from_means,
    estimate_noise,
    estimate_ra_from_cov,
    estimate_ra_from_var,
    invert_three_pulse,
)
from .montecarlo import (
    EmpiricalCheck,
    empirical_check,
    params_hash,
    simulate_arm,
    simulate_shots,
)
from .recordio import read_records, write_records
from .report import dump_json, exit_code, report_to_dict
from .selftest import SuiteResult, run_selftest
from .statistics import (
    DeltaStats,
    MomentAccumulator,
    MomentSet,
    ShotRecords,
    SqueezingVerdict,
    conditional_variance_from_stats,
    delta_stats,
    no_atoms_moments,
    predicted_moments,
    sample_moments,
    squeezing_condition,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicBlock",
    "CertificationReport",
    "ConfigError",
    "DegenerateCaseError",
    "DeltaStats",
    "DimensionMismatchError",
    "EmpiricalCheck",
    "EstimatedModel",
    "EstimatedNoise",
    "ExperimentConfig",
    "ExperimentParams",
    "FiguresOfMerit",
    "GaussianState",
    "InconsistentDataError",
    "Layout",
    "LayoutError",
    "MomentAccumulator",
    "MomentSet",
    "NoiseModel",
    "NonClassicality",
    "NotPositiveSemidefiniteError",
    "NotSymmetricError",
    "OpticalBlock",
    "PositivityWarning",
    "QndError",
    "RecordError",
    "SamplerUnsupportedError",
    "ShotRecords",
    "SqueezingVerdict",
    "SuiteResult",
    "UndefinedInputError",
    "UninformativeCouplingError",
    "apply_pulse",
    "certify",
    "condition_on_component",
    "conditional_variance_from_stats",
    "conditional_variance_general",
    "conditional_variance_ideal",
    "delta_stats",
    "dump_json",
    "empirical_check",
    "estimate_kappa_from_means",
    "estimate_noise",
    "estimate_ra_from_cov",
    "estimate_ra_from_var",
    "exchange_matrix",
    "exit_code",
    "get_entry",
    "holland_figures",
    "interaction_matrix",
    "invert_three_pulse",
    "load_config",
    "make_initial_state",
    "no_atoms_moments",
    "noise_matrix",
    "nonclassicality",
    "params_hash",
    "predicted_moments",
    "read_records",
    "report_to_dict",
    "run_selftest",
    "sample_moments",
    "simulate_arm",
    "simulate_shots",
    "squeezing_condition",
    "write_records",
]
