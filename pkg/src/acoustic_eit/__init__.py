"""Acoustic transparency simulator and estimation toolkit.

Models a weak surface-acoustic-wave probe scattering off a driven
three-level superconducting artificial atom: closed-form reflection and
transmission spectra, an exact density-matrix oracle, transducer coupling,
pole-based regime classification, least-squares parameter extraction, and a
config-driven experiment harness with a CLI.
"""

from __future__ import annotations

from .errors import (
    ConfigError,
    ConvergenceError,
    RankError,
    SingularModelError,
    SteadyStateError,
    UndefinedPhaseError,
)
from .estimation import (
    RabiPoint,
    SweepSample,
    fit_dip_lorentzian,
    fit_linewidth_line,
    fit_transmission,
    fit_two_level,
    rabi_per_point,
    samples_from_arrays,
    transmission_initial_guess,
)
from .experiments import (
    AtomParams,
    CalibrationParams,
    ExperimentConfig,
    GridSpec,
    IdtParams,
    NoiseParams,
    RunResult,
    SweepRecord,
    export_result,
    import_csv,
    import_json,
    paper_profile,
    resolve_config,
    run_control_sweep,
    run_experiment,
    run_flux_sweep,
    run_linewidth_pipeline,
    run_power_sweep,
    synthesize_noise,
)
from .idt import (
    IdtTransducer,
    acoustic_conductance,
    coupling_rate,
    decay_from_conductance,
    detuning_parameter,
    idt_bandwidth,
)
from .leastsq import FitResult, levenberg_marquardt, weighted_linear_fit
from .lindblad import (
    DeviationReport,
    LiouvillianSpec,
    build_liouvillian,
    hamiltonian,
    jump_operators,
    master_equation_reflection,
    propagate,
    reflection_from_state,
    steady_state,
    steady_state_density_matrix,
    validate_density_matrix,
    weak_probe_deviation,
)
from .model import (
    DipShape,
    DriveCondition,
    ThreeLevelAtom,
    coherence_rates,
    dip_shape,
    eit_linewidth,
    group_delay,
    reflection,
    reflection_coefficient,
    transmission,
    transmission_flux_coefficient,
    transmission_flux_sweep,
)
from .poles import (
    PoleDecomposition,
    Regime,
    RegimeDecision,
    classify_regime,
    poles_and_decomposition,
)
from .units import (
    PowerCalibration,
    angular_to_hz,
    control_rabi_from_power,
    dbm_to_watts,
    hz_to_angular,
    watts_to_dbm,
)

__version__ = "0.1.0"

__all__ = [
    "AtomParams",
    "CalibrationParams",
    "ConfigError",
    "ConvergenceError",
    "DeviationReport",
    "DipShape",
    "DriveCondition",
    "ExperimentConfig",
    "FitResult",
    "GridSpec",
    "IdtParams",
    "IdtTransducer",
    "LiouvillianSpec",
    "NoiseParams",
    "PoleDecomposition",
    "PowerCalibration",
    "RabiPoint",
    "RankError",
    "Regime",
    "RegimeDecision",
    "RunResult",
    "SingularModelError",
    "SteadyStateError",
    "SweepRecord",
    "SweepSample",
    "ThreeLevelAtom",
    "UndefinedPhaseError",
    "acoustic_conductance",
    "angular_to_hz",
    "build_liouvillian",
    "classify_regime",
    "coherence_rates",
    "control_rabi_from_power",
    "coupling_rate",
    "dbm_to_watts",
    "decay_from_conductance",
    "detuning_parameter",
    "dip_shape",
    "eit_linewidth",
    "export_result",
    "fit_dip_lorentzian",
    "fit_linewidth_line",
    "fit_transmission",
    "fit_two_level",
    "group_delay",
    "hamiltonian",
    "hz_to_angular",
    "idt_bandwidth",
    "import_csv",
    "import_json",
    "jump_operators",
    "levenberg_marquardt",
    "master_equation_reflection",
    "paper_profile",
    "poles_and_decomposition",
    "propagate",
    "rabi_per_point",
    "reflection",
    "reflection_coefficient",
    "reflection_from_state",
    "resolve_config",
    "run_control_sweep",
    "run_experiment",
    "run_flux_sweep",
    "run_linewidth_pipeline",
    "run_power_sweep",
    "samples_from_arrays",
    "steady_state",
    "steady_state_density_matrix",
    "synthesize_noise",
    "transmission",
    "transmission_flux_coefficient",
    "transmission_flux_sweep",
    "transmission_initial_guess",
    "validate_density_matrix",
    "watts_to_dbm",
    "weak_probe_deviation",
    "weighted_linear_fit",
]
