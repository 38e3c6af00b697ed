"""Monte Carlo simulation and analysis of fluorescence state readout for a
single optically trapped atom.

The package models a probe pulse that scatters photons off one hyperfine
state while leaving the other dark, counts detected photons, and classifies
the state by comparing the count to a threshold.  Alongside the simulator it
provides the analytic Poisson model, a threshold optimiser, an error budget,
a trap-depth sweep with probe-parameter optimisation, and a small CLI.
"""

__version__ = "0.1.0"

from .config import (
    DEFAULTS,
    ConfigError,
    constraints_from,
    experiment_from,
    load_config,
    parse_config,
    requested_states,
    sweep_from,
)
from .counts import (
    BRIGHT,
    DARK,
    CountDistribution,
    CountHistogram,
    NoDataError,
    PoissonCounts,
)
from .discrimination import (
    BudgetRow,
    DiscriminationReport,
    ErrorBudget,
    ModelPoint,
    ThresholdPoint,
    ThresholdScan,
    build_report,
    classification_errors,
    error_budget,
    fidelity,
    fit_poisson,
    model_fidelity_curve,
    threshold_scan,
)
from .physics import (
    DetectorConfig,
    ParameterError,
    PhysicalConstants,
    ProbeConfig,
    TrapConfig,
    expected_counts,
    recoil_budget,
    recoil_energy,
    saturation_from_intensity,
    scattering_rate,
)
from .simulation import (
    ExperimentConfig,
    ExperimentResult,
    LossTally,
    NoiseConfig,
    TrialOutcome,
    estimate_probe_loss,
    run_experiment,
    simulate_trial,
    trial_rng,
)
from .sweep import (
    AdiabaticReference,
    InfeasibleSearchError,
    OptimizationConstraints,
    OptimizationResult,
    SweepRow,
    SweepSpec,
    optimize_probe,
    sweep_depths,
)

__all__ = [
    "__version__",
    "DEFAULTS",
    "ConfigError",
    "constraints_from",
    "experiment_from",
    "load_config",
    "parse_config",
    "requested_states",
    "sweep_from",
    "BRIGHT",
    "DARK",
    "CountDistribution",
    "CountHistogram",
    "NoDataError",
    "PoissonCounts",
    "BudgetRow",
    "DiscriminationReport",
    "ErrorBudget",
    "ModelPoint",
    "ThresholdPoint",
    "ThresholdScan",
    "build_report",
    "classification_errors",
    "error_budget",
    "fidelity",
    "fit_poisson",
    "model_fidelity_curve",
    "threshold_scan",
    "DetectorConfig",
    "ParameterError",
    "PhysicalConstants",
    "ProbeConfig",
    "TrapConfig",
    "expected_counts",
    "recoil_budget",
    "recoil_energy",
    "saturation_from_intensity",
    "scattering_rate",
    "ExperimentConfig",
    "ExperimentResult",
    "LossTally",
    "NoiseConfig",
    "TrialOutcome",
    "estimate_probe_loss",
    "run_experiment",
    "simulate_trial",
    "trial_rng",
    "AdiabaticReference",
    "InfeasibleSearchError",
    "OptimizationConstraints",
    "OptimizationResult",
    "SweepRow",
    "SweepSpec",
    "optimize_probe",
    "sweep_depths",
]
