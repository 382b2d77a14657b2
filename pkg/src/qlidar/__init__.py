"""Thresholded photon-counting LIDAR simulation.

Photon-number statistics for signal and background light (with log-normal
scintillation), ideal and multiplexed click detectors, and a Monte Carlo
estimate of how often a thresholded two-bin vote picks the bin that holds
the return pulse.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, NumericalError, QlidarError  # noqa: E402
from .photon_statistics import (  # noqa: E402
    Pmf,
    pmf_convolve,
    pmf_moments,
    pmf_poisson,
    pmf_sample,
    pmf_thermal,
)
from .scintillation import ScintillationParams, pmf_scintillated  # noqa: E402
from .detectors import DetectorModel, click_distribution, mean_clicks  # noqa: E402
from .decision import (  # noqa: E402
    DecisionPolicy,
    EstimateResult,
    Verdict,
    bin_exceedance,
    estimate_success_probability,
    exact_outcome_probabilities,
    exact_success_probability,
    run_trial,
    sweep,
)
from .scenario import (  # noqa: E402
    PRESETS,
    ScenarioConfig,
    SweepResult,
    build_bin_distributions,
    emit,
    run_scenario,
)

__all__ = [
    "ConfigError",
    "DecisionPolicy",
    "DetectorModel",
    "DomainError",
    "EstimateResult",
    "NumericalError",
    "PRESETS",
    "Pmf",
    "QlidarError",
    "ScenarioConfig",
    "ScintillationParams",
    "SweepResult",
    "Verdict",
    "bin_exceedance",
    "build_bin_distributions",
    "click_distribution",
    "emit",
    "estimate_success_probability",
    "exact_outcome_probabilities",
    "exact_success_probability",
    "mean_clicks",
    "pmf_convolve",
    "pmf_moments",
    "pmf_poisson",
    "pmf_sample",
    "pmf_scintillated",
    "pmf_thermal",
    "run_scenario",
    "run_trial",
    "sweep",
]
