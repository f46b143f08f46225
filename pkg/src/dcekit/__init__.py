"""Dynamical Casimir effect entanglement toolkit.

Gaussian two-mode states, a flux-pumped SQUID source model, shot-noise
calibration of the detection chain, a synthetic data generator and the
analysis that turns quadrature records into entanglement measures.
"""

from .analysis import AnalysisResult, analyze, histogram2d
from .calibration import (
    CalibrationFit,
    ShotNoiseEnv,
    combine_gain_uncertainty,
    fit_calibration,
    flux_pump_slope,
    loss_from_noise,
    photon_number,
    photon_number_error,
    shot_noise_psd,
    thermal_occupation,
)
from .chain_sim import ChainConfig, RecordSet, pump_cycle_dataset, sample_records
from .config import RunConfig, load_config
from .errors import (
    ConfigError,
    DcekitError,
    DomainError,
    FitError,
    NumericalDomainError,
    OnsetNotFoundError,
    SamplingError,
    SchemaVersionError,
    SingularInductanceError,
)
from .gaussian import (
    CovMat4,
    EntanglementReport,
    duan_quantities,
    entanglement_report,
    entropy_of_formation,
    log_negativity,
    purity,
    symplectic_nu_minus,
    tmsv_covariance,
    vacuum,
)
from .rates import SpectralModel, ebit_rate
from .squid import PumpConfig, SquidParams, dce_peak_density, dce_purity, paper_squid_params

__version__ = "0.1.0"
