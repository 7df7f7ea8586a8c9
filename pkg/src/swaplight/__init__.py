"""Two-cell atom-light swap squeezing: simulation and temporal-mode analysis."""

from .cascade import (
    CascadeSystem,
    cell_cascade_generators,
    closed_form_io_map,
    input_mode,
    integrated_io_matrix,
    output_mode,
)
from .couplings import (
    AtomicConfig,
    ModeFunction,
    SwapParams,
    couplings_from_physics,
    duan_combination,
    mean_output,
    output_mode_shape,
)
from .gaussian import (
    GaussianState,
    QndLimitError,
    RegimeError,
    SymplecticMap,
    apply_map,
    compose,
    kappa,
    phase_rotation,
    swap_io_map,
    symplectic_eigenvalues,
    symplectic_form,
    vacuum_state,
)
from .homodyne import (
    AcquisitionConfig,
    HomodyneRecord,
    RecordEnsemble,
    SpectrumResult,
    analytic_record_covariance,
    displaced_css,
    expected_power_spectrum,
    power_spectrum,
    shot_noise_reference,
    simulate_cycle,
    simulate_ensemble,
)
from .modes import (
    CovarianceEstimate,
    DuanCertificate,
    ExponentialFit,
    MismatchedModesError,
    ModeSpectrum,
    certify_entanglement,
    estimate_covariance,
    fit_exponential_mode,
    kl_decompose,
    pooled_covariance,
)
from .recordio import read_records, write_records

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig",
    "AtomicConfig",
    "CascadeSystem",
    "CovarianceEstimate",
    "DuanCertificate",
    "ExponentialFit",
    "GaussianState",
    "HomodyneRecord",
    "MismatchedModesError",
    "ModeFunction",
    "ModeSpectrum",
    "QndLimitError",
    "RecordEnsemble",
    "RegimeError",
    "SpectrumResult",
    "SwapParams",
    "SymplecticMap",
    "analytic_record_covariance",
    "apply_map",
    "cell_cascade_generators",
    "certify_entanglement",
    "closed_form_io_map",
    "compose",
    "couplings_from_physics",
    "displaced_css",
    "duan_combination",
    "estimate_covariance",
    "expected_power_spectrum",
    "fit_exponential_mode",
    "input_mode",
    "integrated_io_matrix",
    "kappa",
    "kl_decompose",
    "mean_output",
    "output_mode",
    "output_mode_shape",
    "phase_rotation",
    "pooled_covariance",
    "power_spectrum",
    "read_records",
    "shot_noise_reference",
    "simulate_cycle",
    "simulate_ensemble",
    "swap_io_map",
    "symplectic_eigenvalues",
    "symplectic_form",
    "vacuum_state",
    "write_records",
]
