"""Photon-number statistics of single-mode lasers near and above threshold."""

__version__ = "0.1.0"

from .device import (  # noqa: E402
    DeviceParams,
    OperatingPoint,
    PRESETS,
    current_for_photon_number,
    load_device,
    preset,
    rate_residuals,
    steady_state,
    threshold_current,
    threshold_photon_number,
    transparency_photon_number,
)
from .noise import (  # noqa: E402
    FluctuationRates,
    NoiseResult,
    Regime,
    adiabatic_validity_bound,
    asymptotic_noise_threshold,
    classify_regime,
    drift_and_diffusion,
    fluctuation_rates,
    noise_threshold_current,
    noise_threshold_photon,
    photon_variance_closed_form,
    photon_variance_lyapunov,
)
