"""Linearized photon-number fluctuations around a stationary operating point.

The fluctuations (dN, dn) relax as ``d/dt (dN, dn) = -A (dN, dn) + q(t)``
with shot noise on the photon channel only. The stationary photon-number
variance has a closed form; :func:`photon_variance_lyapunov` recovers it
independently from the stationary covariance equation.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import linalg, optimize

from .device import (
    DeviceParams,
    _require_lasing,
    carriers_to_amperes,
    current_for_photon_number,
    steady_state,
    threshold_current,
)
from .errors import (
    BelowTransparency,
    MultipleRootsWarning,
    NoRootFound,
    UnstableLinearization,
)

SCAN_POINTS = 400
# photon numbers this close to n_T (relative) are treated as n_T itself
_TRANSPARENCY_SNAP = 1e-12


class Regime(str, enum.Enum):
    """Spontaneous-emission-factor regimes of the noise threshold."""

    ADIABATIC = "adiabatic"
    GAIN_FIXED = "gain-fixed"
    STIMULATED_DOMINATED = "stimulated-dominated"


@dataclass(frozen=True)
class FluctuationRates:
    gamma_n: float
    Gamma_N: float
    omega_R: float
    r: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NoiseResult:
    n_bar: float
    variance: float
    thermal_limit: float
    ratio: float
    fano: float

    def to_dict(self) -> dict:
        return asdict(self)


def _snap(params: DeviceParams, n_bar: float) -> float:
    n_t = params.n_t
    if n_bar < n_t:
        if n_t - n_bar <= _TRANSPARENCY_SNAP * n_t:
            return n_t
        raise BelowTransparency(
            f"n_bar = {n_bar:.6g} is below the transparency photon number "
            f"n_T = {n_t:.6g}; the coupling rate would be imaginary"
        )
    return float(n_bar)


def _rates(params: DeviceParams, n):
    """Rates in s^-1 for scalar or array ``n >= n_T`` (no validation)."""
    beta, N_T, n_t, tau_sp = params.beta, params.N_T, params.n_t, params.tau_sp
    gain_scale = beta * N_T / n_t
    gamma_n = gain_scale * (n_t + 0.5) / (n + 0.5) / tau_sp
    Gamma_N = (1.0 + 2.0 * beta * n) / tau_sp
    omega_R = np.sqrt(2.0 * beta * gain_scale * (n - n_t)) / tau_sp
    r = np.sqrt(N_T / (2.0 * n_t) * (n - n_t) / (n + 0.5) ** 2)
    return gamma_n, Gamma_N, omega_R, r


def fluctuation_rates(params: DeviceParams, n_bar: float) -> FluctuationRates:
    """Relaxation rates, coupling rate and fluctuation ratio at ``n_bar``."""
    n_bar = _snap(params, n_bar)
    return FluctuationRates(*(float(v) for v in _rates(params, n_bar)))


def drift_and_diffusion(rates: FluctuationRates, n_bar: float):
    """Drift matrix ``A`` and diffusion matrix ``B`` of the linear Langevin system.

    State ordering is ``(dN, dn)``. A photon excess depletes the gain
    (upper-right entry ``+r omega_R`` enters with a minus sign in the
    dynamics) while an excitation excess feeds the photon number, so the
    lower-left entry is ``-omega_R / r``. Only the photon channel is driven,
    with strength ``2 n (n + 1) gamma_n``.
    """
    g, G, w, r = rates.gamma_n, rates.Gamma_N, rates.omega_R, rates.r
    lower = -w / r if w != 0.0 else 0.0
    A = np.array([[G, r * w], [lower, g]])
    B = np.zeros((2, 2))
    B[1, 1] = 2.0 * n_bar * (n_bar + 1.0) * g
    return A, B


def _noise_result(n_bar: float, ratio: float) -> NoiseResult:
    thermal = n_bar * (n_bar + 1.0)
    variance = thermal * ratio
    return NoiseResult(n_bar, variance, thermal, ratio, variance / n_bar)


def _suppression(rates: FluctuationRates) -> float:
    """Correction term C in ``<dn^2> = n(n+1) / (1 + C)``."""
    g, G, w = rates.gamma_n, rates.Gamma_N, rates.omega_R
    if w == 0.0:
        return 0.0
    # divide through by omega_R^2 so no rate is squared on its own
    return (G / g) / (1.0 + G * g / w / w + (G / w) * (G / w))


def _suppression_verbatim(rates: FluctuationRates) -> float:
    g, G, w = rates.gamma_n, rates.Gamma_N, rates.omega_R
    return G * w**2 / (g * (w**2 + G * g + G**2))


def photon_variance_closed_form(params: DeviceParams, n_bar: float) -> NoiseResult:
    n_bar = _snap(params, n_bar)
    rates = fluctuation_rates(params, n_bar)
    return _noise_result(n_bar, 1.0 / (1.0 + _suppression(rates)))


def photon_variance_lyapunov(
    params: DeviceParams, n_bar: float, rates: FluctuationRates | None = None
) -> NoiseResult:
    """Photon variance from ``A S + S A^T = B`` for the linear Langevin system.

    ``rates`` overrides the rates computed from ``params``; it exists for
    property tests that perturb the system directly.
    """
    n_bar = _snap(params, n_bar)
    if rates is None:
        rates = fluctuation_rates(params, n_bar)
    A, B = drift_and_diffusion(rates, n_bar)
    eig = np.linalg.eigvals(A)
    if np.any(eig.real <= 0):
        raise UnstableLinearization(
            f"drift matrix is not positive-stable, eigenvalues {eig}", eig
        )
    # Measuring dN in units of s leaves the photon variance unchanged
    # (only the photon channel is driven); pick s to balance the coupling
    # entries, then rescale to O(1) entries.
    if A[0, 1] != 0.0 and A[1, 0] != 0.0:
        s = math.sqrt(abs(A[0, 1] / A[1, 0]))
        A = A.copy()
        A[0, 1] /= s
        A[1, 0] *= s
    scale = np.max(np.abs(A))
    thermal = n_bar * (n_bar + 1.0)
    S = linalg.solve_continuous_lyapunov(A / scale, B / (scale * thermal))
    return _noise_result(n_bar, float(S[1, 1]))


def noise_threshold_condition(params: DeviceParams, n):
    """``Gamma_N omega_R^2 - gamma_n (omega_R^2 + Gamma_N gamma_n + Gamma_N^2)``.

    Evaluated in units of ``tau_sp^-3``. Negative on the thermal side of the
    noise threshold, positive beyond it.
    """
    gamma_n, Gamma_N, omega_R, _ = _rates(params, np.asarray(n, dtype=float))
    g, G, w2 = gamma_n * params.tau_sp, Gamma_N * params.tau_sp, (omega_R * params.tau_sp) ** 2
    return G * w2 - g * (w2 + G * g + G * G)


def noise_threshold_scan_range(params: DeviceParams):
    return params.n_t * (1.0 + 1e-9), 1e3 * (params.n_t + 0.5) / params.beta


def noise_threshold_photon(params: DeviceParams) -> float:
    """Photon number at which the variance falls to half the thermal limit."""
    _require_lasing(params)
    lo, hi = noise_threshold_scan_range(params)
    grid = np.geomspace(lo, hi, SCAN_POINTS)
    values = noise_threshold_condition(params, grid)
    crossings = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0)
    if crossings.size == 0:
        raise NoRootFound(
            f"noise-threshold condition keeps one sign on [{lo:.6g}, {hi:.6g}]",
            (lo, hi),
        )
    if crossings.size > 1:
        warnings.warn(
            f"{crossings.size} sign changes of the noise-threshold condition; "
            "returning the smallest root",
            MultipleRootsWarning,
            stacklevel=2,
        )
    k = crossings[0]
    a, b = grid[k], grid[k + 1]
    if values[k] == 0.0:
        return float(a)
    return optimize.brentq(
        lambda x: float(noise_threshold_condition(params, x)),
        a, b, xtol=1e-14 * a, rtol=1e-12, maxiter=500,
    )


def noise_threshold_current(params: DeviceParams):
    """``(j_half, margin)`` with ``margin = (j_half - j_th) / j_th``."""
    n_half = noise_threshold_photon(params)
    j_half = current_for_photon_number(params, n_half)
    j_th = threshold_current(params)
    return j_half, (j_half - j_th) / j_th


def adiabatic_validity_bound(params: DeviceParams) -> float:
    """Largest beta for which the gain medium can be adiabatically eliminated.

    The elimination needs ``beta`` much smaller than the returned value.
    """
    n_t = params.n_t
    return (n_t / (params.beta * params.N_T)) ** 2 / (2.0 * n_t + 1.0)


def gain_fixed_noise_threshold(params: DeviceParams) -> float:
    return params.beta * params.N_T * (1.0 + 0.5 / params.n_t)


def asymptotic_noise_threshold(params: DeviceParams, regime) -> float:
    regime = Regime(regime)
    if regime is Regime.ADIABATIC:
        return math.sqrt((params.n_t + 0.5) / (2.0 * params.beta))
    if regime is Regime.GAIN_FIXED:
        return gain_fixed_noise_threshold(params)
    return math.sqrt(0.5 * params.N_T * (1.0 + 0.5 / params.n_t))


def classify_regime(params: DeviceParams) -> Regime:
    """Regime of the noise threshold.

    Adiabatic when beta is a decade below :func:`adiabatic_validity_bound`;
    stimulated-dominated when stimulated emission outpaces spontaneous
    relaxation at the gain-fixed noise threshold, ``2 beta n_half > 1``.
    """
    _require_lasing(params)
    if params.beta < 0.1 * adiabatic_validity_bound(params):
        return Regime.ADIABATIC
    if 2.0 * params.beta * gain_fixed_noise_threshold(params) > 1.0:
        return Regime.STIMULATED_DOMINATED
    return Regime.GAIN_FIXED


def piecewise_noise_threshold(beta: float) -> float:
    """Order-of-magnitude noise threshold for laser-diode material constants."""
    if beta < 1e-8:
        return 1.0 / math.sqrt(beta)
    if beta < 1e-4:
        return 1e4
    return 1e2 / math.sqrt(beta)


def piecewise_threshold_margin(beta: float) -> float:
    """Order-of-magnitude ``(j_half - j_th) / j_th`` for laser-diode constants."""
    if beta < 1e-8:
        return 0.0
    if beta < 1e-4:
        return 1e4 * beta
    return 1e2 * math.sqrt(beta)


def noise_report(params: DeviceParams, j: float | None = None,
                 n_bar: float | None = None) -> dict:
    """Report record for one operating point, given either ``j`` or ``n_bar``."""
    if (j is None) == (n_bar is None):
        raise ValueError("give exactly one of j or n_bar")
    if j is None:
        j = current_for_photon_number(params, n_bar)
    else:
        n_bar = steady_state(params, j).n_bar
    result = photon_variance_closed_form(params, n_bar)
    rates = fluctuation_rates(params, result.n_bar)
    regime = classify_regime(params).value if params.is_lasing else None
    return {
        "device": params.to_dict(),
        "j": j,
        "current_mA": carriers_to_amperes(j) * 1e3,
        "n_bar": result.n_bar,
        "rates": rates.to_dict(),
        "variance": result.variance,
        "thermal_limit": result.thermal_limit,
        "ratio": result.ratio,
        "fano": result.fano,
        "regime": regime,
    }


__all__ = [
    "Regime", "FluctuationRates", "NoiseResult", "fluctuation_rates",
    "drift_and_diffusion", "photon_variance_closed_form",
    "photon_variance_lyapunov", "noise_threshold_condition",
    "noise_threshold_photon", "noise_threshold_current",
    "adiabatic_validity_bound", "asymptotic_noise_threshold",
    "classify_regime", "piecewise_noise_threshold",
    "piecewise_threshold_margin", "noise_report",
]
