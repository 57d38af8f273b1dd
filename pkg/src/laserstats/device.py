"""Device parameters and the stationary single-mode rate-equation model.

State variables are the excitation number ``N`` of the gain medium and the
photon number ``n`` of the lasing mode. All rates are in s^-1 and the pump
``j`` is in carriers per second; :func:`carriers_to_amperes` converts to a
current for presentation.

    dN/dt = j - N/tau_sp - 2 (beta/tau_sp) (N - N_T) n
    dn/dt = 2 (beta/tau_sp) (N - N_T) n - n/tau_cav + beta N/tau_sp
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    InconsistentDeviceFile,
    InvalidParameters,
    NegativeInput,
    NonLasingDevice,
)

ELEMENTARY_CHARGE = 1.602176634e-19  # C

# Gain-medium constants of typical laser diodes.
BETA_VOLUME_CM3 = 1e-14
TRANSPARENCY_DENSITY_CM3 = 1e18
TAU_SP_S = 3e-9
DEFAULT_N_T = 1.5


@dataclass(frozen=True)
class DeviceParams:
    """The four device parameters of a single-mode laser.

    Parameters
    ----------
    beta : float
        Spontaneous emission factor, 0 < beta <= 1.
    N_T : float
        Excitation number of the gain medium at transparency.
    tau_sp : float
        Spontaneous relaxation time of the excitations (s).
    tau_cav : float
        Photon lifetime in the cavity (s).

    The transparency photon number ``n_t = beta * N_T * tau_cav / tau_sp`` is
    derived on construction. Devices with ``n_t <= 0.5`` can be built but are
    flagged by :attr:`is_lasing` and rejected by the threshold operations.
    """

    beta: float
    N_T: float
    tau_sp: float
    tau_cav: float
    n_t: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("beta", "N_T", "tau_sp", "tau_cav"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameters(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not 0.0 < self.beta <= 1.0:
            raise InvalidParameters(f"beta must lie in (0, 1], got {self.beta}")
        if self.N_T <= 0 or self.tau_sp <= 0 or self.tau_cav <= 0:
            raise InvalidParameters("N_T, tau_sp and tau_cav must be positive")
        object.__setattr__(
            self, "n_t", self.beta * self.N_T * self.tau_cav / self.tau_sp
        )

    @property
    def is_lasing(self) -> bool:
        return self.n_t > 0.5

    @property
    def transparency_current(self) -> float:
        """Pump rate N_T / tau_sp at which the gain medium reaches transparency."""
        return self.N_T / self.tau_sp

    @classmethod
    def from_material(
        cls,
        beta: float,
        n_t: float = DEFAULT_N_T,
        tau_sp: float = TAU_SP_S,
        beta_volume: float = BETA_VOLUME_CM3,
        transparency_density: float = TRANSPARENCY_DENSITY_CM3,
    ) -> "DeviceParams":
        """Build a device from gain-medium constants.

        The mode volume follows from ``V = beta_volume / beta``, so
        ``N_T = transparency_density * V`` and the cavity lifetime is chosen to
        give the requested transparency photon number.
        """
        if beta <= 0:
            raise InvalidParameters(f"beta must be positive, got {beta}")
        N_T = transparency_density * beta_volume / beta
        tau_cav = n_t * tau_sp / (beta * N_T)
        return cls(beta, N_T, tau_sp, tau_cav)

    def with_beta(self, beta: float, covary: bool = True) -> "DeviceParams":
        """Copy with a new beta.

        With ``covary`` the product ``beta * N_T`` and ``n_t`` are held fixed,
        which is what keeping the gain-medium constants fixed while shrinking
        the mode volume amounts to.
        """
        if not covary:
            return DeviceParams(beta, self.N_T, self.tau_sp, self.tau_cav)
        N_T = self.beta * self.N_T / beta
        tau_cav = self.n_t * self.tau_sp / (beta * N_T)
        return DeviceParams(beta, N_T, self.tau_sp, tau_cav)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "N_T": self.N_T,
            "tau_sp_s": self.tau_sp,
            "tau_cav_s": self.tau_cav,
        }


@dataclass(frozen=True)
class OperatingPoint:
    j: float
    n_bar: float
    N_bar: float

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "current_mA": carriers_to_amperes(self.j) * 1e3,
            "n_bar": self.n_bar,
            "N_bar": self.N_bar,
        }


PRESETS = {
    "reference": DeviceParams(1e-5, 1e9, 3e-9, 4.5e-13),
    "toy-a": DeviceParams(0.1, 500.0, 1.0, 0.02),
    "toy-b": DeviceParams(0.02, 5000.0, 1.0, 0.015),
}
PRESETS["default"] = PRESETS["reference"]


def preset(name: str) -> DeviceParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidParameters(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}"
        ) from None


def carriers_to_amperes(j: float) -> float:
    return j * ELEMENTARY_CHARGE


def amperes_to_carriers(current: float) -> float:
    return current / ELEMENTARY_CHARGE


def _require_lasing(params: DeviceParams) -> None:
    if not params.is_lasing:
        raise NonLasingDevice(
            f"transparency photon number n_T = {params.n_t:.6g} <= 0.5; "
            "the device cannot reach threshold"
        )


def _check_nonnegative(**values) -> None:
    for name, value in values.items():
        if value < 0 or math.isnan(value):
            raise NegativeInput(f"{name} must be >= 0, got {value}")


def transparency_photon_number(params: DeviceParams) -> float:
    return params.beta * params.N_T * params.tau_cav / params.tau_sp


def _threshold_current_unchecked(p: DeviceParams) -> float:
    return (p.N_T / p.tau_sp) * (
        (1.0 + 0.5 / p.n_t) - p.beta * (1.0 + 1.0 / p.n_t)
    )


def threshold_current(params: DeviceParams) -> float:
    """Pump rate at which the light-current curve turns from slope ~0 to slope one."""
    _require_lasing(params)
    return _threshold_current_unchecked(params)


def threshold_photon_number(params: DeviceParams) -> float:
    """Photon number at the threshold current, valid for beta well below one."""
    _require_lasing(params)
    return math.sqrt((params.n_t + 0.5) / (2.0 * params.beta))


def threshold_transition_width(params: DeviceParams) -> float:
    """Width of the threshold transition relative to the threshold current.

    Measured as the pump interval over which the normalized slope
    ``tau_cav^-1 dn/dj`` climbs from 0.1 to 0.9, divided by ``j_th``.
    """
    j_th = threshold_current(params)
    c = 1.0 / params.tau_cav
    return (8.0 / 3.0) * math.sqrt(c * (2.0 * j_th + c)) / j_th


def excitation_number(params: DeviceParams, n_bar: float) -> float:
    """Stationary excitation number that holds ``n_bar`` photons steady."""
    n_t = params.n_t
    return params.N_T * n_bar * (2.0 * n_t + 1.0) / (n_t * (2.0 * n_bar + 1.0))


def steady_state(params: DeviceParams, j: float) -> OperatingPoint:
    """Stable stationary point of the rate equations at pump ``j``."""
    _check_nonnegative(j=j)
    j = float(j)
    c = 1.0 / params.tau_cav
    j_th = _threshold_current_unchecked(params)
    # x = n/tau_cav is the positive root of x^2 + b x - c j / 2 = 0
    b = j_th + c - j
    root = math.hypot(b, math.sqrt(2.0 * c * j))
    if b > 0:
        x = c * j / (b + root)
    else:
        x = 0.5 * (root - b)
    n_bar = x * params.tau_cav
    return OperatingPoint(j, n_bar, excitation_number(params, n_bar))


def current_for_photon_number(params: DeviceParams, n_bar: float) -> float:
    """Pump rate whose stationary photon number is ``n_bar``."""
    _check_nonnegative(n_bar=n_bar)
    N_bar = excitation_number(params, n_bar)
    return (1.0 - params.beta) * N_bar / params.tau_sp + n_bar / params.tau_cav


def rate_residuals(params: DeviceParams, N: float, n: float, j: float):
    """Right-hand sides ``(dN/dt, dn/dt)`` of the rate equations."""
    _check_nonnegative(N=N, n=n, j=j)
    g = 2.0 * params.beta / params.tau_sp
    stimulated = g * (N - params.N_T) * n
    dN = j - N / params.tau_sp - stimulated
    dn = stimulated - n / params.tau_cav + params.beta * N / params.tau_sp
    return dN, dn


def _material_to_canonical(beta, tau_sp, material):
    try:
        beta_volume = float(material["betaV_cm3"])
        density = float(material["NT_per_cm3"])
        n_t = float(material["n_T"])
    except KeyError as exc:
        raise InvalidParameters(f"material block is missing {exc}") from None
    return DeviceParams.from_material(
        beta, n_t=n_t, tau_sp=tau_sp, beta_volume=beta_volume,
        transparency_density=density,
    )


def device_from_dict(data: dict) -> DeviceParams:
    """Normalize a device-parameter mapping to :class:`DeviceParams`.

    Accepts the canonical keys ``beta, N_T, tau_sp_s, tau_cav_s`` and/or a
    ``material`` block with ``betaV_cm3, NT_per_cm3, n_T``. When both are
    given they must agree to 1e-6 relative.
    """
    if "beta" not in data or "tau_sp_s" not in data:
        raise InvalidParameters("device needs at least 'beta' and 'tau_sp_s'")
    known = {"beta", "N_T", "tau_sp_s", "tau_cav_s", "material"}
    unknown = set(data) - known
    if unknown:
        raise InvalidParameters(f"unknown device keys: {sorted(unknown)}")
    beta = float(data["beta"])
    tau_sp = float(data["tau_sp_s"])
    canonical = None
    if "N_T" in data or "tau_cav_s" in data:
        try:
            canonical = DeviceParams(beta, data["N_T"], tau_sp, data["tau_cav_s"])
        except KeyError as exc:
            raise InvalidParameters(f"canonical device is missing {exc}") from None
    material = None
    if "material" in data:
        material = _material_to_canonical(beta, tau_sp, data["material"])
    if canonical is None and material is None:
        raise InvalidParameters("device needs N_T/tau_cav_s or a material block")
    if canonical is not None and material is not None:
        for name in ("N_T", "tau_cav"):
            a, b = getattr(canonical, name), getattr(material, name)
            if abs(a - b) > 1e-6 * max(abs(a), abs(b)):
                raise InconsistentDeviceFile(
                    f"{name} disagrees between canonical ({a!r}) and "
                    f"material ({b!r}) blocks"
                )
    return canonical if canonical is not None else material


def load_device(path) -> DeviceParams:
    with open(Path(path)) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameters(f"{path}: not valid JSON ({exc})") from None
    return device_from_dict(data)
