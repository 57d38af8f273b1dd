"""Grid evaluation: light-current and noise curves, and noise-threshold maps
over the spontaneous emission factor.

A sweep over ``beta`` keeps the gain-medium constants fixed by default: the
product ``beta * N_T`` and the transparency photon number ``n_t`` are held at
the template device's values while the mode volume shrinks. Pass
``covary=False`` to change ``beta`` alone.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .device import (
    PRESETS,
    DeviceParams,
    carriers_to_amperes,
    current_for_photon_number,
    steady_state,
    threshold_current,
    threshold_photon_number,
)
from .errors import LaserStatsError
from .noise import (
    asymptotic_noise_threshold,
    adiabatic_validity_bound,
    classify_regime,
    noise_threshold_current,
    noise_threshold_photon,
    photon_variance_closed_form,
    piecewise_noise_threshold,
    piecewise_threshold_margin,
)

COLUMNS = {
    "pump_rate": (
        "j", "current_mA", "j_over_jth", "n_bar", "N_bar",
        "variance", "thermal_limit", "ratio", "fano", "regime",
    ),
    "photon_number": (
        "n_bar", "j", "current_mA", "N_bar",
        "variance", "thermal_limit", "ratio", "fano",
    ),
    "beta": (
        "beta", "inv_beta", "N_T", "tau_cav_s", "n_t", "j_th", "n_th",
        "n_half", "n_half_piecewise", "n_half_asymptote", "j_half", "margin",
        "margin_piecewise", "regime", "adiabatic_bound",
    ),
}
_NOISE_TAGS = {"variance", "thermal_limit", "ratio", "fano"}


@dataclass(frozen=True)
class Grid:
    min: float
    max: float
    points: int
    spacing: str = "log"

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError("grid needs min < max")
        if self.points < 2:
            raise ValueError("grid needs at least two points")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"spacing must be 'linear' or 'log', not {self.spacing!r}")
        if self.spacing == "log" and self.min <= 0:
            raise ValueError("log spacing needs min > 0")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class SweepSpec:
    swept_variable: str
    grid: Grid
    fixed: DeviceParams = PRESETS["reference"]
    outputs: tuple = ()
    covary: bool = True

    def __post_init__(self):
        if self.swept_variable not in COLUMNS:
            raise ValueError(
                f"cannot sweep {self.swept_variable!r}; choose from {sorted(COLUMNS)}"
            )
        outputs = tuple(self.outputs) or COLUMNS[self.swept_variable]
        unknown = [c for c in outputs if c not in COLUMNS[self.swept_variable]]
        if unknown:
            raise ValueError(
                f"columns {unknown} are not available when sweeping "
                f"{self.swept_variable}; choose from {COLUMNS[self.swept_variable]}"
            )
        object.__setattr__(self, "outputs", outputs)


@dataclass
class SweepResult:
    columns: tuple
    rows: list
    failures: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def column(self, name) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=float)


def _noise_columns(params, n_bar, row, wanted):
    if wanted & _NOISE_TAGS:
        res = photon_variance_closed_form(params, n_bar)
        row.update(variance=res.variance, thermal_limit=res.thermal_limit,
                   ratio=res.ratio, fano=res.fano)


def _pump_row(params, j, wanted):
    op = steady_state(params, j)
    row = {"j": op.j, "current_mA": carriers_to_amperes(op.j) * 1e3,
           "n_bar": op.n_bar, "N_bar": op.N_bar}
    if "j_over_jth" in wanted:
        row["j_over_jth"] = op.j / threshold_current(params)
    if "regime" in wanted:
        row["regime"] = classify_regime(params).value
    _noise_columns(params, op.n_bar, row, wanted)
    return row


def _photon_row(params, n_bar, wanted):
    j = current_for_photon_number(params, n_bar)
    row = {"n_bar": float(n_bar), "j": j, "current_mA": carriers_to_amperes(j) * 1e3,
           "N_bar": steady_state(params, j).N_bar}
    _noise_columns(params, n_bar, row, wanted)
    return row


def _beta_row(params, wanted):
    row = {"beta": params.beta, "inv_beta": 1.0 / params.beta, "N_T": params.N_T,
           "tau_cav_s": params.tau_cav, "n_t": params.n_t,
           "j_th": threshold_current(params), "n_th": threshold_photon_number(params),
           "n_half_piecewise": piecewise_noise_threshold(params.beta),
           "margin_piecewise": piecewise_threshold_margin(params.beta),
           "adiabatic_bound": adiabatic_validity_bound(params)}
    regime = classify_regime(params)
    row["regime"] = regime.value
    row["n_half_asymptote"] = asymptotic_noise_threshold(params, regime)
    if wanted & {"n_half", "j_half", "margin"}:
        row["n_half"] = noise_threshold_photon(params)
        row["j_half"], row["margin"] = noise_threshold_current(params)
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every grid point; rows that raise a domain error are flagged.

    Rows come back in grid order whatever the number of ``workers``.
    """
    wanted = set(spec.outputs)
    xs = spec.grid.values()

    def evaluate(x):
        if spec.swept_variable == "pump_rate":
            return _pump_row(spec.fixed, x, wanted)
        if spec.swept_variable == "photon_number":
            return _photon_row(spec.fixed, x, wanted)
        return _beta_row(spec.fixed.with_beta(x, covary=spec.covary), wanted)

    def guarded(item):
        index, x = item
        try:
            return index, evaluate(float(x)), None
        except LaserStatsError as exc:
            return index, None, {"index": index, "x": float(x),
                                 "error": type(exc).__name__, "message": str(exc)}

    items = list(enumerate(xs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            done = list(pool.map(guarded, items))
    else:
        done = [guarded(item) for item in items]
    rows, failures = [], []
    for _, row, failure in sorted(done, key=lambda d: d[0]):
        if failure is None:
            rows.append({c: row[c] for c in spec.outputs})
        else:
            failures.append(failure)
    meta = {"swept_variable": spec.swept_variable,
            "grid": {"min": spec.grid.min, "max": spec.grid.max,
                     "points": spec.grid.points, "spacing": spec.grid.spacing}}
    if spec.swept_variable == "beta":
        meta["covary"] = spec.covary
    return SweepResult(tuple(spec.outputs), rows, failures, meta)


def _pump_spec(spec: SweepSpec, outputs) -> SweepSpec:
    if spec.swept_variable != "pump_rate":
        raise ValueError("this sweep runs over the pump rate")
    return replace(spec, outputs=outputs)


def sweep_light_current(spec: SweepSpec) -> SweepResult:
    """Rows of ``(j, n_bar, N_bar)``; metadata carries the threshold current."""
    result = run_sweep(_pump_spec(spec, ("j", "n_bar", "N_bar")))
    if spec.fixed.is_lasing:
        result.metadata["j_th"] = threshold_current(spec.fixed)
    return result


def sweep_noise_vs_current(spec: SweepSpec) -> SweepResult:
    """Rows of ``(j, n_bar, variance, ratio, fano)`` along the light-current curve."""
    result = run_sweep(
        _pump_spec(spec, ("j", "n_bar", "variance", "ratio", "fano"))
    )
    if spec.fixed.is_lasing:
        result.metadata["j_th"] = threshold_current(spec.fixed)
        try:
            result.metadata["j_half"] = noise_threshold_current(spec.fixed)[0]
        except LaserStatsError:
            pass
    return result


def _check_beta_grid(beta_grid):
    betas = np.asarray(beta_grid, dtype=float)
    if betas.size == 0 or np.any(betas < 1e-12) or np.any(betas > 1e-1):
        raise ValueError("beta grid must lie within [1e-12, 1e-1]")
    return betas


def _beta_table(beta_grid, template, covary, outputs):
    betas = _check_beta_grid(beta_grid)
    rows, failures = [], []
    for index, beta in enumerate(betas):
        try:
            row = _beta_row(template.with_beta(float(beta), covary), set(outputs))
        except LaserStatsError as exc:
            failures.append({"index": index, "x": float(beta),
                             "error": type(exc).__name__, "message": str(exc)})
            continue
        rows.append({c: row[c] for c in outputs})
    return SweepResult(tuple(outputs), rows, failures,
                       {"swept_variable": "beta", "covary": covary})


def figure1_data(beta_grid, template: DeviceParams = PRESETS["reference"],
                 covary: bool = True) -> SweepResult:
    """Noise-threshold photon number against ``1/beta``: numeric root,
    piecewise summary and threshold photon number."""
    return _beta_table(beta_grid, template, covary,
                       ("inv_beta", "n_half", "n_half_piecewise", "n_th"))


def figure2_data(beta_grid, template: DeviceParams = PRESETS["reference"],
                 covary: bool = True) -> SweepResult:
    """Relative distance of the noise-threshold current above the laser
    threshold against ``1/beta``, numeric and piecewise."""
    return _beta_table(beta_grid, template, covary,
                       ("inv_beta", "margin", "margin_piecewise"))


def transition_width(result: SweepResult, params: DeviceParams) -> float:
    """Threshold transition width estimated from light-current rows.

    Finite-difference slope of ``n_bar / tau_cav`` against ``j``, located where
    it passes 0.1 and 0.9, divided by the threshold current. NaN when the
    grid does not cover both crossings.
    """
    j = result.column("j")
    x = result.column("n_bar") / params.tau_cav
    mid = 0.5 * (j[1:] + j[:-1])
    slope = np.diff(x) / np.diff(j)

    def crossing(level):
        k = np.flatnonzero((slope[:-1] < level) & (slope[1:] >= level))
        if k.size == 0:
            return math.nan
        k = k[0]
        f = (level - slope[k]) / (slope[k + 1] - slope[k])
        return mid[k] + f * (mid[k + 1] - mid[k])

    return (crossing(0.9) - crossing(0.1)) / threshold_current(params)


def ratio_crossing(result: SweepResult) -> float:
    """Pump rate at which the ``ratio`` column first drops through 1/2,
    interpolated in ``log j``; NaN if it never does."""
    j = result.column("j")
    ratio = result.column("ratio")
    k = np.flatnonzero((ratio[:-1] >= 0.5) & (ratio[1:] < 0.5))
    if k.size == 0:
        return math.nan
    k = k[0]
    f = (ratio[k] - 0.5) / (ratio[k] - ratio[k + 1])
    return float(np.exp(np.log(j[k]) + f * (np.log(j[k + 1]) - np.log(j[k]))))
