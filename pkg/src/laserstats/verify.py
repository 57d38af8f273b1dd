"""Executable acceptance checks.

Each ``criterion_*`` function runs one check at its fixed tolerance and
returns a :class:`CheckResult`. The ``verify`` CLI subcommand and the test
suite both go through :func:`acceptance_checks`, so a human and CI run the
same code.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .device import (
    PRESETS,
    DeviceParams,
    carriers_to_amperes,
    current_for_photon_number,
    rate_residuals,
    steady_state,
    threshold_current,
    threshold_photon_number,
)
from .errors import BudgetExceeded
from .noise import (
    noise_threshold_photon,
    photon_variance_closed_form,
    photon_variance_lyapunov,
)
from .oracle import (
    GillespieConfig,
    default_langevin_config,
    estimated_events,
    simulate_gillespie,
    simulate_langevin,
)
from .sweeps import figure2_data

RANDOM_SEED = 20240611
LANGEVIN_SEED = 1
GILLESPIE_SEED = 7


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float
    limit_seconds: float | None = None
    skipped: bool = False

    @property
    def within_time(self) -> bool:
        return self.limit_seconds is None or self.seconds <= self.limit_seconds

    @property
    def ok(self) -> bool:
        return self.passed and self.within_time

    def line(self) -> str:
        if self.skipped:
            status = "SKIP"
        else:
            status = "PASS" if self.ok else "FAIL"
        budget = "" if self.limit_seconds is None else f" / {self.limit_seconds:g} s"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.3g} s{budget})"


def random_operating_points(count: int = 1000, seed: int = RANDOM_SEED):
    """Random lasing devices and photon numbers in ``(n_T, 1e3 n_th]``.

    beta is log-uniform on [1e-12, 1e-1], n_T uniform on (0.5, 4], N_T
    log-uniform on [1e2, 1e14] and tau_sp log-uniform on [1e-12, 1] s.
    """
    rng = np.random.default_rng(seed)
    points = []
    while len(points) < count:
        beta = 10 ** rng.uniform(-12, -1)
        n_t = rng.uniform(0.5, 4.0)
        if n_t <= 0.5:
            continue
        N_T = 10 ** rng.uniform(2, 14)
        tau_sp = 10 ** rng.uniform(-12, 0)
        params = DeviceParams(beta, N_T, tau_sp, n_t * tau_sp / (beta * N_T))
        top = 1e3 * threshold_photon_number(params)
        n_bar = math.exp(rng.uniform(math.log(params.n_t), math.log(top)))
        if n_bar <= params.n_t:
            continue
        points.append((params, n_bar))
    return points


def material(beta: float) -> DeviceParams:
    return DeviceParams.from_material(beta)


def _timed(func, *args):
    start = time.perf_counter()
    out = func(*args)
    return out, time.perf_counter() - start


def criterion_1():
    def run():
        ratios = [photon_variance_closed_form(p, n).ratio
                  for p, n in random_operating_points()]
        return min(ratios), max(ratios)

    (lo, hi), sec = _timed(run)
    return CheckResult("1 thermal bound", 0.0 < lo and hi <= 1.0,
                       f"ratio in [{lo:.3g}, {hi:.17g}] over 1000 points", sec, 1.0)


def criterion_2():
    def run():
        worst = 0.0
        for p, n in random_operating_points():
            a = photon_variance_closed_form(p, n).variance
            b = photon_variance_lyapunov(p, n).variance
            worst = max(worst, abs(a - b) / abs(b))
        return worst

    worst, sec = _timed(run)
    return CheckResult("2 closed form = Lyapunov", worst <= 1e-9,
                       f"max relative difference {worst:.3g} (tol 1e-9)", sec, 1.0)


def criterion_3():
    def run():
        out = []
        for beta in np.geomspace(1e-12, 1e-10, 5):
            p = material(beta)
            out.append((beta, noise_threshold_photon(p) / threshold_photon_number(p) - 1))
        return out

    devs, sec = _timed(run)
    beta, worst = max(devs, key=lambda d: abs(d[1]))
    return CheckResult(
        "3 adiabatic regime", all(abs(d) <= 0.1 for _, d in devs),
        f"worst |n_half/n_th - 1| = {abs(worst):.4f} at beta={beta:.3g} (tol 0.1)",
        sec, 1.0,
    )


def criterion_4():
    def run():
        return [noise_threshold_photon(material(b)) for b in np.geomspace(1e-7, 1e-5, 5)]

    values, sec = _timed(run)
    return CheckResult("4 gain-fixed regime",
                       all(3e3 <= v <= 3e4 for v in values),
                       f"n_half in [{min(values):.4g}, {max(values):.4g}] (need [3e3, 3e4])",
                       sec, 1.0)


def criterion_5():
    def run():
        return [noise_threshold_photon(material(b)) / (1e2 / math.sqrt(b))
                for b in np.geomspace(1e-3, 1e-1, 5)]

    factors, sec = _timed(run)
    worst = max(max(f, 1 / f) for f in factors)
    return CheckResult("5 stimulated-dominated regime", worst <= 3.0,
                       f"worst factor from 1e2/sqrt(beta) = {worst:.3f} (tol 3)", sec, 1.0)


def criterion_6():
    def run():
        grid = np.geomspace(1e-12, 1e-1, 60)
        result = figure2_data(grid)
        at_1e10 = figure2_data([1e-10]).rows[0]["margin"]
        return grid, result, at_1e10

    (grid, result, at_1e10), sec = _timed(run)
    ok = not result.failures and len(result.rows) == grid.size
    worst = 1.0
    first = 0.0
    for beta, row in zip(grid, result.rows):
        if beta <= 1e-9:
            first = max(first, row["margin"])
        elif 1e-7 <= beta <= 1e-5 or beta >= 1e-3:
            f = row["margin"] / row["margin_piecewise"]
            worst = max(worst, f, 1 / f)
    ok = ok and worst <= 3.0 and at_1e10 < 1e-3 and first < 1e-3
    return CheckResult(
        "6 figure-2 margins", ok,
        f"worst factor {worst:.3f} (tol 3); margin(1e-10) = {at_1e10:.3g}, "
        f"max margin for beta<=1e-9 = {first:.3g} (tol 1e-3)",
        sec, 5.0,
    )


def criterion_7():
    p = material(1e-5)
    start = time.perf_counter()
    product = p.beta * carriers_to_amperes(threshold_current(p)) * 1e6
    sec = time.perf_counter() - start
    return CheckResult("7 threshold-current anchor", 0.2 <= product <= 2.0,
                       f"beta * I_th = {product:.4g} uA (need [0.2, 2])", sec, 1e-3)


def criterion_8():
    p = material(1e-3)
    start = time.perf_counter()
    n_bar = steady_state(p, 2.0 * threshold_current(p)).n_bar
    ratio = photon_variance_closed_form(p, n_bar).ratio
    sec = time.perf_counter() - start
    return CheckResult("8 thermal far above threshold", ratio > 0.5,
                       f"ratio at 2 j_th = {ratio:.4f} (need > 0.5)", sec, 1e-3)


def langevin_check(params: DeviceParams, n_steps: int = 10**7, seed: int = LANGEVIN_SEED,
                   name: str = "Langevin oracle", limit=None):
    def run():
        n_half = noise_threshold_photon(params)
        config = default_langevin_config(params, n_half, n_steps=n_steps, seed=seed)
        return simulate_langevin(params, n_half, config)

    result, sec = _timed(run)
    err = abs(result.ratio - 0.5)
    tol = max(3.0 * result.ratio_std_error, 0.05)
    return CheckResult(
        name, err <= tol,
        f"ratio {result.ratio:.4f} +- {result.ratio_std_error:.4f} at n_half = "
        f"{result.n_bar:.5g}, |ratio - 0.5| = {err:.4f} (tol {tol:.4f})",
        sec, limit,
    )


def criterion_9():
    return langevin_check(PRESETS["reference"], name="9 Langevin oracle", limit=60.0)


def gillespie_check(params: DeviceParams, seed: int = GILLESPIE_SEED, t_max: float = 2000.0,
                    burn_in: float = 50.0, repeat: bool = True,
                    name: str = "Gillespie oracle", limit=None):
    j_th = threshold_current(params)
    config = GillespieConfig(t_max, burn_in, seed)
    if estimated_events(params, 5.0 * j_th, t_max) > config.max_events:
        return CheckResult(name, False, "too many events for a desk-scale run",
                           0.0, limit, skipped=True)

    def run():
        out = {}
        for factor in (0.2, 5.0):
            j = factor * j_th
            out[factor] = (simulate_gillespie(params, j, config), steady_state(params, j))
        if repeat:
            again = simulate_gillespie(params, 5.0 * j_th, config)
            out["repeat"] = again.photon == out[5.0][0].photon and \
                again.excitation == out[5.0][0].excitation
        return out

    try:
        out, sec = _timed(run)
    except BudgetExceeded as exc:
        return CheckResult(name, False, str(exc), 0.0, limit, skipped=True)
    low, high = out[0.2][0], out[5.0][0]
    dev = 0.0
    for factor in (0.2, 5.0):
        sim, op = out[factor]
        dev = max(dev, abs(sim.photon.mean / op.n_bar - 1),
                  abs(sim.excitation.mean / op.N_bar - 1))
    ok = low.ratio > 0.8 and high.ratio < 0.5 and dev <= 0.05
    detail = (f"ratio {low.ratio:.3f} at 0.2 j_th (need > 0.8), {high.ratio:.3f} at "
              f"5 j_th (need < 0.5); worst mean deviation {dev:.4f} (tol 0.05)")
    if repeat:
        ok = ok and out["repeat"]
        detail += "; rerun identical" if out["repeat"] else "; rerun DIFFERS"
    return CheckResult(name, ok, detail, sec, limit)


def criterion_10():
    return gillespie_check(PRESETS["toy-a"], name="10 Gillespie oracle", limit=120.0)


def round_trip_check(devices=None):
    if devices is None:
        devices = [PRESETS["reference"], PRESETS["toy-a"], PRESETS["toy-b"],
                   material(1e-10), material(1e-3), material(1e-1)]
    worst_trip = worst_res = 0.0
    for p in devices:
        j_th = threshold_current(p)
        for j in np.geomspace(0.1 * j_th, 100 * j_th, 200):
            op = steady_state(p, j)
            back = current_for_photon_number(p, op.n_bar)
            worst_trip = max(worst_trip, abs(back / j - 1))
            dN, dn = rate_residuals(p, op.N_bar, op.n_bar, j)
            scale = max(j, op.n_bar / p.tau_cav)
            worst_res = max(worst_res, abs(dN) / scale, abs(dn) / scale)
    return worst_trip, worst_res


def criterion_11():
    (trip, res), sec = _timed(round_trip_check)
    return CheckResult("11 round trip and plug-back", trip <= 1e-10 and res <= 1e-9,
                       f"round trip {trip:.3g} (tol 1e-10), residual {res:.3g} (tol 1e-9)",
                       sec, 1.0)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
            criterion_11)


def acceptance_checks():
    return [criterion() for criterion in CRITERIA]


def preset_checks(params: DeviceParams, seed: int, langevin_steps: int = 10**7):
    """Oracle checks for one device: Langevin against the closed-form variance
    at the noise threshold, and the jump process against the steady state."""
    return [
        langevin_check(params, n_steps=langevin_steps, seed=seed,
                       name="Langevin vs closed-form variance"),
        gillespie_check(params, seed=seed, repeat=False,
                        name="Gillespie vs steady state"),
    ]
