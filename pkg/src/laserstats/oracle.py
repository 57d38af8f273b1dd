"""Stochastic simulators used to check the analytic noise results.

* :func:`simulate_langevin` integrates the linear Langevin system with the
  Euler-Maruyama scheme.
* :func:`simulate_gillespie` runs the full nonlinear rate equations as a
  Markov jump process with six nonnegative event channels:

  ====================  ===================  ===========================
  channel               jump (N, n)          propensity
  ====================  ===================  ===========================
  pump                  (+1, 0)              j
  spontaneous, mode     (-1, +1)             beta N / tau_sp
  spontaneous, other    (-1, 0)              (1 - beta) N / tau_sp
  stimulated emission   (-1, +1)             2 beta N n / tau_sp
  absorption            (+1, -1)             2 beta N_T n / tau_sp
  cavity loss           (0, -1)              n / tau_cav
  ====================  ===================  ===========================

  Stimulated emission minus absorption gives the net gain term
  ``2 beta (N - N_T) n / tau_sp`` of the rate equations. Absorption draws on
  a fixed pool of N_T absorbers, so every propensity stays nonnegative.

Random numbers come from numpy's PCG64. Trajectory ``k`` of a run with seed
``s`` uses ``SeedSequence(s, spawn_key=(k,))``, so parallel ensembles are
reproducible and independent of scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import _kernels
from .device import DeviceParams, excitation_number, steady_state
from .errors import (
    BelowTransparency,
    BudgetExceeded,
    NegativeInput,
    StepTooLarge,
    UnstableLinearization,
)
from .noise import FluctuationRates, drift_and_diffusion, fluctuation_rates
from .stats import TrajectoryStats, estimate_stationary_moments, pool_stats

CHUNK = 1 << 20
DEFAULT_BINS = 1 << 16
# relative variance bias allowed from Euler-Maruyama when picking a default dt
EM_BIAS_TOLERANCE = 0.02
MAX_EVENTS = 1e9


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))
    )


@dataclass(frozen=True)
class LangevinConfig:
    """Euler-Maruyama settings.

    ``n_steps`` counts all steps including the ``burn_in_steps`` discarded
    at the start. Recorded steps are grouped into at most ``bins`` equal
    bins; steps beyond a whole number of bins are not simulated.
    """

    dt: float
    n_steps: int
    burn_in_steps: int
    seed: int = 0
    bins: int = DEFAULT_BINS

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.n_steps > self.burn_in_steps >= 0:
            raise ValueError("need n_steps > burn_in_steps >= 0")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class GillespieConfig:
    t_max: float
    burn_in: float
    seed: int = 0
    initial_state: tuple[int, int] | None = None
    """``(N0, n0)``; defaults to the rounded deterministic steady state."""
    bins: int = DEFAULT_BINS
    max_events: float = MAX_EVENTS

    def __post_init__(self):
        if not self.t_max > self.burn_in >= 0:
            raise ValueError("need t_max > burn_in >= 0")
        if self.initial_state is not None:
            N0, n0 = self.initial_state
            if int(N0) != N0 or int(n0) != n0 or N0 < 0 or n0 < 0:
                raise ValueError("initial counts must be nonnegative integers")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Trajectory:
    """Bin-end snapshots of a simulated trajectory."""

    t: np.ndarray
    N: np.ndarray
    n: np.ndarray


@dataclass(frozen=True)
class LangevinResult:
    photon: TrajectoryStats
    excitation: TrajectoryStats
    n_bar: float
    config: LangevinConfig
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def thermal_limit(self) -> float:
        return self.n_bar * (self.n_bar + 1.0)

    @property
    def ratio(self) -> float:
        return self.photon.variance / self.thermal_limit

    @property
    def ratio_std_error(self) -> float:
        return self.photon.variance_std_error / self.thermal_limit


@dataclass(frozen=True)
class GillespieResult:
    photon: TrajectoryStats
    excitation: TrajectoryStats
    j: float
    events: int
    config: GillespieConfig
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def ratio(self) -> float:
        m = self.photon.mean
        return self.photon.variance / (m * (m + 1.0))

    @property
    def fano(self) -> float:
        return self.photon.variance / self.photon.mean


def _max_rate(rates: FluctuationRates) -> float:
    return max(rates.Gamma_N, rates.gamma_n, rates.omega_R)


def _positive_eigenvalues(A):
    eig = np.linalg.eigvals(A)
    if np.any(eig.real <= 0):
        raise UnstableLinearization(
            f"drift matrix is not positive-stable, eigenvalues {eig}", eig
        )
    return eig


def default_langevin_config(
    params: DeviceParams,
    n_bar: float,
    n_steps: int = 10**7,
    seed: int = 0,
    rates: FluctuationRates | None = None,
) -> LangevinConfig:
    """Step size and burn-in for :func:`simulate_langevin`.

    Euler-Maruyama inflates the stationary variance of a mode with drift
    eigenvalue ``lam`` by roughly ``dt |lam|^2 / (2 Re lam)``, which matters
    when the coupling rate dwarfs the damping. ``dt`` is the smaller of
    ``0.005 / max(rate)`` and the step that keeps that bias at
    ``EM_BIAS_TOLERANCE``. Burn-in covers ten relaxation times of the
    slowest mode.
    """
    if rates is None:
        rates = fluctuation_rates(params, n_bar)
    A, _ = drift_and_diffusion(rates, n_bar)
    eig = _positive_eigenvalues(A)
    dt = min(
        0.005 / _max_rate(rates),
        2.0 * EM_BIAS_TOLERANCE * float(np.min(eig.real / np.abs(eig) ** 2)),
    )
    burn = math.ceil(10.0 / float(np.min(eig.real)) / dt)
    if burn >= n_steps:
        raise ValueError(
            f"{n_steps} steps do not cover the {burn}-step burn-in at dt={dt:.3g} s"
        )
    return LangevinConfig(dt, int(n_steps), burn, seed)


def simulate_langevin(
    params: DeviceParams,
    n_bar: float,
    config: LangevinConfig | None = None,
    *,
    stream: int = 0,
    rates: FluctuationRates | None = None,
    noise_scale: float = 1.0,
    initial=(0.0, 0.0),
    backend: str | None = None,
    keep_trajectory: bool = False,
) -> LangevinResult:
    """Stationary statistics of ``(dN, dn)`` from Euler-Maruyama integration.

    ``rates`` and ``noise_scale`` override the linearization and the noise
    strength; they exist as test hooks (for instance zero coupling, or no
    noise at all).
    """
    if rates is None:
        if n_bar <= params.n_t:
            raise BelowTransparency(
                f"n_bar = {n_bar:.6g} must exceed n_T = {params.n_t:.6g}"
            )
        rates = fluctuation_rates(params, n_bar)
    if config is None:
        config = default_langevin_config(params, n_bar, rates=rates)
    limit = 0.01 / _max_rate(rates)
    if config.dt > limit:
        raise StepTooLarge(f"dt = {config.dt:.3g} s exceeds 0.01/max(rate) = {limit:.3g} s")
    A, B = drift_and_diffusion(rates, n_bar)
    _positive_eigenvalues(A)
    amp = noise_scale * math.sqrt(B[1, 1])
    kernel = _kernels.langevin_kernel(backend)
    rng = make_generator(config.seed, stream)
    state = np.array(initial, dtype=float)

    recorded = config.n_steps - config.burn_in_steps
    bin_len = max(1, recorded // config.bins)
    nbins = recorded // bin_len
    scratch = np.zeros((1, 6))
    left = config.burn_in_steps
    while left > 0:
        m = min(CHUNK, left)
        kernel(state, A, config.dt, amp, rng.standard_normal(m), 0, scratch)
        left -= m

    out = np.zeros((nbins, 6))
    per_chunk = max(1, CHUNK // bin_len)
    for start in range(0, nbins, per_chunk):
        stop = min(nbins, start + per_chunk)
        xi = rng.standard_normal((stop - start) * bin_len)
        kernel(state, A, config.dt, amp, xi, bin_len, out[start:stop])

    width = bin_len * config.dt
    weights = np.full(nbins, width)
    excitation = estimate_stationary_moments(
        out[:, 0] / bin_len, weights, out[:, 1] / bin_len
    )
    photon = estimate_stationary_moments(out[:, 2] / bin_len, weights, out[:, 3] / bin_len)
    trajectory = None
    if keep_trajectory:
        t = (config.burn_in_steps + bin_len * np.arange(1, nbins + 1)) * config.dt
        N_bar = excitation_number(params, n_bar)
        trajectory = Trajectory(t, N_bar + out[:, 4], n_bar + out[:, 5])
    return LangevinResult(photon, excitation, n_bar, config, trajectory)


def estimated_events(params: DeviceParams, j: float, t_max: float, initial=None) -> float:
    """Expected number of events, from the total propensity at the busier of
    the initial state and the deterministic steady state."""
    op = steady_state(params, j)
    states = [(op.N_bar, op.n_bar)]
    if initial is not None:
        states.append(tuple(float(v) for v in initial))
    g = 2.0 * params.beta / params.tau_sp
    total = max(
        j + N / params.tau_sp + g * (N + params.N_T) * n + n / params.tau_cav
        for N, n in states
    )
    return total * t_max


def simulate_gillespie(
    params: DeviceParams,
    j: float,
    config: GillespieConfig,
    *,
    stream: int = 0,
    backend: str | None = None,
    keep_trajectory: bool = False,
) -> GillespieResult:
    """Exact-event simulation of the rate equations at pump ``j``.

    Moments are time-weighted over ``[burn_in, t_max]``.
    """
    if j < 0:
        raise NegativeInput(f"j must be >= 0, got {j}")
    initial = config.initial_state
    if initial is None:
        op = steady_state(params, j)
        initial = (round(op.N_bar), round(op.n_bar))
    cost = estimated_events(params, j, config.t_max, initial)
    if cost > config.max_events:
        raise BudgetExceeded(
            f"about {cost:.3g} events needed, cap is {config.max_events:.3g}", cost
        )

    kernel = _kernels.gillespie_kernel(backend)
    rng = make_generator(config.seed, stream)
    rate = np.array([j, params.beta, params.N_T, params.tau_sp, params.tau_cav])
    counts = np.array(initial, dtype=np.int64)
    clock = np.zeros(1)
    width = (config.t_max - config.burn_in) / config.bins
    acc = np.zeros((config.bins, 4))
    snap = np.zeros((config.bins, 2))
    events = 0
    while clock[0] < config.t_max:
        exps = rng.standard_exponential(CHUNK)
        unifs = rng.random(CHUNK)
        events += kernel(rate, counts, clock, exps, unifs, config.burn_in,
                         config.t_max, width, acc, snap)

    weights = np.full(config.bins, width)
    excitation = estimate_stationary_moments(acc[:, 0] / width, weights, acc[:, 1] / width)
    photon = estimate_stationary_moments(acc[:, 2] / width, weights, acc[:, 3] / width)
    trajectory = None
    if keep_trajectory:
        t = config.burn_in + width * np.arange(1, config.bins + 1)
        trajectory = Trajectory(t, snap[:, 0].astype(np.int64), snap[:, 1].astype(np.int64))
    return GillespieResult(photon, excitation, float(j), events, config, trajectory)


def _ensemble(run, n_trajectories: int, workers: int):
    if workers <= 1:
        results = [run(k) for k in range(n_trajectories)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, range(n_trajectories)))
    return results


def simulate_langevin_ensemble(params, n_bar, config, n_trajectories, workers=1, **kw):
    """Independent trajectories on streams ``0..n-1``, pooled in stream order."""
    results = _ensemble(
        lambda k: simulate_langevin(params, n_bar, config, stream=k, **kw),
        n_trajectories, workers,
    )
    return replace(
        results[0],
        photon=pool_stats(r.photon for r in results),
        excitation=pool_stats(r.excitation for r in results),
        trajectory=None,
    )


def simulate_gillespie_ensemble(params, j, config, n_trajectories, workers=1, **kw):
    results = _ensemble(
        lambda k: simulate_gillespie(params, j, config, stream=k, **kw),
        n_trajectories, workers,
    )
    return replace(
        results[0],
        photon=pool_stats(r.photon for r in results),
        excitation=pool_stats(r.excitation for r in results),
        events=sum(r.events for r in results),
        trajectory=None,
    )


def stats_report(result) -> list[dict]:
    """One record per channel: photon number ``n`` and excitation number ``N``."""
    config = asdict(result.config)
    records = []
    for channel, s in (("n", result.photon), ("N", result.excitation)):
        records.append({
            "channel": channel,
            "mean": s.mean,
            "variance": s.variance,
            "std_error": s.std_error,
            "variance_std_error": s.variance_std_error,
            "tau_decorr_s": s.decorrelation_time,
            "samples": s.sample_count,
            "seed": result.config.seed,
            "config": config,
        })
    return records
