"""Euler-Maruyama and exact-event simulators."""
import math

import numpy as np
import pytest

from laserstats import _kernels
from laserstats.noise import drift_and_diffusion, photon_variance_closed_form
from laserstats.stats import estimate_stationary_moments
from laserstats.verify import random_operating_points
from laserstats.device import PRESETS, steady_state, threshold_current
from laserstats.errors import BelowTransparency, BudgetExceeded, NegativeInput, StepTooLarge
from laserstats.noise import FluctuationRates, fluctuation_rates, noise_threshold_photon
from laserstats.oracle import (
    GillespieConfig,
    LangevinConfig,
    default_langevin_config,
    estimated_events,
    make_generator,
    simulate_gillespie,
    simulate_gillespie_ensemble,
    simulate_langevin,
    simulate_langevin_ensemble,
    stats_report,
)

TOY_A = PRESETS["toy-a"]
TOY_B = PRESETS["toy-b"]
REF = PRESETS["reference"]


def close_enough(result, expected, sigmas=4.0):
    return abs(result.ratio - expected) <= sigmas * result.ratio_std_error


class TestLangevin:
    def test_uncoupled_photon_channel_is_discrete_ou(self):
        """With omega_R = 0 the photon channel is an Ornstein-Uhlenbeck process
        whose Euler-Maruyama variance is exactly n(n+1) / (1 - gamma dt / 2)."""
        n_bar = 30.0
        rates = FluctuationRates(gamma_n=1.0, Gamma_N=0.5, omega_R=0.0, r=0.0)
        dt = 0.01
        config = LangevinConfig(dt, 2_000_000, 5_000, seed=3)
        res = simulate_langevin(TOY_A, n_bar, config, rates=rates)
        assert close_enough(res, 1.0 / (1.0 - 0.5 * dt))
        assert res.excitation.variance == 0.0

    def test_zero_noise(self):
        n_bar = noise_threshold_photon(TOY_A)
        config = default_langevin_config(TOY_A, n_bar, n_steps=200_000)
        still = simulate_langevin(TOY_A, n_bar, config, noise_scale=0.0)
        assert still.photon.mean == 0.0 and still.photon.variance == 0.0
        kicked = simulate_langevin(TOY_A, n_bar, config, noise_scale=0.0,
                                   initial=(5.0, -3.0), keep_trajectory=True)
        assert abs(kicked.trajectory.n[-1] - n_bar) < 1e-12
        assert abs(kicked.trajectory.n[0] - n_bar) > abs(kicked.trajectory.n[-1] - n_bar)

    def test_reference_noise_threshold(self):
        n_half = noise_threshold_photon(REF)
        res = simulate_langevin(REF, n_half, default_langevin_config(REF, n_half, 2_000_000))
        assert abs(res.ratio - 0.5) <= max(4 * res.ratio_std_error, 0.05)

    def test_randomized_points_match_closed_form(self):
        """Ten random devices whose slowest mode relaxes within a tenth of a
        1e7-step run; stiffer points need longer runs than the budget."""
        checked = 0
        for p, n_bar in random_operating_points(200, seed=31):
            try:
                config = default_langevin_config(p, n_bar, n_steps=10**7, seed=3)
            except ValueError:
                continue
            if config.burn_in_steps > 10**6:
                continue
            res = simulate_langevin(p, n_bar, config)
            err = abs(res.ratio - photon_variance_closed_form(p, n_bar).ratio)
            assert err <= 3 * res.ratio_std_error and err <= 0.05, (p, n_bar)
            checked += 1
            if checked == 10:
                break
        assert checked == 10

    def test_halving_dt_with_coupled_noise(self):
        """Drive a run at dt and one at dt/2 with the same Brownian path; the
        stationary variances differ by less than one standard error."""
        n_bar = 40.0
        rates = fluctuation_rates(TOY_A, n_bar)
        A, B = drift_and_diffusion(rates, n_bar)
        amp = math.sqrt(B[1, 1])
        dt = default_langevin_config(TOY_A, n_bar).dt
        kernel = _kernels.langevin_kernel()
        rng = make_generator(21)
        steps, bins, burn_bins = 2_000_000, 2000, 100
        fine_xi = rng.standard_normal(2 * steps)
        coarse_xi = (fine_xi[0::2] + fine_xi[1::2]) / math.sqrt(2.0)
        variances = []
        for h, xi in ((dt, coarse_xi), (dt / 2, fine_xi)):
            per_bin = xi.size // bins
            out = np.zeros((bins, 6))
            kernel(np.zeros(2), A, h, amp, xi, per_bin, out)
            out = out[burn_bins:]
            variances.append(estimate_stationary_moments(
                out[:, 2] / per_bin, None, out[:, 3] / per_bin))
        coarse, fine = variances
        assert abs(coarse.variance - fine.variance) < min(coarse.variance_std_error,
                                                          fine.variance_std_error)

    def test_default_step_bounds_bias(self):
        n_half = noise_threshold_photon(REF)
        rates = fluctuation_rates(REF, n_half)
        config = default_langevin_config(REF, n_half)
        assert config.dt <= 0.005 / max(rates.Gamma_N, rates.gamma_n, rates.omega_R)

    def test_seeded_runs_repeat(self):
        n_bar = 40.0
        config = default_langevin_config(TOY_A, n_bar, 100_000, seed=11)
        a = simulate_langevin(TOY_A, n_bar, config)
        b = simulate_langevin(TOY_A, n_bar, config)
        c = simulate_langevin(TOY_A, n_bar, config, stream=1)
        assert a.photon == b.photon
        assert a.photon != c.photon

    def test_backends_agree(self):
        n_bar = 40.0
        config = default_langevin_config(TOY_A, n_bar, 300_000, seed=5)
        fast = simulate_langevin(TOY_A, n_bar, config, backend="numba", keep_trajectory=True)
        slow = simulate_langevin(TOY_A, n_bar, config, backend="numpy", keep_trajectory=True)
        assert slow.photon.variance == pytest.approx(fast.photon.variance, rel=1e-9)
        assert slow.photon.mean == pytest.approx(fast.photon.mean, rel=1e-6, abs=1e-9)
        np.testing.assert_allclose(slow.trajectory.n, fast.trajectory.n, rtol=1e-9)

    def test_trajectory(self):
        n_bar = 40.0
        config = LangevinConfig(1e-4, 20_000, 1_000, bins=100)
        res = simulate_langevin(TOY_A, n_bar, config, keep_trajectory=True)
        traj = res.trajectory
        assert traj.t.size == 100 and np.all(np.diff(traj.t) > 0)
        assert traj.t[-1] == pytest.approx(20_000 * 1e-4)

    def test_step_too_large(self):
        with pytest.raises(StepTooLarge):
            simulate_langevin(TOY_A, 40.0, LangevinConfig(1.0, 1000, 10))

    def test_below_transparency(self):
        with pytest.raises(BelowTransparency):
            simulate_langevin(TOY_A, 0.9)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LangevinConfig(0.0, 10, 1)
        with pytest.raises(ValueError):
            LangevinConfig(1e-3, 10, 10)
        with pytest.raises(ValueError):
            LangevinConfig(1e-3, 10, 1, seed=-1)
        with pytest.raises(ValueError):
            default_langevin_config(TOY_A, 40.0, n_steps=10)

    def test_ensemble_pools_streams(self):
        n_bar = 40.0
        config = default_langevin_config(TOY_A, n_bar, 100_000)
        ens = simulate_langevin_ensemble(TOY_A, n_bar, config, 3, workers=2)
        single = simulate_langevin(TOY_A, n_bar, config)
        assert ens.photon.sample_count == 3 * single.photon.sample_count
        again = simulate_langevin_ensemble(TOY_A, n_bar, config, 3, workers=1)
        assert again.photon.mean == pytest.approx(ens.photon.mean, rel=1e-12)


class TestGillespie:
    def test_means_track_steady_state(self):
        j = 5.0 * threshold_current(TOY_A)
        res = simulate_gillespie(TOY_A, j, GillespieConfig(500.0, 20.0, seed=2))
        op = steady_state(TOY_A, j)
        assert res.photon.mean == pytest.approx(op.n_bar, rel=0.05)
        assert res.excitation.mean == pytest.approx(op.N_bar, rel=0.05)
        assert res.ratio < 0.5

    @pytest.mark.parametrize("name", ["toy-a", "toy-b"])
    @pytest.mark.parametrize("factor", [0.2, 2.0, 5.0])
    def test_mean_field_consistency(self, name, factor):
        """Means agree with the deterministic steady state to 5%. Below
        threshold they agree to 3 standard errors; above it the discreteness
        of the photon number leaves a resolved bias of order 1/n_bar."""
        p = PRESETS[name]
        j = factor * threshold_current(p)
        op = steady_state(p, j)
        res = simulate_gillespie(p, j, GillespieConfig(2000.0, 50.0, seed=7))
        for stats, target in ((res.photon, op.n_bar), (res.excitation, op.N_bar)):
            err = abs(stats.mean - target)
            assert err <= 0.05 * target
            if factor < 1:
                assert err <= 3 * stats.std_error
            else:
                assert err <= max(3 * stats.std_error, 2.0 / op.n_bar * target)

    def test_below_threshold_near_thermal(self):
        j = 0.2 * threshold_current(TOY_A)
        res = simulate_gillespie(TOY_A, j, GillespieConfig(1000.0, 20.0, seed=4))
        assert res.ratio > 0.8

    def test_backends_identical(self):
        j = 2.0 * threshold_current(TOY_B)
        config = GillespieConfig(20.0, 1.0, seed=9, bins=256)
        fast = simulate_gillespie(TOY_B, j, config, backend="numba", keep_trajectory=True)
        slow = simulate_gillespie(TOY_B, j, config, backend="numpy", keep_trajectory=True)
        assert fast.events == slow.events
        assert fast.photon == slow.photon
        np.testing.assert_array_equal(fast.trajectory.n, slow.trajectory.n)

    def test_absorbing_state(self):
        res = simulate_gillespie(TOY_A, 0.0, GillespieConfig(10.0, 0.0, initial_state=(0, 0), bins=16))
        assert res.events == 0
        assert res.photon.mean == 0.0 and res.excitation.variance == 0.0

    def test_decay_without_pump(self):
        res = simulate_gillespie(TOY_A, 0.0, GillespieConfig(200.0, 100.0, initial_state=(50, 5), bins=16))
        assert res.photon.mean == 0.0 and res.excitation.mean == 0.0

    def test_budget(self):
        j = 5.0 * threshold_current(TOY_A)
        config = GillespieConfig(1e4, 0.0, max_events=1e3)
        with pytest.raises(BudgetExceeded) as info:
            simulate_gillespie(TOY_A, j, config)
        assert info.value.estimated_events == pytest.approx(estimated_events(TOY_A, j, 1e4, (736, 51)), rel=0.1)

    def test_negative_pump(self):
        with pytest.raises(NegativeInput):
            simulate_gillespie(TOY_A, -1.0, GillespieConfig(1.0, 0.0))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GillespieConfig(1.0, 1.0)
        with pytest.raises(ValueError):
            GillespieConfig(1.0, 0.0, initial_state=(1.5, 0))

    def test_report_records(self):
        j = 2.0 * threshold_current(TOY_A)
        res = simulate_gillespie(TOY_A, j, GillespieConfig(50.0, 5.0, seed=1, bins=512))
        records = stats_report(res)
        assert [r["channel"] for r in records] == ["n", "N"]
        assert records[0]["seed"] == 1 and records[0]["tau_decorr_s"] > 0

    def test_ensemble(self):
        j = 2.0 * threshold_current(TOY_A)
        config = GillespieConfig(50.0, 5.0, bins=512)
        ens = simulate_gillespie_ensemble(TOY_A, j, config, 2, workers=2)
        parts = [simulate_gillespie(TOY_A, j, config, stream=k) for k in range(2)]
        assert ens.events == sum(p.events for p in parts)


class TestBackendSelection:
    def test_env_flag(self, monkeypatch):
        monkeypatch.setenv(_kernels.ENV_FLAG, "1")
        assert _kernels.resolve_backend() == "numpy"
        assert _kernels.resolve_backend("numba") == "numba"
        monkeypatch.delenv(_kernels.ENV_FLAG)
        assert _kernels.resolve_backend() in ("numba", "numpy")

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            _kernels.resolve_backend("cuda")

    def test_streams_independent(self):
        a = make_generator(1, 0).standard_normal(4)
        b = make_generator(1, 1).standard_normal(4)
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(a, make_generator(1, 0).standard_normal(4))
