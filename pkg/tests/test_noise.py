"""Fluctuation rates, photon-number variance and the noise threshold."""
import math

import numpy as np
import pytest
from scipy.optimize import brentq
from hypothesis import given, settings, strategies as st

import oracles
from laserstats import noise as nz
from laserstats.device import DeviceParams, PRESETS, steady_state, threshold_current
from laserstats.errors import BelowTransparency, NonLasingDevice
from laserstats.noise import Regime

REF = PRESETS["reference"]
TOY_A = PRESETS["toy-a"]
TOY_B = PRESETS["toy-b"]

# Bisection on the ratio from tests/oracles.py (numerical Jacobian plus
# exact Lyapunov solve in 50-digit arithmetic).
FROZEN_N_HALF = {
    "reference": 10958.189463628810065,
    "toy-a": 18.85323740870787497,
    "toy-b": 49.860520673016412612,
}
FROZEN_N_HALF_MATERIAL = {
    1e-12: 1013248.2233629769099,
    1e-10: 112631.40472040296,
    1e-6: 13146.470291739815842,
    1e-3: 2346.4494928867291452,
    1e-1: 257.51904321405656648,
}
# (device, n_bar, variance) from the same oracle
FROZEN_VARIANCE = [
    ("reference", 3.0, 11.999999834677081081),
    ("reference", 75.0, 5698.3125128080730252),
    ("toy-a", 2.0, 5.948554630083292508),
    ("toy-a", 50.0, 375.81806500914750158),
    ("toy-b", 3.0, 11.970623664270448805),
    ("toy-b", 75.0, 1883.3443952107475852),
]


def _dev(p):
    return (p.beta, p.N_T, p.tau_sp, p.tau_cav)


def operating_points():
    """Lasing device and a photon number between n_T and 1e4 n_T."""
    return st.builds(
        lambda b, nt, N, ts, f: (DeviceParams(b, N, ts, nt * ts / (b * N)), nt * f),
        st.floats(1e-12, 0.5), st.floats(0.51, 20.0), st.floats(10.0, 1e14),
        st.floats(1e-12, 1.0), st.floats(1.0, 1e4),
    )


class TestRates:
    @pytest.mark.parametrize("name", ["reference", "toy-a", "toy-b"])
    @pytest.mark.parametrize("factor", [1.5, 20.0, 400.0])
    def test_drift_matches_jacobian(self, name, factor):
        """Diagonal entries and the off-diagonal product agree with the
        linearized rate equations; the scaling of dN does not enter the
        photon variance."""
        p = PRESETS[name]
        n_bar = factor * p.n_t
        A, B = nz.drift_and_diffusion(nz.fluctuation_rates(p, n_bar), n_bar)
        _, A_ref = oracles.photon_variance(_dev(p), n_bar)
        A_ref = np.array(A_ref.tolist(), dtype=float)
        assert A[0, 0] == pytest.approx(A_ref[0, 0], rel=1e-9)
        assert A[1, 1] == pytest.approx(A_ref[1, 1], rel=1e-9)
        assert A[0, 1] * A[1, 0] == pytest.approx(A_ref[0, 1] * A_ref[1, 0], rel=1e-9)
        assert np.linalg.det(A) > 0 and np.trace(A) > 0

    def test_coupling_vanishes_at_transparency(self):
        rates = nz.fluctuation_rates(REF, REF.n_t)
        assert rates.omega_R == 0.0 and rates.r == 0.0
        assert nz.photon_variance_closed_form(REF, REF.n_t).ratio == 1.0

    def test_below_transparency(self):
        with pytest.raises(BelowTransparency):
            nz.fluctuation_rates(REF, 0.5)
        with pytest.raises(BelowTransparency):
            nz.photon_variance_lyapunov(REF, 1.0)

    def test_snap_just_below_transparency(self):
        assert nz.fluctuation_rates(REF, REF.n_t * (1 - 1e-14)).omega_R == 0.0

    def test_fluctuation_ratio_large_for_reference(self):
        for f in np.geomspace(0.8, 10.0, 25):
            n_bar = steady_state(REF, f * threshold_current(REF)).n_bar
            if n_bar > REF.n_t * 1.01:
                assert nz.fluctuation_rates(REF, n_bar).r > 10.0


class TestVariance:
    @pytest.mark.parametrize("name, n_bar, variance", FROZEN_VARIANCE)
    def test_frozen(self, name, n_bar, variance):
        p = PRESETS[name]
        assert nz.photon_variance_closed_form(p, n_bar).variance == pytest.approx(variance, rel=1e-9)
        assert nz.photon_variance_lyapunov(p, n_bar).variance == pytest.approx(variance, rel=1e-9)

    @settings(max_examples=300, deadline=None)
    @given(operating_points())
    def test_closed_form_equals_lyapunov(self, point):
        p, n_bar = point
        a = nz.photon_variance_closed_form(p, n_bar).variance
        b = nz.photon_variance_lyapunov(p, n_bar).variance
        assert a == pytest.approx(b, rel=1e-9)

    @settings(max_examples=300, deadline=None)
    @given(operating_points())
    def test_below_thermal_limit(self, point):
        p, n_bar = point
        res = nz.photon_variance_closed_form(p, n_bar)
        assert 0.0 < res.ratio <= 1.0
        assert res.fano == pytest.approx(res.variance / res.n_bar)
        assert res.thermal_limit == pytest.approx(n_bar * (n_bar + 1))

    @settings(max_examples=200, deadline=None)
    @given(operating_points())
    def test_suppression_forms_agree(self, point):
        p, n_bar = point
        rates = nz.fluctuation_rates(p, n_bar)
        if rates.omega_R > 0 and rates.omega_R < 1e150:
            assert nz._suppression(rates) == pytest.approx(nz._suppression_verbatim(rates), rel=1e-12)

    def test_lyapunov_independent_of_dN_scale(self):
        n_bar = 40.0
        rates = nz.fluctuation_rates(TOY_A, n_bar)
        base = nz.photon_variance_lyapunov(TOY_A, n_bar, rates).variance
        for scale in (1e-6, 3.0, 1e8):
            scaled = nz.FluctuationRates(rates.gamma_n, rates.Gamma_N, rates.omega_R, rates.r * scale)
            assert nz.photon_variance_lyapunov(TOY_A, n_bar, scaled).variance == pytest.approx(base, rel=1e-10)

    def test_report_by_pump_and_by_photons(self):
        j = 3.0 * threshold_current(TOY_B)
        by_j = nz.noise_report(TOY_B, j=j)
        by_n = nz.noise_report(TOY_B, n_bar=by_j["n_bar"])
        assert by_n["j"] == pytest.approx(j, rel=1e-10)
        assert by_n["ratio"] == pytest.approx(by_j["ratio"])
        assert by_j["regime"] == nz.classify_regime(TOY_B).value
        with pytest.raises(ValueError):
            nz.noise_report(TOY_B)


class TestNoiseThreshold:
    @pytest.mark.parametrize("name", sorted(FROZEN_N_HALF))
    def test_frozen_presets(self, name):
        p = PRESETS[name]
        n_half = nz.noise_threshold_photon(p)
        assert n_half == pytest.approx(FROZEN_N_HALF[name], rel=1e-9)
        assert nz.photon_variance_closed_form(p, n_half).ratio == pytest.approx(0.5, abs=1e-9)

    @pytest.mark.parametrize("beta", sorted(FROZEN_N_HALF_MATERIAL))
    def test_frozen_material(self, beta):
        p = DeviceParams.from_material(beta)
        assert nz.noise_threshold_photon(p) == pytest.approx(FROZEN_N_HALF_MATERIAL[beta], rel=1e-9)

    def test_reference_current(self):
        j_half, margin = nz.noise_threshold_current(REF)
        assert margin == pytest.approx(j_half / threshold_current(REF) - 1)
        assert margin == pytest.approx(0.05475, rel=1e-3)

    def test_condition_sign_change(self):
        n_half = nz.noise_threshold_photon(TOY_A)
        g = nz.noise_threshold_condition(TOY_A, np.array([n_half * 0.9, n_half * 1.1]))
        assert g[0] * g[1] < 0

    def test_non_lasing(self):
        with pytest.raises(NonLasingDevice):
            nz.noise_threshold_photon(DeviceParams(0.1, 10.0, 1.0, 0.4))

    def test_adiabatic_limit_correction(self):
        """With Gamma_N = 1/tau_sp the condition reduces to the scalar equation
        omega^2 (1 - gamma) = gamma (1 + gamma) in units of 1/tau_sp; for
        small beta its root matches the full threshold to order beta n_half."""
        for beta in (1e-12, 1e-11, 1e-10):
            p = DeviceParams.from_material(beta)
            k = p.beta * p.N_T / p.n_t

            def reduced(n):
                gamma = k * (p.n_t + 0.5) / (n + 0.5)
                return 2 * beta * k * (n - p.n_t) * (1 - gamma) - gamma * (1 + gamma)

            root = brentq(reduced, 2 * k * (p.n_t + 0.5), 1e3 / math.sqrt(beta), xtol=1e-12)
            n_half = nz.noise_threshold_photon(p)
            assert n_half == pytest.approx(root, rel=10 * beta * n_half)
            # the excess over the adiabatic estimate is real: 12.6% at 1e-10
            n_th = math.sqrt((p.n_t + 0.5) / (2 * beta))
            assert root / n_th - 1 > 0.01


class TestRegimes:
    @pytest.mark.parametrize("beta, regime", [
        (1e-12, Regime.ADIABATIC),
        (1e-10, Regime.ADIABATIC),
        (1e-6, Regime.GAIN_FIXED),
        (1e-5, Regime.GAIN_FIXED),
        (1e-3, Regime.STIMULATED_DOMINATED),
        (1e-1, Regime.STIMULATED_DOMINATED),
    ])
    def test_classification(self, beta, regime):
        assert nz.classify_regime(DeviceParams.from_material(beta)) is regime

    def test_asymptotes(self):
        p = DeviceParams.from_material(1e-6)
        assert nz.asymptotic_noise_threshold(p, Regime.ADIABATIC) == pytest.approx(1e3)
        assert nz.asymptotic_noise_threshold(p, Regime.GAIN_FIXED) == pytest.approx(1e4 * 4 / 3)
        assert nz.gain_fixed_noise_threshold(p) == pytest.approx(1e4 * 4 / 3)

    def test_piecewise_continuous_at_corners(self):
        for corner in (1e-8, 1e-4):
            lo = nz.piecewise_noise_threshold(corner * (1 - 1e-12))
            hi = nz.piecewise_noise_threshold(corner * (1 + 1e-12))
            assert lo == pytest.approx(hi, rel=1e-9)

    def test_piecewise_values(self):
        assert nz.piecewise_noise_threshold(1e-12) == pytest.approx(1e6)
        assert nz.piecewise_noise_threshold(1e-6) == pytest.approx(1e4)
        assert nz.piecewise_noise_threshold(1e-2) == pytest.approx(1e3)

    def test_regime_values_are_tags(self):
        assert {r.value for r in Regime} == {"adiabatic", "gain-fixed", "stimulated-dominated"}
