import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from biphoton_radon.errors import InvalidParametersError, PhaseWrapWarning
from biphoton_radon.state import (
    PB,
    XA,
    XB,
    BiphotonParams,
    GaussianPhaseDensity,
    GaussianState4,
    arm_b_rotation,
    covariance_from_params,
    invert_widths,
    momentum_density,
    momentum_mass,
    normalize_phase,
    position_density,
    position_mass,
    rotate_arm_b,
    wavefunction_momentum,
    wavefunction_position,
)

widths = st.floats(min_value=0.05, max_value=50.0, allow_nan=False)


class TestParams:
    def test_reference_inversion(self, ref_params):
        np.testing.assert_allclose(ref_params.w1, 40.0036, atol=5e-4)
        np.testing.assert_allclose(ref_params.w2, 1499.87, atol=5e-3)
        np.testing.assert_allclose(ref_params.sigma_s, 1500.0, rtol=1e-13)
        np.testing.assert_allclose(ref_params.sigma_c, 40.0, rtol=1e-13)

    @given(widths, widths)
    def test_round_trip(self, w1, w2):
        p = BiphotonParams(w1, w2)
        if p.sigma_c >= p.sigma_s * (1 - 1e-9):
            return  # product state, w1 = 2 w2: no strict inverse
        a, b = invert_widths(p.sigma_s, p.sigma_c)
        q = BiphotonParams(a, b)
        np.testing.assert_allclose([q.sigma_s, q.sigma_c], [p.sigma_s, p.sigma_c], rtol=1e-9)

    @given(widths, widths)
    def test_conditional_never_exceeds_single(self, w1, w2):
        p = BiphotonParams(w1, w2)
        assert p.sigma_c <= p.sigma_s * (1 + 1e-12)

    def test_product_state_equality(self):
        p = BiphotonParams(2.0, 1.0)
        np.testing.assert_allclose(p.sigma_c, p.sigma_s, rtol=1e-15)

    @pytest.mark.parametrize("w1, w2", [(0.0, 1.0), (-1.0, 1.0), (1.0, math.inf), (math.nan, 1.0)])
    def test_rejects_bad_widths(self, w1, w2):
        with pytest.raises(InvalidParametersError):
            BiphotonParams(w1, w2)

    @pytest.mark.parametrize("ss, sc", [(10.0, 10.0), (10.0, 11.0), (10.0, 0.0), (math.nan, 1.0)])
    def test_inversion_rejects(self, ss, sc):
        with pytest.raises(InvalidParametersError):
            invert_widths(ss, sc)


class TestWavefunctions:
    def test_scalar_and_array(self, small_params):
        assert np.ndim(wavefunction_position(small_params, 0.1, 0.2)) == 0
        assert wavefunction_momentum(small_params, np.zeros(3), np.ones(3)).shape == (3,)

    def test_rejects_nonfinite(self, small_params):
        with pytest.raises(InvalidParametersError):
            wavefunction_position(small_params, np.nan, 0.0)

    def test_position_mass_against_dblquad(self, small_params):
        val, _ = integrate.dblquad(
            lambda b, a: wavefunction_position(small_params, a, b) ** 2, -30, 30, -30, 30, epsabs=1e-13
        )
        np.testing.assert_allclose(position_mass(small_params), val, rtol=1e-8)

    def test_momentum_mass_against_dblquad(self, small_params):
        val, _ = integrate.dblquad(
            lambda b, a: wavefunction_momentum(small_params, a, b) ** 2, -5, 5, -5, 5, epsabs=1e-13
        )
        np.testing.assert_allclose(momentum_mass(small_params), val, rtol=1e-8)

    def test_momentum_amplitude_is_fourier_transform(self, small_params):
        # transform kernel exp(-2i x.p); the amplitude is even, so only the cosine part survives
        pa, pb = 0.13, -0.21
        re, _ = integrate.dblquad(
            lambda b, a: wavefunction_position(small_params, a, b) * math.cos(2 * (a * pa + b * pb)),
            -25, 25, -25, 25, epsabs=1e-12,
        )
        re0, _ = integrate.dblquad(lambda b, a: wavefunction_position(small_params, a, b), -25, 25, -25, 25)
        ratio = wavefunction_momentum(small_params, pa, pb) / wavefunction_momentum(small_params, 0.0, 0.0)
        np.testing.assert_allclose(re / re0, ratio, rtol=1e-7)


class TestCovariance:
    @staticmethod
    def _grid_moments(density, half, n=1201):
        # trapezoid rule on a fine square grid; spectrally accurate for Gaussians
        t = np.linspace(-half, half, n)
        a, b = np.meshgrid(t, t, indexing="ij")
        rho = density(a, b)
        mass = integrate.trapezoid(integrate.trapezoid(rho, t), t)
        m_aa = integrate.trapezoid(integrate.trapezoid(a * a * rho, t), t)
        m_ab = integrate.trapezoid(integrate.trapezoid(a * b * rho, t), t)
        return mass, m_aa, m_ab

    def test_position_moments_against_quadrature(self, small_params):
        cov = covariance_from_params(small_params).covariance
        mass, vx, cx = self._grid_moments(lambda a, b: position_density(small_params, a, b), 30.0)
        np.testing.assert_allclose(mass, 1.0, rtol=1e-9)
        np.testing.assert_allclose([cov[XA, XA], cov[XA, XB]], [vx, cx], rtol=1e-8)

    def test_momentum_moments_against_quadrature(self, small_params):
        cov = covariance_from_params(small_params).covariance
        mass, vp, cp = self._grid_moments(lambda a, b: momentum_density(small_params, a, b), 4.0)
        np.testing.assert_allclose(mass, 1.0, rtol=1e-9)
        np.testing.assert_allclose([cov[1, 1], cov[1, 3]], [vp, cp], rtol=1e-8)

    def test_conditional_width(self, ref_state, ref_params):
        c = ref_state.covariance
        cond = c[XA, XA] - c[XA, XB] ** 2 / c[XB, XB]
        np.testing.assert_allclose(math.sqrt(cond), ref_params.sigma_c, rtol=1e-10)

    def test_correlation_magnitude_matches_between_bases(self, ref_state):
        c = ref_state.covariance
        np.testing.assert_allclose(c[0, 2] / c[0, 0], -c[1, 3] / c[1, 1], rtol=1e-12)

    def test_rejects_asymmetric(self):
        m = np.eye(4)
        m[0, 1] = 0.5
        with pytest.raises(InvalidParametersError):
            GaussianState4(m)

    def test_rejects_indefinite(self):
        m = np.eye(4)
        m[0, 2] = m[2, 0] = 1.5
        with pytest.raises(InvalidParametersError):
            GaussianState4(m)

    def test_accessors(self, ref_state):
        assert ref_state.var("xA") == ref_state.covariance[0, 0]
        assert ref_state.cov("pA", "pB") == ref_state.covariance[1, 3]


class TestRotation:
    def test_zero_is_identity(self, ref_state):
        assert rotate_arm_b(ref_state, 0.0) is ref_state

    def test_arm_a_untouched(self, ref_state):
        rot = rotate_arm_b(ref_state, 0.7).covariance
        np.testing.assert_array_equal(rot[:2, :2], ref_state.covariance[:2, :2])

    def test_symplectic(self):
        J = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
        R = arm_b_rotation(1.1)
        np.testing.assert_allclose(R @ J @ R.T, J, atol=1e-15)

    def test_composition(self, small_params):
        s = covariance_from_params(small_params)
        a = rotate_arm_b(rotate_arm_b(s, 0.4), 0.9)
        b = rotate_arm_b(s, 1.3)
        np.testing.assert_allclose(a.covariance, b.covariance, atol=1e-14)
        assert a.phi == pytest.approx(1.3)

    def test_half_turn_flips_sign(self, small_params):
        s = covariance_from_params(small_params)
        with pytest.warns(PhaseWrapWarning):
            t = rotate_arm_b(s, math.pi)
        assert t is s

    def test_rotated_quadrature_variance(self, small_params):
        s = covariance_from_params(small_params)
        phi = 0.6
        c = rotate_arm_b(s, phi).covariance
        v = s.covariance
        want = math.cos(phi) ** 2 * v[XB, XB] + math.sin(phi) ** 2 * v[PB, PB]
        np.testing.assert_allclose(c[XB, XB], want, rtol=1e-14)

    @given(st.floats(min_value=-50, max_value=50, allow_nan=False))
    @settings(max_examples=50)
    def test_normalize_phase_range(self, phi):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PhaseWrapWarning)
            out = normalize_phase(phi)
        assert 0 <= out < math.pi
        np.testing.assert_allclose(math.sin(2 * out), math.sin(2 * phi), atol=1e-9)

    def test_in_range_phase_does_not_warn(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert normalize_phase(1.0) == 1.0

    def test_negative_phase_warns(self):
        with pytest.warns(PhaseWrapWarning):
            assert normalize_phase(-0.5) == pytest.approx(math.pi - 0.5)


class TestPhaseDensity:
    def test_unit_mass(self):
        g = GaussianPhaseDensity(0.8)
        val, _ = integrate.dblquad(lambda p, x: g(x, p), -10, 10, -10, 10)
        np.testing.assert_allclose(val, 1.0, rtol=1e-9)

    def test_rejects_bad_sigma(self):
        with pytest.raises(InvalidParametersError):
            GaussianPhaseDensity(0.0)


class TestSpecExamples:
    def test_position_values(self):
        p = BiphotonParams(1.0, 1.0)
        assert wavefunction_position(p, 0.0, 0.0) == pytest.approx(0.159155, abs=1e-6)
        # e^-1.25 / (2 pi) = 0.0455987
        assert wavefunction_position(p, 2.0, 0.0) == pytest.approx(math.exp(-1.25) / (2 * math.pi), rel=1e-14)

    def test_momentum_value(self):
        assert wavefunction_momentum(BiphotonParams(1.0, 1.0), 0.0, 0.0) == pytest.approx(2.54648, abs=1e-5)

    def test_exchange_symmetry(self, small_params):
        a, b = np.random.default_rng(0).normal(size=(2, 100))
        np.testing.assert_array_equal(wavefunction_position(small_params, a, b), wavefunction_position(small_params, b, a))
        np.testing.assert_array_equal(wavefunction_momentum(small_params, a, b), wavefunction_momentum(small_params, b, a))

    def test_density_normalised(self, small_params):
        t = np.linspace(-5, 5, 1601)
        a, b = np.meshgrid(t, t, indexing="ij")
        val = integrate.trapezoid(integrate.trapezoid(momentum_density(small_params, a, b), t), t)
        np.testing.assert_allclose(val, 1.0, atol=1e-8)

    def test_narrow_conditional_limit(self):
        w1, w2 = invert_widths(1e6, 1.0)
        np.testing.assert_allclose([w1, w2], [1.0, 1e6], rtol=1e-9)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 0.999))
    def test_round_trip_from_widths(self, ss, ratio):
        sc = ss * ratio
        p = BiphotonParams(*invert_widths(ss, sc))
        np.testing.assert_allclose([p.sigma_s, p.sigma_c], [ss, sc], rtol=1e-10)

    def test_strict_inequality_off_product_line(self):
        rng = np.random.default_rng(1)
        for w1, w2 in rng.uniform(0.01, 10, size=(1000, 2)):
            p = BiphotonParams(w1, w2)
            if abs(w1 - 2 * w2) > 1e-6:
                assert p.sigma_c < p.sigma_s

    def test_unit_widths_covariance(self):
        c = covariance_from_params(BiphotonParams(1.0, 1.0))
        assert c.var("xA") == pytest.approx(1.25) and c.cov("xA", "xB") == pytest.approx(0.75)
        assert c.var("pA") == pytest.approx(0.078125)

    def test_sum_and_difference_variances(self, small_params):
        v = covariance_from_params(small_params).covariance
        diff = v[XA, XA] + v[XB, XB] - 2 * v[XA, XB]
        tot = v[XA, XA] + v[XB, XB] + 2 * v[XA, XB]
        np.testing.assert_allclose([diff, tot], [small_params.w1**2, 4 * small_params.w2**2], rtol=1e-13)

    def test_structure(self, ref_state, ref_params):
        v = ref_state.covariance
        assert v[0, 0] == v[2, 2] == pytest.approx(ref_params.sigma_s**2, rel=1e-14)
        assert v[0, 1] == v[0, 3] == v[2, 1] == v[2, 3] == 0.0

    def test_positive_definite_random(self):
        rng = np.random.default_rng(2)
        for w1, w2 in np.exp(rng.uniform(-4, 8, size=(1000, 2))):
            covariance_from_params(BiphotonParams(w1, w2))

    def test_quarter_turn_swaps(self, small_params):
        s = covariance_from_params(small_params)
        r = rotate_arm_b(s, math.pi / 2)
        np.testing.assert_allclose(r.var("xB"), s.var("pB"), rtol=1e-14)

    def test_determinant_preserved(self, small_params):
        s = covariance_from_params(small_params)
        for phi in np.random.default_rng(3).uniform(0, math.pi, 20):
            np.testing.assert_allclose(np.linalg.det(rotate_arm_b(s, phi).covariance), np.linalg.det(s.covariance), rtol=1e-12)
