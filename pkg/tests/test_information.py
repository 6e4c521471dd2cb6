import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from biphoton_radon.detection import CoincidenceHistogram, DetectorConfig, bin_joint_probabilities, phi_sweep
from biphoton_radon.errors import InvalidParametersError, UndefinedDistributionError
from biphoton_radon.information import (
    MIKind,
    MIResult,
    RadonMode,
    additive_noise,
    entropy,
    mi_closed_form,
    mi_discrete,
    mi_radon_full,
    mi_shannon_additive,
    mutual_information_table,
    theoretical_max,
)
from biphoton_radon.state import BiphotonParams, GaussianState4
from biphoton_radon.tomography import Grid2D


def _kl_mi(table):
    p = np.asarray(table, float)
    p = p / p.sum()
    q = np.outer(p.sum(axis=1), p.sum(axis=0))
    return stats.entropy(p.ravel(), q.ravel(), base=2)


class TestEntropy:
    def test_uniform(self):
        assert entropy(np.full(8, 1 / 8)) == pytest.approx(3.0)

    def test_zero_terms(self):
        assert entropy([0.5, 0.0, 0.5]) == pytest.approx(1.0)

    def test_matches_scipy(self):
        p = np.random.default_rng(0).dirichlet(np.ones(20))
        np.testing.assert_allclose(entropy(p), stats.entropy(p, base=2), rtol=1e-13)


class TestDiscreteMI:
    def test_diagonal_and_product(self):
        assert mutual_information_table(np.eye(4) / 4) == pytest.approx(2.0)
        p = np.outer([0.2, 0.3, 0.5], [0.6, 0.1, 0.3])
        assert mutual_information_table(p) == pytest.approx(0.0, abs=1e-14)

    @given(arrays(np.float64, (5, 5), elements=st.one_of(st.just(0.0), st.floats(1e-6, 1))))
    @settings(max_examples=60)
    def test_against_kl_oracle(self, t):
        if t.sum() <= 0:
            return
        mi = mutual_information_table(t)
        np.testing.assert_allclose(mi, _kl_mi(t), atol=1e-11)
        ha = entropy(t.sum(axis=1) / t.sum())
        hb = entropy(t.sum(axis=0) / t.sum())
        assert -1e-12 <= mi <= min(ha, hb) + 1e-12

    def test_empty_table(self):
        with pytest.raises(UndefinedDistributionError):
            mutual_information_table(np.zeros((3, 3)))

    def test_kind_by_phase(self, ref_state):
        h0 = bin_joint_probabilities(ref_state, DetectorConfig.default(ref_state, 4))
        h1 = bin_joint_probabilities(ref_state, DetectorConfig.default(ref_state, 4, phi=0.3))
        assert mi_discrete(h0).kind is MIKind.STANDARD_I0
        assert mi_discrete(h1).kind is MIKind.PARTIAL_AT_PHI
        assert mi_discrete(h0).shots is None

    def test_reference_values(self, ref_state):
        # exact binned MI at half range 4 sigma_s; see the convergence test for the oracle
        want = {2: 0.930, 4: 1.177, 32: 3.547}
        for d, v in want.items():
            h = bin_joint_probabilities(ref_state, DetectorConfig.default(ref_state, d))
            assert mi_discrete(h).bits == pytest.approx(v, abs=1e-3)

    def test_converges_to_continuous_gaussian(self):
        r = 0.8
        cov = np.eye(4)
        cov[0, 2] = cov[2, 0] = r
        h = bin_joint_probabilities(GaussianState4(cov), DetectorConfig(1024, 7.0))
        continuous = -0.5 * math.log2(1 - r * r)
        bits = mi_discrete(h).bits
        assert bits <= continuous
        assert bits == pytest.approx(continuous, abs=2e-3)

    def test_bounded_by_log2_d(self, ref_state):
        for d in (2, 8, 64):
            h = bin_joint_probabilities(ref_state, DetectorConfig.default(ref_state, d))
            # d + 1 outcomes per arm including out-of-range
            assert mi_discrete(h).bits <= math.log2(d + 1)


class TestClosedForms:
    def test_reference(self, ref_params):
        assert mi_closed_form(ref_params).bits == pytest.approx(10.4577, abs=1e-4)

    def test_shannon_form_agrees(self):
        for ss, sc in [(1500.0, 40.0), (3.0, 1.0), (10.0, 9.0)]:
            p = BiphotonParams.from_widths(ss, sc)
            np.testing.assert_allclose(mi_shannon_additive(p).bits, mi_closed_form(p).bits, rtol=1e-12)

    def test_additive_noise(self):
        np.testing.assert_allclose(additive_noise(5.0, 3.0), 3.0 / 0.8, rtol=1e-15)
        with pytest.raises(InvalidParametersError):
            additive_noise(1.0, 1.0)

    def test_theoretical_max(self):
        assert theoretical_max(900) == pytest.approx(9.8138, abs=1e-4)
        with pytest.raises(InvalidParametersError):
            theoretical_max(0)


@pytest.fixture(scope="module")
def sweep(ref_state):
    return phi_sweep(ref_state, DetectorConfig.default(ref_state, 16), 8)


class TestRadonModes:
    def test_sum_is_fsum_of_partials(self, sweep):
        res = mi_radon_full(sweep, RadonMode.SUM)
        parts = [mi_discrete(h).bits for h in sweep.histograms]
        assert res.bits == math.fsum(parts)
        assert res.extra["partials"] == parts
        assert res.m == 8 and res.kind is MIKind.RADON_FULL_SUM

    def test_mean(self, sweep):
        s = mi_radon_full(sweep, RadonMode.SUM).bits
        assert mi_radon_full(sweep, "meanOverPhi").bits == pytest.approx(s / 8, rel=1e-15)

    def test_reconstructed_clips(self):
        v = np.full((8, 8), 0.01)
        v[0, 0] = -0.05
        res = mi_radon_full(Grid2D(v, 1.0), RadonMode.RECONSTRUCTED)
        assert res.clamped_mass == pytest.approx(0.05)
        assert res.kind is MIKind.RADON_RECONSTRUCTED

    def test_needs_sweep(self):
        with pytest.raises(InvalidParametersError):
            mi_radon_full(np.eye(3), RadonMode.SUM)


class TestMIResult:
    def test_rejects_negative(self):
        with pytest.raises(InvalidParametersError):
            MIResult(-0.1, MIKind.CLOSED_FORM)

    def test_json(self):
        d = json.loads(MIResult(1.5, "closedForm").to_json())
        assert d == {"bits": 1.5, "kind": "closedForm", "shots": "exact"}


class TestSpecExamples:
    def test_two_by_two(self):
        assert mutual_information_table(np.array([[0.4, 0.1], [0.1, 0.4]])) == pytest.approx(0.27807, abs=1e-5)

    def test_power_of_two(self):
        # log2((sigma_s / sigma_c)**2) with ratio 2 is log2(4) = 2
        assert mi_closed_form(BiphotonParams.from_widths(2.0, 1.0)).bits == pytest.approx(2.0, abs=1e-12)
        assert mi_closed_form(BiphotonParams.from_widths(1500.0, 40.0)).bits == pytest.approx(2 * math.log2(37.5), abs=1e-12)

    def test_noise_first_order(self):
        ss, sc = 1500.0, 40.0
        n = additive_noise(ss, sc)
        assert abs(n - sc) / sc < sc**2 / ss**2 + 1e-12

    def test_noise_root_two(self):
        sc = 3.0
        p = BiphotonParams.from_widths(math.sqrt(2) * sc, sc)
        res = mi_shannon_additive(p)
        np.testing.assert_allclose(res.additive_noise, math.sqrt(2) * sc, rtol=1e-10)
        np.testing.assert_allclose(res.bits, 1.0, atol=1e-10)

    def test_shannon_identity_random(self):
        rng = np.random.default_rng(0)
        for ss, ratio in zip(rng.uniform(1, 5000, 1000), rng.uniform(1e-3, 0.999, 1000)):
            p = BiphotonParams.from_widths(ss, ss * ratio)
            assert abs(mi_shannon_additive(p).bits - mi_closed_form(p).bits) < 1e-12 * max(1.0, mi_closed_form(p).bits)

    def test_single_angle_modes(self, ref_state):
        sw = phi_sweep(ref_state, DetectorConfig.default(ref_state, 16), 1)
        i0 = mi_discrete(sw.histograms[0]).bits
        assert mi_radon_full(sw, RadonMode.SUM).bits == i0
        assert mi_radon_full(sw, RadonMode.MEAN).bits == i0

    def test_mean_bounded_by_max(self, sweep):
        parts = [mi_discrete(h).bits for h in sweep.histograms]
        assert mi_radon_full(sweep, RadonMode.MEAN).bits <= max(parts)

    def test_theoretical_max_values(self):
        assert theoretical_max(1024) == 10.0 and theoretical_max(2) == 1.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        t = rng.dirichlet(np.ones(36)).reshape(6, 6)
        perm = rng.permutation(6)
        np.testing.assert_allclose(mutual_information_table(t[np.ix_(perm, perm)]), mutual_information_table(t), atol=1e-13)

    def test_plug_in_bias_positive(self):
        from biphoton_radon.detection import sample_coincidences

        cov = np.eye(4)
        cov[0, 2] = cov[2, 0] = 0.5
        state = GaussianState4(cov)
        cfg = DetectorConfig(8, 3.0)
        exact = mi_discrete(bin_joint_probabilities(state, cfg)).bits
        vals = [mi_discrete(sample_coincidences(state, cfg, 500, seed=s)).bits for s in range(60)]
        mean, sem = np.mean(vals), np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert mean - exact > 3 * sem

    def test_log2_cap_when_overflow_negligible(self, ref_state):
        for d in (4, 64):
            h = bin_joint_probabilities(ref_state, DetectorConfig.default(ref_state, d, scale=7.0))
            assert h.overflow < 1e-9
            assert mi_discrete(h).bits <= math.log2(d) + 1e-6
