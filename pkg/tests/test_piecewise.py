import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasetopo import piecewise as pw
from phasetopo.symbols import Complement, cap, empty_region, hemisphere, polar_cap, whole_sphere


class TestSchatten:
    def test_identity(self):
        for p in (1, 2, 4, math.inf):
            assert pw.schatten_norm(np.eye(7), p) == pytest.approx(1.0, abs=1e-15)

    def test_rank_one_projector(self):
        v = np.ones(5) / math.sqrt(5)
        assert pw.schatten_norm(np.outer(v, v), 1) == pytest.approx(1 / 5, abs=1e-15)

    def test_diagonal_two_norm(self):
        assert pw.schatten_norm(np.diag([0.25, 0.75]), 2) == pytest.approx(math.sqrt(5 / 16), abs=1e-15)

    def test_non_hermitian_uses_singular_values(self):
        J = np.array([[0.0, 2.0], [0.0, 0.0]])
        assert pw.schatten_norm(J, 1) == pytest.approx(1.0)

    def test_exponent_below_one_rejected(self):
        with pytest.raises(pw.AppendixError):
            pw.schatten_norm(np.eye(2), 0.5)

    @given(st.integers(1, 6), st.integers(0, 1000))
    def test_monotone_in_p(self, d, seed):
        A = np.random.default_rng(seed).standard_normal((d, d))
        n1, n2, n4 = (pw.schatten_norm(A, p) for p in (1, 2, 4))
        assert n1 <= n2 * (1 + 1e-12) and n2 <= n4 * (1 + 1e-12)


class TestGoodSets:
    @pytest.mark.parametrize("k", [4, 17, 40])
    def test_trivial_sets(self, k):
        assert pw.good_set_defect(k, empty_region()) == pytest.approx(0.0, abs=1e-13)
        assert pw.good_set_defect(k, whole_sphere()) == pytest.approx(0.0, abs=1e-13)

    @pytest.mark.parametrize("k", [5, 16, 33])
    def test_complement(self, k):
        A = polar_cap(0.7, 0.3, 0.9)
        TA = pw.region_operator(k, A)
        assert np.allclose(pw.region_operator(k, Complement(A)), np.eye(k + 1) - TA, atol=1e-12)
        assert pw.good_set_defect(k, Complement(A)) == pytest.approx(pw.good_set_defect(k, A), rel=1e-10)

    def test_kernel_integral_matches_operator(self):
        H = hemisphere()
        for k in (8, 32, 96):
            d, i = pw.good_set_defect(k, H), pw.good_set_integral(k, H)
            assert abs(d - i) / d < 1e-8

    def test_hemisphere_defect_decays(self):
        vals = [pw.good_set_defect(k, hemisphere()) for k in (8, 16, 32, 64)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestSpectrum:
    def test_k1_hemisphere(self):
        sp = pw.cap_spectrum(1, math.pi / 2)
        assert np.allclose(sp.eigenvalues, [0.25, 0.75], atol=1e-14)
        assert sp.defect_op_norm == pytest.approx(3 / 16)

    def test_full_cap(self):
        sp = pw.cap_spectrum(9, math.pi)
        assert np.array_equal(sp.eigenvalues, np.ones(10))
        assert sp.defect_op_norm == 0.0

    def test_even_k_has_exact_half(self):
        assert pw.cap_spectrum(10, math.pi / 2).min_gap_to_half < 1e-12

    def test_odd_k_gap_shrinks(self):
        gaps = [pw.cap_spectrum(k, math.pi / 2).min_gap_to_half for k in (15, 31, 63, 127)]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))

    def test_eigenvalues_in_unit_interval(self):
        ev = pw.cap_spectrum(40, 1.1).eigenvalues
        assert ev.min() >= -1e-12 and ev.max() <= 1 + 1e-12


class TestProductsAndRoots:
    def test_disjoint_caps(self):
        # T_A T_B -> 0 while T_(A and B) = 0
        A, B = cap((0, 0, 1), 0.6), cap((0, 0, -1), 0.6)
        vals = [pw.product_defect(k, A, B) for k in (8, 16, 32)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-6

    def test_sqrt_of_indicator_is_itself(self):
        A = polar_cap(0.4, 0.0, 1.0)
        f = pw.indicator(A)
        Tf = pw.region_operator(12, f)
        assert np.allclose(pw.region_operator(12, f.map(np.sqrt)), Tf, atol=1e-13)

    def test_multi_time_whole_sphere(self):
        mt = pw.multi_time_check(10, [whole_sphere(), whole_sphere(), whole_sphere()])
        assert mt.lhs == pytest.approx(1.0, abs=1e-12)
        assert mt.rhs == pytest.approx(1.0, abs=1e-12)
        assert mt.gap < 1e-12


class TestFits:
    def test_synthetic_power_law(self):
        ks = [16, 32, 64, 128, 256]
        rep = pw.fit_scaling_exponent([(1 / k, 3.0 * k ** -0.5) for k in ks], "synthetic", 0.5, 0.45)
        assert rep.slope == pytest.approx(0.5, abs=1e-12)
        assert rep.intercept == pytest.approx(math.log(3.0), abs=1e-12)
        assert rep.passed and "pass" in rep.line()
        assert [k for k, _ in rep.samples] == ks

    def test_below_threshold_fails(self):
        rep = pw.scan(lambda k: k ** -0.3, [8, 16, 32, 64], "slow", 0.5, 0.45)
        assert not rep.passed and "FAIL" in rep.line()

    def test_non_positive_samples_dropped(self):
        samples = [(1 / k, k ** -1.0) for k in (8, 16, 32, 64)] + [(1 / 128, 0.0)]
        rep = pw.fit_scaling_exponent(samples)
        assert rep.notes and rep.slope == pytest.approx(1.0)

    def test_too_few_samples(self):
        with pytest.raises(pw.AppendixError):
            pw.fit_scaling_exponent([(0.5, 1.0), (0.25, 0.5), (0.125, 0.0)])

    def test_report_json(self):
        import json

        rep = pw.fit_scaling_exponent([(1 / k, 1 / k) for k in (4, 8, 16, 32)], "x", 1.0, 0.9)
        obj = json.loads(rep.to_json())
        assert obj["pass"] is True and obj["samples"][0] == [4, 0.25]
