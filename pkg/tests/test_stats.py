import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from disorder.stats import (
    cles,
    edit_accuracy,
    levenshtein,
    mann_whitney_u,
    mann_whitney_u_exact,
    t_score_single,
    t_test_independent,
)


class TestMannWhitney:
    def test_identical_sets(self):
        u, p = mann_whitney_u([1, 2, 3], [1, 2, 3])
        assert u == 4.5
        assert p > 0.99

    def test_complete_separation_low(self):
        u, _ = mann_whitney_u([1, 2], [3, 4])
        assert u == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mann_whitney_u([], [1])
        with pytest.raises(ValueError):
            mann_whitney_u([1], [])

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    @pytest.mark.parametrize("alternative", ["two-sided", "greater", "less"])
    def test_matches_reference(self, seed, alternative):
        rng = np.random.default_rng(seed)
        a = list(rng.integers(0, 40, size=10).astype(float))
        b = list(rng.integers(0, 40, size=10).astype(float))
        u, p = mann_whitney_u(a, b, alternative=alternative)
        ref = scipy.stats.mannwhitneyu(a, b, alternative=alternative,
                                       use_continuity=True, method="asymptotic")
        assert abs(u - ref.statistic) < 1e-9
        assert abs(p - ref.pvalue) < 1e-6

    def test_u_equals_cles_times_nm(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = list(rng.integers(0, 6, size=int(rng.integers(1, 7))).astype(float))
            b = list(rng.integers(0, 6, size=int(rng.integers(1, 7))).astype(float))
            u, _ = mann_whitney_u(a, b)
            assert abs(u - cles(a, b) * len(a) * len(b)) < 1e-9

    def test_exact_identical_sets_p_one(self):
        _, p = mann_whitney_u_exact([2, 2], [2, 2])
        assert p == 1.0

    def test_exact_complete_separation(self):
        u, p = mann_whitney_u_exact([5, 6, 7], [1, 2, 3], alternative="greater")
        assert u == 9.0
        assert p == pytest.approx(1 / 20)  # C(6,3) = 20 assignments

    def test_exact_agrees_with_asymptotic_direction(self):
        rng = np.random.default_rng(3)
        a = list(rng.normal(5, 1, 7))
        b = list(rng.normal(0, 1, 7))
        _, p_exact = mann_whitney_u_exact(a, b, alternative="greater")
        _, p_norm = mann_whitney_u(a, b, alternative="greater")
        assert p_exact < 0.01 and p_norm < 0.01

    def test_exact_size_limit(self):
        with pytest.raises(ValueError):
            mann_whitney_u_exact(list(range(9)), list(range(9)))


class TestCles:
    def test_complete_separation(self):
        assert cles([3, 4], [1, 2]) == 1.0

    def test_interleaved(self):
        assert cles([2, 4], [1, 3]) == 0.75

    def test_tie_convention(self):
        assert cles([5], [5]) == 0.5

    def test_complementarity(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            s = list(rng.normal(0, 1, 6))
            b = list(rng.normal(0, 1, 5))
            assert cles(s, b) + cles(b, s) == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            cles([], [1])


class TestSingleObservationScore:
    def test_at_mean(self):
        assert t_score_single(10.0, 10.0, 2.0) == 1.0

    def test_at_196_sigma(self):
        assert t_score_single(1.96, 0.0, 1.0) == pytest.approx(0.05, abs=1e-3)

    def test_monotone_in_deviation(self):
        ps = [t_score_single(x, 0.0, 1.0) for x in (0.0, 0.5, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(ps, ps[1:]))

    def test_profile_ranking(self):
        # an observation at the high profile's mean ranks it above the low one
        p_high = t_score_single(5859.1, 5859.1, 1469.9)
        p_low = t_score_single(5859.1, 3224.2, 709.9)
        assert p_high > p_low

    def test_zero_std_rejected(self):
        with pytest.raises(ValueError):
            t_score_single(1.0, 0.0, 0.0)


class TestWelch:
    def test_copied_sample_p_one(self):
        a = [1.0, 2.0, 3.0, 4.0]
        assert t_test_independent(a, list(a)) == pytest.approx(1.0)

    def test_separated_gaussians(self):
        rng = np.random.default_rng(0)
        a = list(rng.normal(0, 1, 100))
        b = list(rng.normal(10, 1, 100))
        assert t_test_independent(a, b) < 1e-10

    def test_matches_reference(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            a = list(rng.normal(0, 2, 12))
            b = list(rng.normal(1, 3, 9))
            ref = scipy.stats.ttest_ind(a, b, equal_var=False)
            assert t_test_independent(a, b) == pytest.approx(ref.pvalue, abs=1e-9)

    def test_degenerate_variances(self):
        assert t_test_independent([2.0, 2.0], [2.0, 2.0]) == 1.0
        assert t_test_independent([2.0, 2.0], [3.0, 3.0]) == 0.0

    def test_small_samples_rejected(self):
        with pytest.raises(ValueError):
            t_test_independent([1.0], [1.0, 2.0])

    def test_two_class_fixture_prefers_own_class(self):
        rng = np.random.default_rng(9)
        train_a = list(rng.normal(100, 10, 500))
        train_b = list(rng.normal(160, 10, 500))
        sample = list(rng.normal(100, 10, 30))
        assert t_test_independent(sample, train_a) > t_test_independent(sample, train_b)


class TestLevenshtein:
    @pytest.mark.parametrize("a,b,d", [
        ("1011", "1011", 0),
        ("1011", "1001", 1),
        ("101", "1011", 1),
        ("", "111", 3),
        ("abc", "", 3),
        ("kitten", "sitting", 3),
    ])
    def test_known_distances(self, a, b, d):
        assert levenshtein(a, b) == d

    @given(st.text(alphabet="01", max_size=24), st.text(alphabet="01", max_size=24))
    @settings(max_examples=200, deadline=None)
    def test_symmetry(self, a, b):
        assert levenshtein(a, b) == levenshtein(b, a)

    @given(st.text(alphabet="01", max_size=16), st.text(alphabet="01", max_size=16),
           st.text(alphabet="01", max_size=16))
    @settings(max_examples=150, deadline=None)
    def test_triangle_inequality(self, a, b, c):
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)

    @given(st.text(alphabet="01", max_size=24))
    @settings(max_examples=100, deadline=None)
    def test_identity(self, a):
        assert levenshtein(a, a) == 0


class TestEditAccuracy:
    def test_identical(self):
        assert edit_accuracy("1" * 104, "1" * 104) == 100.0

    def test_one_flip_in_104(self):
        reference = "10" * 52
        decoded = "00" + reference[2:]
        assert edit_accuracy(reference, decoded) == pytest.approx(100 * 103 / 104)

    def test_floor_at_zero(self):
        assert edit_accuracy("0", "1" * 50) == 0.0

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            edit_accuracy("", "1")
