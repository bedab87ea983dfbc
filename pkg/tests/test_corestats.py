"""Core statistics: counting oracle, dilation accuracy, profiles, energy."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paircorr import (
    IntegerSequence,
    SequenceError,
    additive_energy,
    correlation_table,
    dilate,
    f_expectation,
    pair_corr_fast,
    pair_corr_naive,
    pair_count_fast,
    pair_count_naive,
    repr_profile,
    variance_bound,
)


def loop_count(points, gamma, s):
    """Independent pure-Python double loop, same predicate."""
    n = len(points)
    eps = s / n
    ys = []
    for p in points:
        v = p + gamma
        ys.append(v - 1.0 if v >= 1.0 else v)
    count = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = abs(points[i] - ys[j])
            if min(d, 1.0 - d) <= eps:
                count += 1
    return count


def brute_quadruples(elems):
    return sum(
        1
        for a in elems
        for b in elems
        for c in elems
        for d in elems
        if a + b == c + d
    )


points_01 = st.lists(
    st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False),
    min_size=1,
    max_size=48,
)
dyadic16 = st.integers(min_value=0, max_value=15).map(lambda k: k / 16.0)


# ---------------------------------------------------------------------------
# pair counting


class TestPairCounting:
    def test_two_points_wide_window(self):
        # s/n = 0.55 >= dist(0.5), both ordered pairs inside
        assert pair_corr_naive([0.0, 0.5], 0.0, 1.1) == 1.0

    def test_single_point_is_zero(self):
        assert pair_corr_naive([0.3], 0.9, 5.0) == 0.0

    def test_full_cover_reaches_n_minus_1(self):
        rng = np.random.default_rng(0)
        pts = rng.random(9)
        assert pair_corr_naive(pts, 0.123, 9.0) == 8.0
        assert pair_corr_fast(pts, 0.123, 9.0) == 8.0

    def test_shift_half_catches_both_orders(self):
        assert pair_corr_naive([0.0, 0.5], 0.5, 0.1) == 1.0

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError, match="empty sequence"):
            pair_corr_naive([], 0.0, 1.0)
        with pytest.raises(ValueError, match="empty sequence"):
            pair_corr_fast([], 0.0, 1.0)

    def test_nonpositive_s_rejected(self):
        with pytest.raises(ValueError):
            pair_count_naive([0.1], 0.0, 0.0)

    @given(
        points_01,
        st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False),
        st.floats(min_value=1e-6, max_value=60.0, allow_nan=False),
    )
    @settings(max_examples=150, deadline=None)
    def test_fast_equals_naive_equals_loop(self, pts, gamma, s):
        a = pair_count_naive(pts, gamma, s)
        b = pair_count_fast(pts, gamma, s)
        c = loop_count(pts, gamma, s)
        assert a == b == c

    @given(
        st.lists(dyadic16, min_size=1, max_size=24),
        dyadic16,
        st.integers(min_value=1, max_value=48).map(lambda k: k / 4.0),
    )
    @settings(max_examples=150, deadline=None)
    def test_exact_dyadic_boundaries_agree(self, pts, gamma, s):
        # every quantity is an exact dyadic, so window ties are real
        a = pair_count_naive(pts, gamma, s)
        b = pair_count_fast(pts, gamma, s)
        assert a == b == loop_count(pts, gamma, s)

    @given(points_01, st.floats(min_value=0.0, max_value=0.999))
    @settings(max_examples=60, deadline=None)
    def test_count_monotone_in_s(self, pts, gamma):
        n = len(pts)
        counts = [pair_count_fast(pts, gamma, s) for s in (0.1, 0.5, 1.0, 2.0)]
        assert counts == sorted(counts)
        assert counts[-1] <= n * (n - 1)

    def test_gamma_reflection_symmetry(self):
        # swapping the pair order mirrors gamma to 1 - gamma
        pts = [k / 32.0 for k in (0, 3, 7, 11, 19, 30)]
        for gamma in (0.0, 0.125, 0.25, 0.5, 0.8125):
            mirrored = (1.0 - gamma) % 1.0
            for s in (0.25, 1.0, 2.5):
                assert pair_count_naive(pts, gamma, s) == pair_count_naive(
                    pts, mirrored, s
                )

    def test_randomized_oracle_equivalence_medium(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            n = int(rng.integers(2, 600))
            pts = rng.random(n)
            gamma = float(rng.random())
            s = float(rng.random() * n)
            assert pair_count_naive(pts, gamma, s) == pair_count_fast(pts, gamma, s)


# ---------------------------------------------------------------------------
# dilation


class TestDilate:
    def test_exact_dyadic(self):
        out = dilate(IntegerSequence([1, 2, 3]), 3, 0.25)
        assert out.tolist() == [0.25, 0.5, 0.75]

    def test_integer_product_wraps_to_zero(self):
        assert dilate(IntegerSequence([4]), 1, 0.75).tolist() == [0.0]

    def test_large_element_against_exact_rational(self):
        alpha = 1.0 / 3.0
        a = 10 ** 6 + 1
        exact = Fraction(a) * Fraction(alpha)
        exact -= int(exact)
        got = dilate(IntegerSequence([a]), 1, alpha)[0]
        assert abs(got - float(exact)) <= 2.0 ** -40
        # 10**6 + 1 is 2 mod 3, so the fraction sits near 2/3
        assert abs(got - 2.0 / 3.0) < 1e-9

    def test_huge_elements_use_exact_path(self):
        a = (1 << 200) + 12345
        alpha = 0.6180339887498949
        exact = Fraction(a) * Fraction(alpha)
        exact -= int(exact)
        got = dilate(IntegerSequence([a]), 1, alpha)[0]
        assert abs(got - float(exact)) <= 2.0 ** -40

    def test_prefix_too_short(self):
        with pytest.raises(SequenceError, match="prefix too short"):
            dilate(IntegerSequence([1, 2]), 3, 0.5)

    @given(
        st.integers(min_value=1, max_value=(1 << 53)),
        st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False),
    )
    @settings(max_examples=200, deadline=None)
    def test_compensated_product_accuracy(self, a, alpha):
        exact = Fraction(a) * Fraction(alpha)
        exact -= int(exact)
        got = dilate([a], 1, alpha)[0]
        err = abs(Fraction(got) - exact)
        # wrapping a value within 2**-52 of 1 to 0 is still within budget
        assert min(err, 1 - err) <= Fraction(1, 1 << 40)

    def test_outputs_live_on_the_torus(self):
        rng = np.random.default_rng(3)
        seq = IntegerSequence(sorted(rng.integers(1, 1 << 50, 200).tolist()))
        out = dilate(seq, 200, float(rng.random()))
        assert out.min() >= 0.0 and out.max() < 1.0


# ---------------------------------------------------------------------------
# profiles and energy


class TestProfile:
    def test_three_element_profile(self):
        p = repr_profile(IntegerSequence([1, 2, 4]), 3)
        assert p.counts == {0: 3, 1: 1, -1: 1, 2: 1, -2: 1, 3: 1, -3: 1}
        p.check_invariants()

    def test_singleton_profile(self):
        assert repr_profile(IntegerSequence([5]), 1).counts == {0: 1}

    def test_consecutive_profile(self):
        p = repr_profile(IntegerSequence([1, 2, 3]), 3)
        assert p.counts == {0: 3, 1: 2, -1: 2, 2: 1, -2: 1}

    @given(st.sets(st.integers(min_value=1, max_value=500), min_size=1, max_size=25))
    @settings(max_examples=100, deadline=None)
    def test_profile_identities(self, elems):
        n = len(elems)
        p = repr_profile(IntegerSequence(sorted(elems)), n)
        assert sum(p.counts.values()) == n * n
        assert p.counts[0] == n
        assert all(p.counts[-d] == r for d, r in p.counts.items())

    def test_bigint_profile(self):
        elems = [1 << 100, (1 << 100) + 1, (1 << 101)]
        p = repr_profile(IntegerSequence(elems), 3)
        assert sum(p.counts.values()) == 9
        assert p.counts[1] == 1


class TestEnergy:
    def test_consecutive_three(self):
        assert additive_energy(IntegerSequence([1, 2, 3]), 3) == 19

    def test_singleton(self):
        assert additive_energy(IntegerSequence([5]), 1) == 1

    def test_sidon_four(self):
        assert additive_energy(IntegerSequence([1, 2, 5, 11]), 4) == 28

    @pytest.mark.parametrize("n", [1, 2, 7, 33, 200])
    def test_initial_interval_closed_form(self, n):
        seq = IntegerSequence(range(1, n + 1))
        assert additive_energy(seq, n) == (2 * n ** 3 + n) // 3

    @given(st.sets(st.integers(min_value=1, max_value=60), min_size=1, max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_matches_quadruple_enumeration(self, elems):
        ordered = sorted(elems)
        got = additive_energy(IntegerSequence(ordered), len(ordered))
        assert got == brute_quadruples(ordered)

    @given(st.sets(st.integers(min_value=1, max_value=120), min_size=1, max_size=12))
    @settings(max_examples=40, deadline=None)
    def test_equals_profile_square_sum(self, elems):
        ordered = sorted(elems)
        n = len(ordered)
        p = repr_profile(IntegerSequence(ordered), n)
        assert additive_energy(IntegerSequence(ordered), n) == p.energy()

    def test_bigint_path_matches_enumeration(self):
        elems = [(1 << 70) + 3 * k * k for k in range(1, 9)]
        got = additive_energy(IntegerSequence(elems), len(elems))
        assert got == brute_quadruples(elems)

    def test_lacunary_is_sidon(self):
        n = 40
        seq = IntegerSequence([2 ** k for k in range(1, n + 1)])
        assert additive_energy(seq, n) == 2 * n * n - n


# ---------------------------------------------------------------------------
# closed forms


class TestMoments:
    def test_expectation_values(self):
        assert f_expectation(0.5, 2) == 0.5
        assert f_expectation(3.0, 12) == 5.5
        assert abs(f_expectation(1.0, 10 ** 9) - 2.0) < 1e-8

    def test_expectation_range_check(self):
        with pytest.raises(ValueError, match="formula out of range"):
            f_expectation(2.0, 3)

    def test_variance_bound_values(self):
        assert variance_bound(0, 5, 1.0) == 0.0
        assert variance_bound(19, 3, 1.0) == pytest.approx(38 / 27)

    def test_variance_bound_full_interval_limit(self):
        # E([n]) keeps the bound near (4/3) s for every n
        for n in (64, 256, 1024):
            energy = (2 * n ** 3 + n) // 3
            assert variance_bound(energy, n, 1.0) == pytest.approx(4 / 3, rel=1e-3)

    def test_minimal_energy_floor(self):
        # r(0) = n forces E >= n**2, so the bound is at least 2 s / n
        for n in (2, 10, 100):
            seq = IntegerSequence([3 ** k for k in range(1, n + 1)])
            e = additive_energy(seq, n)
            assert e >= n * n
            assert variance_bound(e, n, 1.0) >= 2.0 / n


# ---------------------------------------------------------------------------
# difference decomposition of the counting statistic


def test_count_decomposes_over_difference_profile():
    """The window count equals sum_d r(d) [dist(d*alpha - gamma) <= s/n]
    over nonzero d, evaluated independently with exact dyadic data."""
    from paircorr.torus import frac_multiple_exact

    rng = np.random.default_rng(11)
    for trial in range(8):
        n = int(rng.integers(2, 120))
        elems = sorted(rng.choice(np.arange(1, 4000), size=n, replace=False).tolist())
        seq = IntegerSequence(elems)
        # coarse dyadics keep every intermediate exact
        alpha = int(rng.integers(0, 1 << 20)) / float(1 << 20)
        gamma = int(rng.integers(0, 1 << 20)) / float(1 << 20)
        s = float(rng.integers(1, 2 * n)) / 2.0
        eps = s / n

        pts = dilate(seq, n, alpha)
        lhs = pair_count_fast(pts, gamma, s)

        profile = repr_profile(seq, n)
        rhs = 0
        for d, r in profile.counts.items():
            if d == 0:
                continue
            v = frac_multiple_exact(abs(d), alpha)
            if d < 0:
                v = (1.0 - v) % 1.0
            w = abs(v - gamma)
            if min(w, 1.0 - w) <= eps:
                rhs += r
        assert lhs == rhs


def test_correlation_table_shape_and_monotonicity():
    seq = IntegerSequence(range(1, 129))
    res = correlation_table(seq, 0.37454011, 0.12, [0.5, 1.0, 2.0], [32, 64, 128])
    assert len(res.entries) == 9
    for s, n, count, f in res.entries:
        assert f == count / n
        assert count <= n * (n - 1)
    by_n = {}
    for s, n, count, _ in res.entries:
        by_n.setdefault(n, []).append((s, count))
    for n, rows in by_n.items():
        rows.sort()
        counts = [c for _, c in rows]
        assert counts == sorted(counts)


# ---------------------------------------------------------------------------
# sequence container


class TestIntegerSequence:
    def test_monotonicity_enforced(self):
        with pytest.raises(SequenceError):
            IntegerSequence([1, 1, 2])
        with pytest.raises(SequenceError):
            IntegerSequence([0, 1])

    def test_file_round_trip(self, tmp_path):
        seq = IntegerSequence([1, 5, 100, 10 ** 30])
        path = tmp_path / "seq.txt"
        seq.to_file(path)
        assert IntegerSequence.from_file(path) == seq

    def test_malformed_file_reports_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1\n2\nxyz\n")
        with pytest.raises(SequenceError, match="line 3"):
            IntegerSequence.from_file(path)

    def test_non_monotone_file_reports_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1\n5\n3\n")
        with pytest.raises(SequenceError, match="line 3"):
            IntegerSequence.from_file(path)
