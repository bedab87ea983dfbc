"""Interval counts, discrepancy, and the deficiency ceiling for F."""

import itertools
import math

import numpy as np
import pytest

from paircorr import (
    NonequidistParams,
    gamma_ppc_upper_bound,
    interval_count,
    overrep_search,
    pair_count_naive,
    rotate_points,
    star_discrepancy,
    verify_ppc_failure,
    window_quadratic_form,
)
from paircorr.equidist import load_points
from paircorr.rng import sample_stream


class TestIntervalCount:
    def test_half_circle(self):
        assert interval_count([0.1, 0.9], (0.0, 0.5)) == (1, 0.5)

    def test_full_circle(self):
        count, share = interval_count([0.2, 0.4, 0.8], (0.0, 1.0))
        assert count == 3 and share == 1.0

    def test_wraparound(self):
        count, _ = interval_count([0.95, 0.05, 0.5], (0.9, 0.1))
        assert count == 2

    def test_degenerate_interval(self):
        assert interval_count([0.5], (0.3, 0.3))[0] == 0

    def test_partition_sums_to_n(self):
        rng = sample_stream(1, 0)
        pts = rng.random(257)
        for cells in (2, 3, 7, 16):
            edges = [(k / cells, (k + 1) / cells) for k in range(cells)]
            total = sum(interval_count(pts, e)[0] for e in edges)
            assert total == 257

    def test_empty_points_rejected(self):
        with pytest.raises(ValueError):
            interval_count([], (0.0, 0.5))


class TestStarDiscrepancy:
    def test_single_point(self):
        assert star_discrepancy([0.5]) == 0.5

    def test_equispaced_grid(self):
        n = 64
        pts = [(i - 1) / n for i in range(1, n + 1)]
        assert star_discrepancy(pts) == pytest.approx(1 / n)

    def test_fully_degenerate(self):
        assert star_discrepancy([0.0] * 7) == 1.0

    def test_lower_bound_half_over_n(self):
        rng = sample_stream(4, 0)
        for n in (1, 5, 40):
            pts = rng.random(n)
            assert star_discrepancy(pts) >= 1 / (2 * n) - 1e-15

    def test_rotation_changes_star_but_not_pairs(self):
        rng = sample_stream(6, 0)
        pts = rng.random(50)
        rotated = rotate_points(pts, 0.25)
        assert rotated.min() >= 0.0 and rotated.max() < 1.0
        for s in (0.5, 2.0):
            assert pair_count_naive(pts, 0.3, s) == pair_count_naive(rotated, 0.3, s)


class TestOverrep:
    def test_concentrated_mass_found(self):
        rng = sample_stream(2, 0)
        pts = 0.5 + 0.5 * rng.random(2000)
        rep = overrep_search(pts, 3, [200, 2000])
        left, right = rep.interval
        assert left >= 0.5
        assert rep.deviation > 0.15

    def test_low_discrepancy_deviation_small(self):
        # van der Corput base 2: deviation fades with n
        def vdc(k):
            x, denom = 0.0, 0.5
            while k:
                x += denom * (k & 1)
                k >>= 1
                denom *= 0.5
            return x

        pts = np.array([vdc(k) for k in range(1, 4097)])
        rep = overrep_search(pts, 7, [4096])
        assert rep.deviation < 0.01

    def test_single_point_checkpoint(self):
        rep = overrep_search([0.1], 3, [1])
        assert rep.deviation == pytest.approx(0.75)


class TestParams:
    def test_theta(self):
        p = NonequidistParams(cut=0.5, mass=0.25, gamma=0.75)
        assert p.theta == pytest.approx(0.75)

    def test_theta_limits(self):
        assert NonequidistParams(0.8, 1e-9, 0.75).theta < 1e-8
        assert NonequidistParams(0.8, 0.8 - 1e-12, 0.75).theta == pytest.approx(1.0)

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            NonequidistParams(cut=0.25, mass=0.5, gamma=0.9)
        with pytest.raises(ValueError):
            NonequidistParams(cut=0.5, mass=0.25, gamma=0.3)

    def test_strict_geometry_flag(self):
        assert NonequidistParams(0.8, 0.4, 0.75).strict_geometry
        assert not NonequidistParams(0.5, 0.25, 0.75).strict_geometry


class TestQuadraticCeiling:
    def test_example_values(self):
        p = NonequidistParams(cut=0.8, mass=0.4, gamma=0.75)
        b = gamma_ppc_upper_bound(p, 4, 1000)
        assert b.theta == pytest.approx(0.75)
        assert b.asymptotic == pytest.approx(6.75)
        assert b.finite == pytest.approx(6.75, rel=1e-9)  # exact split at n=1000

    def test_geometry_precondition(self):
        p = NonequidistParams(cut=0.6, mass=0.3, gamma=0.55)
        with pytest.raises(ValueError, match="deficient arc"):
            gamma_ppc_upper_bound(p, 4, 20)  # 1 - cut = 0.4 >= 0.55 - 0.2

    def test_s_must_be_positive_integer(self):
        p = NonequidistParams(cut=0.8, mass=0.4, gamma=0.75)
        with pytest.raises(ValueError):
            gamma_ppc_upper_bound(p, 0, 100)

    def test_form_dominates_realized_counts(self):
        """Bin-occupancy form >= the exact pair count for points placed
        adversarially at bin edges, across random integer assignments."""
        rng = np.random.default_rng(7)
        n = 12
        for _ in range(300):
            shift = int(rng.integers(0, n))
            s = int(rng.integers(1, 3))
            cuts = np.sort(rng.integers(0, n + 1, size=n - 1))
            occ = np.diff(np.concatenate([[0], cuts, [n]])).tolist()
            pts = []
            for i, c in enumerate(occ):
                pts.extend([i / n] * c)
            gamma = shift / n  # bin-aligned shift keeps windows on bins
            nf = pair_count_naive(np.array(pts), gamma, float(s))
            q = window_quadratic_form(occ, shift, s)
            assert nf <= q

    def test_split_occupancy_count_capped_by_finite_value(self):
        """Points realizing the deficiency-extremal split occupancy have
        their exact count capped by the form evaluated at that split."""
        n, s = 20, 1
        p = NonequidistParams(cut=0.8, mass=0.4, gamma=0.75)
        bound = gamma_ppc_upper_bound(p, s, n)
        a = math.floor(n * p.cut)          # 16 deficient bins
        budget = math.floor(n * p.mass)    # 8 points allowed there
        occ = [0] * n
        for k in range(budget):            # spread the budget evenly
            occ[(k * a) // budget] += 1
        for k in range(a, n):              # fill the massive zone
            occ[k] = (n - budget) // (n - a)
        assert sum(occ) == n
        shift = math.floor(p.gamma * n)
        pts = []
        for i, c in enumerate(occ):
            pts.extend([i / n] * c)
        nf = pair_count_naive(np.array(pts), shift / n, float(s))
        q = window_quadratic_form(occ, shift, s)
        assert nf <= q
        # and the uniform-split ceiling reported by the op is of the same
        # scale as the form at this integer rounding of the split
        assert q <= bound.finite * n * 1.5


class TestVerifyFailure:
    def _arc_points(self, seed, lo, width, count):
        gen = sample_stream(seed, 0)
        return lo + width * gen.random(count)

    def test_deficient_arc_certificate(self):
        pts = self._arc_points(99, 0.8, 0.2, 4096)
        params = NonequidistParams(cut=0.8, mass=0.4, gamma=0.75)
        rep = verify_ppc_failure(pts, [256, 1024, 4096], params, [1, 2, 4])
        assert rep.qualifying == [256, 1024, 4096]
        assert rep.certificate and rep.certificate_lhs == pytest.approx(6.75)
        assert rep.bound_respected
        assert rep.strict_geometry

    def test_theta_certificate_arithmetic(self):
        params = NonequidistParams(cut=0.5, mass=0.25, gamma=0.75)
        pts = self._arc_points(3, 0.5, 0.5, 512)
        rep = verify_ppc_failure(pts, [512], params, [4])
        # (2s+1) theta = 6.75 < 8 = 2s
        assert rep.certificate
        assert rep.certificate_lhs == pytest.approx(6.75)
        assert rep.certificate_rhs == 8.0

    def test_equidistributed_input_rejected(self):
        gen = sample_stream(5, 0)
        params = NonequidistParams(cut=0.5, mass=0.25, gamma=0.75)
        with pytest.raises(ValueError, match="no qualifying checkpoint"):
            verify_ppc_failure(gen.random(1024), [512, 1024], params, [4])

    def test_small_s_cannot_certify(self):
        params = NonequidistParams(cut=0.8, mass=0.4, gamma=0.75)
        pts = self._arc_points(99, 0.8, 0.2, 512)
        rep = verify_ppc_failure(pts, [512], params, [1])
        assert not rep.certificate  # 3 * 0.75 = 2.25 > 2


def test_load_points(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("0.25\n0.5\n# comment\n0.75\n")
    assert load_points(path).tolist() == [0.25, 0.5, 0.75]
    bad = tmp_path / "bad.csv"
    bad.write_text("0.5\n1.5\n")
    with pytest.raises(ValueError, match="line 2"):
        load_points(bad)
