import math

import numpy as np
import pytest

from roughness import fbm_path, from_samples
from roughness.diagnostics import (
    BvReadout,
    bias_report,
    build_report,
    bv_readout,
    condition_a_ratio,
    condition_b_ratio,
    quantile_bounds,
    reverse_jensen_ratio,
)
from roughness.dyadic import FaberSchauderPyramid, energy_trace, fs_analyze
from roughness.errors import DegeneratePath, InvalidNu

from conftest import random_pyramid, random_series


def uniform_pyramid(depth, value=0.5):
    theta = tuple(np.full(2**m, value) for m in range(depth))
    return FaberSchauderPyramid(0.0, 0.0, theta, depth)


class TestReverseJensen:
    def test_p2_is_exactly_one(self, rng):
        pyr = random_pyramid(rng, 10)
        for n in (2, 6, 10):
            assert reverse_jensen_ratio(pyr, 2.0, n) == pytest.approx(1.0, rel=1e-12)

    def test_at_least_one(self, rng):
        pyr = random_pyramid(rng, 8)
        for p in (0.5, 1.0, 3.0, 4.0):
            assert reverse_jensen_ratio(pyr, p, 8) >= 1.0

    def test_single_level_closed_form(self, rng):
        # one level, two coefficients a, b: the branch average is over the
        # two descents, so the ratio is computable directly
        a, b = 1.3, 0.4
        pyr = FaberSchauderPyramid(0.0, 0.0, (np.array([0.0]), np.array([a, b])), 2)
        p = 4.0
        moment = ((2 * a**2) ** 2 + (2 * b**2) ** 2) / 2
        s_pow = (a**2 + b**2) ** 2
        expected = max(moment / s_pow, s_pow / moment)
        assert reverse_jensen_ratio(pyr, p, 2) == pytest.approx(expected, rel=1e-12)

    def test_fbm_normalized_curve_decays(self):
        # (1/n) log2 of the ratio should head to zero as depth grows
        curves = []
        for seed in range(12):
            pyr = fs_analyze(fbm_path(0.5, 14, seed=seed))
            curve = [math.log2(reverse_jensen_ratio(pyr, 4.0, n)) / n for n in (6, 10, 14)]
            curves.append(curve)
        mean = np.mean(curves, axis=0)
        assert mean[0] > mean[1] > mean[2]
        assert mean[2] < 0.15

    def test_degenerate(self):
        pyr = FaberSchauderPyramid(0.0, 0.0, (np.zeros(1), np.zeros(2)), 2)
        with pytest.raises(DegeneratePath):
            reverse_jensen_ratio(pyr, 3.0, 2)


class TestSpreadConditions:
    def test_equal_coefficients_give_one(self):
        pyr = uniform_pyramid(6)
        for m in range(6):
            assert condition_a_ratio(pyr, m) == 1.0
            assert condition_b_ratio(pyr, min(m, 2), m) == 1.0

    def test_zero_coefficient_flags_infinity(self):
        theta = (np.array([1.0]), np.array([0.0, 2.0]))
        pyr = FaberSchauderPyramid(0.0, 0.0, theta, 2)
        assert math.isinf(condition_a_ratio(pyr, 1))

    def test_nu_zero_is_levelwise_ratio_squared(self, rng):
        pyr = random_pyramid(rng, 8)
        for m in (2, 5, 7):
            assert condition_b_ratio(pyr, 0, m) == pytest.approx(
                condition_a_ratio(pyr, m) ** 2, rel=1e-12
            )

    def test_invalid_nu(self, rng):
        pyr = random_pyramid(rng, 5)
        with pytest.raises(InvalidNu):
            condition_b_ratio(pyr, 4, 3)
        with pytest.raises(InvalidNu):
            condition_b_ratio(pyr, -1, 3)

    def test_fbm_levelwise_ratio_grows_subexponentially(self):
        # the raw max/min coefficient ratio grows with the level, but its
        # normalized log stays small compared to exponential growth
        # the smallest of 2**m Gaussian coefficients shrinks like 2**-m, so
        # the normalized log ratio settles a little above 1 rather than
        # exploding; the raw ratio itself keeps growing
        ratios, normalized = [], []
        for seed in range(10):
            pyr = fs_analyze(fbm_path(0.5, 12, seed=seed))
            r5, r10 = condition_a_ratio(pyr, 5), condition_a_ratio(pyr, 10)
            ratios.append((r5, r10))
            normalized.append(math.log2(r10) / 10)
        assert np.mean([b > a for a, b in ratios]) >= 0.8  # grows with the level
        assert np.mean(normalized) < 1.6

    def test_fbm_block_ratio_stays_bounded(self):
        # the blockwise spread grows with the level (extreme block sums of
        # squared Gaussians) but its normalized log stays bounded instead
        # of exploding exponentially
        curves = []
        for seed in range(10):
            pyr = fs_analyze(fbm_path(0.5, 14, seed=seed))
            curves.append([math.log2(condition_b_ratio(pyr, 2, m)) / m for m in (5, 9, 13)])
        mean = np.mean(curves, axis=0)
        assert np.all(mean < 1.2)
        assert mean[2] < mean[0] + 0.2  # no upward explosion across levels


class TestQuantileBounds:
    def test_uniform_squares_collapse(self):
        pyr = uniform_pyramid(8)
        lo, hi = quantile_bounds(pyr, 2, 8)
        assert lo == hi
        # consistent with the energy exponent up to the dropped level-0 term
        xi = energy_trace(pyr).xi[7]
        assert lo == pytest.approx(xi, abs=0.01)

    def test_ordering_always(self, rng):
        for depth in (4, 7, 10):
            pyr = random_pyramid(rng, depth)
            lo, hi = quantile_bounds(pyr, 2, depth)
            assert lo <= hi

    def test_fbm_sandwich(self):
        lows, highs = [], []
        for seed in range(10):
            pyr = fs_analyze(fbm_path(0.5, 12, seed=seed))
            lo, hi = quantile_bounds(pyr, 2, 12)
            lows.append(1.0 - hi)
            highs.append(1.0 - lo)
        assert np.mean(lows) <= 0.5 + 0.1
        assert np.mean(highs) >= 0.5 - 0.1

    def test_invalid_nu(self, rng):
        pyr = random_pyramid(rng, 5)
        with pytest.raises(InvalidNu):
            quantile_bounds(pyr, 0, 5)


class TestBiasReport:
    def trace_with_xi(self, xi, depth=6):
        # one coefficient sized so that log2(s)/depth hits the wanted xi
        theta = tuple(np.zeros(2**m) for m in range(depth))
        theta[0][0] = 2.0 ** (xi * depth)
        return energy_trace(FaberSchauderPyramid(0.0, 0.0, theta, depth))

    def test_boundary_all_consistent(self):
        v = bias_report(self.trace_with_xi(0.5), 0.5)
        assert (v.half_rule, v.low_rule, v.high_rule) == ("consistent",) * 3

    def test_direct_violation(self):
        # an energy exponent above 1/2 forbids a candidate above 1/2
        v = bias_report(self.trace_with_xi(0.7), 0.6)
        assert v.half_rule == "violated"
        assert v.low_rule == "inconclusive"  # candidate above 1/2
        assert v.high_rule == "consistent"  # 0.6 >= 1 - 0.7 does hold

    def test_fbm_rough_path_consistent(self):
        ok = 0
        for seed in range(10):
            tr = energy_trace(fs_analyze(fbm_path(0.3, 14, seed=seed)))
            v = bias_report(tr, 0.3)
            ok += v.half_rule == "consistent" and v.low_rule == "consistent"
        assert ok == 10

    def test_degenerate(self):
        tr = energy_trace(FaberSchauderPyramid(0.0, 0.0, (np.zeros(1),), 1))
        with pytest.raises(DegeneratePath):
            bias_report(tr, 0.5)


class TestBvReadout:
    def test_ramp_has_zero_energy(self):
        tr = energy_trace(fs_analyze(from_samples(np.linspace(0, 1, 17), 4)))
        r = bv_readout(tr)
        assert r.sup_s == 0.0
        assert np.all(np.isnan(r.log2_increments))

    def test_hat_is_flat(self):
        hat = [max(min(t, 1 - t), 0.0) for t in np.linspace(0, 1, 17)]
        tr = energy_trace(fs_analyze(from_samples(hat, 4)))
        r = bv_readout(tr)
        assert r.sup_s == 1.0
        np.testing.assert_allclose(r.log2_increments, 0.0, atol=1e-14)

    def test_fbm_growth_slope(self):
        # energy growth per level settles near 1 - H
        slopes = []
        for seed in range(15):
            tr = energy_trace(fs_analyze(fbm_path(0.5, 14, seed=seed)))
            slopes.append(bv_readout(tr).slope(8, 14))
        assert np.mean(slopes) == pytest.approx(0.5, abs=0.1)


class TestBuildReport:
    def test_sections_and_flags(self, rng):
        x = random_series(rng, 8)
        pyr = fs_analyze(x)
        tr = energy_trace(pyr)
        rep = build_report(pyr, tr, p_grid=[2.0, 4.0], nu=2, H_candidate=0.4, n_grid=[4, 6, 8])
        assert len(rep.reverse_jensen) == 6
        assert all(e["ratio"] >= 1.0 for e in rep.reverse_jensen)
        assert {e["m"] for e in rep.condition_a} == set(range(8))
        assert rep.quantile is not None and rep.quantile["lower"] <= rep.quantile["upper"]
        assert rep.bias is not None
        assert rep.bv["sup_s"] > 0
        assert rep.notes

    def test_sign_flip_leaves_report_invariant(self, rng):
        pyr = random_pyramid(rng, 7)
        signs = [np.where(rng.random(2**m) < 0.5, -1.0, 1.0) for m in range(7)]
        flipped = pyr.flip_signs(signs)
        ra = build_report(pyr, energy_trace(pyr), p_grid=[1.0, 3.0], nu=1)
        rb = build_report(flipped, energy_trace(flipped), p_grid=[1.0, 3.0], nu=1)
        assert ra.reverse_jensen == rb.reverse_jensen
        assert ra.condition_a == rb.condition_a
        assert ra.condition_b == rb.condition_b
        assert ra.quantile == rb.quantile
