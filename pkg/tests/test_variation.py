import itertools
import math

import numpy as np
import pytest

from roughness import (
    branch_moment,
    burkholder_ratio,
    detrend_affine,
    fbm_path,
    from_samples,
    fs_analyze,
    pth_variation,
    variation_profile,
)
from roughness.dyadic import energy_trace
from roughness.errors import InputError, InvalidP, LevelExceedsResolution, ResourceLimit
from roughness.variation import _branch_sums

from conftest import random_pyramid, random_series


def brute_force_moment(pyramid, n, p):
    """Independent oracle: average over all 2**(n-1) descent sequences."""
    total = []
    for bits in itertools.product((0, 1), repeat=n - 1):
        pos = 0  # integer 2**m * R_m, built digit by digit
        acc = pyramid.theta[0][0] ** 2
        for m in range(1, n):
            pos = 2 * pos + bits[m - 1]
            acc += 2**m * pyramid.theta[m][pos] ** 2
        total.append(acc ** (p / 2.0) if acc > 0 else 0.0)
    return math.fsum(total) / len(total)


class TestPthVariation:
    def test_ramp_total_variation(self):
        ramp = from_samples(np.linspace(0, 1, 2**6 + 1), 6)
        for n in (1, 3, 6):
            assert pth_variation(ramp, 1.0, n) == pytest.approx(1.0, rel=1e-14)

    def test_hat_quadratic(self):
        hat = from_samples([0.0, 0.5, 0.0], 1)
        assert pth_variation(hat, 2.0, 1) == pytest.approx(0.5)

    def test_ramp_closed_form(self):
        ramp = from_samples(np.linspace(0, 1, 2**8 + 1), 8)
        for p in (0.5, 1.0, 2.0, 3.5):
            for n in (2, 5, 8):
                assert pth_variation(ramp, p, n) == pytest.approx(2.0 ** (n * (1 - p)), rel=1e-12)

    def test_quadratic_identity_on_bridge(self, rng):
        x = detrend_affine(random_series(rng, 12))
        tr = energy_trace(fs_analyze(x))
        for n in (1, 5, 12):
            v = pth_variation(x, 2.0, n)
            assert v == pytest.approx(2.0**-n * tr.s_squared[n - 1], rel=1e-12)

    def test_quadratic_identity_with_slope_term(self, rng):
        # with unmatched endpoints the squared slope joins the energy
        x = random_series(rng, 10)
        tr = energy_trace(fs_analyze(x))
        slope = x.values[-1] - x.values[0]
        for n in (3, 10):
            v = pth_variation(x, 2.0, n)
            assert v == pytest.approx(2.0**-n * (tr.s_squared[n - 1] + slope**2), rel=1e-12)

    def test_errors(self, rng):
        x = random_series(rng, 4)
        with pytest.raises(InvalidP):
            pth_variation(x, 0.0, 2)
        with pytest.raises(LevelExceedsResolution):
            pth_variation(x, 2.0, 5)


class TestVariationProfile:
    def test_ramp_table(self):
        ramp = from_samples(np.linspace(0, 1, 2**8 + 1), 8)
        prof = variation_profile(ramp, [1.0, 2.0, 3.0], [2, 4, 6, 8])
        for i, n in enumerate(prof.levels):
            for j, p in enumerate(prof.p_grid):
                assert prof.values[i, j] == pytest.approx(2.0 ** (n * (1 - p)), rel=1e-12)
        # ramp: log2 V is exactly linear in n with slope 1 - p
        np.testing.assert_allclose(prof.log2_slopes, [0.0, -1.0, -2.0], atol=1e-10)

    def test_non_increasing_in_p_once_increments_small(self, rng):
        x = random_series(rng, 10, scale=0.05)  # increments well below 1
        prof = variation_profile(x, [0.5, 1.0, 2.0, 3.0, 4.0], [8, 10])
        assert np.all(np.diff(prof.values, axis=1) <= 1e-12)

    def test_fbm_half_quadratic_slope_near_zero(self):
        slopes = []
        for seed in range(40):
            x = fbm_path(0.5, 10, seed=seed)
            prof = variation_profile(x, [2.0], [6, 7, 8, 9, 10])
            slopes.append(prof.log2_slopes[0])
        assert abs(np.mean(slopes)) <= 0.2

    def test_fbm_rough_fourth_variation_decreasing(self):
        # p = 4 > 1/H for H = 0.3: the fourth variation dies out for large n
        # (expected log2 slope 1 - pH = -0.2, so deep levels are needed)
        slopes = []
        for seed in range(25):
            x = fbm_path(0.3, 13, seed=seed)
            prof = variation_profile(x, [4.0], [9, 10, 11, 12, 13])
            slopes.append(float(prof.log2_slopes[0]))
        assert np.mean(slopes) < 0.0
        assert np.mean(np.array(slopes) < 0) >= 0.9


class TestBranchMoment:
    def test_p2_equals_energy(self, rng):
        pyr = random_pyramid(rng, 10)
        tr = energy_trace(pyr)
        for n in (1, 4, 10):
            assert branch_moment(pyr, n, 2.0) == pytest.approx(tr.s_squared[n - 1], rel=1e-12)

    def test_single_level(self, rng):
        pyr = random_pyramid(rng, 1)
        for p in (1.0, 2.0, 3.7):
            assert branch_moment(pyr, 1, p) == pytest.approx(abs(pyr.theta[0][0]) ** p, rel=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_brute_force_oracle(self, rng, n):
        pyr = random_pyramid(rng, 6)
        for p in (1.0, 2.0, 3.0, 4.0):
            assert branch_moment(pyr, n, p) == pytest.approx(
                brute_force_moment(pyr, n, p), rel=1e-12
            )

    def test_jensen_directions(self, rng):
        pyr = random_pyramid(rng, 9)
        tr = energy_trace(pyr)
        for n in (3, 6, 9):
            s2 = tr.s_squared[n - 1]
            for p in (3.0, 4.0, 6.0):
                assert branch_moment(pyr, n, p) >= s2 ** (p / 2) * (1 - 1e-12)
            for p in (0.5, 1.0, 1.5):
                assert branch_moment(pyr, n, p) <= s2 ** (p / 2) * (1 + 1e-12)

    def test_sign_flip_invariance(self, rng):
        pyr = random_pyramid(rng, 7)
        signs = [np.where(rng.random(2**m) < 0.5, -1.0, 1.0) for m in range(7)]
        flipped = pyr.flip_signs(signs)
        for p in (1.0, 3.0):
            assert branch_moment(pyr, 7, p) == branch_moment(flipped, 7, p)

    def test_resource_limit(self, rng):
        pyr = random_pyramid(rng, 8)
        with pytest.raises(ResourceLimit):
            branch_moment(pyr, 8, 2.0, level_cap=7)

    def test_branch_sums_deterministic_order(self, rng):
        pyr = random_pyramid(rng, 8)
        a = _branch_sums(pyr, 8)
        b = _branch_sums(pyr, 8)
        np.testing.assert_array_equal(a, b)


class TestBurkholderRatio:
    def test_p2_is_one(self, rng):
        x = detrend_affine(random_series(rng, 10))
        assert burkholder_ratio(x, 2.0, 8).value == pytest.approx(1.0, rel=1e-12)

    def test_hat_p4_hand_value(self):
        hat = from_samples([0.0, 0.5, 0.0], 1)
        r = burkholder_ratio(hat, 4.0, 1)
        assert r.value == pytest.approx(1.0, rel=1e-12)

    def test_requires_zeroed_endpoints(self, rng):
        x = random_series(rng, 6)
        with pytest.raises(InputError):
            burkholder_ratio(x, 3.0, 4)
        r = burkholder_ratio(x, 3.0, 4, detrend=True)
        assert r.detrended is True

    def test_fbm_bounded_across_orders(self):
        for p in (1.0, 3.0, 4.0):
            for seed in range(8):
                x = fbm_path(0.5, 14, seed=seed)
                for n in (4, 9, 14):
                    r = burkholder_ratio(x, p, n, detrend=True)
                    assert 0.05 <= r.value <= 20.0, (p, n, r.value)
