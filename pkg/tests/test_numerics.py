import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snpinr.numerics import (PSNR_CAP, as_image, inverse_spectrum2d, make_coord_grid,
                             make_rng, mse, psnr, radial_power_spectrum, spectrum2d, ssim)

from oracles import ssim_reference


class TestCoordGrid:
    def test_two_by_two_corners(self):
        got = {tuple(p) for p in make_coord_grid(2, 2)}
        assert got == {(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)}

    def test_single_row_axis_is_zero(self):
        g = make_coord_grid(1, 3)
        np.testing.assert_array_equal(g[:, 0], 0.0)
        np.testing.assert_array_equal(g[:, 1], [-1.0, 0.0, 1.0])

    def test_three_by_three_values(self):
        g = make_coord_grid(3, 3)
        assert set(g[:, 0]) == {-1.0, 0.0, 1.0}
        assert set(g[:, 1]) == {-1.0, 0.0, 1.0}
        assert len(g) == 9

    @pytest.mark.parametrize("rows,cols", [(0, 3), (3, 0)])
    def test_zero_dimension_rejected(self, rows, cols):
        with pytest.raises(ValueError):
            make_coord_grid(rows, cols)

    @given(st.integers(1, 20), st.integers(1, 20))
    def test_transpose_swaps_axes(self, r, c):
        a = make_coord_grid(r, c).reshape(r, c, 2)
        b = make_coord_grid(c, r).reshape(c, r, 2)
        np.testing.assert_array_equal(a.transpose(1, 0, 2)[..., ::-1], b)

    @given(st.integers(2, 30), st.integers(2, 30))
    def test_endpoints_exact(self, r, c):
        g = make_coord_grid(r, c)
        assert g.min() == -1.0 and g.max() == 1.0
        assert len(g) == r * c


class TestRng:
    def test_same_seed_and_stream_reproduce(self):
        a = make_rng(42, 3).random(100)
        b = make_rng(42, 3).random(100)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        assert not np.array_equal(make_rng(42, 3).random(10), make_rng(42, 4).random(10))

    def test_large_seed_accepted(self):
        make_rng(2**64 - 1, 0).random()

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            make_rng(-1)


class TestImage:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            as_image(np.full((4, 4, 1), 1.5))

    def test_rejects_two_channels(self):
        with pytest.raises(ValueError):
            as_image(np.zeros((4, 4, 2)))

    def test_promotes_2d(self):
        assert as_image(np.zeros((4, 5))).shape == (4, 5, 1)


class TestSpectrum:
    @given(st.integers(0, 2**32))
    @settings(max_examples=20)
    def test_inverse_reconstructs(self, seed):
        img = make_rng(seed).random((17, 23, 3))
        back = inverse_spectrum2d(spectrum2d(img))
        assert np.max(np.abs(back - img)) / np.max(np.abs(img)) < 1e-9

    def test_constant_image_is_degenerate(self):
        rs = radial_power_spectrum(np.full((32, 32), 0.4))
        np.testing.assert_array_equal(rs.amplitude, 0.0)
        assert rs.slope == 0.0 and rs.degenerate

    def test_cosine_concentrates_in_its_bin(self):
        k = 5
        x = np.arange(64)
        img = np.tile(0.5 + 0.5 * np.cos(2 * np.pi * k * x / 64), (64, 1))
        rs = radial_power_spectrum(img)
        peak = int(np.argmax(rs.amplitude))
        assert round(rs.radius[peak]) == k
        others = np.delete(rs.amplitude, peak)
        assert np.all(others < 1e-9 * rs.amplitude[peak])

    def test_white_noise_is_flat(self):
        slopes = [radial_power_spectrum(make_rng(s).random((64, 64))).slope for s in range(32)]
        assert abs(np.mean(slopes)) < 0.1

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            radial_power_spectrum(np.zeros((15, 32)))


class TestPsnr:
    def test_mse_hundredth_is_20db(self):
        a = np.zeros((10, 10, 1))
        b = np.full((10, 10, 1), 0.1)
        assert mse(a, b) == pytest.approx(0.01, abs=1e-15)
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-12)

    def test_identical_is_capped(self):
        a = make_rng(0).random((8, 8, 3))
        assert psnr(a, a) == PSNR_CAP == 200.0

    def test_half_gray_closed_form(self):
        a = np.zeros((5, 5, 1))
        b = np.full((5, 5, 1), 0.5)
        assert psnr(a, b) == pytest.approx(10 * math.log10(4.0), abs=1e-12)
        assert psnr(a, b) == pytest.approx(6.0206, abs=1e-4)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((4, 4, 1)), np.zeros((4, 5, 1)))

    @given(st.integers(0, 2**32))
    @settings(max_examples=25)
    def test_symmetric(self, seed):
        rng = make_rng(seed)
        a, b = rng.random((6, 7, 3)), rng.random((6, 7, 3))
        assert psnr(a, b) == psnr(b, a)


class TestSsim:
    def test_identity(self):
        a = make_rng(1).random((16, 16, 3))
        assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_constants_closed_form(self):
        c1 = 0.01**2
        expected = (2 * 0.2 * 0.8 + c1) / (0.2**2 + 0.8**2 + c1)
        got = ssim(np.full((16, 16, 1), 0.2), np.full((16, 16, 1), 0.8))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_matches_reference_on_random_pair(self):
        rng = make_rng(5)
        a = rng.random((32, 32, 1))
        b = np.clip(a + 0.1 * rng.standard_normal(a.shape), 0, 1)
        assert abs(ssim(a, b) - ssim_reference(a, b)) < 1e-9

    def test_too_small(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((10, 20, 1)), np.zeros((10, 20, 1)))

    def test_range(self):
        rng = make_rng(9)
        v = ssim(rng.random((20, 20, 3)), rng.random((20, 20, 3)))
        assert -1.0 <= v <= 1.0
