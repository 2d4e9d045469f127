import json
import math

import numpy as np
import pytest
from scipy import stats

from snpinr import noise as N
from snpinr.numerics import radial_power_spectrum


def spec(family=N.UNIFORM, size=64, channels=1, seed=0, **kw):
    return N.NoiseSpec(family=family, height=size, width=size, channels=channels, seed=seed, **kw)


def grad_kurtosis(img):
    g = np.hypot(np.diff(img[:, :, 0], axis=0)[:, :-1], np.diff(img[:, :, 0], axis=1)[:-1, :])
    return stats.kurtosis(g.ravel(), fisher=True)


class TestSpecValidation:
    def test_too_small(self):
        with pytest.raises(ValueError):
            spec(size=15)

    def test_bad_channels(self):
        with pytest.raises(ValueError):
            spec(channels=2)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            spec(family="perlin")


class TestUniform:
    def test_range(self):
        img = N.gen_uniform(spec(channels=3), 1)
        assert img.min() >= 0.0 and img.max() <= 1.0
        assert img.shape == (64, 64, 3)

    @pytest.mark.parametrize("seed", range(5))
    def test_mean_clt_bound(self, seed):
        img = N.gen_uniform(spec(seed=seed), 1)
        assert abs(img.mean() - 0.5) < 4 * (1 / math.sqrt(12)) / 64

    def test_determinism_and_streams(self):
        s = spec(seed=11)
        assert np.array_equal(N.gen_uniform(s, 3), N.gen_uniform(s, 3))
        assert not np.array_equal(N.gen_uniform(s, 3), N.gen_uniform(s, 4))


class TestGaussian:
    def test_range(self):
        img = N.gen_gaussian(spec(), 1)
        assert img.min() >= 0.0 and img.max() <= 1.0

    @pytest.mark.parametrize("seed", range(5))
    def test_mean_clt_bound(self, seed):
        img = N.gen_gaussian(spec(seed=seed), 1)
        assert abs(img.mean() - 0.5) < 4 * 0.2 / 64

    def test_clipped_fraction(self):
        frac = np.mean([np.mean((N.gen_gaussian(spec(seed=s), 1) == 0.0)
                                | (N.gen_gaussian(spec(seed=s), 1) == 1.0)) for s in range(8)])
        assert 2 * stats.norm.cdf(-2.5) == pytest.approx(0.0124, abs=1e-4)
        assert abs(frac - 0.0124) < 0.005


class TestSpectrum:
    def _slope(self, alpha, seeds=16):
        return np.mean([radial_power_spectrum(N.gen_spectrum(N.NoiseSpec(
            N.SPECTRUM, 128, 128, 1, seed=k), 1, (alpha, alpha))).slope for k in range(seeds)])

    def test_alpha_zero_is_white(self):
        assert abs(self._slope(0.0)) < 0.15

    def test_alpha_two(self):
        assert abs(self._slope(2.0) + 2.0) < 0.2

    def test_normalized_exactly(self):
        img = N.gen_spectrum(spec(N.SPECTRUM, channels=3), 2)
        for c in range(3):
            assert img[:, :, c].min() == 0.0 and img[:, :, c].max() == 1.0

    @pytest.mark.parametrize("rng_", [(-0.1, 1.0), (2.0, 1.0), (0.5, 4.5)])
    def test_invalid_range(self, rng_):
        with pytest.raises(ValueError):
            N.gen_spectrum(spec(N.SPECTRUM), 1, rng_)

    def test_field_amplitude_is_exact(self):
        rng = np.random.default_rng(0)
        f = N.spectrum_field(32, 32, 1.5, rng)
        amp = np.abs(np.fft.fft2(f))
        fy = np.fft.fftfreq(32) * 32
        rad = np.hypot(fy[:, None], fy[None, :])
        nz = rad > 0
        np.testing.assert_allclose(amp[nz], rad[nz] ** -1.5, rtol=1e-9)
        assert abs(amp[0, 0]) < 1e-12


class TestDeadLeaves:
    def test_full_occlusion_is_constant(self):
        s = spec(N.DL_SQUARES, size=32, channels=3)
        img = N.gen_dead_leaves(s, 1, shape_count=1, size_range=(64.0, 64.0))
        assert np.all(img == img[0, 0])
        assert not np.allclose(img[0, 0], 0.5)

    @pytest.mark.parametrize("variant", ["squares", "oriented", "mixed"])
    def test_coverage(self, variant):
        uncovered = []
        for k in range(8):
            img = N.gen_dead_leaves(N.NoiseSpec(N.DL_SQUARES, 128, 128, 1, seed=k), 1, variant)
            uncovered.append(np.mean(img == 0.5))
        assert np.mean(uncovered) < 0.01

    def test_heavy_tailed_gradients(self):
        dl = np.mean([grad_kurtosis(N.gen_dead_leaves(N.NoiseSpec(N.DL_MIXED, 128, 128, 1, seed=k), 1))
                      for k in range(8)])
        un = np.mean([grad_kurtosis(N.gen_uniform(N.NoiseSpec(N.UNIFORM, 128, 128, 1, seed=k), 1))
                      for k in range(8)])
        assert dl > 3 and un < 1

    def test_has_sharp_edge(self):
        img = N.gen_dead_leaves(spec(N.DL_ORIENTED), 1)
        assert np.max(np.abs(np.diff(img, axis=1))) > 0.2

    @pytest.mark.parametrize("rng_", [(0.0, 4.0), (8.0, 4.0), (-1.0, 2.0)])
    def test_invalid_sizes(self, rng_):
        with pytest.raises(ValueError):
            N.gen_dead_leaves(spec(N.DL_SQUARES), 1, size_range=rng_)

    def test_power_law_sampler(self):
        rng = np.random.default_rng(0)
        r = N.sample_power_law(rng, 3.0, 4.0, 64.0, size=200_000)
        assert r.min() >= 4.0 and r.max() <= 64.0
        # median of r^-3 on [4, 64]: solve CDF = 0.5
        k = -2.0
        med = (4.0**k + 0.5 * (64.0**k - 4.0**k)) ** (1 / k)
        assert np.median(r) == pytest.approx(med, rel=0.01)


class TestCorpus:
    def test_distinct_images(self):
        imgs, man = N.gen_corpus(spec(), 10)
        assert len(imgs) == 10 and len(set(man.streams)) == 10
        for i in range(10):
            for j in range(i + 1, 10):
                assert not np.array_equal(imgs[i], imgs[j])

    def test_singleton(self):
        imgs, man = N.gen_corpus(spec(N.SPECTRUM), 1)
        assert len(imgs) == 1 and man.streams == [1]

    @pytest.mark.parametrize("family", N.FAMILIES)
    def test_manifest_round_trip(self, family, tmp_path):
        imgs, man = N.gen_corpus(spec(family, size=32, channels=3, seed=5), 3)
        man.write(tmp_path / "m.json")
        again = N.regenerate(N.Manifest.read(tmp_path / "m.json"))
        for a, b in zip(imgs, again):
            assert np.array_equal(a, b)
            assert a.min() >= 0 and a.max() <= 1 and a.shape == (32, 32, 3)
        assert json.loads((tmp_path / "m.json").read_text())["spec"]["family"] == family

    def test_zero_size_corpus(self):
        with pytest.raises(ValueError):
            N.gen_corpus(spec(), 0)

    def test_family_separability(self):
        def mean_slope(family, rng_=None):
            out = []
            for k in range(16):
                s = N.NoiseSpec(family, 64, 64, 1, seed=k)
                img = N.gen_spectrum(s, 1, rng_) if rng_ else N.generate(s, 1)
                out.append(radial_power_spectrum(img).slope)
            return abs(np.mean(out))

        assert mean_slope(N.UNIFORM) < 0.15 < 0.8 < mean_slope(N.SPECTRUM, (2.0, 2.0))
