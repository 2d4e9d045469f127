import numpy as np
import pytest

from snpinr import model as M
from snpinr.datasets import moving_video, pseudo_photo
from snpinr.numerics import make_rng
from snpinr.training import FitConfig, fit, init_snp
from snpinr.video import (as_video, build_resfield, denoise_video, fit_video, frame_times,
                          residual_layers, shared_from_snp, video_coords)


def shared(layout=(3, 16, 16, 16, 3), seed=0):
    return M.init_siren(layout, rng=make_rng(seed, 1))


def outputs(params, h=8, w=8):
    coords = video_coords(h, w, params.frames, params.use_time_input)
    return [M.forward_layers(params.frame_layers(t), params.shared.activation, coords[t])[0]
            for t in range(params.frames)]


class TestBuild:
    def test_zero_residual_at_init(self):
        base = shared()
        p = build_resfield(base, rank=4, frames=5, rng=make_rng(2))
        xy = video_coords(8, 8, 5, True)
        for t in range(5):
            got, _ = M.forward_layers(p.frame_layers(t), base.activation, xy[t])
            want, _ = M.forward(base, xy[t])
            assert np.array_equal(got, want)
            for i in p.B:
                assert not np.any(p.B[i][t])
                assert np.any(p.A[i][t])

    def test_frames_identical_without_time_input(self):
        p = build_resfield(shared((2, 16, 16, 16, 1)), 3, 4, rng=make_rng(0), use_time_input=False)
        outs = outputs(p)
        for o in outs[1:]:
            assert np.array_equal(o, outs[0])

    def test_rank_zero_is_shared_mlp(self):
        base = shared()
        p = build_resfield(base, rank=0, frames=3, rng=make_rng(0))
        assert p.frames == 3 and p.n_params == base.n_params
        for t in range(3):
            for a, b in zip(p.frame_layers(t), base.layers):
                assert np.array_equal(a.weights, b.weights)

    def test_parameter_count(self):
        base = M.init_siren((2, 64, 64, 1), rng=make_rng(0))
        p = build_resfield(base, rank=2, frames=4, rng=make_rng(1), use_time_input=False)
        assert residual_layers(base.layout) == [1]
        assert p.n_params == base.n_params + 4 * 2 * (64 + 64)

    def test_residuals_skip_first_and_last(self):
        assert residual_layers((3, 256, 256, 256, 256, 3)) == [1, 2, 3]

    def test_rank_too_large(self):
        with pytest.raises(ValueError):
            build_resfield(shared(), rank=17, frames=2)

    def test_sigma(self):
        p = build_resfield(shared((3, 64, 64, 64, 1)), 10, 8, sigma=0.02, rng=make_rng(3))
        assert np.std(np.concatenate([a.ravel() for a in p.A.values()])) == pytest.approx(0.02,
                                                                                       rel=0.05)

    def test_times_span(self):
        np.testing.assert_array_equal(frame_times(3), [-1.0, 0.0, 1.0])
        np.testing.assert_array_equal(frame_times(1), [0.0])


class TestSharedFromSnp:
    def test_copies_encoder_spatial_columns(self):
        snp = init_snp((2, 16, 16, 16, 3), 2, rng=make_rng(0))
        s = shared_from_snp(snp, 3, make_rng(1))
        assert s.layout == (3, 16, 16, 16, 3)
        np.testing.assert_array_equal(s.layers[0].weights[:, :2], snp.encoder[0].weights)
        for a, b in zip(s.layers[1:-1], snp.encoder[1:]):
            assert np.array_equal(a.weights, b.weights)

    def test_without_time_input(self):
        snp = init_snp((2, 16, 16, 3), 2, rng=make_rng(0))
        assert shared_from_snp(snp, 3, make_rng(1), use_time_input=False).layout == (2, 16, 16, 3)


class TestFitVideo:
    def test_only_sampled_frame_factors_move(self):
        video = moving_video(3, 16, 16, 3, seed=0)
        p = build_resfield(shared(), 2, 3, rng=make_rng(0))
        q, _ = fit_video(p, video, FitConfig(iterations=1, lr=1e-3, schedule="cosine"))
        for i in p.A:
            assert not np.array_equal(q.B[i][0], p.B[i][0])
            for t in (1, 2):
                assert np.array_equal(q.A[i][t], p.A[i][t])
                assert np.array_equal(q.B[i][t], p.B[i][t])

    def test_traces_per_frame(self):
        video = moving_video(4, 16, 16, 3, seed=1)
        p = build_resfield(shared(), 2, 4, rng=make_rng(0))
        _, traces = fit_video(p, video, FitConfig(iterations=40, lr=1e-3, record_every=10,
                                                  schedule="cosine"))
        assert len(traces) == 4
        assert all(tr.iteration == [0, 10, 20, 30, 40] for tr in traces)
        assert np.mean([tr.final_psnr for tr in traces]) > np.mean([tr.psnr[0] for tr in traces])

    def test_frame_count_mismatch(self):
        p = build_resfield(shared(), 2, 3, rng=make_rng(0))
        with pytest.raises(ValueError):
            fit_video(p, moving_video(4, 16, 16, 3), FitConfig(iterations=1))

    def test_bad_video_shape(self):
        with pytest.raises(ValueError):
            as_video(np.zeros((2, 3)))

    def test_single_frame_not_worse_than_plain_fit(self):
        img = pseudo_photo(32, 32, 3, seed=0)
        base = shared((2, 64, 64, 64, 64, 3), seed=3)
        cfg = FitConfig(iterations=2000, lr=5e-4, record_every=500, schedule="cosine")
        _, plain = fit(base, img, cfg)
        p = build_resfield(base, 10, 1, rng=make_rng(4), use_time_input=False)
        _, traces = fit_video(p, img[None], cfg)
        assert traces[0].final_psnr >= plain.final_psnr


class TestDenoiseVideo:
    def test_clean_input_matches_fit(self):
        video = moving_video(3, 16, 16, 3, seed=2)
        p = build_resfield(shared(), 2, 3, rng=make_rng(0))
        cfg = FitConfig(iterations=30, lr=1e-3, record_every=10, schedule="cosine")
        _, traces = fit_video(p, video, cfg)
        res = denoise_video(p, video, video, cfg)
        for fr, tr in zip(res.frames, traces):
            np.testing.assert_allclose(fr.trace.psnr, tr.psnr, rtol=0, atol=1e-9)
        assert res.best_psnr >= np.mean([tr.final_psnr for tr in traces]) - 1e-9
        assert set(res.summary()) >= {"best_psnr", "best_iteration"}
