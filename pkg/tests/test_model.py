import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snpinr import model as M
from snpinr._kernels import sin_scaled, sine_backprop
from snpinr.numerics import make_rng

from oracles import adam_reference, finite_difference_grads, max_relative_error, mlp_reference


def random_net(seed, layout, kind=M.SINE):
    return M.init_siren(layout, M.Activation(kind), make_rng(seed, 1))


class TestKernels:
    def test_sin_matches_numpy(self):
        z = make_rng(0).uniform(-50, 50, (257, 33))
        np.testing.assert_allclose(sin_scaled(z, 30.0), np.sin(30.0 * z), rtol=0, atol=1e-13)

    def test_backprop_matches_numpy(self):
        rng = make_rng(1)
        z = rng.uniform(-5, 5, (64, 17))
        g = rng.standard_normal(z.shape)
        np.testing.assert_allclose(sine_backprop(g, z, 30.0), g * 30.0 * np.cos(30.0 * z),
                                   rtol=0, atol=1e-11)


class TestInit:
    def test_first_layer_bound(self):
        p = random_net(0, (2, 64, 3))
        assert M.layer_bound(0, 2, 30.0) == 0.5
        assert np.all(np.abs(p.layers[0].weights) < 0.5)

    def test_hidden_bound_value(self):
        assert M.layer_bound(1, 256, 30.0) == pytest.approx(0.0051031, abs=1e-7)
        p = random_net(0, (2, 256, 256, 3))
        assert np.all(np.abs(p.layers[1].weights) <= math.sqrt(6 / 256) / 30)
        assert np.all(np.abs(p.layers[1].biases) <= math.sqrt(6 / 256) / 30)

    def test_finer_first_bias_bound(self):
        p = random_net(3, (2, 2000, 1), M.FINER)
        b = p.layers[0].biases
        assert np.all(np.abs(b) < 1 / math.sqrt(2))
        assert np.max(np.abs(b)) > 0.6  # much wider than the weight bound of 0.5

    def test_same_seed_bit_identical(self):
        a, b = random_net(7, (2, 32, 32, 3)), random_net(7, (2, 32, 32, 3))
        for x, y in zip(a.arrays(), b.arrays()):
            assert np.array_equal(x, y)

    def test_empty_layout(self):
        with pytest.raises(ValueError):
            M.init_siren(())

    def test_default_param_count(self):
        p = M.init_siren(M.default_layout(), rng=make_rng(0))
        assert p.layout == (2, 256, 256, 256, 256, 256, 3)
        assert p.n_params == 264_707

    def test_bad_omega(self):
        with pytest.raises(ValueError):
            M.Activation(M.SINE, 0.0)


class TestForward:
    def test_zero_params_give_zero(self):
        p = random_net(0, (2, 8, 8, 3))
        for a in p.arrays():
            a[...] = 0.0
        out, _ = M.forward(p, make_rng(1).uniform(-1, 1, (20, 2)))
        np.testing.assert_array_equal(out, 0.0)

    def test_single_linear_layer(self):
        p = random_net(2, (2, 3))
        x = make_rng(3).uniform(-1, 1, (9, 2))
        out, _ = M.forward(p, x)
        np.testing.assert_allclose(out, x @ p.layers[0].weights.T + p.layers[0].biases,
                                   rtol=0, atol=1e-15)

    @pytest.mark.parametrize("kind", [M.SINE, M.FINER])
    def test_matches_scalar_loop(self, kind):
        p = random_net(4, (2, 8, 1), kind)
        x = make_rng(5).uniform(-1, 1, (16, 2))
        out, _ = M.forward(p, x)
        ref = mlp_reference([(l.weights, l.biases) for l in p.layers], x, kind)
        np.testing.assert_allclose(out, ref, rtol=0, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            M.forward(random_net(0, (2, 4, 1)), np.zeros((5, 3)))

    def test_hidden_outputs_bounded(self):
        p = random_net(6, (2, 32, 32, 1))
        p.layers[0].weights *= 40.0
        _, cache = M.forward(p, make_rng(0).uniform(-1, 1, (50, 2)))
        for a in cache.inputs[1:]:
            assert np.all(np.abs(a) <= 1.0)

    def test_deterministic(self):
        p = random_net(8, (2, 16, 3))
        x = make_rng(1).uniform(-1, 1, (30, 2))
        before = [a.copy() for a in p.arrays()]
        assert np.array_equal(M.forward(p, x)[0], M.forward(p, x)[0])
        for a, b in zip(before, p.arrays()):
            assert np.array_equal(a, b)


class TestBackward:
    def test_zero_grad_outputs(self):
        p = random_net(0, (2, 8, 8, 2))
        out, cache = M.forward(p, make_rng(1).uniform(-1, 1, (10, 2)))
        for g in M.layer_arrays(M.backward(p, cache, np.zeros_like(out))):
            np.testing.assert_array_equal(g, 0.0)

    def test_finite_differences(self):
        p = random_net(1, (2, 8, 8, 1))
        rng = make_rng(2)
        x = rng.uniform(-1, 1, (10, 2))
        w = rng.standard_normal((10, 1))
        _, cache = M.forward(p, x)
        grads = M.layer_arrays(M.backward(p, cache, w))
        assert max_relative_error(grads, finite_difference_grads(p, x, w)) < 1e-6

    def test_linear_in_grad_outputs(self):
        p = random_net(3, (2, 8, 8, 3), M.FINER)
        rng = make_rng(4)
        x = rng.uniform(-1, 1, (12, 2))
        g = rng.standard_normal((12, 3))
        _, cache = M.forward(p, x)
        one = M.layer_arrays(M.backward(p, cache, g))
        two = M.layer_arrays(M.backward(p, cache, 2 * g))
        for a, b in zip(one, two):
            np.testing.assert_allclose(b, 2 * a, rtol=1e-15, atol=0)

    def test_cache_mismatch(self):
        p = random_net(0, (2, 8, 1))
        q = random_net(0, (2, 9, 1))
        out, cache = M.forward(q, np.zeros((3, 2)))
        with pytest.raises(ValueError):
            M.backward(p, cache, out)

    @given(seed=st.integers(0, 2**31), hidden=st.integers(1, 16), depth=st.integers(1, 3),
           out=st.integers(1, 3), kind=st.sampled_from([M.SINE, M.FINER]))
    @settings(max_examples=20, deadline=None, derandomize=True)
    def test_gradient_property(self, seed, hidden, depth, out, kind):
        layout = (2,) + (hidden,) * depth + (out,)
        p = random_net(seed, layout, kind)
        rng = make_rng(seed, 2)
        x = rng.uniform(-1, 1, (10, 2))
        w = rng.standard_normal((10, out))
        _, cache = M.forward(p, x)
        grads = M.layer_arrays(M.backward(p, cache, w))
        assert max_relative_error(grads, finite_difference_grads(p, x, w)) < 1e-6


class TestAdam:
    def test_first_step_is_lr_sign(self):
        p = [np.array([1.0, -2.0, 3.0])]
        g = [np.array([0.3, -5.0, 0.02])]  # |g| >> eps keeps the step within lr * 1e-6
        state = M.AdamState(lr=1e-3)
        before = p[0].copy()
        M.adam_step(p, g, state)
        np.testing.assert_allclose(p[0] - before, -1e-3 * np.sign(g[0]), atol=1e-3 * 1e-6, rtol=0)

    def test_zero_gradient_no_change(self):
        p = [np.array([1.0, 2.0])]
        M.adam_step(p, [np.zeros(2)], M.AdamState())
        np.testing.assert_array_equal(p[0], [1.0, 2.0])

    def test_matches_reference_on_quadratic(self):
        a = np.array([1.0, 2.0, 0.5, 3.0, 1.5])
        c = np.array([0.3, -1.0, 2.0, 0.0, -0.7])
        x = [np.array([1.0, 0.0, -1.0, 2.0, 0.5])]
        ref = adam_reference(x[0], lambda v: [2 * a[i] * (v[i] - c[i]) for i in range(5)],
                             10, lr=0.05)
        state = M.AdamState(lr=0.05)
        for k in range(10):
            M.adam_step(x, [2 * a * (x[0] - c)], state)
            assert np.max(np.abs(x[0] - np.array(ref[k + 1]))) <= 1e-12

    def test_non_finite_gradient(self):
        state = M.AdamState()
        M.adam_step([np.zeros(2)], [np.ones(2)], state)
        with pytest.raises(FloatingPointError, match="step 2"):
            M.adam_step([np.zeros(2)], [np.array([np.nan, 0.0])], state)

    def test_state_counts_steps(self):
        state = M.AdamState()
        assert state.step == 0 and state.m is None
        M.adam_step([np.zeros(3)], [np.ones(3)], state)
        assert state.step == 1
