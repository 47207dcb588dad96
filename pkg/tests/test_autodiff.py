"""Differentiation engine: values, gradients vs finite differences,
shape/broadcast rules, and failure modes."""

import numpy as np
import pytest

from hsicwae import autodiff as ad
from hsicwae.errors import NonFiniteError, ShapeError


def fd_grad(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of a matrix."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x.copy(); xp[idx] += h
        xm = x.copy(); xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
        it.iternext()
    return g


def check_against_fd(build, x: np.ndarray, rtol: float = 1e-6):
    """build(tensor) -> scalar tensor; compares AD grad with FD."""
    leaf = ad.parameter(x)
    out = build(leaf)
    out.backward()
    num = fd_grad(lambda v: build(ad.parameter(v)).item(), x)
    np.testing.assert_allclose(leaf.grad, num, rtol=rtol, atol=1e-8)


class TestValues:
    def test_shapes_normalize(self):
        assert ad.constant(3.0).shape == (1, 1)
        assert ad.constant([1.0, 2.0, 3.0]).shape == (1, 3)
        assert ad.constant([[1.0], [2.0]]).shape == (2, 1)

    def test_3d_rejected(self):
        with pytest.raises(ShapeError):
            ad.constant(np.zeros((2, 2, 2)))

    def test_eager_evaluation(self):
        a = ad.constant([[1.0, 2.0], [3.0, 4.0]])
        b = ad.constant([[5.0, 6.0], [7.0, 8.0]])
        np.testing.assert_array_equal(ad.matmul(a, b).value,
                                      a.value @ b.value)

    def test_operator_overloads_wrap_scalars(self):
        a = ad.parameter([[2.0]])
        out = 3.0 * a + 1.0 - a * a
        assert out.item() == pytest.approx(3.0)
        out.backward()
        assert a.grad[0, 0] == pytest.approx(3.0 - 2 * 2.0)

    def test_item_requires_scalar(self):
        with pytest.raises(ShapeError):
            ad.constant([[1.0, 2.0]]).item()


class TestBackward:
    def test_backward_requires_scalar(self):
        t = ad.parameter(np.ones((2, 2)))
        with pytest.raises(ShapeError):
            ad.mul(t, t).backward()

    def test_matmul_grad_matches_analytic(self):
        rng = np.random.default_rng(0)
        a = ad.parameter(rng.normal(size=(3, 4)))
        b = ad.parameter(rng.normal(size=(4, 2)))
        w = ad.constant(rng.normal(size=(3, 2)))
        # d/dA sum(W * (A @ B)) = W @ B^T, d/dB = A^T @ W
        ad.sum_all(ad.mul(w, ad.matmul(a, b))).backward()
        np.testing.assert_allclose(a.grad, w.value @ b.value.T, rtol=1e-12)
        np.testing.assert_allclose(b.grad, a.value.T @ w.value, rtol=1e-12)

    def test_diamond_graph_accumulates(self):
        # y = sum(x*x) + sum(x) uses x through two paths
        x = ad.parameter(np.array([[1.0, -2.0, 3.0]]))
        y = ad.add(ad.sum_all(ad.mul(x, x)), ad.sum_all(x))
        y.backward()
        np.testing.assert_allclose(x.grad, 2 * x.value + 1.0, rtol=1e-12)

    def test_grad_none_on_constants(self):
        c = ad.constant([[1.0, 2.0]])
        x = ad.parameter([[3.0, 4.0]])
        ad.sum_all(ad.mul(c, x)).backward()
        assert c.grad is None
        np.testing.assert_array_equal(x.grad, c.value)

    @pytest.mark.parametrize("op", [
        lambda t: ad.sum_all(ad.exp(ad.scale(t, 0.3))),
        lambda t: ad.sum_all(ad.rsqrt(ad.add(ad.mul(t, t), ad.constant(1.0)))),
        lambda t: ad.mean_all(ad.leaky_relu(t)),
        lambda t: ad.sum_all(ad.sigmoid(t)),
        lambda t: ad.sum_all(ad.mul(ad.transpose(t), ad.transpose(t))),
        lambda t: ad.trace(ad.matmul(t, ad.transpose(t))),
        lambda t: ad.sum_all(ad.rows(t, 1, 3)),
        lambda t: ad.sum_all(ad.mul(ad.cols(t, 0, 2), ad.cols(t, 2, 4))),
    ])
    def test_elementwise_and_slicing_ops_vs_fd(self, op):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(4, 4)) + 0.3  # keep leaky_relu off its kink
        check_against_fd(op, x)

    def test_pairwise_sqdist_grads(self):
        rng = np.random.default_rng(3)
        a_val = rng.normal(size=(5, 3))
        b_val = rng.normal(size=(4, 3))
        w = rng.normal(size=(5, 4))

        def build_a(t):
            return ad.sum_all(ad.mul(ad.constant(w),
                                     ad.pairwise_sqdist(t, ad.constant(b_val))))

        def build_b(t):
            return ad.sum_all(ad.mul(ad.constant(w),
                                     ad.pairwise_sqdist(ad.constant(a_val), t)))

        check_against_fd(build_a, a_val)
        check_against_fd(build_b, b_val)

    def test_pairwise_sqdist_values(self):
        a = np.array([[0.0, 0.0], [1.0, 2.0]])
        b = np.array([[1.0, 0.0]])
        d = ad.pairwise_sqdist(ad.constant(a), ad.constant(b)).value
        np.testing.assert_allclose(d, [[1.0], [4.0]], rtol=1e-15)


class TestBroadcasting:
    def test_row_broadcast_add(self):
        x = ad.parameter(np.ones((3, 4)))
        b = ad.parameter(np.arange(4.0).reshape(1, 4))
        out = ad.sum_all(ad.add(x, b))
        out.backward()
        np.testing.assert_array_equal(x.grad, np.ones((3, 4)))
        np.testing.assert_array_equal(b.grad, np.full((1, 4), 3.0))

    def test_scalar_broadcast_mul(self):
        x = ad.parameter(np.ones((2, 3)))
        s = ad.parameter([[2.0]])
        ad.sum_all(ad.mul(x, s)).backward()
        assert s.grad[0, 0] == pytest.approx(6.0)

    def test_incompatible_shapes_rejected(self):
        a = ad.constant(np.ones((2, 3)))
        b = ad.constant(np.ones((3, 2)))
        with pytest.raises(ShapeError):
            ad.add(a, b)


class TestNumericGuards:
    def test_overflow_raises_nonfinite(self):
        with pytest.raises(NonFiniteError):
            ad.exp(ad.constant([[1000.0]]))

    def test_nan_input_rejected_at_construction(self):
        with pytest.raises(NonFiniteError):
            ad.constant([[np.nan]])


class TestGraphUtilities:
    def test_topo_order_parents_first(self):
        x = ad.parameter([[1.0]])
        y = ad.mul(x, x)
        z = ad.add(y, x)
        order = ad.topo_order(z)
        assert order.index(x) < order.index(y) < order.index(z)

    def test_collect_tags(self):
        x = ad.parameter([[1.0, 2.0]])
        k = ad.exp(ad.scale(ad.pairwise_sqdist(x, x), -0.5))
        k.tag = "hsic_ind:rbf-median"
        root = ad.sum_all(k)
        assert ad.collect_tags(root) == ["hsic_ind:rbf-median"]
