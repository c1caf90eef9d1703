import numpy as np
import pytest

from stokesband.grids import TimeGrid, VerticalGrid, diff1, diff2


def test_strip_grid_nodes():
    vg = VerticalGrid.strip(10)
    assert vg.n == 11
    assert vg.nodes[0] == 0.0
    assert vg.nodes[-1] == 1.0
    np.testing.assert_allclose(vg.dz, 0.1)


def test_halfline_grid_nodes():
    vg = VerticalGrid.halfline(16, 8.0)
    assert vg.nodes[0] == 0.0
    np.testing.assert_allclose(vg.nodes[-1], 8.0)


def test_trapezoid_weights_integrate_linear():
    vg = VerticalGrid.halfline(32, 4.0)
    np.testing.assert_allclose(vg.weights.sum(), vg.length)
    np.testing.assert_allclose(vg.weights @ vg.nodes, 0.5 * 4.0**2)


def test_time_grid_rejects_bad_args():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 4)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)


def _order(h_err_pairs):
    (h1, e1), (h2, e2) = h_err_pairs
    return np.log(e1 / e2) / np.log(h1 / h2)


@pytest.mark.parametrize("op,deriv", [
    (diff1, lambda z: np.cos(z)),
    (diff2, lambda z: -np.sin(z)),
])
def test_difference_operators_second_order(op, deriv):
    pairs = []
    for n in (64, 128):
        vg = VerticalGrid.halfline(n, 3.0)
        approx = op(np.sin(vg.nodes), vg.dz, axis=0)
        err = np.max(np.abs(approx - deriv(vg.nodes)))
        pairs.append((vg.dz, err))
    assert _order(pairs) > 1.8


def test_diff_operators_exact_on_quadratic():
    vg = VerticalGrid.strip(20)
    z = vg.nodes
    np.testing.assert_allclose(diff1(z**2, vg.dz, axis=0), 2 * z, atol=1e-12)
    np.testing.assert_allclose(diff2(z**2, vg.dz, axis=0), 2.0, atol=1e-10)
