import numpy as np
import pytest

from tanhexp.activations import RELU, TANHEXP
from tanhexp.landscape import landscape


def test_rows_and_order():
    rows = landscape(TANHEXP, 2)
    assert rows.shape == (4, 3)
    assert rows[:, :2].tolist() == [[-3.0, -3.0], [3.0, -3.0], [-3.0, 3.0], [3.0, 3.0]]
    with pytest.raises(ValueError):
        landscape(TANHEXP, 1)


def test_seeded():
    assert np.array_equal(landscape(TANHEXP, 11, seed=4), landscape(TANHEXP, 11, seed=4))
    assert not np.array_equal(landscape(TANHEXP, 11, seed=4), landscape(TANHEXP, 11, seed=5))


@pytest.mark.parametrize("axis", [0, 1])
def test_relu_surface_is_piecewise_linear(axis):
    # a scan line is affine between knots; each knot makes a short run of non-zero second differences
    n = 401
    z = landscape(RELU, n)[:, 2].reshape(n, n)
    bent = np.abs(np.diff(z, 2, axis=axis)) > 1e-9 * max(1.0, np.abs(z).max())
    bent = bent if axis == 1 else bent.T
    knots = (np.diff(bent.astype(int), axis=1) == 1).sum(axis=1) + bent[:, 0]
    assert knots.max() <= 4 * 16
    assert (~bent).mean() > 0.8


def test_tanhexp_surface_is_smooth_and_distinct():
    n = 101
    z = landscape(TANHEXP, n)[:, 2]
    assert np.all(np.isfinite(z))
    assert not np.allclose(z, landscape(RELU, n)[:, 2])
    second = np.abs(np.diff(z.reshape(n, n), 2, axis=1))
    assert (second > 1e-12).mean() > 0.9
