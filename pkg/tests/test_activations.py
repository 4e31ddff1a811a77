import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tanhexp.activations import (
    ALL_KINDS,
    MISH,
    RELU,
    SWISH,
    TANHEXP,
    ActivationKind,
    activate,
    activate_matrix,
    activate_prime,
    activate_prime_matrix,
    activate_second,
    mish_prime,
    mish_prime_chain,
    sigmoid,
)
from tanhexp.errors import UnsupportedKindError
from tanhexp.gradcheck import central_difference, grid

# 30-digit mpmath evaluations
SIGMOID_1 = 0.731058578630004879
TANHEXP_1 = 0.991328915800599838
MISH_1 = 0.865098388267310346
TANHEXP_PRIME_1 = 1.038265435663258679
TANH_1 = 0.761594155955764888
TANHEXP_ARGMIN = -1.078860058464624057
TANHEXP_MIN = -0.353285777848211271


def test_sigmoid_values():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(1.0) == pytest.approx(SIGMOID_1, abs=1e-15)
    tiny = sigmoid(-50.0)
    assert 0.0 < tiny == pytest.approx(1.0 / (1.0 + math.exp(50.0)), rel=1e-14)
    assert sigmoid(-700.0) > 0.0 and sigmoid(700.0) == 1.0


@pytest.mark.parametrize("kind,x,expected,tol", [
    (TANHEXP, 0.0, 0.0, 0.0),
    (TANHEXP, 1.0, TANHEXP_1, 1e-15),
    (MISH, 1.0, MISH_1, 1e-15),
    (SWISH, 1.0, SIGMOID_1, 1e-15),
    (RELU, -3.0, 0.0, 0.0),
    (RELU, 2.5, 2.5, 0.0),
])
def test_activate_values(kind, x, expected, tol):
    assert activate(kind, x) == pytest.approx(expected, abs=tol)


def test_tanhexp_near_rounded_minimum():
    assert activate(TANHEXP, -1.100) == pytest.approx(-0.3532, abs=5e-4)


def test_tanhexp_stationary_point():
    # the true stationary point of x tanh(e^x) sits at -1.0789, not -1.100
    assert abs(activate_prime(TANHEXP, TANHEXP_ARGMIN)) < 1e-12
    assert activate(TANHEXP, TANHEXP_ARGMIN) == pytest.approx(TANHEXP_MIN, abs=1e-15)
    assert abs(activate_prime(TANHEXP, -1.100)) > 1e-3


@pytest.mark.parametrize("kind,x,expected,tol", [
    (TANHEXP, 0.0, TANH_1, 1e-15),
    (TANHEXP, 1.0, TANHEXP_PRIME_1, 1e-14),
    (RELU, 3.0, 1.0, 0.0),
    (RELU, -3.0, 0.0, 0.0),
    (RELU, 0.0, 0.5, 0.0),
    (SWISH, 0.0, 0.5, 0.0),
])
def test_activate_prime_values(kind, x, expected, tol):
    assert activate_prime(kind, x) == pytest.approx(expected, abs=tol)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=str)
def test_prime_matches_central_difference_on_grid(kind):
    for x in grid().tolist():
        fd = central_difference(lambda t: activate(kind, t), x, 1e-5)
        assert abs(activate_prime(kind, x) - fd) < 1e-6, x


def test_mish_closed_form_matches_mpmath_derivative():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    f = lambda t: t * mp.tanh(mp.log(1 + mp.e**t))  # noqa: E731
    for x in np.linspace(-5, 5, 41).tolist():
        assert abs(mish_prime(x) - float(mp.diff(f, x))) < 1e-9


def test_mish_closed_form_equals_chain_rule_form():
    for x in grid().tolist():
        assert abs(mish_prime(x) - mish_prime_chain(x)) < 1e-12


def test_second_derivative_values():
    assert abs(activate_second(TANHEXP, -20.0)) < 1e-6
    assert activate_second(TANHEXP, -1.100) > 0
    assert activate_second(TANHEXP, TANHEXP_ARGMIN) > 0
    assert activate_second(SWISH, 0.0) == pytest.approx(0.5, abs=1e-4)


def test_second_derivative_of_relu_unsupported():
    with pytest.raises(UnsupportedKindError):
        activate_second(RELU, 1.0)


def test_second_derivative_against_mpmath():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    funcs = {
        "tanhexp": lambda t: t * mp.tanh(mp.e**t),
        "mish": lambda t: t * mp.tanh(mp.log(1 + mp.e**t)),
        "swish": lambda t: t / (1 + mp.e**-t),
    }
    for kind in (TANHEXP, MISH, SWISH):
        for x in (-4.0, -1.0, 0.3, 2.0):
            assert activate_second(kind, x) == pytest.approx(float(mp.diff(funcs[kind.name], x, 2)), abs=1e-6)


def test_matrix_kernels_match_scalar():
    m = np.linspace(-30, 30, 2401).reshape(49, 49)
    for kind in ALL_KINDS:
        scalar = np.vectorize(lambda x: activate(kind, x))(m)
        scalar_p = np.vectorize(lambda x: activate_prime(kind, x))(m)
        np.testing.assert_allclose(activate_matrix(kind, m), scalar, rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(activate_prime_matrix(kind, m), scalar_p, rtol=1e-13, atol=1e-13)


def test_matrix_reference_row():
    out = activate_matrix(TANHEXP, np.array([[-1.1, 0.0, 1.0]]))
    np.testing.assert_allclose(out, [[-0.3532, 0.0, 0.9913]], atol=5e-4)
    assert np.array_equal(activate_matrix(TANHEXP, np.zeros((3, 4))), np.zeros((3, 4)))


def test_extremes_are_finite():
    m = np.array([[-1e308, -800.0, -700.0, 0.0, 700.0, 800.0, 1e308]])
    for kind in ALL_KINDS:
        with np.errstate(over="raise", invalid="raise", divide="raise", under="ignore"):
            assert np.all(np.isfinite(activate_matrix(kind, m)))
            assert np.all(np.isfinite(activate_prime_matrix(kind, m)))
        for x in m[0]:
            assert math.isfinite(activate(kind, x)) and math.isfinite(activate_prime(kind, x))


def test_self_gated_zero():
    for kind in ALL_KINDS:
        assert activate(kind, 0.0) == 0.0


def test_sparsity_tail():
    assert abs(activate(TANHEXP, -20.0)) < 1e-6
    xs = np.linspace(-60, -5, 5501)
    vals = np.abs(activate_matrix(TANHEXP, xs))
    assert np.all(np.diff(vals) >= 0)


def test_positive_part_linearity():
    xs = 1.0 + 0.01 * np.arange(4901)
    gap = xs - np.array([activate(TANHEXP, x) for x in xs])
    assert gap.min() >= 0.0 and gap.max() <= 0.01


def test_unbounded_above():
    assert activate(TANHEXP, 100.0) / 100.0 == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-50, 50))
def test_tanhexp_bounded_below_by_minimum(x):
    assert activate(TANHEXP, x) >= TANHEXP_MIN - 1e-15


def test_swish_beta():
    k = ActivationKind.parse("swish:2")
    assert k.beta == 2.0 and str(k) == "swish:2"
    assert activate(k, 1.0) == pytest.approx(sigmoid(2.0))
    with pytest.raises(ValueError):
        ActivationKind("swish", beta=0.0)
    with pytest.raises(UnsupportedKindError):
        ActivationKind.parse("gelu")
