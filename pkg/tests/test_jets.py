import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab import jets
from finslerlab.catalog import funk_ball
from finslerlab.jets import DomainError, Jet, OrderExceeded, jet_space, mixed_partial, variables


def test_square_second_derivative():
    f = lambda xs, ys: ys[0] * ys[0]
    assert mixed_partial(f, [0.3, 0.1], [1.5, -2.0], [0, 0, 2, 0]) == pytest.approx(2.0, abs=0)


def test_constant_has_zero_partials():
    f = lambda xs, ys: 5.0 + 0 * xs[0]
    for idx in ([1, 0, 0, 0], [0, 1, 0, 2], [2, 0, 1, 1]):
        assert mixed_partial(f, [0.3, 0.1], [1.5, -2.0], idx) == 0.0


def test_order_zero_is_plain_value():
    sp = jet_space(2, 0, 0)
    xs, ys = variables(sp, np.array([0.3, 0.4]), np.array([1.0, 2.0]))
    out = jets.sqrt(xs[0] * ys[1] + 1.0)
    assert out.value == math.sqrt(0.3 * 2.0 + 1.0)


def test_order_exceeded():
    f = lambda xs, ys: ys[0] ** 3
    with pytest.raises(OrderExceeded):
        mixed_partial(f, [0.0, 0.0], [1.0, 1.0], [0, 0, 3, 0], order=(0, 2))


def test_domain_error_propagates():
    f = lambda xs, ys: jets.sqrt(xs[0] - 1.0)
    with pytest.raises(DomainError):
        mixed_partial(f, [0.5, 0.0], [1.0, 1.0], [1, 0, 0, 0])


def test_derivative_lowers_valid_order():
    sp = jet_space(1, 1, 2)
    xs, ys = variables(sp, np.array([0.2]), np.array([1.0]))
    d = (xs[0] * ys[0] ** 2).d(1)
    assert d.valid == (1, 1)
    with pytest.raises(OrderExceeded):
        d.d(1).d(1)


def test_schwarz_symmetry_by_construction():
    # one coefficient per monomial, so any differentiation order gives the same value
    sp = jet_space(2, 2, 2)
    xs, ys = variables(sp, np.array([0.2, -0.1]), np.array([1.0, 0.5]))
    f = jets.sin(xs[0] * ys[1]) * jets.exp(xs[1] + ys[0])
    a = f.d(0).d(3).d(1)
    b = f.d(1).d(0).d(3)
    assert np.allclose(a.coef, b.coef, rtol=1e-14, atol=0)


def test_funk_alpha_squared_mixed_partial():
    # alpha^2 = ((1-r^2)|y|^2 + <x,y>^2)/(1-r^2)^2; on the x1-axis d2/dx1 dy1 = 8 x1 y1 / (1-x1^2)^3
    ch = funk_ball(2)

    def alpha2(xs, ys):
        a, _ = ch.coefficients(xs)
        return sum(a[i][j] * ys[i] * ys[j] for i in range(2) for j in range(2))

    x, y = [0.3, 0.0], [1.0, 0.2]
    got = mixed_partial(alpha2, x, y, [1, 0, 1, 0])
    assert got == pytest.approx(8 * 0.3 * 1.0 / (1 - 0.09) ** 3, rel=1e-13)


def test_inverse_matches_numpy():
    sp = jet_space(2, 1, 2)
    xs, ys = variables(sp, np.array([[0.2, 0.1]]), np.array([[1.0, 0.3]]))
    A = jets.stack([jets.stack([2 + xs[0] * ys[0], ys[1] * 0.5], -1),
                    jets.stack([ys[1] * 0.5, 3 + xs[1] * ys[1] ** 2], -1)], -2)
    Ai = jets.inv(A)
    prod = jets.einsum("...ij,...jk->...ik", A, Ai)
    eye = np.zeros_like(prod.coef)
    eye[..., 0, 0, 0] = eye[..., 1, 1, 0] = 1.0
    assert np.allclose(prod.coef, eye, atol=1e-13)


coef = st.floats(-3, 3, allow_nan=False)
pt = st.floats(-0.8, 0.8, allow_nan=False)


def _f(xs, ys):
    return jets.sin(xs[0] * ys[1]) + ys[0] ** 2 * xs[1]


def _g(xs, ys):
    return jets.exp(0.3 * xs[1] - ys[1]) * ys[0]


idx_st = st.lists(st.integers(0, 2), min_size=4, max_size=4).filter(
    lambda v: v[0] + v[1] <= 2 and v[2] + v[3] <= 3 and sum(v) > 0)


@settings(max_examples=60, deadline=None)
@given(coef, coef, pt, pt, pt, pt, idx_st)
def test_linearity(a, b, x1, x2, y1, y2, idx):
    x, y = [x1, x2], [y1 + 1.5, y2]
    lhs = mixed_partial(lambda xs, ys: a * _f(xs, ys) + b * _g(xs, ys), x, y, idx)
    rhs = a * mixed_partial(_f, x, y, idx) + b * mixed_partial(_g, x, y, idx)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs))


@settings(max_examples=60, deadline=None)
@given(pt, pt, pt, pt, st.integers(0, 3))
def test_leibniz(x1, x2, y1, y2, var):
    x, y = [x1, x2], [y1 + 1.5, y2]
    idx = [0] * 4
    idx[var] = 1
    lhs = mixed_partial(lambda xs, ys: _f(xs, ys) * _g(xs, ys), x, y, idx)
    f0 = mixed_partial(_f, x, y, [0] * 4)
    g0 = mixed_partial(_g, x, y, [0] * 4)
    rhs = f0 * mixed_partial(_g, x, y, idx) + g0 * mixed_partial(_f, x, y, idx)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs))


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(-2, 2), st.floats(-2, 2))
def test_euler_homogeneity_of_F2(x1, x2, y1, y2):
    if math.hypot(y1, y2) < 1e-3:
        y1 = 1.0
    ch = funk_ball(2)

    def F2(xs, ys):
        a, b = ch.coefficients(xs)
        al = jets.sqrt(sum(a[i][j] * ys[i] * ys[j] for i in range(2) for j in range(2)))
        F = al + b[0] * ys[0] + b[1] * ys[1]
        return F * F

    x, y = [x1, x2], [y1, y2]
    h = mixed_partial(F2, x, y, [0, 0, 0, 0])
    euler = y1 * mixed_partial(F2, x, y, [0, 0, 1, 0]) + y2 * mixed_partial(F2, x, y, [0, 0, 0, 1])
    assert abs(euler - 2 * h) <= 1e-10 * abs(h)


def test_batched_values_and_power():
    sp = jet_space(1, 0, 3)
    _, ys = variables(sp, np.array([[0.0], [0.0]]), np.array([[2.0], [3.0]]))
    p = ys[0] ** 2.5
    assert np.allclose(p.partial([0, 3]), 2.5 * 1.5 * 0.5 * np.array([2.0, 3.0]) ** -0.5)
    assert isinstance(p, Jet)
