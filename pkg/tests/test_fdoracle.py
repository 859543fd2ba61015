import math

import numpy as np
import pytest

from finslerlab.fdoracle import FDOracleConfig, central_stencil, fd_partial


def test_sine_first_derivative():
    f = lambda xs, ys: np.sin(xs[0]) + 0 * ys[0]
    assert fd_partial(f, [0.0], [1.0], [1, 0]) == pytest.approx(1.0, abs=1e-8)


def test_cubic_third_derivative():
    f = lambda xs, ys: ys[0] ** 3 + 0 * xs[0]
    assert fd_partial(f, [0.0], [0.7], [0, 3]) == pytest.approx(6.0, abs=1e-6)


def test_mixed_partial_of_product():
    f = lambda xs, ys: np.exp(xs[0]) * np.sin(ys[1]) * ys[0] ** 2
    x, y = [0.3, 0.0], [1.2, 0.4]
    want = math.exp(0.3) * math.cos(0.4) * 2 * 1.2
    assert fd_partial(f, x, y, [1, 0, 1, 1]) == pytest.approx(want, rel=1e-7)


@pytest.mark.parametrize("k", range(1, 6))
def test_stencil_is_exact_on_monomials(k):
    offs, w = central_stencil(k)
    for p in range(k + 2):
        got = sum(wi * o ** p for o, wi in zip(offs, w))
        want = math.factorial(k) if p == k else 0.0
        assert got == pytest.approx(want, abs=1e-9)


def test_steps_scale_with_coordinate():
    # a linear function is differentiated exactly whatever the step
    f = lambda xs, ys: 3.0 * xs[0] + 0 * ys[0]
    assert fd_partial(f, [1e4], [1.0], [1, 0]) == pytest.approx(3.0, rel=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        FDOracleConfig(base_step=0.0)
    with pytest.raises(ValueError):
        FDOracleConfig(richardson_levels=0)
    cfg = FDOracleConfig()
    assert cfg.base_step == pytest.approx(np.finfo(float).eps ** (1 / 3))
    assert FDOracleConfig(richardson_levels=1).step(1) == pytest.approx(cfg.base_step)


def test_bad_multi_index_length():
    with pytest.raises(ValueError):
        fd_partial(lambda xs, ys: xs[0], [0.0, 0.0], [1.0, 1.0], [1, 0])
