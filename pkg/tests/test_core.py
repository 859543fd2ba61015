import math

import numpy as np
import pytest

import finslerlab.catalog as cat
from finslerlab.core import (c_reducible_part, cartan_norm_at, fundamental_data, mean_cartan_norm,
                             randers_norm_bound, torsion_data)
from finslerlab.fdoracle import fd_partial
from finslerlab.suites import chart_functions

from conftest import points, rel

RANDERS = ["euclidean_randers", "funk_ball", "funk_ball3", "parallel_beta_product", "riemannian_sphere"]


def test_euclidean_fundamental_values():
    ch = cat.euclidean_randers(2, [0.0, 0.0])
    fd = fundamental_data(ch, [0.1, 0.2], [3.0, 4.0])
    assert fd.F == pytest.approx(5.0)
    assert np.allclose(fd.g, np.eye(2))


@pytest.mark.parametrize("name", RANDERS)
def test_fundamental_identities(charts, name):
    ch = charts[name]
    xs, ys = points(ch, 30)
    fd = fundamental_data(ch, xs, ys)
    F2 = fd.F ** 2
    assert np.all(np.abs(np.einsum("bi,bij,bj->b", ys, fd.g, ys) - F2) <= 1e-10 * F2)
    assert rel(np.einsum("bij,bj->bi", fd.h, ys), fd.h) <= 1e-10
    assert np.allclose(np.einsum("bi,bi->b", fd.ell, ys), fd.F, rtol=1e-12)
    assert np.allclose(fd.g, np.swapaxes(fd.g, 1, 2), atol=1e-14)
    assert np.all(np.linalg.eigvalsh(fd.g) > 0)
    assert np.allclose(np.einsum("bij,bjk->bik", fd.g, fd.ginv), np.eye(ch.n), atol=1e-12)


def test_funk_g_matches_fd_hessian(funk):
    x, y = np.array([0.3, 0.0]), np.array([1.0, 0.0])
    F2 = chart_functions(funk)["F^2"]
    g = fundamental_data(funk, x, y).g
    for i in range(2):
        for j in range(2):
            idx = [0, 0, 0, 0]
            idx[2 + i] += 1
            idx[2 + j] += 1
            assert abs(g[i, j] - 0.5 * fd_partial(F2, x, y, idx)) <= 1e-5 * (1 + abs(g[i, j]))


def test_sphere_is_riemannian(sphere):
    xs, ys = points(sphere, 30)
    assert np.abs(torsion_data(sphere, xs, ys).C).max() <= 1e-12


@pytest.mark.parametrize("name", RANDERS)
def test_torsion_identities_and_matsumoto(charts, name):
    ch = charts[name]
    xs, ys = points(ch, 30)
    t = torsion_data(ch, xs, ys)
    fd = fundamental_data(ch, xs, ys)
    C = t.C
    assert rel(C - np.swapaxes(C, 1, 2), C) <= 1e-12 and rel(C - np.swapaxes(C, 1, 3), C) <= 1e-12
    assert rel(np.einsum("bijk,bk->bij", C, ys), C) <= 1e-10
    assert np.abs(np.einsum("bi,bi->b", t.I, ys)).max() <= 1e-10
    assert np.abs(t.M).max() <= 1e-9 * (1 + np.abs(C).max())
    assert rel(C - c_reducible_part(t.I, fd.h), C) <= 1e-9


@pytest.mark.parametrize("lam", [0.5, 2.0, 7.0])
def test_cartan_torsion_homogeneity(funk, lam):
    xs, ys = points(funk, 10)
    C1 = torsion_data(funk, xs, ys).C
    C2 = torsion_data(funk, xs, lam * ys).C
    assert rel(lam * C2 - C1, C1) <= 1e-10


def test_norm_zero_for_riemannian(sphere):
    assert mean_cartan_norm(sphere, [0.3, 0.1]).value <= 1e-12


def test_norm_invariant_under_y_scaling(funk):
    ys = np.array([[1.0, 0.2], [-0.3, 0.8]])
    x = [0.2, 0.4]
    assert np.allclose(cartan_norm_at(funk, x, ys), cartan_norm_at(funk, x, 5 * ys), rtol=1e-12)


def test_euclidean_norm_sup_against_dense_sweep():
    # oracle: dense sweep of the indicatrix; closed form (n+1)/sqrt(2) sqrt(1 - sqrt(1 - b^2))
    ch = cat.euclidean_randers(2, [0.6, 0.0])
    th = np.linspace(0, 2 * np.pi, 20001)
    dense = cartan_norm_at(ch, [0.0, 0.0], np.stack([np.cos(th), np.sin(th)], -1)).max()
    est = mean_cartan_norm(ch, [0.0, 0.0])
    assert est.value == pytest.approx(0.9486832980505138, rel=1e-9)
    assert dense <= est.value + 1e-12
    assert est.value == pytest.approx(3 / math.sqrt(2) * math.sqrt(1 - math.sqrt(1 - 0.36)), rel=1e-9)
    assert est.evaluations > 128


def test_norm_exceeds_half_factor_bound_by_sqrt2():
    # the (n+1)/2 form of the bound is violated by exactly a factor sqrt(2)
    ch = cat.euclidean_randers(2, [0.6, 0.0])
    est = mean_cartan_norm(ch, [0.0, 0.0]).value
    assert est / randers_norm_bound(2, 0.6) == pytest.approx(math.sqrt(2), rel=1e-9)


@pytest.mark.parametrize("name", ["funk_ball", "parallel_beta_product", "euclidean_randers"])
def test_norm_strictly_below_limit(charts, name):
    ch = charts[name]
    xs, _ = points(ch, 3)
    for x in xs:
        assert mean_cartan_norm(ch, x).value < (ch.n + 1) / math.sqrt(2)


def test_single_point_shapes(funk):
    fd = fundamental_data(funk, [0.1, 0.1], [1.0, 0.0])
    assert np.ndim(fd.F) == 0 and fd.g.shape == (2, 2)
    t = torsion_data(funk, [0.1, 0.1], [1.0, 0.0])
    assert t.C.shape == (2, 2, 2)


def test_zero_y_rejected(funk):
    with pytest.raises(ValueError):
        fundamental_data(funk, [0.1, 0.1], [0.0, 0.0])
