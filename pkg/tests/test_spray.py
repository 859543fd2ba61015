import numpy as np
import pytest

import finslerlab.catalog as cat
from finslerlab.core import c_reducible_part, fundamental_data
from finslerlab.spray import berwald_landsberg, classify_spray, spray_data

from conftest import points, rel


def conformal_christoffel(x):
    """Christoffel symbols of a = phi^2 delta with phi = 2/(1+|x|^2)."""
    x = np.asarray(x)
    n = len(x)
    d = -2 * x / (1 + x @ x)  # d log phi
    eye = np.eye(n)
    return (np.einsum("j,ik->ijk", d, eye) + np.einsum("k,ij->ijk", d, eye) - np.einsum("i,jk->ijk", d, eye))


def test_euclidean_spray_vanishes(charts):
    ch = charts["euclidean_randers"]
    xs, ys = points(ch, 10)
    s = spray_data(ch, xs, ys)
    assert np.abs(s.G).max() == 0 and np.abs(s.N).max() == 0
    bl = berwald_landsberg(ch, xs, ys)
    assert np.abs(bl.B).max() == 0 and np.abs(bl.L).max() == 0 and np.abs(bl.J).max() == 0


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_spray_is_christoffel(n):
    ch = cat.riemannian_sphere(n)
    xs, ys = points(ch, 10)
    G = spray_data(ch, xs, ys).G
    want = np.array([0.5 * np.einsum("ijk,j,k->i", conformal_christoffel(x), y, y) for x, y in zip(xs, ys)])
    assert rel(G - want, want) <= 1e-12


@pytest.mark.parametrize("name", ["funk_ball", "funk_ball3", "parallel_beta_product", "riemannian_sphere"])
def test_spray_invariants(charts, name):
    ch = charts[name]
    xs, ys = points(ch, 15)
    s1, s2 = spray_data(ch, xs, ys), spray_data(ch, xs, 2 * ys)
    assert rel(s2.G - 4 * s1.G, s1.G) <= 1e-10
    assert rel(np.einsum("bij,bj->bi", s1.N, ys) - 2 * s1.G, s1.G) <= 1e-9
    bl = berwald_landsberg(ch, xs, ys)
    B, L = bl.B, bl.L
    assert rel(B - np.swapaxes(B, 2, 3), B) <= 1e-12 and rel(B - np.swapaxes(B, 2, 4), B) <= 1e-12
    assert rel(np.einsum("bijkl,bj->bikl", B, ys), B) <= 1e-9
    assert rel(L - np.swapaxes(L, 1, 2), L) <= 1e-9 and rel(L - np.swapaxes(L, 1, 3), L) <= 1e-9
    assert rel(np.einsum("bijk,bk->bij", L, ys), L) <= 1e-9
    assert np.abs(np.einsum("bi,bi->b", bl.J, ys)).max() <= 1e-9 * (1 + np.abs(bl.J).max())


@pytest.mark.parametrize("name", ["funk_ball", "funk_ball3", "parallel_beta_product", "euclidean_randers"])
def test_landsberg_form(charts, name):
    ch = charts[name]
    xs, ys = points(ch, 20)
    bl = berwald_landsberg(ch, xs, ys)
    h = fundamental_data(ch, xs, ys).h
    assert rel(bl.L - c_reducible_part(bl.J, h), bl.L) <= 1e-9


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_mean_landsberg_is_zero_homogeneous(funk, lam):
    xs, ys = points(funk, 10)
    J1 = berwald_landsberg(funk, xs, ys).J
    J2 = berwald_landsberg(funk, xs, lam * ys).J
    assert rel(J2 - J1, J1) <= 1e-10


def test_parallel_beta_is_berwald(charts):
    ch = charts["parallel_beta_product"]
    xs, ys = points(ch, 100, seed=4)
    assert np.abs(berwald_landsberg(ch, xs, ys).B).max() <= 1e-9


def test_funk_is_not_berwald(funk):
    xs, ys = points(funk, 30)
    assert np.abs(berwald_landsberg(funk, xs, ys).B).max() > 0.01


def test_classify_examples(charts):
    ch = charts["euclidean_randers"]
    xs, ys = points(ch, 50)
    assert classify_spray(ch, xs, ys).flags() == {"riemannian": False, "berwald": True, "landsberg": True,
                                                  "weak_landsberg": True}
    ch = charts["riemannian_sphere"]
    xs, ys = points(ch, 50)
    f = classify_spray(ch, xs, ys).flags()
    assert f["riemannian"] and f["berwald"]
    ch = charts["funk_ball"]
    xs, ys = points(ch, 50)
    c = classify_spray(ch, xs, ys)
    assert not any(c.flags().values())
    assert set(c.witnesses) == set(c.flags())


@pytest.mark.parametrize("name", ["euclidean_randers", "funk_ball", "parallel_beta_product", "riemannian_sphere"])
def test_landsberg_implies_berwald(charts, name):
    ch = charts[name]
    xs, ys = points(ch, 100, seed=9)
    c = classify_spray(ch, xs, ys)
    assert (not c.landsberg) or c.berwald
