"""Built-in Randers charts used by the tests and the command line."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .dsl import ChartError, ChartSpec, Domain, parse_expr

NAMES = ("euclidean_randers", "funk_ball", "parallel_beta_product", "riemannian_sphere")


def _build(n, a_txt, b_txt, domain, name, sample=None, params=None) -> ChartSpec:
    a = tuple(tuple(parse_expr(a_txt[i][j], n) for j in range(n)) for i in range(n))
    b = tuple(parse_expr(t, n) for t in b_txt)
    return ChartSpec(n, a, b, domain, name=name, sample_domain=sample, params=params or {})


def _sq_sum(idx: Sequence[int]) -> str:
    return "(" + " + ".join(f"x{i}^2" for i in idx) + ")"


def euclidean_randers(n: int = 2, b: Sequence[float] | None = None) -> ChartSpec:
    """Constant Euclidean a and constant covector b (locally Minkowskian)."""
    b = [0.5] + [0.0] * (n - 1) if b is None else [float(v) for v in b]
    if len(b) != n:
        raise ChartError(f"b must have {n} components")
    if np.linalg.norm(b) >= 1:
        raise ChartError(f"|b| = {np.linalg.norm(b):.6g} must be < 1")
    a = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    return _build(n, a, [repr(v) for v in b], Domain("ball", radius=10.0), "euclidean_randers",
                  Domain("ball", radius=1.0), {"n": n, "b": b})


def funk_ball(n: int = 2, radius: float = 0.99, sample_radius: float = 0.7) -> ChartSpec:
    """Funk metric of the unit ball, written in Randers form.

    alpha^2 = ((1 - |x|^2)|y|^2 + <x, y>^2) / (1 - |x|^2)^2,
    beta = <x, y> / (1 - |x|^2); flag curvature is -1/4 everywhere.
    """
    if not 0 < sample_radius <= radius < 1:
        raise ChartError("need 0 < sample_radius <= radius < 1")
    s = f"(1 - {_sq_sum(range(1, n + 1))})"
    a = [[f"({s} + x{i}^2) / {s}^2" if i == j else f"(x{min(i, j)} * x{max(i, j)}) / {s}^2"
          for j in range(1, n + 1)] for i in range(1, n + 1)]
    b = [f"x{i} / {s}" for i in range(1, n + 1)]
    return _build(n, a, b, Domain("ball", radius=radius), "funk_ball",
                  Domain("ball", radius=sample_radius), {"n": n, "radius": radius, "sample_radius": sample_radius})


def riemannian_sphere(n: int = 2) -> ChartSpec:
    """Unit round sphere in stereographic coordinates, b = 0."""
    conf = f"4 / (1 + {_sq_sum(range(1, n + 1))})^2"
    a = [[conf if i == j else "0" for j in range(n)] for i in range(n)]
    return _build(n, a, ["0"] * n, Domain("ball", radius=2.0), "riemannian_sphere",
                  Domain("ball", radius=1.0), {"n": n})


def parallel_beta_product(n: int = 3, b: float = 0.5) -> ChartSpec:
    """Round S^(n-1) (stereographic) times a flat circle, beta = b d(x_n).

    beta is parallel for the product metric, so the chart is Berwald but not
    flat.  Needs n >= 3 so the sphere factor is curved.
    """
    if n < 3:
        raise ChartError("parallel_beta_product needs n >= 3 (the sphere factor must be curved)")
    if not abs(b) < 1:
        raise ChartError(f"|b| = {abs(b):.6g} must be < 1")
    conf = f"4 / (1 + {_sq_sum(range(1, n))})^2"
    a = [["0"] * n for _ in range(n)]
    for i in range(n - 1):
        a[i][i] = conf
    a[n - 1][n - 1] = "1"
    bv = ["0"] * (n - 1) + [repr(float(b))]
    bounds = tuple([(-2.0, 2.0)] * (n - 1) + [(-10.0, 10.0)])
    sample = tuple([(-1.0, 1.0)] * n)
    return _build(n, a, bv, Domain("box", bounds=bounds), "parallel_beta_product",
                  Domain("box", bounds=sample), {"n": n, "b": float(b)})


def catalog(name: str, **params) -> ChartSpec:
    """Look up a catalog chart by name; keyword parameters go to its generator."""
    gens = {
        "euclidean_randers": euclidean_randers,
        "funk_ball": funk_ball,
        "parallel_beta_product": parallel_beta_product,
        "riemannian_sphere": riemannian_sphere,
    }
    if name not in gens:
        raise ChartError(f"unknown catalog chart {name!r}; choose from {', '.join(NAMES)}")
    try:
        return gens[name](**params)
    except TypeError as exc:
        raise ChartError(f"invalid parameters for {name}: {exc}") from exc


# constant flag curvature of the catalog charts that have one
KNOWN_K = {"euclidean_randers": 0.0, "funk_ball": -0.25, "riemannian_sphere": 1.0}


def geodesic_start(chart: ChartSpec) -> tuple[np.ndarray, np.ndarray]:
    """A start (x0, y0) whose unit-speed geodesic stays in the chart for t in [0, 3].

    Sphere-like factors start on the stereographic equator with a 20 degree
    tilt, so the great circle image stays within radius tan(55 deg).
    """
    n = chart.n
    x0, y0 = np.zeros(n), np.zeros(n)
    tilt = np.radians(20.0)
    if chart.name in ("riemannian_sphere", "parallel_beta_product"):
        x0[0] = 1.0
        y0[0], y0[1] = np.sin(tilt), np.cos(tilt)
        if chart.name == "parallel_beta_product":
            y0[-1] = 0.5
    elif chart.name == "funk_ball":
        x0[0], x0[1] = 0.2, -0.3
        y0[0], y0[1] = 0.3, 1.0
    else:
        dom = chart.sampling
        if dom.kind == "box":
            x0 = np.array([(lo + hi) / 2 for lo, hi in dom.bounds])
        y0[0], y0[1] = 0.3, 1.0
    return x0, y0 / chart.finsler(x0, y0)
