"""Seeded sampling of chart points and tangent directions.

The generator is SplitMix64 so that sample sets are reproducible across
implementations from the algorithm alone:

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

all arithmetic mod 2^64.  Uniform doubles take the top 53 bits; normals use
Box-Muller (the cosine branch only).
"""
from __future__ import annotations

import math

import numpy as np

from .dsl import ChartSpec, Domain

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def normal(self) -> float:
        u1 = 1.0 - self.uniform()  # (0, 1]
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def uniforms(self, shape) -> np.ndarray:
        size = int(np.prod(shape))
        return np.array([self.uniform() for _ in range(size)]).reshape(shape)

    def normals(self, shape) -> np.ndarray:
        size = int(np.prod(shape))
        return np.array([self.normal() for _ in range(size)]).reshape(shape)


def sample_domain(domain: Domain, n: int, count: int, rng: SplitMix64) -> np.ndarray:
    """``count`` points uniform in a ball (by rejection from its box) or a box."""
    out = []
    if domain.kind == "box":
        lo = np.array([b[0] for b in domain.bounds])
        hi = np.array([b[1] for b in domain.bounds])
        for _ in range(count):
            out.append(lo + (hi - lo) * rng.uniforms(n))
    else:
        r = domain.radius
        while len(out) < count:
            p = r * (2 * rng.uniforms(n) - 1)
            if p @ p < r * r:
                out.append(p)
    return np.array(out).reshape(count, n)


def unit_directions(n: int, count: int, rng: SplitMix64) -> np.ndarray:
    """Directions uniform on the Euclidean unit sphere."""
    out = np.empty((count, n))
    k = 0
    while k < count:
        v = rng.normals(n)
        nv = np.linalg.norm(v)
        if nv > 1e-12:
            out[k] = v / nv
            k += 1
    return out


def sample_points(chart: ChartSpec, count: int, seed: int, domain: Domain | None = None):
    """(xs, ys) with x uniform in the sampling domain and y on the unit sphere."""
    rng = SplitMix64(seed)
    dom = domain if domain is not None else chart.sampling
    xs = sample_domain(dom, chart.n, count, rng)
    ys = unit_directions(chart.n, count, rng)
    return xs, ys
