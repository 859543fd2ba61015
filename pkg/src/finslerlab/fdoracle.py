"""Finite-difference oracle for mixed partials, independent of the jet engine.

Each active variable gets a central stencil of second-order accuracy; the
stencils are combined by tensor product and the result is Richardson
extrapolated over halved steps.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class FDOracleConfig:
    base_step: float = EPS ** (1.0 / 3.0)
    richardson_levels: int = 2

    def __post_init__(self):
        if not self.base_step > 0:
            raise ValueError("base_step must be positive")
        if self.richardson_levels < 1:
            raise ValueError("richardson_levels must be >= 1")

    def step(self, order: int) -> float:
        """Unscaled step for a derivative of total ``order``.

        ``base_step`` is the first-order optimum without extrapolation; the
        roundoff/truncation balance for order k with L levels (truncation
        O(h^(2L))) moves the optimum to base_step^(3 / (k + 2L)).
        """
        return self.base_step ** (3.0 / (order + 2 * self.richardson_levels))


@lru_cache(maxsize=None)
def central_stencil(k: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Offsets and weights of the O(h^2) central difference for d^k/dt^k."""
    if k == 0:
        return (0,), (1.0,)
    p = (k + 1) // 2
    offs = np.arange(-p, p + 1)
    V = np.vander(offs, increasing=True).T.astype(float)
    rhs = np.zeros(len(offs))
    rhs[k] = math.factorial(k)
    w = np.linalg.solve(V, rhs)
    return tuple(int(o) for o in offs), tuple(float(v) for v in w)


def _difference(f, x, y, idx, hs):
    n = len(x)
    base = np.concatenate([x, y])
    active = [v for v in range(2 * n) if idx[v] > 0]
    stencils = [central_stencil(idx[v]) for v in active]
    offsets, weights = [], []
    for combo in itertools.product(*[list(zip(*s)) for s in stencils]):
        offsets.append([o for o, _ in combo])
        weights.append(np.prod([w for _, w in combo]))
    P = np.repeat(base[None, :], len(offsets), axis=0)
    for c, v in enumerate(active):
        P[:, v] += np.array([o[c] for o in offsets]) * hs[v]
    vals = np.asarray(f([P[:, i] for i in range(n)], [P[:, n + i] for i in range(n)]), dtype=float)
    scale = np.prod([hs[v] ** idx[v] for v in active])
    return float(np.dot(weights, vals) / scale)


def fd_partial(f, x, y, idx: Sequence[int], cfg: FDOracleConfig | None = None) -> float:
    """Finite-difference estimate of the mixed partial ``idx`` of ``f(xs, ys)``.

    ``f`` receives lists of coordinate arrays (one entry per stencil point).
    Steps are ``cfg.step(order) * max(1, |coordinate|)`` per variable.
    """
    cfg = cfg or FDOracleConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    idx = tuple(int(i) for i in idx)
    if len(idx) != 2 * len(x):
        raise ValueError(f"multi-index needs {2 * len(x)} entries")
    order = sum(idx)
    if order == 0:
        return float(np.asarray(f([np.array([v]) for v in x], [np.array([v]) for v in y])).ravel()[0])
    h = cfg.step(order)
    coords = np.concatenate([x, y])
    hs0 = h * np.maximum(1.0, np.abs(coords))
    table = [_difference(f, x, y, idx, hs0 / 2 ** m) for m in range(cfg.richardson_levels)]
    # Richardson: error expansion in even powers of h
    for lev in range(1, cfg.richardson_levels):
        fac = 4.0 ** lev
        table = [(fac * table[m + 1] - table[m]) / (fac - 1) for m in range(len(table) - 1)]
    return table[0]
