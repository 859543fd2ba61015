"""Pointwise Finsler data: F, l, g, h, Cartan torsion C, mean torsion I, Matsumoto M.

Everything downstream (spray, Berwald, Cartan curvature) is derived from one
truncated Taylor expansion of F^2 around the base point, held by
:class:`LocalJets`.  Derived objects that still need to be differentiated
are kept as jets; final tensors are plain ``numpy`` arrays whose leading axis
is the batch of sample points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets
from .dsl import ChartSpec
from .jets import Jet, OrderExceeded

# jet orders (x, y) needed by each family of quantities
ORDER_METRIC = (0, 2)
ORDER_TORSION = (0, 3)
ORDER_SPRAY = (1, 3)
ORDER_BERWALD = (1, 5)
ORDER_CURVATURE = (2, 5)


def _val(j: Jet) -> np.ndarray:
    if j.valid[0] < 0 or j.valid[1] < 0:
        raise OrderExceeded(f"jet of valid order {j.valid} has no reliable value")
    return j.value


def as_batch(chart: ChartSpec, x, y):
    """Normalise x, y to (B, n) arrays; returns (x, y, was_single)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    single = x.ndim == 1 and y.ndim == 1
    x, y = np.atleast_2d(x), np.atleast_2d(y)
    x, y = np.broadcast_arrays(x, y)
    if x.shape[-1] != chart.n:
        raise ValueError(f"points must have {chart.n} coordinates")
    if np.any(np.linalg.norm(y, axis=-1) == 0):
        raise ValueError("tangent vector y must be non-zero")
    return np.ascontiguousarray(x), np.ascontiguousarray(y), single


class LocalJets:
    """Jets of F^2 and derived objects at a batch of points (x, y)."""

    def __init__(self, chart: ChartSpec, x, y, order=ORDER_CURVATURE):
        x, y, _ = as_batch(chart, x, y)
        chart.check_domain(x)
        self.chart, self.x, self.y = chart, x, y
        self.n = chart.n
        self.space = jets.jet_space(chart.n, *order)
        self.xs, self.ys = jets.variables(self.space, x, y)

    # metric ------------------------------------------------------------------
    @cached_property
    def F(self) -> Jet:
        a, b = self.chart.coefficients(self.xs)
        n = self.n
        alpha2 = 0.0
        for i in range(n):
            for j in range(n):
                alpha2 = alpha2 + a[i][j] * (self.ys[i] * self.ys[j])
        beta = 0.0
        for i in range(n):
            beta = beta + b[i] * self.ys[i]
        if not isinstance(alpha2, Jet) or np.any(alpha2.value <= 0):
            raise jets.DomainError("alpha^2 is not positive; a(x) is not positive definite here")
        F = jets.sqrt(alpha2) + beta
        if np.any(F.value <= 0):
            raise jets.DomainError("F is not positive; ||beta|| >= 1 at this point")
        return F

    @cached_property
    def E(self) -> Jet:
        return self.F * self.F

    @cached_property
    def Y(self) -> Jet:
        return jets.stack(self.ys, axis=-1)

    @cached_property
    def g(self) -> Jet:
        return self.E.dy().dy() * 0.5

    @cached_property
    def ginv(self) -> Jet:
        return jets.inv(self.g)

    @cached_property
    def C(self) -> Jet:
        return self.g.dy() * 0.5

    # spray --------------------------------------------------------------------
    @cached_property
    def G(self) -> Jet:
        Ex = self.E.dx()
        W = jets.einsum("...kl,...k->...l", Ex.dy(), self.Y)
        return jets.einsum("...il,...l->...i", self.ginv, W - Ex) * 0.25

    @cached_property
    def N(self) -> Jet:
        return self.G.dy()

    def delta(self, T: Jet) -> Jet:
        """Horizontal derivative d/dx^j - N^m_j d/dy^m, appended as last axis."""
        return T.dx() - _contract_delta(T.dy(), self.N)

    @cached_property
    def gamma(self) -> Jet:
        """Horizontal Cartan coefficients Gamma^i_jk (symmetric in j, k)."""
        dg = self.delta(self.g)  # dg[s, k, j] = delta_j g_sk
        low = (dg + dg.transpose(0, 2, 3, 1) - dg.transpose(0, 3, 1, 2)) * 0.5
        # low[s, k, j] = 1/2 (delta_j g_sk + delta_k g_js - delta_s g_jk)
        return jets.einsum("...is,...skj->...ijk", self.ginv, low)

    @cached_property
    def riemann_map(self) -> Jet:
        G, N = self.G, self.N
        Gx = G.dx()
        Gxy = Gx.dy()  # [i, j(x), k(y)]
        Gyy = N.dy()
        R = Gx * 2.0 - jets.einsum("...ijk,...j->...ik", Gxy, self.Y)
        R = R + jets.einsum("...j,...ijk->...ik", G, Gyy) * 2.0
        return R - jets.einsum("...ij,...jk->...ik", N, N)


def _contract_delta(Ty: Jet, N: Jet) -> Jet:
    # Ty[b, ..., m] with N[b, m, j] -> [b, ..., j]
    letters = "acdefgh"[: Ty.coef.ndim - 3]
    return jets.einsum(f"z{letters}m,zmj->z{letters}j", Ty, N)


# public data types -------------------------------------------------------------

@dataclass
class FundamentalData:
    F: np.ndarray
    ell: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    h: np.ndarray
    y_low: np.ndarray


@dataclass
class TorsionData:
    C: np.ndarray
    I: np.ndarray
    I_up: np.ndarray
    M: np.ndarray


def _squeeze(obj, single):
    if not single:
        return obj
    for k, v in vars(obj).items():
        if isinstance(v, np.ndarray) and v.ndim >= 1 and v.shape[0] == 1:
            setattr(obj, k, v[0])
    return obj


def _fundamental(lj: LocalJets) -> FundamentalData:
    F = _val(lj.F)
    ell = _val(lj.F.dy())
    g = _val(lj.g)
    ginv = np.linalg.inv(g)
    h = g - ell[:, :, None] * ell[:, None, :]
    y_low = np.einsum("bij,bj->bi", g, lj.y)
    return FundamentalData(F, ell, g, ginv, h, y_low)


def c_reducible_part(I, h):
    """1/(n+1) (I_i h_jk + I_j h_ik + I_k h_ij); also used for L from J."""
    n = I.shape[-1]
    sym = I[..., :, None, None] * h[..., None, :, :] + I[..., None, :, None] * h[..., :, None, :] \
        + I[..., None, None, :] * h[..., :, :, None]
    return sym / (n + 1)


def matsumoto(C, I, h):
    return C - c_reducible_part(I, h)


def _torsion(lj: LocalJets, fd: FundamentalData) -> TorsionData:
    C = _val(lj.C)
    I = np.einsum("bjk,bijk->bi", fd.ginv, C)
    I_up = np.einsum("bij,bj->bi", fd.ginv, I)
    return TorsionData(C, I, I_up, matsumoto(C, I, fd.h))


def fundamental_data(chart: ChartSpec, x, y) -> FundamentalData:
    """F, l_i, g_ij, g^ij, h_ij and y_i at (x, y) (single point or batch)."""
    _, _, single = as_batch(chart, x, y)
    lj = LocalJets(chart, x, y, ORDER_METRIC)
    fd = _fundamental(lj)
    _check_pd(fd.g)
    return _squeeze(fd, single)


def torsion_data(chart: ChartSpec, x, y) -> TorsionData:
    """Cartan torsion, mean Cartan torsion (lower and raised) and Matsumoto torsion."""
    _, _, single = as_batch(chart, x, y)
    lj = LocalJets(chart, x, y, ORDER_TORSION)
    fd = _fundamental(lj)
    _check_pd(fd.g)
    return _squeeze(_torsion(lj, fd), single)


class SingularMetric(ValueError):
    pass


def _check_pd(g):
    eig = np.linalg.eigvalsh(g)
    if np.any(eig <= 0):
        raise SingularMetric("fundamental tensor is not positive definite; chart invalid here")


# mean Cartan norm ---------------------------------------------------------------

def _sphere_points(n: int, m: int) -> np.ndarray:
    """m roughly even directions on S^(n-1) (Fibonacci lattice for n = 3)."""
    if n == 2:
        th = 2 * np.pi * (np.arange(m) + 0.5) / m
        return np.stack([np.cos(th), np.sin(th)], -1)
    if n == 3:
        k = np.arange(m) + 0.5
        z = 1 - 2 * k / m
        phi = np.pi * (1 + 5 ** 0.5) * k
        r = np.sqrt(1 - z * z)
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], -1)
    from .sampling import SplitMix64
    rng = SplitMix64(12345)
    v = np.array([[rng.normal() for _ in range(n)] for _ in range(m)])
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _to_angles(v):
    v = v / np.linalg.norm(v)
    ang = []
    for i in range(len(v) - 2):
        ang.append(math.atan2(np.linalg.norm(v[i + 1:]), v[i]))
    ang.append(math.atan2(v[-1], v[-2]))
    return np.array(ang)


def _from_angles(ang):
    n = len(ang) + 1
    v = np.ones(n)
    for i, a in enumerate(ang):
        v[i] *= math.cos(a)
        v[i + 1:] *= math.sin(a)
    return v


@dataclass
class NormEstimate:
    value: float
    argmax: np.ndarray
    evaluations: int
    resolution: float


def cartan_norm_at(chart: ChartSpec, x, ys) -> np.ndarray:
    """sqrt(I_i g^ij I_j) on the indicatrix for directions ``ys`` at one point x."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    xb = np.broadcast_to(np.asarray(x, dtype=float), ys.shape)
    Fv = chart.finsler(xb, ys)
    ys = ys / Fv[:, None]
    t = torsion_data(chart, xb, ys)
    return np.sqrt(np.maximum(np.einsum("bi,bi->b", t.I, t.I_up), 0.0))


def mean_cartan_norm(chart: ChartSpec, x, budget: int | None = None, rounds: int = 3, best: int = 5) -> NormEstimate:
    """Lower estimate of sup over the indicatrix of the g-norm of I.

    Coarse sampling of 64 n directions, then ``rounds`` sweeps of golden-section
    search along each spherical angle around the ``best`` candidates (all
    candidates advance together as one batch).  The returned value is attained
    at ``argmax``, so it never overestimates.
    """
    x = np.asarray(x, dtype=float)
    n = chart.n
    m = 64 * n
    iters = 18
    per_sweep = best * (iters + 2)
    budget = budget if budget is not None else m + rounds * (n - 1) * per_sweep
    dirs = _sphere_points(n, m)
    vals = cartan_norm_at(chart, x, dirs)
    evals = m
    order = np.argsort(-vals)[:best]
    ang = np.array([_to_angles(dirs[k]) for k in order])
    cur = vals[order].copy()
    width = np.pi / (m ** (1.0 / (n - 1)))
    invphi = (5 ** 0.5 - 1) / 2

    def f(A):
        return cartan_norm_at(chart, x, np.array([_from_angles(a) for a in A]))

    w = width
    for _ in range(rounds):
        for c in range(n - 1):
            if evals + per_sweep > budget:
                break
            lo, hi = ang[:, c] - w, ang[:, c] + w
            p, q = ang.copy(), ang.copy()
            p[:, c] = hi - invphi * (hi - lo)
            q[:, c] = lo + invphi * (hi - lo)
            fp, fq = f(p), f(q)
            evals += 2 * len(ang)
            for _ in range(iters):
                left = fp > fq  # maximum lies in [lo, q]
                hi = np.where(left, q[:, c], hi)
                lo = np.where(left, lo, p[:, c])
                newp = np.where(left, hi - invphi * (hi - lo), q[:, c])
                newq = np.where(left, p[:, c], lo + invphi * (hi - lo))
                p[:, c], q[:, c] = newp, newq
                fnew = f(np.where(left[:, None], p, q))
                evals += len(ang)
                fp, fq = np.where(left, fnew, fq), np.where(left, fp, fnew)
            cand = np.where((fp > fq)[:, None], p, q)
            fc = np.maximum(fp, fq)
            better = fc > cur
            ang[better], cur[better] = cand[better], fc[better]
        w *= 0.5
    k = int(np.argmax(cur))
    best_dir = _from_angles(ang[k])
    return NormEstimate(float(cur[k]), best_dir / chart.finsler(x, best_dir), evals, width)


def randers_norm_bound(n: int, beta_norm: float) -> float:
    """(n+1)/2 sqrt(1 - sqrt(1 - b^2)), the Randers upper bound for ||I||."""
    return (n + 1) / 2 * math.sqrt(1 - math.sqrt(1 - beta_norm ** 2))
