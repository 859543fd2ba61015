"""Cartan connection, hh-curvature, Ricci tensor, Riemann and flag curvature,
the modified Ricci tensor (``rfrak``) and the scalar-flag verifiers.

All index conventions are listed in :mod:`finslerlab.conventions`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .conventions import BRIDGE_SIGN
from .core import (ORDER_CURVATURE, ORDER_SPRAY, LocalJets, _contract_delta, _fundamental, _squeeze, _torsion, _val,
                   as_batch)
from .dsl import ChartSpec
from .spray import _berwald


class DegenerateFlag(ValueError):
    pass


class NotScalarFlag(ValueError):
    pass


@dataclass
class ConnectionData:
    gamma: np.ndarray  # Gamma^i_jk
    N: np.ndarray  # N^i_j


@dataclass
class CurvatureBundle:
    """All pointwise curvature data at a batch of (x, y)."""

    x: np.ndarray
    y: np.ndarray
    F: np.ndarray
    ell: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    h: np.ndarray
    y_low: np.ndarray
    C: np.ndarray
    I: np.ndarray
    I_up: np.ndarray
    M: np.ndarray
    G: np.ndarray
    N: np.ndarray
    B: np.ndarray
    L: np.ndarray
    J: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray  # Omega^m_kl
    hh: np.ndarray  # R_j^i_kl stored as [j, i, k, l]
    hh_low: np.ndarray  # R_ijkl = g_im R_j^m_kl
    riemann: np.ndarray  # R^i_k
    riemann_low: np.ndarray  # g_im R^m_k
    h3_up: np.ndarray  # R^i_jk
    h3: np.ndarray  # R_ijk
    ricci: np.ndarray  # R_ij
    K_fit: np.ndarray  # trace(R)/((n-1) F^2)
    K_fit_dy: np.ndarray  # dK_fit/dy^i
    rfrak: np.ndarray

    @property
    def n(self) -> int:
        return self.g.shape[-1]

    def take(self, k: int) -> "CurvatureBundle":
        return CurvatureBundle(**{f: v[k:k + 1] for f, v in vars(self).items()})


def rfrak_tensor(ricci, h3, I, I_up, ell, F, y):
    """R_ik - 1/(n+1) (I^m R_ikm + I^m R_mki + F^-1 l_i I^m R_m0k + I_i R_0k)."""
    n = ricci.shape[-1]
    t1 = np.einsum("bm,bikm->bik", I_up, h3)
    t2 = np.einsum("bm,bmki->bik", I_up, h3)
    R_m0k = np.einsum("bmjk,bj->bmk", h3, y)
    t3 = (ell / F[:, None])[:, :, None] * np.einsum("bm,bmk->bk", I_up, R_m0k)[:, None, :]
    R_0k = np.einsum("bj,bjk->bk", y, ricci)
    t4 = I[:, :, None] * R_0k[:, None, :]
    return ricci - (t1 + t2 + t3 + t4) / (n + 1)


def _bundle(chart: ChartSpec, x, y) -> CurvatureBundle:
    lj = LocalJets(chart, x, y, ORDER_CURVATURE)
    fd = _fundamental(lj)
    tor = _torsion(lj, fd)
    bl = _berwald(lj, fd)
    n = chart.n
    gam = lj.gamma
    dgam = gam.dx() - _contract_delta(gam.dy(), lj.N)  # [i, j, l, k] = delta_k Gamma^i_jl
    dN = lj.N.dx() - _contract_delta(lj.N.dy(), lj.N)  # [m, l, k] = delta_k N^m_l
    dgam, dN = _val(dgam), _val(dN)
    G_v = _val(gam)
    omega = np.swapaxes(dN, -1, -2) - dN  # [m, k, l]
    C_up = np.einsum("bia,bajm->bijm", fd.ginv, tor.C)
    # hh[j, i, k, l]
    hh = (np.einsum("bijlk->bjikl", dgam) - np.einsum("bijkl->bjikl", dgam)
          + np.einsum("bimk,bmjl->bjikl", G_v, G_v) - np.einsum("biml,bmjk->bjikl", G_v, G_v)
          + np.einsum("bijm,bmkl->bjikl", C_up, omega))
    hh_low = np.einsum("bim,bjmkl->bijkl", fd.g, hh)
    Rmap = lj.riemann_map
    Rv = _val(Rmap)
    Ry = _val(Rmap.dy())  # [i, k, j] = dR^i_k/dy^j
    h3_up = (np.swapaxes(Ry, -1, -2) - Ry) / 3.0  # [i, j, k]
    h3 = np.einsum("bim,bmjk->bijk", fd.g, h3_up)
    ricci = np.einsum("brm,bimjr->bij", fd.ginv, hh_low)
    Kj = _trace(Rmap) / (lj.E * float(n - 1))
    K_fit, K_dy = _val(Kj), _val(Kj.dy())
    rf = rfrak_tensor(ricci, h3, tor.I, tor.I_up, fd.ell, fd.F, lj.y)
    return CurvatureBundle(
        x=lj.x, y=lj.y, F=fd.F, ell=fd.ell, g=fd.g, ginv=fd.ginv, h=fd.h, y_low=fd.y_low,
        C=tor.C, I=tor.I, I_up=tor.I_up, M=tor.M, G=_val(lj.G), N=_val(lj.N), B=bl.B, L=bl.L, J=bl.J,
        gamma=G_v, omega=omega, hh=hh, hh_low=hh_low, riemann=Rv,
        riemann_low=np.einsum("bim,bmk->bik", fd.g, Rv), h3_up=h3_up, h3=h3, ricci=ricci,
        K_fit=K_fit, K_fit_dy=K_dy, rfrak=rf)


def _trace(R: jets.Jet) -> jets.Jet:
    n = R.shape[-1]
    out = R[:, 0, 0]
    for i in range(1, n):
        out = out + R[:, i, i]
    return out


def curvature_bundle(chart: ChartSpec, xs, ys, chunk: int = 16) -> CurvatureBundle:
    """Full curvature data at a batch of points, evaluated in chunks."""
    xs, ys, _ = as_batch(chart, xs, ys)
    parts = [_bundle(chart, xs[s:s + chunk], ys[s:s + chunk]) for s in range(0, len(xs), chunk)]
    if len(parts) == 1:
        return parts[0]
    return CurvatureBundle(**{f: np.concatenate([getattr(p, f) for p in parts]) for f in vars(parts[0])})


# individual operations ------------------------------------------------------------

def connection_data(chart: ChartSpec, x, y) -> ConnectionData:
    _, _, single = as_batch(chart, x, y)
    lj = LocalJets(chart, x, y, ORDER_SPRAY)
    return _squeeze(ConnectionData(_val(lj.gamma), _val(lj.N)), single)


@dataclass
class HHCurvature:
    R: np.ndarray  # R_j^i_kl as [j, i, k, l]
    R_low: np.ndarray  # R_ijkl
    omega: np.ndarray  # Omega^m_kl


def hh_curvature(chart: ChartSpec, x, y) -> HHCurvature:
    _, _, single = as_batch(chart, x, y)
    cb = curvature_bundle(chart, x, y)
    return _squeeze(HHCurvature(cb.hh, cb.hh_low, cb.omega), single)


@dataclass
class HCurv3:
    R: np.ndarray  # R_ijk
    R_up: np.ndarray  # R^i_jk
    R_i0k: np.ndarray


def hcurv3(chart: ChartSpec, x, y) -> HCurv3:
    _, _, single = as_batch(chart, x, y)
    cb = curvature_bundle(chart, x, y)
    return _squeeze(HCurv3(cb.h3, cb.h3_up, np.einsum("bijk,bj->bik", cb.h3, cb.y)), single)


@dataclass
class RicciData:
    R: np.ndarray
    R_0k: np.ndarray
    R_i0: np.ndarray
    R_00: np.ndarray


def ricci_data(cb: CurvatureBundle) -> RicciData:
    R0k = np.einsum("bj,bjk->bk", cb.y, cb.ricci)
    Ri0 = np.einsum("bij,bj->bi", cb.ricci, cb.y)
    return RicciData(cb.ricci, R0k, Ri0, np.einsum("bk,bk->b", R0k, cb.y))


def flag_curvature(cb: CurvatureBundle, u) -> np.ndarray:
    """K(span{y, u}, y) for flags ``u`` of shape (B, n) or (B, m, n)."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 2:
        u = u[:, None, :]
    gyy = cb.F ** 2
    guu = np.einsum("bmi,bij,bmj->bm", u, cb.g, u)
    gyu = np.einsum("bi,bmi->bm", cb.y_low, u)
    den = gyy[:, None] * guu - gyu ** 2
    if np.any(den <= 1e-14 * gyy[:, None] * guu):
        raise DegenerateFlag("flag vector is parallel to the flagpole")
    num = np.einsum("bmi,bik,bmk->bm", u, cb.riemann_low, u)
    return num / den


@dataclass
class FlagData:
    riemann: np.ndarray
    K: np.ndarray  # per flag
    K_fit: np.ndarray
    spread: np.ndarray
    scalar: np.ndarray  # per point: K independent of flag within tolerance


def riemann_flag(chart: ChartSpec, x, y, flags, rel_tol: float = 1e-6) -> FlagData:
    """Riemann map and flag curvature for flag vectors ``flags`` ((B, m, n) or (m, n))."""
    xb, yb, single = as_batch(chart, x, y)
    cb = curvature_bundle(chart, xb, yb)
    flags = np.asarray(flags, dtype=float)
    if flags.ndim == 2 and not single:
        flags = flags[:, None, :]
    flags = np.broadcast_to(flags, (len(xb),) + flags.shape[-2:]) if flags.ndim >= 2 else flags
    K = flag_curvature(cb, flags)
    spread = K.max(axis=1) - K.min(axis=1)
    scalar = spread <= rel_tol * (1 + np.abs(K).max(axis=1))
    return _squeeze(FlagData(cb.riemann, K, cb.K_fit, spread, scalar), single)


@dataclass
class RTensor:
    R: np.ndarray  # rfrak_ij
    R_0i: np.ndarray
    R_i0: np.ndarray
    defect: np.ndarray  # rfrak_ij - rfrak_ji


def rfrak_contractions(cb: CurvatureBundle):
    r0i = np.einsum("bi,bij->bj", cb.y, cb.rfrak)
    ri0 = np.einsum("bij,bj->bi", cb.rfrak, cb.y)
    return r0i, ri0


def r_tensor(chart: ChartSpec, x, y) -> RTensor:
    _, _, single = as_batch(chart, x, y)
    cb = curvature_bundle(chart, x, y)
    r0i, ri0 = rfrak_contractions(cb)
    return _squeeze(RTensor(cb.rfrak, r0i, ri0, cb.rfrak - np.swapaxes(cb.rfrak, -1, -2)), single)


# identities ----------------------------------------------------------------------

def bridge_residual(cb: CurvatureBundle) -> np.ndarray:
    """|g_im R^m_k - sign * R_ijkl y^j y^l| per point, relative to 1 + |R|."""
    dbl = np.einsum("bijkl,bj,bl->bik", cb.hh_low, cb.y, cb.y)
    err = np.abs(cb.riemann_low - BRIDGE_SIGN * dbl).reshape(len(cb.F), -1).max(axis=1)
    return err / (1 + np.abs(cb.riemann_low).reshape(len(cb.F), -1).max(axis=1))


def rfrak_y_residuals(cb: CurvatureBundle):
    """Contractions of rfrak against R_0i and R_i0 - (2 I^m R_m0i + I_i R_00)/(n+1)."""
    n = cb.n
    rd = ricci_data(cb)
    r0i, ri0 = rfrak_contractions(cb)
    R_m0i = np.einsum("bmji,bj->bmi", cb.h3, cb.y)
    rhs = rd.R_i0 - (2 * np.einsum("bm,bmi->bi", cb.I_up, R_m0i) + cb.I * rd.R_00[:, None]) / (n + 1)
    return np.abs(r0i - rd.R_0k).max(axis=1), np.abs(ri0 - rhs).max(axis=1)


def scalar_flag_h3(cb: CurvatureBundle, K, K_dy) -> np.ndarray:
    """(F^2/3)(K_,j h_ik - K_,k h_ij) + K (y_j h_ik - y_k h_ij) as [i, j, k]."""
    F2 = (cb.F ** 2)[:, None, None, None]
    t1 = K_dy[:, None, :, None] * cb.h[:, :, None, :] - K_dy[:, None, None, :] * cb.h[:, :, :, None]
    t2 = cb.y_low[:, None, :, None] * cb.h[:, :, None, :] - cb.y_low[:, None, None, :] * cb.h[:, :, :, None]
    return F2 / 3 * t1 + K[:, None, None, None] * t2


def scalar_flag_rfrak(cb: CurvatureBundle, K, K_dy, variant: str = "literal") -> np.ndarray:
    """Closed form of rfrak for a metric of scalar flag curvature.

    ``literal``: R_ij + F^2/(3(n+1)) (K h_ij + K_,i I_j + K_,j I_i) - I_i/3 (F^2 K_,j + 3 K y_j).
    ``contracted``: same with the ``K h_ij`` term replaced by ``(I^m K_,m) h_ij``, which is
    what substituting the scalar-flag h-curvature into the definition of rfrak yields.
    """
    n = cb.n
    F2 = (cb.F ** 2)[:, None, None]
    if variant == "literal":
        hcoef = K
    elif variant == "contracted":
        hcoef = np.einsum("bm,bm->b", cb.I_up, K_dy)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    sym = hcoef[:, None, None] * cb.h + K_dy[:, :, None] * cb.I[:, None, :] + K_dy[:, None, :] * cb.I[:, :, None]
    tail = cb.I[:, :, None] / 3 * ((cb.F ** 2)[:, None, None] * K_dy[:, None, :]
                                   + 3 * K[:, None, None] * cb.y_low[:, None, :])
    return cb.ricci + F2 / (3 * (n + 1)) * sym - tail


def _rel(err, ref):
    B = len(err)
    return np.abs(err).reshape(B, -1).max(axis=1) / (1 + np.abs(ref).reshape(B, -1).max(axis=1))


@dataclass
class ScalarFlagReport:
    K: np.ndarray
    K_spread: np.ndarray
    K_dy_max: np.ndarray
    h3_residual: np.ndarray  # scalar-flag h-curvature form, relative
    rfrak_residual_literal: np.ndarray
    rfrak_residual_contracted: np.ndarray
    sfc_residual: np.ndarray  # |rfrak_i0 - rfrak_0i + K F^2 I_i|
    defect: np.ndarray  # |rfrak_i0 - rfrak_0i|
    ricci_asymmetry: np.ndarray
    scale: float


def scalar_flag_verify(chart: ChartSpec, xs, ys, flags, rel_tol: float = 1e-6,
                       cb: CurvatureBundle | None = None) -> ScalarFlagReport:
    """Residuals of the scalar-flag identities at each sample.

    Refuses (``NotScalarFlag``) unless the flag curvature is independent of
    the flag vector at every sample within ``rel_tol``.
    """
    cb = cb if cb is not None else curvature_bundle(chart, xs, ys)
    K_flags = flag_curvature(cb, flags)
    spread = K_flags.max(axis=1) - K_flags.min(axis=1)
    if np.any(spread > rel_tol * (1 + np.abs(K_flags).max(axis=1))):
        k = int(np.argmax(spread))
        raise NotScalarFlag(f"flag curvature varies by {spread[k]:.3g} at sample {k}")
    K, K_dy = cb.K_fit, cb.K_fit_dy
    h3_model = scalar_flag_h3(cb, K, K_dy)
    lit = scalar_flag_rfrak(cb, K, K_dy, "literal")
    con = scalar_flag_rfrak(cb, K, K_dy, "contracted")
    r0i, ri0 = rfrak_contractions(cb)
    sfc = ri0 - r0i + (K * cb.F ** 2)[:, None] * cb.I
    ric_asym = cb.ricci - np.swapaxes(cb.ricci, -1, -2)
    scale = 1.0 + float(np.max(np.abs(cb.g)))
    return ScalarFlagReport(
        K=K, K_spread=spread, K_dy_max=np.abs(K_dy).max(axis=1),
        h3_residual=_rel(cb.h3 - h3_model, cb.h3),
        rfrak_residual_literal=_rel(cb.rfrak - lit, cb.rfrak),
        rfrak_residual_contracted=_rel(cb.rfrak - con, cb.rfrak),
        sfc_residual=np.abs(sfc).max(axis=1), defect=np.abs(ri0 - r0i).max(axis=1),
        ricci_asymmetry=np.abs(ric_asym).reshape(len(K), -1).max(axis=1), scale=scale)
