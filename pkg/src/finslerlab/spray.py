"""Spray coefficients, Berwald and Landsberg curvature, and the spray classifier."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (ORDER_BERWALD, ORDER_SPRAY, LocalJets, _fundamental, _squeeze, _torsion, _val, as_batch,
                   c_reducible_part)
from .dsl import ChartSpec


@dataclass
class SprayData:
    G: np.ndarray  # G^i
    N: np.ndarray  # N^i_j = dG^i/dy^j


@dataclass
class BerwaldLandsbergData:
    B: np.ndarray  # B^i_jkl
    L: np.ndarray  # L_ijk
    J: np.ndarray  # J_i


def spray_data(chart: ChartSpec, x, y) -> SprayData:
    """G^i = 1/4 g^il ([F^2]_{x^k y^l} y^k - [F^2]_{x^l}) and its y-gradient."""
    _, _, single = as_batch(chart, x, y)
    lj = LocalJets(chart, x, y, ORDER_SPRAY)
    return _squeeze(SprayData(_val(lj.G), _val(lj.N)), single)


def _berwald(lj: LocalJets, fd) -> BerwaldLandsbergData:
    B = _val(lj.N.dy().dy())
    # Landsberg from the spray: L_ijk = -1/2 y_m B^m_ijk
    L = -0.5 * np.einsum("bm,bmijk->bijk", fd.y_low, B)
    J = np.einsum("bjk,bijk->bi", fd.ginv, L)
    return BerwaldLandsbergData(B, L, J)


def berwald_landsberg(chart: ChartSpec, x, y) -> BerwaldLandsbergData:
    _, _, single = as_batch(chart, x, y)
    lj = LocalJets(chart, x, y, ORDER_BERWALD)
    return _squeeze(_berwald(lj, _fundamental(lj)), single)


def landsberg_from_mean(J, h):
    """Landsberg tensor rebuilt from J as for a C-reducible metric."""
    return c_reducible_part(J, h)


@dataclass
class SprayClassification:
    riemannian: bool
    berwald: bool
    landsberg: bool
    weak_landsberg: bool
    maxima: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    threshold: float = 0.0
    scale: float = 1.0

    def flags(self) -> dict:
        return {k: getattr(self, k) for k in ("riemannian", "berwald", "landsberg", "weak_landsberg")}


def metric_scale(g) -> float:
    """Magnitude reference for zero tests: 1 + max |g_ij| over the samples."""
    return 1.0 + float(np.max(np.abs(g)))


def evaluate_spray_family(chart: ChartSpec, xs, ys, chunk: int = 32):
    """C, I, B, L, J, g at many points; returns a dict of stacked arrays."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    parts = []
    for s in range(0, len(xs), chunk):
        lj = LocalJets(chart, xs[s:s + chunk], ys[s:s + chunk], ORDER_BERWALD)
        fd = _fundamental(lj)
        t = _torsion(lj, fd)
        bl = _berwald(lj, fd)
        parts.append(dict(g=fd.g, h=fd.h, C=t.C, I=t.I, M=t.M, B=bl.B, L=bl.L, J=bl.J))
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def classify_spray(chart: ChartSpec, xs, ys, rel_tol: float = 1e-8) -> SprayClassification:
    """Riemannian / Berwald / Landsberg / weakly Landsberg flags over a sample set.

    A flag holds when the tensor's largest magnitude over all samples is at
    most ``rel_tol * scale``; the argmax sample is reported as witness.
    """
    return classify_arrays(evaluate_spray_family(chart, xs, ys), xs, ys, rel_tol)


def classify_arrays(data: dict, xs, ys, rel_tol: float = 1e-8) -> SprayClassification:
    """Classification from precomputed g, C, B, L, J arrays (leading sample axis)."""
    scale = metric_scale(data["g"])
    thr = rel_tol * scale
    names = {"riemannian": "C", "berwald": "B", "landsberg": "L", "weak_landsberg": "J"}
    maxima, witnesses, flags = {}, {}, {}
    xs = np.atleast_2d(xs)
    ys = np.atleast_2d(ys)
    for flag, key in names.items():
        per = np.abs(data[key]).reshape(len(data[key]), -1).max(axis=1)
        k = int(np.argmax(per))
        maxima[flag] = float(per[k])
        witnesses[flag] = {"x": xs[k].tolist(), "y": ys[k].tolist()}
        flags[flag] = bool(per[k] <= thr)
    return SprayClassification(**flags, maxima=maxima, witnesses=witnesses, threshold=thr, scale=scale)
