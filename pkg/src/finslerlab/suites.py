"""The four report-producing runs behind the command line: tensors, classify,
geodesic and verify."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .catalog import KNOWN_K, geodesic_start
from .core import c_reducible_part, mean_cartan_norm, randers_norm_bound
from .curvature import (CurvatureBundle, bridge_residual, curvature_bundle, flag_curvature, rfrak_contractions,
                        rfrak_y_residuals, scalar_flag_verify)
from .dsl import ChartSpec, ChartValidationError, validate_chart
from .fdoracle import fd_partial
from .geodesics import (integrate_geodesic, kinematic_residual, linear_law_check, parallel_transport,
                        trace_series)
from .report import Record, Report, check, not_applicable
from .sampling import SplitMix64, sample_points, unit_directions
from .spray import classify_arrays, metric_scale

DEFAULT_TOLERANCES = {
    "fundamental.identities": 1e-10,
    "torsion.identities": 1e-9,
    "randers.matsumoto": 1e-9,
    "randers.c_reducible": 1e-9,
    "randers.landsberg_form": 1e-9,
    "spray.compatibility": 1e-9,
    "spray.euler": 1e-9,
    "curvature.bridge": 1e-8,
    "curvature.rfrak_y_contractions": 1e-9,
    "curvature.flat_implies_rfrak_flat": 1e-10,
    "scalar_flag.detection": 1e-7,
    "scalar_flag.constant_K": 1e-6,
    "scalar_flag.h_curvature": 1e-6,
    "scalar_flag.rfrak_closed_form": 1e-6,
    "scalar_flag.rfrak_closed_form_contracted": 1e-6,
    "scalar_flag.ricci_symmetric": 1e-8,
    "scalar_flag.defect_identity": 1e-6,
    "scalar_flag.asymmetry_witness": 0.1,
    "scalar_flag.riemannian_symmetry": 1e-9,
    "berwald.chain": 1e-9,
    "randers.norm_bound": 1e-9,
    "geodesic.first_integral": 1e-8,
    "transport.g_invariance": 1e-8,
    "transport.berwald_isometry": 1e-8,
    "trace.kinematic": 1e-4,
    "trace.linear_law": 1e-7,
    "autodiff.oracle": 1e-5,
}


@dataclass
class RunConfig:
    chart: ChartSpec
    source: dict
    samples: int = 50
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    t_span: tuple = (0.0, 3.0)
    x0: np.ndarray | None = None
    y0: np.ndarray | None = None

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def describe(self) -> dict:
        return {"chart": self.source, "dimension": self.chart.n, "samples": self.samples, "seed": self.seed,
                "tolerance_overrides": dict(sorted(self.tolerances.items())), "t_span": list(self.t_span)}


def _witness(cb, k):
    return {"x": cb.x[k].tolist(), "y": cb.y[k].tolist()}


def _per(a):
    return np.abs(a).reshape(len(a), -1).max(axis=1)


def _rel_check(name, cb, err, ref, tol, anchor=None):
    per = _per(err) / (1 + _per(ref).max())
    k = int(np.argmax(per))
    return check(name, anchor or name, per[k], tol, _witness(cb, k))


def prepare(cfg: RunConfig):
    """Sample points, validate the chart on them (ChartValidationError on failure)."""
    xs, ys = sample_points(cfg.chart, cfg.samples, cfg.seed)
    rep = validate_chart(cfg.chart, xs)
    rep.raise_if_failed()
    return xs, ys, rep


def _flags(cfg: RunConfig, n: int, count: int) -> np.ndarray:
    rng = SplitMix64(cfg.seed ^ 0x5EED_F1A6)
    return unit_directions(n, count * 2 * n, rng).reshape(count, 2 * n, n)


# individual record groups ---------------------------------------------------------

def identity_records(cfg: RunConfig, cb: CurvatureBundle) -> list[Record]:
    out = []
    F2 = cb.F ** 2
    e1 = np.abs(np.einsum("bi,bij,bj->b", cb.y, cb.g, cb.y) - F2) / F2
    e2 = _per(np.einsum("bij,bj->bi", cb.h, cb.y)) / (1 + _per(cb.h))
    e3 = np.abs(np.einsum("bi,bi->b", cb.ell, cb.y) - cb.F) / cb.F
    per = np.maximum(np.maximum(e1, e2), e3)
    k = int(np.argmax(per))
    out.append(check("fundamental.identities", "fundamental.identities", per[k], cfg.tol("fundamental.identities"),
                     _witness(cb, k)))
    C = cb.C
    sym = np.maximum(_per(C - np.swapaxes(C, 1, 2)), _per(C - np.swapaxes(C, 1, 3)))
    tor = np.maximum(np.maximum(sym, _per(np.einsum("bijk,bk->bij", C, cb.y))), np.abs(np.einsum("bi,bi->b", cb.I, cb.y)))
    per = tor / (1 + _per(C).max())
    k = int(np.argmax(per))
    out.append(check("torsion.identities", "torsion.identities", per[k], cfg.tol("torsion.identities"), _witness(cb, k)))
    out.append(_rel_check("randers.matsumoto", cb, cb.M, cb.C, cfg.tol("randers.matsumoto")))
    out.append(_rel_check("randers.c_reducible", cb, cb.C - c_reducible_part(cb.I, cb.h), cb.C,
                          cfg.tol("randers.c_reducible")))
    out.append(_rel_check("randers.landsberg_form", cb, cb.L - c_reducible_part(cb.J, cb.h), cb.L,
                          cfg.tol("randers.landsberg_form")))
    gyy = np.einsum("bijk,bj,bk->bi", cb.gamma, cb.y, cb.y)
    out.append(_rel_check("spray.compatibility", cb, gyy - 2 * cb.G, cb.G, cfg.tol("spray.compatibility")))
    eul = np.maximum(_per(np.einsum("bij,bj->bi", cb.N, cb.y) - 2 * cb.G), _per(np.einsum("bijkl,bj->bikl", cb.B, cb.y)))
    per = eul / (1 + max(_per(cb.G).max(), _per(cb.B).max()))
    k = int(np.argmax(per))
    out.append(check("spray.euler", "spray.euler", per[k], cfg.tol("spray.euler"), _witness(cb, k)))
    per = bridge_residual(cb)
    k = int(np.argmax(per))
    out.append(check("curvature.bridge", "curvature.bridge", per[k], cfg.tol("curvature.bridge"), _witness(cb, k)))
    r0, ri = rfrak_y_residuals(cb)
    ref = 1 + np.abs(np.einsum("bj,bjk->bk", cb.y, cb.ricci)).max()
    per = np.maximum(r0, ri) / ref
    k = int(np.argmax(per))
    out.append(check("curvature.rfrak_y_contractions", "curvature.rfrak_y_contractions", per[k], cfg.tol("curvature.rfrak_y_contractions"), _witness(cb, k)))
    return out


def scalar_flag_records(cfg: RunConfig, cb: CurvatureBundle) -> tuple[list[Record], bool]:
    out = []
    scale = metric_scale(cb.g)
    flags = _flags(cfg, cb.n, len(cb.F))
    K = flag_curvature(cb, flags)
    spread = (K.max(axis=1) - K.min(axis=1)) / (1 + np.abs(K).max(axis=1))
    k = int(np.argmax(spread))
    det_tol = cfg.tol("scalar_flag.detection")
    scalar = bool(spread[k] <= det_tol)
    names = ["scalar_flag.constant_K", "scalar_flag.h_curvature", "scalar_flag.rfrak_closed_form",
             "scalar_flag.rfrak_closed_form_contracted", "scalar_flag.ricci_symmetric",
             "scalar_flag.defect_identity", "scalar_flag.asymmetry_witness", "scalar_flag.riemannian_symmetry"]
    if not scalar:
        out.append(not_applicable("scalar_flag.detection", "scalar_flag.detection",
                                  "flag curvature depends on the flag", spread=float(spread[k]),
                                  witness=_witness(cb, k)))
        out += [not_applicable(nm, nm, "chart is not of scalar flag curvature") for nm in names]
        return out, False
    out.append(check("scalar_flag.detection", "scalar_flag.detection", spread[k], det_tol, _witness(cb, k),
                     flags_per_sample=2 * cb.n))
    known = KNOWN_K.get(cfg.chart.name) if cfg.source.get("catalog") else None
    if known is None:
        out.append(not_applicable("scalar_flag.constant_K", "scalar_flag.constant_K", "no known constant K"))
    else:
        err = np.abs(K - known).max(axis=1)
        k = int(np.argmax(err))
        out.append(check("scalar_flag.constant_K", "scalar_flag.constant_K", err[k], cfg.tol("scalar_flag.constant_K"),
                         _witness(cb, k), expected=known))
    r = scalar_flag_verify(cfg.chart, None, None, flags, rel_tol=det_tol * 10, cb=cb)
    for nm, arr in [("scalar_flag.h_curvature", r.h3_residual),
                    ("scalar_flag.rfrak_closed_form", r.rfrak_residual_literal),
                    ("scalar_flag.rfrak_closed_form_contracted", r.rfrak_residual_contracted)]:
        k = int(np.argmax(arr))
        out.append(check(nm, nm, arr[k], cfg.tol(nm), _witness(cb, k)))
    k = int(np.argmax(r.ricci_asymmetry))
    out.append(check("scalar_flag.ricci_symmetric", "scalar_flag.ricci_symmetric", r.ricci_asymmetry[k] / scale,
                     cfg.tol("scalar_flag.ricci_symmetric"), _witness(cb, k), scale=scale))
    k = int(np.argmax(r.sfc_residual))
    out.append(check("scalar_flag.defect_identity", "scalar_flag.defect_identity", r.sfc_residual[k] / scale,
                     cfg.tol("scalar_flag.defect_identity"), _witness(cb, k), scale=scale))
    Imax = float(np.abs(cb.I).max())
    Kmin = float(np.abs(r.K).min())
    if Imax > 1e-8 and Kmin > 1e-6:
        frac = float(np.mean(r.defect > 1e-3 * scale))
        k = int(np.argmin(r.defect))
        out.append(check("scalar_flag.asymmetry_witness", "scalar_flag.asymmetry_witness", 1 - frac,
                         cfg.tol("scalar_flag.asymmetry_witness"), _witness(cb, k), fraction_above=frac,
                         threshold=1e-3 * scale, min_defect=float(r.defect[k])))
    else:
        out.append(not_applicable("scalar_flag.asymmetry_witness", "scalar_flag.asymmetry_witness",
                                  "needs I != 0 and K != 0", max_I=Imax, min_abs_K=Kmin))
    if Imax <= 1e-9:
        asym = _per(cb.rfrak - np.swapaxes(cb.rfrak, 1, 2)) / scale
        k = int(np.argmax(asym))
        out.append(check("scalar_flag.riemannian_symmetry", "scalar_flag.riemannian_symmetry", asym[k],
                         cfg.tol("scalar_flag.riemannian_symmetry"), _witness(cb, k)))
    else:
        out.append(not_applicable("scalar_flag.riemannian_symmetry", "scalar_flag.riemannian_symmetry",
                                  "chart is not Riemannian", max_I=Imax))
    return out, True


def berwald_record(cfg: RunConfig, cb: CurvatureBundle) -> Record:
    scale = metric_scale(cb.g)
    tol = cfg.tol("berwald.chain")
    B = _per(cb.B).max() / scale
    hh = _per(cb.hh_low)
    if B > tol:
        return not_applicable("berwald.chain", "berwald.chain", "chart is not Berwald", max_B=float(B))
    k = int(np.argmax(hh))
    if hh[k] / scale <= 1e-10:
        rf = _per(cb.rfrak).max() / scale
        return check("berwald.chain", "berwald.chain", max(B, rf), 1e-10, None, max_B=float(B),
                     max_hh=float(hh[k] / scale), max_rfrak=float(rf), r_flat=True)
    return check("berwald.chain", "berwald.chain", B, tol, _witness(cb, k), max_B=float(B),
                 max_hh=float(hh[k] / scale), r_flat=False, non_flat_witness=bool(hh[k] / scale >= 1e-2))


def classification(cfg: RunConfig, cb: CurvatureBundle, rel_tol: float = 1e-8) -> dict:
    data = {"g": cb.g, "C": cb.C, "B": cb.B, "L": cb.L, "J": cb.J}
    sc = classify_arrays(data, cb.x, cb.y, rel_tol)
    thr = sc.threshold
    hh = _per(cb.hh_low).max()
    rf = _per(cb.rfrak).max()
    r0, ri = rfrak_contractions(cb)
    rows = max(np.abs(r0).max(), np.abs(ri).max())
    K = flag_curvature(cb, _flags(cfg, cb.n, len(cb.F)))
    spread = (K.max(axis=1) - K.min(axis=1)) / (1 + np.abs(K).max(axis=1))
    flags = dict(sc.flags())
    flags.update(r_flat=bool(hh <= thr), rfrak_flat=bool(rf <= thr), rfrak_rows_flat=bool(rows <= thr),
                 scalar_flag=bool(spread.max() <= 1e-6))
    maxima = dict(sc.maxima)
    maxima.update(r_flat=float(hh), rfrak_flat=float(rf), rfrak_rows_flat=float(rows),
                  scalar_flag=float(spread.max()))
    return {"flags": flags, "maxima": maxima, "witnesses": sc.witnesses, "threshold": thr, "scale": sc.scale}


def geodesic_records(cfg: RunConfig, berwald: bool | None = None):
    chart = cfg.chart
    if cfg.x0 is not None and cfg.y0 is not None:
        x0, y0 = np.asarray(cfg.x0, float), np.asarray(cfg.y0, float)
    else:
        x0, y0 = geodesic_start(chart)
    path = integrate_geodesic(chart, x0, y0, cfg.t_span)
    n = chart.n
    V0 = np.vstack([np.roll(np.eye(n)[0], 1), np.ones(n)])
    frame = parallel_transport(chart, path, V0)
    trace = trace_series(chart, path, frame, 0)
    T = max(path.t[-1] - path.t[0], 1e-300)
    out = []
    info = {"x0": x0.tolist(), "y0": y0.tolist(), "exited": path.exited, "t_end": float(path.t[-1]),
            "steps": path.steps}
    out.append(check("geodesic.first_integral", "geodesic.first_integral", path.F_drift() / T,
                     cfg.tol("geodesic.first_integral"), None, **info))
    out.append(check("transport.g_invariance", "transport.g_invariance", float(frame.g_drift().max()) / T,
                     cfg.tol("transport.g_invariance"), None))
    if berwald:
        fv = float(np.max(np.abs(trace.FV - trace.FV[0])) / abs(trace.FV[0]))
        out.append(check("transport.berwald_isometry", "transport.berwald_isometry", fv,
                         cfg.tol("transport.berwald_isometry"), None))
    else:
        out.append(not_applicable("transport.berwald_isometry", "transport.berwald_isometry",
                                  "chart is not Berwald"))
    t0, t1 = path.t[0], path.t[-1]
    try:
        err, at = kinematic_residual(trace, (t0 + 0.2, t1 - 0.2))
        out.append(check("trace.kinematic", "trace.kinematic", err, cfg.tol("trace.kinematic"), None, t=at))
    except ValueError as exc:
        out.append(not_applicable("trace.kinematic", "trace.kinematic", str(exc)))
    lin = linear_law_check(trace, tol=1e-8, fit_tol=cfg.tol("trace.linear_law"))
    detail = {"j_spread": lin.j_spread, "slope": lin.slope, "intercept": lin.intercept}
    if lin.status == "not-applicable":
        out.append(not_applicable("trace.linear_law", "trace.linear_law", "J is not constant along the path",
                                  **detail))
    else:
        out.append(check("trace.linear_law", "trace.linear_law", max(lin.residual, lin.slope_error,
                                                                      lin.intercept_error),
                         cfg.tol("trace.linear_law"), None, **detail))
    return out, path, frame, trace


def norm_bound_records(cfg: RunConfig, xs) -> list[Record]:
    chart = cfg.chart
    n = chart.n
    pts = xs[: min(len(xs), 50)]
    est, bound = [], []
    for x in pts:
        est.append(mean_cartan_norm(chart, x).value)
        bound.append(randers_norm_bound(n, float(chart.beta_norm(x))))
    est, bound = np.array(est), np.array(bound)
    gap = est - bound
    k = int(np.argmax(gap))
    strict = (n + 1) / math.sqrt(2)
    w = {"x": pts[k].tolist()}
    return [
        check("randers.norm_bound", "randers.norm_bound", gap[k], cfg.tol("randers.norm_bound"), w,
              estimate=float(est[k]), bound=float(bound[k]), points=len(pts)),
        check("randers.norm_bound_strict", "randers.norm_bound_strict", float(est.max() - strict), 0.0,
              {"x": pts[int(np.argmax(est))].tolist()}, estimate=float(est.max()), bound=strict),
    ]


def chart_functions(chart: ChartSpec) -> dict:
    """Scalar functions of (xs, ys) built from the chart: F^2, alpha^2, beta, a_ij, b_i."""
    n = chart.n

    def parts(xs, ys):
        a, b = chart.coefficients(xs)
        al2 = sum(a[i][j] * ys[i] * ys[j] for i in range(n) for j in range(n))
        be = sum(b[i] * ys[i] for i in range(n))
        return al2, be

    def F2(xs, ys):
        al2, be = parts(xs, ys)
        F = jets.sqrt(al2) + be
        return F * F

    funcs = {"F^2": F2, "alpha^2": lambda xs, ys: parts(xs, ys)[0], "beta": lambda xs, ys: parts(xs, ys)[1]}
    for i in range(n):
        for j in range(i, n):
            funcs[f"a{i + 1}{j + 1}"] = (lambda i, j: lambda xs, ys: chart.coefficients(xs)[0][i][j] + 0 * ys[0])(i, j)
        funcs[f"b{i + 1}"] = (lambda i: lambda xs, ys: chart.coefficients(xs)[1][i] + 0 * ys[0])(i)
    return funcs


def oracle_probes(chart: ChartSpec, count: int, seed: int, max_order: int = 3):
    """Relative jet/FD discrepancies for ``count`` random probes.

    Each probe picks a chart function, a sample point and a multi-index of total
    order 1..max_order with x-order <= 2.
    """
    rng = SplitMix64(seed ^ 0x0AC1E)
    funcs = chart_functions(chart)
    keys = sorted(funcs)
    xs, ys = sample_points(chart, count, seed ^ 0x9B0BE)
    n = chart.n
    rows = []
    for p in range(count):
        key = keys[rng.next_u64() % len(keys)]
        order = 1 + rng.next_u64() % max_order
        idx = [0] * (2 * n)
        ox = 0
        for _ in range(order):
            v = int(rng.next_u64() % (2 * n))
            if v < n:
                if ox == 2:
                    v += n
                else:
                    ox += 1
            idx[v] += 1
        j = float(jets.mixed_partial(funcs[key], xs[p], ys[p], idx))
        d = fd_partial(funcs[key], xs[p], ys[p], idx)
        rows.append((abs(j - d) / (1 + abs(j)), key, idx, xs[p], ys[p], j, d))
    return rows


def oracle_record(cfg: RunConfig, count: int) -> Record:
    rows = oracle_probes(cfg.chart, count, cfg.seed)
    worst = max(rows, key=lambda r: r[0])
    return check("autodiff.oracle", "autodiff.oracle", worst[0], cfg.tol("autodiff.oracle"),
                 {"x": worst[3].tolist(), "y": worst[4].tolist()}, probes=count, function=worst[1],
                 index=list(worst[2]), jet=worst[5], fd=worst[6])


# the runs --------------------------------------------------------------------------

def _summary(cb: CurvatureBundle) -> list:
    rows = []
    for k in range(len(cb.F)):
        rows.append({
            "x": cb.x[k].tolist(), "y": cb.y[k].tolist(), "F": float(cb.F[k]),
            "max_abs": {name: float(np.abs(getattr(cb, name)[k]).max())
                        for name in ("C", "I", "M", "G", "B", "L", "J", "hh_low", "ricci", "h3", "rfrak")},
            "K_fit": float(cb.K_fit[k]),
        })
    return rows


def run_tensors(cfg: RunConfig) -> Report:
    xs, ys, val = prepare(cfg)
    cb = curvature_bundle(cfg.chart, xs, ys)
    rep = Report("tensors", cfg.describe())
    for r in identity_records(cfg, cb):
        rep.add(r)
    rep.data = {"validation": {"min_eigenvalue": val.min_eigenvalue, "max_beta_norm": val.max_beta_norm},
                "scale": metric_scale(cb.g), "samples": _summary(cb)}
    return rep


def run_classify(cfg: RunConfig) -> Report:
    xs, ys, _ = prepare(cfg)
    cb = curvature_bundle(cfg.chart, xs, ys)
    cls = classification(cfg, cb)
    f = cls["flags"]
    rep = Report("classify", cfg.describe())
    bad = f["landsberg"] and not f["berwald"]
    rep.add(Record("randers.landsberg_iff_berwald", "randers.landsberg_iff_berwald", "fail" if bad else "pass",
                   float(bad), 0.0))
    bad = f["r_flat"] and not f["rfrak_flat"]
    rep.add(Record("curvature.flat_implies_rfrak_flat", "curvature.flat_implies_rfrak_flat",
                   "fail" if bad else "pass", float(bad), 0.0))
    rep.data = cls
    return rep


def run_geodesic(cfg: RunConfig) -> tuple[Report, object]:
    xs, ys, _ = prepare(cfg)
    from .spray import classify_spray
    berwald = classify_spray(cfg.chart, xs, ys).berwald
    recs, path, frame, trace = geodesic_records(cfg, berwald)
    rep = Report("geodesic", cfg.describe())
    for r in recs:
        rep.add(r)
    rep.data = {"berwald": berwald, "exited": path.exited, "exit_message": path.message,
                "steps": path.steps, "F_drift": path.F_drift(), "g_drift": frame.g_drift().tolist()}
    return rep, trace


def run_verify(cfg: RunConfig) -> tuple[Report, object]:
    xs, ys, _ = prepare(cfg)
    cb = curvature_bundle(cfg.chart, xs, ys)
    rep = Report("verify", cfg.describe())
    for r in identity_records(cfg, cb):
        rep.add(r)
    recs, _ = scalar_flag_records(cfg, cb)
    for r in recs:
        rep.add(r)
    b = rep.add(berwald_record(cfg, cb))
    grecs, path, frame, trace = geodesic_records(cfg, berwald=b.status == "pass")
    for r in grecs:
        rep.add(r)
    for r in norm_bound_records(cfg, xs):
        rep.add(r)
    rep.add(oracle_record(cfg, min(500, 5 * cfg.samples)))
    rep.data = {"classification": classification(cfg, cb)["flags"], "scale": metric_scale(cb.g)}
    return rep, trace


__all__ = ["RunConfig", "DEFAULT_TOLERANCES", "run_tensors", "run_classify", "run_geodesic", "run_verify",
           "ChartValidationError", "oracle_probes", "chart_functions"]
