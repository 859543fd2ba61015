"""Geodesics, Cartan-horizontal parallel transport and the traces of I and J
along them.

The geodesic x'' + 2 G(x, x') = 0 and the transport equation
V' + Gamma(x, x') V x' = 0 are integrated together as one first-order system
with an adaptive Runge-Kutta 4(5) pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .core import ORDER_BERWALD, ORDER_SPRAY, LocalJets, _fundamental, _torsion, _val
from .dsl import ChartSpec
from .jets import DomainError
from .spray import _berwald

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


@dataclass
class GeodesicPath:
    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    F: np.ndarray  # F(x(t), x'(t)) at the samples
    steps: int
    nfev: int
    exited: bool = False
    exit_time: float | None = None
    message: str = ""
    sol: object = field(default=None, repr=False)  # dense output of the full state
    V: np.ndarray | None = field(default=None, repr=False)  # transported vectors, (T, m, n)

    def F_drift(self) -> float:
        """max |F(t) - F(0)| / F(0)."""
        return float(np.max(np.abs(self.F - self.F[0])) / self.F[0])


@dataclass
class TransportedFrame:
    t: np.ndarray
    V: np.ndarray  # (T, m, n)
    gVV: np.ndarray  # g_{x'}(V_a, V_a), (T, m)
    path: GeodesicPath = field(repr=False)

    def g_drift(self) -> np.ndarray:
        """Relative drift of g(V, V) per transported vector."""
        return np.max(np.abs(self.gVV - self.gVV[:1]), axis=0) / np.abs(self.gVV[0])


class _Exit(Exception):
    pass


def _rhs_factory(chart: ChartSpec, n: int, m: int):
    def rhs(t, s):
        x, v = s[:n], s[n:2 * n]
        if not chart.domain.contains(x):
            raise _Exit(t)
        try:
            lj = LocalJets(chart, x[None], v[None], ORDER_SPRAY)
            G = _val(lj.G)[0]
            out = np.empty_like(s)
            out[:n] = v
            out[n:2 * n] = -2.0 * G
            if m:
                gam = _val(lj.gamma)[0]
                Vs = s[2 * n:].reshape(m, n)
                out[2 * n:] = -np.einsum("ijk,aj,k->ai", gam, Vs, v).ravel()
        except DomainError:
            raise _Exit(t)
        return out
    return rhs


def _integrate(chart: ChartSpec, x0, y0, t_span, V0=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
               samples: int = 301, unit_speed: bool = False, margin: float = 1e-6) -> GeodesicPath:
    n = chart.n
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if x0.shape != (n,) or y0.shape != (n,):
        raise ValueError(f"x0 and y0 must have {n} components")
    if not np.any(y0):
        raise ValueError("initial velocity must be nonzero")
    chart.check_domain(x0)
    if unit_speed:
        y0 = y0 / chart.finsler(x0, y0)
    V0 = np.zeros((0, n)) if V0 is None else np.atleast_2d(np.asarray(V0, dtype=float))
    m = len(V0)
    s0 = np.concatenate([x0, y0, V0.ravel()])

    def leave(t, s):
        return chart.domain.margin(s[:n]) - margin
    leave.terminal = True
    leave.direction = -1

    rhs = _rhs_factory(chart, n, m)
    t0, t1 = map(float, t_span)
    exited, message, exit_time = False, "", None
    try:
        sol = solve_ivp(rhs, (t0, t1), s0, method="RK45", rtol=rtol, atol=atol, dense_output=True,
                        events=leave)
        if sol.status == 1:
            exited, exit_time = True, float(sol.t_events[0][0])
            message = f"left the chart domain at t = {exit_time:.6g}"
        elif sol.status < 0:
            raise RuntimeError(sol.message)
        t_end = float(sol.t[-1])
    except _Exit as exc:
        # a trial stage stepped outside; retry up to the last safe time
        t_bad = float(exc.args[0])
        tight = t0 + 0.98 * (t_bad - t0)
        sol = solve_ivp(rhs, (t0, tight), s0, method="RK45", rtol=rtol, atol=atol, dense_output=True,
                        max_step=(tight - t0) / 200)
        exited, exit_time, t_end = True, float(sol.t[-1]), float(sol.t[-1])
        message = f"left the chart domain near t = {t_bad:.6g}"
    ts = np.linspace(t0, t_end, samples)
    S = sol.sol(ts).T
    S[0] = s0
    x, xd = S[:, :n], S[:, n:2 * n]
    V = S[:, 2 * n:].reshape(len(ts), m, n) if m else None
    F = chart.finsler(x, xd)
    return GeodesicPath(ts, x, xd, F, steps=len(sol.t) - 1, nfev=int(sol.nfev), exited=exited,
                        exit_time=exit_time, message=message, sol=sol, V=V)


def integrate_geodesic(chart: ChartSpec, x0, y0, t_span=(0.0, 3.0), tol: float = DEFAULT_RTOL,
                       samples: int = 301, unit_speed: bool = False) -> GeodesicPath:
    """Solve x'' + 2 G(x, x') = 0 from (x0, y0).

    Leaving the chart domain ends the path early with ``exited`` set rather
    than raising.
    """
    return _integrate(chart, x0, y0, t_span, None, rtol=tol, atol=tol * 1e-2, samples=samples,
                      unit_speed=unit_speed)


def _g_along(chart: ChartSpec, x, xd, V):
    lj = LocalJets(chart, x, xd, (0, 2))
    g = _fundamental(lj).g
    return np.einsum("tai,tij,taj->ta", V, g, V)


def parallel_transport(chart: ChartSpec, path: GeodesicPath, V0, tol: float = DEFAULT_RTOL) -> TransportedFrame:
    """Transport the rows of ``V0`` along ``path`` with the Cartan horizontal connection.

    The geodesic is integrated again jointly with the vectors so both share
    one step sequence.
    """
    V0 = np.atleast_2d(np.asarray(V0, dtype=float))
    t_span = (path.t[0], path.t[-1])
    aug = _integrate(chart, path.x[0], path.xdot[0], t_span, V0, rtol=tol, atol=tol * 1e-2,
                     samples=len(path.t))
    gVV = _g_along(chart, aug.x, aug.xdot, aug.V)
    return TransportedFrame(aug.t, aug.V, gVV, aug)


@dataclass
class TraceSeries:
    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    V: np.ndarray  # (T, n)
    I: np.ndarray  # I_{x'}(V)
    J: np.ndarray  # J_{x'}(V)
    gVV: np.ndarray
    FV: np.ndarray


def trace_series(chart: ChartSpec, path: GeodesicPath, frame: TransportedFrame, k: int = 0,
                 chunk: int = 64) -> TraceSeries:
    """I(t) = I_i(c, c') V^i, J(t) = J_i(c, c') V^i, g(V, V) and F(V) along the path."""
    x, xd, V = frame.path.x, frame.path.xdot, frame.V[:, k]
    Is, Js, gs = [], [], []
    for s in range(0, len(x), chunk):
        lj = LocalJets(chart, x[s:s + chunk], xd[s:s + chunk], ORDER_BERWALD)
        fd = _fundamental(lj)
        Is.append(_torsion(lj, fd).I)
        Js.append(_berwald(lj, fd).J)
        gs.append(fd.g)
    I, J, g = np.concatenate(Is), np.concatenate(Js), np.concatenate(gs)
    return TraceSeries(
        t=frame.t, x=x, xdot=xd, V=V,
        I=np.einsum("ti,ti->t", I, V), J=np.einsum("ti,ti->t", J, V),
        gVV=np.einsum("ti,tij,tj->t", V, g, V), FV=chart.finsler(x, V))


def kinematic_residual(trace: TraceSeries, window=(0.2, 2.8)) -> tuple[float, float]:
    """Worst |dI/dt - J| / (1 + |J|) with dI/dt by central differences, and its time."""
    t, I, J = trace.t, trace.I, trace.J
    dI = (I[2:] - I[:-2]) / (t[2:] - t[:-2])
    tc, Jc = t[1:-1], J[1:-1]
    sel = (tc >= window[0]) & (tc <= window[1])
    if not np.any(sel):
        raise ValueError("no interior samples inside the window")
    err = np.abs(dI[sel] - Jc[sel]) / (1 + np.abs(Jc[sel]))
    k = int(np.argmax(err))
    return float(err[k]), float(tc[sel][k])


@dataclass
class LinearLawReport:
    applicable: bool
    j_spread: float
    slope: float
    intercept: float
    slope_error: float  # |slope - J(0)|
    intercept_error: float  # |intercept - I(0)|
    residual: float  # max |I(t) - fit|
    status: str  # pass | fail | not-applicable


def linear_law_check(trace: TraceSeries, tol: float = 1e-8, fit_tol: float = 1e-7) -> LinearLawReport:
    """Least-squares line through I(t), checked against I(t) = t J(0) + I(0).

    The law presupposes J constant along the path; when the measured spread
    of J exceeds ``tol`` the check is reported as not applicable.
    """
    t, I, J = trace.t, trace.I, trace.J
    spread = float(np.max(np.abs(J - J[0])))
    A = np.stack([t - t[0], np.ones_like(t)], -1)
    (slope, intercept), *_ = np.linalg.lstsq(A, I, rcond=None)
    resid = float(np.max(np.abs(A @ np.array([slope, intercept]) - I)))
    se, ie = abs(slope - J[0]), abs(intercept - I[0])
    applicable = spread <= tol
    if not applicable:
        status = "not-applicable"
    else:
        status = "pass" if max(resid, se, ie) <= fit_tol else "fail"
    return LinearLawReport(applicable, spread, float(slope), float(intercept), float(se), float(ie), resid, status)
