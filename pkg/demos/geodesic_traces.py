"""I(t) and J(t) along geodesics with a parallel vector field.

On a Berwald chart J vanishes and I stays constant; on the Funk ball I
drifts with slope J(t).

Run: python3 demos/geodesic_traces.py
"""
import numpy as np

import finslerlab.catalog as cat
from finslerlab.catalog import geodesic_start
from finslerlab.geodesics import (integrate_geodesic, kinematic_residual, linear_law_check, parallel_transport,
                                  trace_series)

for chart in (cat.parallel_beta_product(3), cat.funk_ball(2)):
    x0, y0 = geodesic_start(chart)
    path = integrate_geodesic(chart, x0, y0, (0.0, 3.0))
    V0 = np.ones(chart.n)
    frame = parallel_transport(chart, path, [V0])
    tr = trace_series(chart, path, frame)
    err, _ = kinematic_residual(tr)
    lin = linear_law_check(tr)
    print(chart.name)
    print(f"  F drift {path.F_drift():.1e}   g(V,V) drift {frame.g_drift().max():.1e}")
    for k in range(0, len(tr.t), 60):
        print(f"  t={tr.t[k]:4.2f}  I={tr.I[k]:+.6f}  J={tr.J[k]:+.6f}  F(V)={tr.FV[k]:.6f}")
    print(f"  |dI/dt - J| {err:.1e}   linear law: {lin.status}")
