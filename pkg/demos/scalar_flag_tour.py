"""Tour of the scalar flag curvature identities on the Funk ball.

Run: python3 demos/scalar_flag_tour.py
"""
import numpy as np

import finslerlab.catalog as cat
from finslerlab.curvature import curvature_bundle, flag_curvature, rfrak_contractions, scalar_flag_verify
from finslerlab.sampling import SplitMix64, sample_points, unit_directions

chart = cat.funk_ball(2)
xs, ys = sample_points(chart, 20, seed=1)
cb = curvature_bundle(chart, xs, ys)

# flag curvature does not depend on the transverse edge
u = unit_directions(2, 20 * 3, SplitMix64(99)).reshape(20, 3, 2)
K = flag_curvature(cb, u)
print(f"flag curvature: min {K.min():+.12f}  max {K.max():+.12f}")

rep = scalar_flag_verify(chart, xs, ys, u, cb=cb)
print(f"h-curvature closed form residual     {rep.h3_residual.max():.2e}")
print(f"rfrak closed form with K h_ij         {rep.rfrak_residual_literal.max():.2e}")
print(f"rfrak closed form with (I.dK) h_ij    {rep.rfrak_residual_contracted.max():.2e}")

# the modified Ricci tensor is not symmetric here: the defect is -K F^2 I
r0i, ri0 = rfrak_contractions(cb)
defect = ri0 - r0i
print(f"max |rfrak_i0 - rfrak_0i|             {np.abs(defect).max():.3f}")
print(f"max |defect - F^2 I / 4|              {np.abs(defect - cb.F[:, None] ** 2 * cb.I / 4).max():.2e}")
