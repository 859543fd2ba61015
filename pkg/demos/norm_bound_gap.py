"""Mean Cartan torsion norm on a constant Randers metric against the two bounds.

The supremum over the indicatrix is (n+1)/sqrt(2) sqrt(1 - sqrt(1 - b^2)),
which sits a factor sqrt(2) above the (n+1)/2 form and below (n+1)/sqrt(2).

Run: python3 demos/norm_bound_gap.py
"""
import math

import finslerlab.catalog as cat
from finslerlab.core import mean_cartan_norm, randers_norm_bound

n = 2
print(" b     estimate   (n+1)/2 form  ratio    (n+1)/sqrt2")
for b in (0.1, 0.3, 0.6, 0.9, 0.99):
    chart = cat.euclidean_randers(n, [b, 0.0])
    est = mean_cartan_norm(chart, [0.0, 0.0]).value
    bound = randers_norm_bound(n, b)
    print(f"{b:4.2f}  {est:9.6f}  {bound:9.6f}     {est / bound:.6f} {(n + 1) / math.sqrt(2):9.6f}")
