"""The universal blow-up energy G_k.

G_k(zeta) is a minimum over fields on the plane slit along a half line,
with a prescribed jump on the unit segment.  The minimizer is linear in
(sin zeta, cos zeta), so G_k is a quadratic form in those two numbers and
a single factorization per mesh gives the whole curve.  The plane is
truncated to disks of radius 8, 16, 32 (nested meshes, so the truncated
minima decrease with R) and everything is extrapolated in 1/R and h.
"""
import math

import numpy as np

from abcrack.blowup import extrapolate_G, g_property_suite, zeta0

for k in (1, 3):
    g = extrapolate_G(k)
    a_ss, a_cc, a_sc = g.coeffs
    print(f"k={k}: G = {a_ss:.5f} sin^2 + {a_cc:.5f} cos^2 + {a_sc - 1:.5f} sin cos")
    print(f"      decay exponents in R per h level: {g.r_exponents}")
    for z in np.linspace(0, math.pi / 2, 5):
        print(f"      G({z:.4f}) = {g(z):+.5f} +- {g.err_est(z):.1e}")
    print(f"      sign change at zeta0 = {zeta0(g):.6f}")
    suite = {name: ok for name, ok in g_property_suite(g).items() if not name.startswith("_")}
    print(f"      properties: {suite}\n")
