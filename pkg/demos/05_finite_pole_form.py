"""The finite-pole energy and its blow-up limit.

For a pole at distance t, U_a minimizes a Dirichlet energy with a jump of
twice the limit eigenfunction on the segment [0, a].  The form r_a(u, u)
scaled by t^-k tends to C(alpha, u) = 2 beta^2 G_k(k (alpha - omega)/2),
and the energy norm of U_a decays like t^(k/2).  The disk gives exact
ray data for u and v.
"""
import numpy as np

from abcrack.blowup import compute_C, compute_Ua_and_ra, disk_ray_data, extrapolate_G
from abcrack.disk_oracle import disk_expansion, disk_mode
from abcrack.geometry import DomainSpec, build_domain

disk = build_domain(DomainSpec.disk(1.0))
mode = disk_mode(1, 1)
g = extrapolate_G(1)
rays = [disk_ray_data(mode, v, 0.0) for v in "uv"]
C = [compute_C(0.0, disk_expansion(mode, v), g).value for v in "uv"]

ts = (0.1, 0.05, 0.025)
samples = [compute_Ua_and_ra(disk, 0.0, t, rays, mode.lam, h=0.02) for t in ts]
for i, v in enumerate("uv"):
    scaled = [s.matrix[i, i] / s.t for s in samples]
    slope = np.polyfit(np.log(ts), np.log([s.norms[i] for s in samples]), 1)[0]
    print(f"{v}: t^-1 r_a = {np.round(scaled, 4)}, limit C = {C[i]:.4f}, norm exponent {slope:.3f}")
print("S_a resolution (node pairs):", [s.n_s_pairs for s in samples])
