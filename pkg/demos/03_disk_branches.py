"""Moving the pole off the centre of the disk.

The double eigenvalue pi^2 splits linearly in the pole distance t.  The
two slopes are predicted by the eigenvalues of a 2x2 matrix built from
the local behaviour of the limit eigenfunctions at 0 and from G_1.  Here
we measure the branches, fit power laws and compare.
"""
import math

import numpy as np

from abcrack.blowup import extrapolate_G, r_matrix_extrapolated
from abcrack.branch import HPolicy, find_window, fit_window, predict_vs_measure, solve_at, trace_branch
from abcrack.geometry import DomainSpec, build_domain
from abcrack.localexp import P1Function, canonicalize_pair

disk = build_domain(DomainSpec.disk(1.0))
policy = HPolicy(h=0.04)
alpha = 0.0

window = find_window(disk, alpha, policy)
print(f"double eigenvalue at index {window.N}: {window.values0}, gap {window.gap0:.1e}")

# local data (k, beta, omega) of the limit eigenspace
pairs, disc = solve_at(disk, alpha, 0.0, 2, policy)
f1, f2 = (P1Function(disc.mesh, disc.full(p)) for p in pairs[:2])
case = canonicalize_pair(f1, f2, alpha, 4 * policy.h, 8 * policy.h)
print(f"basis case {case.variant}: {case.first} / {case.second}")

g = extrapolate_G(case.k)
R = r_matrix_extrapolated(alpha, (case.first, case.second), g)
print(f"limit matrix\n{R.entries}\npredicted slopes {R.eigenvalues}")

t = np.geomspace(0.2, 0.05, 6)
samples = trace_branch(disk, alpha, t, window, policy)
lower, upper = fit_window(samples, window)
for name, f in (("lower", lower), ("upper", upper)):
    print(f"{name}: exponent {f.k_fit:.3f}, log-log coefficient {f.coeff:+.3f}, "
          f"limit coefficient {f.coeff_limit:+.3f}")

rec = predict_vs_measure(case, alpha, R, (lower, upper))
print("relative slope errors:", [round(float(b["rel_err"]), 4) for b in rec["branches"]])
print(f"(for comparison, pi^2 = {math.pi ** 2:.4f})")
