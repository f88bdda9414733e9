"""Aharonov-Bohm eigenvalues with a moving half-integer pole.

The magnetic problem is solved in its gauge-equivalent real form: a
Laplacian on the domain slit along a ray, with anti-periodic traces across
the slit.  Submodules:

geometry     domains, cracks and graded cracked meshes
fem          P1 assembly, constraint elimination, eigensolves
localexp     gauge helpers and the local expansion (k, beta, omega)
blowup       the limit energy G_k, C(alpha, u), the 2x2 limit matrix, r_a
branch       branch tracing, power fits, splitting cones
disk_oracle  exact disk spectrum from half-integer Bessel functions
cli          batch experiment runner
"""
__version__ = "0.1.0"
