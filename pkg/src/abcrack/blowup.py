"""Limit energies of the blow-up problem and the finite-pole forms.

``G_k(zeta)`` is the minimum over fields on the plane slit along
``{x2 = 0, x1 <= 1}`` of

    1/2 int |grad v|^2 + k cos(zeta) int_0^1 x^(k/2 - 1) v_plus dx - cos(zeta) sin(zeta)

with ``v_plus + v_minus = 2 x^(k/2) sin(zeta)`` on [0, 1] and anti-periodic
traces on the rest of the slit.  The plane is truncated to the disk D_R
(zero Dirichlet data), which can only raise the minimum; R is then
extrapolated.

The minimizer is linear in ``(sin zeta, cos zeta)``, so one factorization
and two solves per ``(k, R, h)`` give the whole curve as a quadratic form.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import fem
from .geometry import SizeField, nested_disk_mesh, restrict_to_radius, generate_mesh, insert_crack
from .localexp import BasisCase, LocalExpansion, P1Function

DEFAULT_RADII = (8.0, 16.0, 32.0)


class BlowupError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# quadrature on a ray with an x^(k/2 - 1) endpoint singularity

_GX, _GW = np.polynomial.legendre.leggauss(8)


def ray_quadrature(xs: np.ndarray):
    """Gauss points on consecutive edges ``[xs[i], xs[i+1]]`` of a ray.

    The substitution ``x = s^2`` removes an ``x^(-1/2)`` singularity at 0.
    Returns ``(x, w, edge, lam)`` where ``lam`` is the local coordinate of
    ``x`` in its edge (0 at the left node, 1 at the right node).
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(np.diff(xs) <= 0) or xs[0] < 0:
        raise ValueError("ray nodes must be increasing and non-negative")
    sa, sb = np.sqrt(xs[:-1]), np.sqrt(xs[1:])
    mid, half = 0.5 * (sa + sb), 0.5 * (sb - sa)
    s = mid[:, None] + half[:, None] * _GX[None, :]
    x = s * s
    w = (half[:, None] * _GW[None, :]) * 2 * s
    edge = np.repeat(np.arange(len(xs) - 1), len(_GX))
    lam = (x - xs[:-1, None]) / (xs[1:] - xs[:-1])[:, None]
    return x.ravel(), w.ravel(), edge, lam.ravel()


def ray_load(nodes: np.ndarray, xs: np.ndarray, g, n_total: int) -> np.ndarray:
    """Vector ``b_i = int g(x) phi_i(x) dx`` over the ray edges."""
    x, w, edge, lam = ray_quadrature(xs)
    gw = g(x) * w
    b = np.zeros(n_total)
    np.add.at(b, nodes[edge], gw * (1 - lam))
    np.add.at(b, nodes[edge + 1], gw * lam)
    return b


def ray_integral(xs: np.ndarray, g) -> float:
    x, w, _, _ = ray_quadrature(xs)
    return float(np.dot(g(x), w))


# --------------------------------------------------------------------------
# blow-up discretizations


def blowup_size(h: float, grading_exponent: float = 2.0) -> SizeField:
    """Size field graded at 0 and at the tip (1, 0), coarsening like |x|/2."""
    return SizeField(h=h, mu=grading_exponent, length=1.0, centers=((0.0, 0.0), (1.0, 0.0)),
                     growth_from=2.0)


@lru_cache(maxsize=4)
def blowup_mesh(h: float, radii: tuple = DEFAULT_RADII, grading_exponent: float = 2.0):
    return nested_disk_mesh(radii, 1.0, blowup_size(h, grading_exponent))


@dataclass(eq=False)
class BlowupDiscretization:
    """Factorized reduced stiffness of one truncated blow-up mesh."""

    mesh: object
    K: sp.csr_matrix
    dofmap: fem.DofMap
    lu: object
    s_nodes: np.ndarray
    s_x: np.ndarray
    R: float
    h: float

    @classmethod
    def build(cls, R: float, h: float, radii: tuple = DEFAULT_RADII,
              grading_exponent: float = 2.0) -> "BlowupDiscretization":
        full = blowup_mesh(float(h), tuple(float(r) for r in radii), float(grading_exponent))
        mesh = restrict_to_radius(full, float(R))
        K, _ = fem.assemble(mesh)
        dm = fem.DofMap.from_mesh(mesh)
        Kr = (dm.P.T @ K @ dm.P).tocsc()
        lu = splu(Kr)
        plus = mesh.s_a_pairs[:, 0]
        nodes = np.concatenate([plus, [mesh.tip_node]])
        xs = mesh.vertices[nodes, 0]
        if abs(xs[0]) > 1e-12 or abs(xs[-1] - 1.0) > 1e-12:
            raise BlowupError("S_1 is not resolved from 0 to the tip")
        return cls(mesh=mesh, K=K, dofmap=dm, lu=lu, s_nodes=nodes, s_x=xs, R=float(R), h=float(h))

    def minimize(self, lift: np.ndarray, load: np.ndarray) -> np.ndarray:
        """Full minimizer of 1/2 v'Kv + load'v over ``v = P y + lift``."""
        P = self.dofmap.P
        rhs = -(P.T @ (self.K @ lift + load))
        y = self.lu.solve(rhs)
        return P @ y + lift


@lru_cache(maxsize=16)
def _discretization(R: float, h: float, radii: tuple, grading_exponent: float) -> BlowupDiscretization:
    return BlowupDiscretization.build(R, h, radii, grading_exponent)


@dataclass(frozen=True)
class GCurve:
    """``G(zeta) = a_ss sin^2 + a_cc cos^2 + (a_sc - 1) sin cos`` on one mesh.

    ``v_jump`` and ``v_load`` are the minimizers for the unit-jump and the
    unit-load data; the minimizer at ``zeta`` is
    ``sin(zeta) v_jump + cos(zeta) v_load``.
    """

    k: int
    R: float
    h: float
    a_ss: float
    a_cc: float
    a_sc: float
    radii: tuple = DEFAULT_RADII
    grading_exponent: float = 2.0
    v_jump: np.ndarray = field(repr=False, default=None)
    v_load: np.ndarray = field(repr=False, default=None)
    load: np.ndarray = field(repr=False, default=None)

    def __call__(self, zeta):
        s, c = np.sin(zeta), np.cos(zeta)
        out = self.a_ss * s * s + self.a_cc * c * c + (self.a_sc - 1.0) * s * c
        return float(out) if np.ndim(out) == 0 else out

    def minimizer(self, zeta: float) -> np.ndarray:
        return math.sin(zeta) * self.v_jump + math.cos(zeta) * self.v_load


def g_curve(k: int, R: float, h: float, radii: tuple = DEFAULT_RADII,
            grading_exponent: float = 2.0) -> GCurve:
    """Discrete G_k on the truncated disk D_R with mesh size ``h``."""
    if k < 1 or k % 2 == 0:
        raise ValueError("k must be odd")
    if R < 8:
        raise ValueError("truncation radius must be >= 8")
    if h > 1 / 16 + 1e-15:
        raise ValueError("blow-up mesh size must be <= 1/16")
    radii = tuple(sorted(set(float(r) for r in radii) | {float(R)}))
    d = _discretization(float(R), float(h), radii, float(grading_exponent))
    n = d.mesh.n_nodes
    b = ray_load(d.s_nodes, d.s_x, lambda x: x ** (k / 2 - 1), n)
    lift = np.zeros(n)
    # full jump on the plus side; the tip keeps a free value
    lift[d.s_nodes[:-1]] = 2 * d.s_x[:-1] ** (k / 2)
    v_jump = d.minimize(lift, np.zeros(n))
    v_load = d.minimize(np.zeros(n), k * b)
    a_ss = 0.5 * float(v_jump @ (d.K @ v_jump))
    a_cc = 0.5 * float(v_load @ (d.K @ v_load)) + k * float(b @ v_load)
    a_sc = float(v_jump @ (d.K @ v_load)) + k * float(b @ v_jump)
    if not a_ss > 0:
        raise BlowupError("indefinite system: jump energy not positive")
    return GCurve(k=k, R=float(R), h=float(h), a_ss=a_ss, a_cc=a_cc, a_sc=a_sc, radii=radii,
                  grading_exponent=float(grading_exponent), v_jump=v_jump, v_load=v_load, load=b)


@dataclass(frozen=True)
class GSample:
    """One value of G_k at ``zeta`` with its discretization."""

    k: int
    zeta: float
    R: float
    h: float
    value: float
    extrapolated: bool = False
    err_est: float = float("nan")


def compute_G(k: int, zeta: float, R: float, h: float, **kw) -> GSample:
    curve = g_curve(k, R, h, **kw)
    return GSample(k=k, zeta=float(zeta), R=float(R), h=float(h), value=curve(zeta))


@dataclass(frozen=True)
class ExtrapolatedG:
    """Coefficients of G extrapolated in R (exponent 1) and then in h.

    ``table[(R, h)]`` keeps the raw curves.  ``r_exponents`` are the decay
    exponents implied by three consecutive radii at each h level; a value
    far from 1 flags under-resolution.
    """

    k: int
    coeffs: tuple
    coeffs_R_only: tuple
    coeffs_coarse: tuple
    radii: tuple
    hs: tuple
    table: dict
    r_exponents: dict
    exponent_warning: bool
    r_order: float = 1.0
    h_order: float = 2.0

    @staticmethod
    def _eval(coeffs, zeta):
        a_ss, a_cc, a_sc = coeffs
        s, c = np.sin(zeta), np.cos(zeta)
        return a_ss * s * s + a_cc * c * c + (a_sc - 1.0) * s * c

    def __call__(self, zeta):
        out = self._eval(self.coeffs, zeta)
        return float(out) if np.ndim(out) == 0 else out

    def err_est(self, zeta):
        """Largest of the last R-increment and the h-increment."""
        fine_R = self._eval(self.coeffs_R_only, zeta)
        fine_raw = self._eval(self.table[(self.radii[-1], self.hs[-1])], zeta)
        out = np.maximum(np.abs(self._eval(self.coeffs, zeta) - fine_R), np.abs(fine_R - fine_raw))
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, zeta: float) -> GSample:
        return GSample(k=self.k, zeta=float(zeta), R=math.inf, h=0.0, value=self(zeta), extrapolated=True,
                       err_est=self.err_est(zeta))

    def is_monotone_in_R(self, zeta, tol: float = 1e-10) -> bool:
        for h in self.hs:
            vals = [self._eval(self.table[(R, h)], zeta) for R in self.radii]
            if np.any(np.diff(vals) > tol * max(1.0, np.max(np.abs(vals)))):
                return False
        return True


def _richardson_R(vals, radii, order):
    r2, r3 = radii[-2], radii[-1]
    f = (r3 / r2) ** order
    return (f * vals[-1] - vals[-2]) / (f - 1.0)


def extrapolate_G(k: int, radii=DEFAULT_RADII, hs=(1 / 16, 1 / 32), r_order: float = 1.0,
                  h_order: float = 2.0, grading_exponent: float = 2.0) -> ExtrapolatedG:
    """Extrapolate G_k in 1/R and then in h.

    Needs at least three radii in geometric progression and two mesh
    levels with ratio 2.
    """
    radii = tuple(sorted(float(r) for r in radii))
    hs = tuple(sorted((float(h) for h in hs), reverse=True))
    if len(radii) < 3:
        raise ValueError("need at least three radii")
    q = radii[1] / radii[0]
    if any(abs(radii[i + 1] / radii[i] - q) > 1e-12 for i in range(len(radii) - 1)):
        raise ValueError("radii must form a geometric progression")
    if len(hs) < 2:
        raise ValueError("need at least two mesh levels")
    table, per_h, expo = {}, [], {}
    for h in hs:
        rows = []
        for R in radii:
            c = g_curve(k, R, h, radii=radii, grading_exponent=grading_exponent)
            table[(R, h)] = (c.a_ss, c.a_cc, c.a_sc)
            rows.append(np.array(table[(R, h)]))
        rows = np.array(rows)
        # exponent from the jump and load energies (the dominant parts)
        ex = []
        for j in (0, 1):
            d1 = rows[-3, j] - rows[-2, j]
            d2 = rows[-2, j] - rows[-1, j]
            ex.append(math.log(d1 / d2) / math.log(q) if d1 * d2 > 0 else float("nan"))
        expo[h] = tuple(ex)
        per_h.append(_richardson_R(rows, radii, r_order))
    ratio = hs[-2] / hs[-1]
    f = ratio ** h_order
    final = (f * per_h[-1] - per_h[-2]) / (f - 1.0)
    warn = any(not (abs(e - r_order) <= 0.5) for ex in expo.values() for e in ex)
    return ExtrapolatedG(k=k, coeffs=tuple(map(float, final)), coeffs_R_only=tuple(map(float, per_h[-1])),
                         coeffs_coarse=tuple(map(float, per_h[-2])), radii=radii, hs=hs, table=table,
                         r_exponents=expo, exponent_warning=bool(warn), r_order=r_order, h_order=h_order)


def g_property_suite(g: ExtrapolatedG) -> dict:
    """Check the qualitative properties of G on extrapolated values.

    Tolerances are three times the reported error estimate.
    """
    res = {}
    e0, ep = g.err_est(0.0), g.err_est(math.pi / 2)
    res["G(0)<0"] = g(0.0) + 3 * e0 < 0
    res["G(pi/2)>0"] = g(math.pi / 2) - 3 * ep > 0
    pts = np.linspace(0.1, math.pi - 0.1, 8)
    res["pi-periodic"] = bool(all(abs(g(z + math.pi) - g(z)) <= 3 * max(g.err_est(z), g.err_est(z + math.pi))
                                  + 1e-12 for z in pts))
    res["reflection"] = bool(all(abs(g(math.pi - z) - g(z)) <= 3 * max(g.err_est(z), g.err_est(math.pi - z))
                                 for z in pts))
    inc = np.linspace(math.pi / 4, math.pi / 2, 7)[1:-1]
    vals = np.array([g(z) for z in inc])
    errs = np.array([g.err_est(z) for z in inc])
    res["increasing"] = bool(np.all(np.diff(vals) > 0))
    grid = np.linspace(0.0, math.pi / 2, 65)
    gv = np.array([g(z) for z in grid])
    res["sign-change"] = bool(np.any(np.sign(gv[1:-1]) != np.sign(gv[:-2])))
    full = np.linspace(0.0, math.pi, 17)
    res["max-at-pi/2"] = bool(int(np.argmax([g(z) for z in full])) == 8)
    res["monotone-in-R"] = bool(all(g.is_monotone_in_R(z) for z in np.linspace(0, math.pi, 9)))
    res["_increments_vs_error"] = bool(np.all(np.diff(vals) > 3 * np.maximum(errs[1:], errs[:-1])))
    return res


def zeta0(g) -> float:
    """Sign change of G in (0, pi/2) by bisection."""
    from scipy.optimize import brentq

    return float(brentq(lambda z: g(z), 1e-9, math.pi / 2 - 1e-9, xtol=1e-14))


def gtable_rows(g: ExtrapolatedG, zetas) -> list[dict]:
    rows = []
    for z in zetas:
        for (R, h), co in sorted(g.table.items(), key=lambda kv: (-kv[0][1], kv[0][0])):
            rows.append({"k": g.k, "zeta": float(z), "R": R, "h": h, "value": float(ExtrapolatedG._eval(co, z)),
                         "extrapolated": 0, "err_est": ""})
        rows.append({"k": g.k, "zeta": float(z), "R": "inf", "h": 0.0, "value": g(z), "extrapolated": 1,
                     "err_est": g.err_est(z)})
    return rows


def gtable_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "zeta", "R", "h", "value", "extrapolated", "err_est"])
    for r in rows:
        w.writerow([r["k"], repr(float(r["zeta"])), r["R"] if isinstance(r["R"], str) else repr(float(r["R"])),
                    repr(float(r["h"])), repr(float(r["value"])), r["extrapolated"],
                    "" if r["err_est"] == "" else repr(float(r["err_est"]))])
    return buf.getvalue()


# --------------------------------------------------------------------------
# C(alpha, u) and the limit matrix


@dataclass(frozen=True)
class CoeffC:
    alpha: float
    expansion: LocalExpansion
    value: float


def blowup_angle(alpha: float, e: LocalExpansion) -> float:
    return e.k * (alpha - e.omega) / 2


def compute_C(alpha: float, expansion: LocalExpansion, g) -> CoeffC:
    """``C = 2 beta^2 G_k(k (alpha - omega) / 2)``; ``g`` maps zeta to G."""
    val = 2 * expansion.beta ** 2 * float(g(blowup_angle(alpha, expansion)))
    return CoeffC(alpha=float(alpha), expansion=expansion, value=val)


@dataclass(frozen=True)
class RMatrix:
    alpha: float
    entries: np.ndarray
    case: BasisCase | None = None

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "entries": self.entries.tolist(),
                "mu": self.eigenvalues.tolist(),
                "case": None if self.case is None else self.case.to_dict()}


def f_alpha_at_alpha(alpha: float) -> float:
    from .localexp import f_alpha

    return float(f_alpha(alpha, alpha))


def r_matrix_from_curve(alpha: float, expansions, curve: GCurve, case: BasisCase | None = None) -> RMatrix:
    """Limit matrix on one discretization ``curve`` (all expansions share k).

    After rotating the crack onto the x1-axis, the blow-up minimizer of u
    is ``c_u v_{zeta_u}`` with ``c_u = beta_u f_alpha(alpha)``, and on S_1
    ``grad Psi^u . nu = c_u (k/2) cos(zeta_u) x^(k/2 - 1)`` and
    ``Psi^u = c_u sin(zeta_u) x^(k/2)``.
    """
    k = curve.k
    if any(e.k != k for e in expansions):
        raise BlowupError("basis-case mismatch: expansions must share k with the curve")
    fa = f_alpha_at_alpha(alpha)
    cs = [e.beta * fa for e in expansions]
    zs = [blowup_angle(alpha, e) for e in expansions]
    vs = [curve.minimizer(z) for z in zs]
    d = _discretization_of(curve)
    b = curve.load
    n = len(expansions)
    R = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            # 2 int (grad Psi_i . nu) U_j = 2 c_i (k/2) cos z_i * c_j b'v_j
            t1 = k * cs[i] * math.cos(zs[i]) * cs[j] * float(b @ vs[j])
            t2 = k * cs[j] * math.cos(zs[j]) * cs[i] * float(b @ vs[i])
            # 2 int (grad Psi_i . nu) Psi_j = c_i c_j cos z_i sin z_j (exact 1/k integral)
            t3 = cs[i] * cs[j] * math.cos(zs[i]) * math.sin(zs[j])
            t4 = cs[i] * cs[j] * math.cos(zs[j]) * math.sin(zs[i])
            t5 = cs[i] * cs[j] * float(vs[i] @ (d.K @ vs[j]))
            R[i, j] = t1 - t3 + t2 - t4 + t5
    R = 0.5 * (R + R.T)
    return RMatrix(alpha=float(alpha), entries=R, case=case)


def _discretization_of(curve: GCurve) -> BlowupDiscretization:
    return _discretization(curve.R, curve.h, curve.radii, curve.grading_exponent)


def compute_R_matrix(alpha: float, case: BasisCase, R: float = 32.0, h: float = 1 / 16) -> RMatrix:
    """Limit matrix R(alpha, phi, psi) on the truncated blow-up mesh (R, h)."""
    if case.variant != "same-k":
        raise BlowupError("basis-case mismatch: the limit matrix needs a same-k case")
    curve = g_curve(case.k, R, h)
    return r_matrix_from_curve(alpha, (case.first, case.second), curve, case)


def r_matrix_extrapolated(alpha: float, expansions, g: ExtrapolatedG) -> RMatrix:
    """Limit matrix with every mesh-dependent scalar extrapolated like G.

    Entries are bilinear in the (sin, cos) data of the two blow-up angles,
    with coefficients ``a_ss, a_cc, a_sc``; the same extrapolation applies.
    """
    a_ss, a_cc, a_sc = g.coeffs
    fa = f_alpha_at_alpha(alpha)
    cs = [e.beta * fa for e in expansions]
    zs = [blowup_angle(alpha, e) for e in expansions]
    n = len(expansions)
    R = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            si, ci, sj, cj = math.sin(zs[i]), math.cos(zs[i]), math.sin(zs[j]), math.cos(zs[j])
            # bilinear form whose diagonal is 2 G(zeta)
            R[i, j] = cs[i] * cs[j] * (2 * a_ss * si * sj + 2 * a_cc * ci * cj
                                       + (a_sc - 1.0) * (si * cj + ci * sj))
    return RMatrix(alpha=float(alpha), entries=0.5 * (R + R.T))


# --------------------------------------------------------------------------
# finite pole: U_a^u and r_a


@dataclass(frozen=True)
class FiniteFormSample:
    """Matrix ``r_a(phi_i, phi_j)`` at pole distance ``t`` along ``alpha``."""

    t: float
    alpha: float
    matrix: np.ndarray
    energies: np.ndarray
    norms: np.ndarray
    n_s_pairs: int
    h: float

    def to_dict(self) -> dict:
        return {"t": self.t, "alpha": self.alpha, "matrix": self.matrix.tolist(),
                "energies": self.energies.tolist(), "norms": self.norms.tolist(),
                "n_s_pairs": self.n_s_pairs, "h": self.h}


@dataclass(frozen=True)
class RayData:
    """Gauged limit eigenfunction restricted to the ray of direction alpha.

    ``value(s)`` is G_alpha(u) at distance ``s`` and ``flux(s)`` its
    derivative along nu_alpha.
    """

    value: object
    flux: object
    k: int = 1


def disk_ray_data(mode, variant: str, alpha: float) -> RayData:
    from .disk_oracle import disk_gauged

    on_ray, normal = disk_gauged(mode, variant, alpha)
    return RayData(value=on_ray, flux=normal, k=mode.k)


def discrete_ray_data(mesh, values: np.ndarray, alpha: float, k: int = 1,
                      offset_rel: float = 1e-7) -> RayData:
    """Ray data from a P1 limit eigenfunction.

    Values are interpolated on the ray; the normal derivative averages the
    constant P1 gradients of the triangles on both sides of the ray.
    """
    f = P1Function(mesh, values)
    d = np.array([math.cos(alpha), math.sin(alpha)])
    nu = np.array([-math.sin(alpha), math.cos(alpha)])
    _, grads = fem.element_gradients(mesh.vertices, mesh.triangles)
    tri_grad = np.einsum("eik,ei->ek", grads, values[mesh.triangles])

    def value(s):
        s = np.asarray(s, dtype=float)
        pts = s[:, None] * d[None, :]
        return f(pts[:, 0], pts[:, 1])

    def flux(s):
        s = np.asarray(s, dtype=float)
        pts = s[:, None] * d[None, :]
        eps = offset_rel * np.maximum(s, 1e-12)
        out = np.zeros(len(s))
        for sign in (1.0, -1.0):
            q = pts + sign * eps[:, None] * nu[None, :]
            tri, _ = f.locate(q)
            out += 0.5 * tri_grad[tri] @ nu
        return out

    return RayData(value=value, flux=flux, k=k)


def compute_Ua_and_ra(domain, alpha: float, t: float, ray_data, lam0: float, h: float | None = None,
                      grading_exponent: float = 2.0, s_a_resolution: float = 40.0,
                      min_pairs: int = 8) -> FiniteFormSample:
    """Finite-pole minimizers U_a^u and the bilinear form r_a.

    Each ``U`` minimizes ``1/2 int |grad w|^2 + 2 int_{S_a} (grad G . nu) w_plus``
    with ``w_plus + w_minus = 2 G`` on S_a and anti-periodic traces on the
    rest of the crack, zero on the boundary.
    """
    crack = insert_crack(domain, alpha, t)
    if h is None:
        h = 0.02 * domain.diam
    mesh = generate_mesh(domain, crack, h, grading_exponent, extra_centers=((0.0, 0.0),),
                         s_a_resolution=s_a_resolution)
    if len(mesh.s_a_pairs) < min_pairs:
        raise BlowupError(f"insufficient S_a resolution: {len(mesh.s_a_pairs)} pairs at t={t}")
    K, M = fem.assemble(mesh)
    dm = fem.DofMap.from_mesh(mesh)
    lu = splu((dm.P.T @ K @ dm.P).tocsc())
    d = crack.direction
    nodes = np.concatenate([mesh.s_a_pairs[:, 0], [mesh.tip_node]])
    xs = mesh.vertices[nodes] @ d
    xs[0] = max(xs[0], 0.0)
    n = mesh.n_nodes
    Us, loads = [], []
    for rd in ray_data:
        load = ray_load(nodes, xs, lambda s, rd=rd: 2 * rd.flux(s), n)
        lift = np.zeros(n)
        lift[nodes[:-1]] = 2 * rd.value(np.maximum(xs[:-1], 0.0))
        rhs = -(dm.P.T @ (K @ lift + load))
        U = dm.P @ lu.solve(rhs) + lift
        Us.append(U)
        loads.append(load)
    m = len(ray_data)
    mat = np.zeros((m, m))
    energies = np.zeros(m)
    for i in range(m):
        energies[i] = 0.5 * float(Us[i] @ (K @ Us[i])) + float(loads[i] @ Us[i])
        for j in range(m):
            cross_ij = ray_integral(xs, lambda s: 2 * ray_data[i].flux(s) * ray_data[j].value(s))
            cross_ji = ray_integral(xs, lambda s: 2 * ray_data[j].flux(s) * ray_data[i].value(s))
            mat[i, j] = (float(loads[i] @ Us[j]) - cross_ij + float(loads[j] @ Us[i]) - cross_ji
                         + float(Us[i] @ (K @ Us[j])) - lam0 * float(Us[i] @ (M @ Us[j])))
    mat = 0.5 * (mat + mat.T)
    norms = np.array([math.sqrt(float(U @ (K @ U))) for U in Us])
    return FiniteFormSample(t=float(t), alpha=float(alpha), matrix=mat, energies=energies, norms=norms,
                            n_s_pairs=int(len(mesh.s_a_pairs)), h=float(h))
