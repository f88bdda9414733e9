"""Gauge helpers and the local expansion (k, beta, omega) at the crack tip.

Near the origin a limit eigenfunction behaves like

    r**(k/2) * beta * f_alpha(t) * sin(k/2 * (t - omega))

after the gauge change.  The projections of ``f_alpha * v`` on
``sin(k t/2)`` and ``cos(k t/2)`` over a small circle recover the triple.

Sign convention: beta is reported positive.  Since
``sin(k/2 (t - omega - 2 pi/k)) = -sin(k/2 (t - omega))``, reducing omega
modulo 2 pi/k absorbs the sign, so the record depends only on the line
spanned by v.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree


class ExtractionError(RuntimeError):
    """No dominant mode, or inconsistent modes between radii."""


def f_alpha(alpha, t):
    """+1 for t mod 2pi in [0, alpha + pi), -1 on [alpha + pi, 2pi).

    ``alpha`` is taken in (-pi, pi]; the result is 2pi-periodic in ``t``.
    """
    a = math.fmod(float(alpha), 2 * math.pi)
    if a <= -math.pi:
        a += 2 * math.pi
    elif a > math.pi:
        a -= 2 * math.pi
    tt = np.mod(np.asarray(t, dtype=float), 2 * math.pi)
    out = np.where(tt < a + math.pi, 1.0, -1.0)
    return float(out) if out.ndim == 0 else out


def gauge_to_real(u, t, alpha: float, tol: float | None = 1e-8):
    """Real gauged samples ``v = f_alpha(t) Re(exp(-i t/2) u)``.

    Parameters
    ----------
    u : array_like of complex
        Samples of a K-real function at angles ``t`` (taken in [0, 2pi)).
    t : array_like
    alpha : float
    tol : float or None
        Relative bound on the imaginary residue; ``None`` skips the check.

    Returns
    -------
    v, residue : ndarray, float
        ``residue`` is ``||Im(exp(-it/2) u)|| / ||u||``.
    """
    u = np.asarray(u, dtype=complex)
    tt = np.mod(np.asarray(t, dtype=float), 2 * math.pi)
    w = np.exp(-0.5j * tt) * u
    scale = float(np.linalg.norm(u))
    residue = float(np.linalg.norm(w.imag)) / scale if scale > 0 else 0.0
    if tol is not None and residue > tol:
        raise ValueError(f"imaginary residue {residue:.3e} exceeds {tol:.1e}: input is not K-real")
    return f_alpha(alpha, tt) * w.real, residue


def gauged_sampler(sample_rt, alpha: float):
    """Wrap a complex polar sampler ``(r, t) -> u`` into ``(x, y) -> v``."""

    def sample(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        t = np.mod(np.arctan2(y, x), 2 * math.pi)
        v, _ = gauge_to_real(sample_rt(r, t), t, alpha, tol=None)
        return v

    return sample


@dataclass(frozen=True)
class LocalExpansion:
    """Leading data (k, beta, omega) of a limit eigenfunction at 0.

    ``beta > 0`` by convention and ``omega`` lies in [0, 2pi/k).
    """

    k: int
    beta: float
    omega: float
    fit_radius_pair: tuple = (0.0, 0.0)
    fit_residual: float = 0.0

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError("k must be odd")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        period = 2 * math.pi / self.k
        if not 0.0 <= self.omega < period + 1e-15:
            raise ValueError("omega must lie in [0, 2pi/k)")

    def leading_term(self, r, t, alpha):
        """``r^(k/2) beta f_alpha(t) sin(k/2 (t - omega))``."""
        r = np.asarray(r, dtype=float)
        return r ** (self.k / 2) * self.beta * f_alpha(alpha, t) * np.sin(self.k / 2 * (np.asarray(t) - self.omega))

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "beta": self.beta, "omega": self.omega,
                           "residual": self.fit_residual}, sort_keys=False)

    @classmethod
    def from_json(cls, line: str) -> "LocalExpansion":
        d = json.loads(line)
        return cls(k=int(d["k"]), beta=float(d["beta"]), omega=float(d["omega"]),
                   fit_residual=float(d.get("residual", 0.0)))


def reduce_omega(omega: float, k: int) -> float:
    period = 2 * math.pi / k
    w = math.fmod(omega, period)
    if w < 0:
        w += period
    if w >= period - 1e-15 * period:
        w = 0.0
    return w


# --------------------------------------------------------------------------
# sampling discrete fields


class P1Function:
    """Piecewise linear field on a (cracked) mesh, evaluable at points.

    Points on the two sides of the crack fall in different triangles, which
    reference different node copies, so the two traces stay distinct.
    """

    def __init__(self, mesh, values):
        self.mesh = mesh
        self.values = np.asarray(values, dtype=float)
        if self.values.shape[0] != mesh.n_nodes:
            raise ValueError("one value per mesh node expected")
        v, t = mesh.vertices, mesh.triangles
        self._a = v[t[:, 0]]
        e1 = v[t[:, 1]] - self._a
        e2 = v[t[:, 2]] - self._a
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self._inv = np.stack([np.stack([e2[:, 1], -e2[:, 0]], axis=1),
                              np.stack([-e1[:, 1], e1[:, 0]], axis=1)], axis=1) / det[:, None, None]
        cen = v[t].mean(axis=1)
        self._tree = cKDTree(cen)

    def _bary(self, pts, tri):
        rel = pts - self._a[tri]
        lam12 = np.einsum("nij,nj->ni", self._inv[tri], rel)
        return np.column_stack([1 - lam12.sum(axis=1), lam12])

    def locate(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """Containing triangle and barycentric coordinates of each point."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = len(pts)
        tri = np.full(n, -1, dtype=np.int64)
        bary = np.zeros((n, 3))
        todo = np.arange(n)
        ntri = len(self.mesh.triangles)
        for kq in (8, 32, 128, min(1024, ntri)):
            if len(todo) == 0:
                break
            _, cand = self._tree.query(pts[todo], k=min(kq, ntri))
            cand = np.atleast_2d(cand)
            best = np.full(len(todo), -1)
            best_b = np.zeros((len(todo), 3))
            best_score = np.full(len(todo), -np.inf)
            for j in range(cand.shape[1]):
                b = self._bary(pts[todo], cand[:, j])
                score = b.min(axis=1)
                better = score > best_score
                best[better] = cand[better, j]
                best_b[better] = b[better]
                best_score[better] = score[better]
            ok = best_score >= -1e-10
            tri[todo[ok]] = best[ok]
            bary[todo[ok]] = best_b[ok]
            todo = todo[~ok]
        if len(todo):
            raise ValueError(f"{len(todo)} sample points fall outside the mesh")
        return tri, bary

    def __call__(self, x, y):
        pts = np.column_stack([np.ravel(x), np.ravel(y)])
        tri, bary = self.locate(pts)
        vals = np.sum(self.values[self.mesh.triangles[tri]] * bary, axis=1)
        return vals.reshape(np.shape(x))


# --------------------------------------------------------------------------
# projections and extraction


def circle_angles(alpha: float, n: int) -> np.ndarray:
    """``n`` angles in [0, 2pi) staggered away from the crack ray at alpha + pi."""
    base = (np.arange(n) + 0.5) * (2 * math.pi / n)
    return np.mod(base + (alpha + math.pi), 2 * math.pi)


def circle_projections(sampler, alpha: float, r: float, k_max: int, n_angles: int = 512):
    """Projections ``A_k, B_k`` for odd k <= k_max and the total circle energy.

    ``A_k = (1/pi) int f_alpha v sin(kt/2) dt`` and likewise ``B_k`` with
    cos.  ``f_alpha v`` is anti-periodic in t, so the trapezoid rule on a
    uniform grid is spectrally accurate.
    """
    if n_angles < 256:
        raise ValueError("use at least 256 angular samples")
    t = circle_angles(alpha, n_angles)
    vals = np.asarray(sampler(r * np.cos(t), r * np.sin(t)), dtype=float)
    g = f_alpha(alpha, t) * vals
    w = 2.0 / n_angles  # (1/pi) * (2 pi / n)
    ks = np.arange(1, k_max + 1, 2)
    A = np.array([w * np.dot(g, np.sin(k * t / 2)) for k in ks])
    B = np.array([w * np.dot(g, np.cos(k * t / 2)) for k in ks])
    energy = w * float(np.dot(g, g))
    return ks, A, B, energy


def _expansion_from(ks, A, B, energy, r, k_max, dominance, floor):
    amp2 = A ** 2 + B ** 2
    if energy <= 0 or not np.isfinite(energy):
        raise ExtractionError("no dominant mode: zero field on the circle")
    share = amp2 / energy
    i = int(np.argmax(share))
    if share[i] < dominance:
        raise ExtractionError(f"no dominant mode (best share {share[i]:.3f} < {dominance})")
    k = int(ks[i])
    if math.sqrt(amp2[i]) / r ** (k / 2) < floor:
        raise ExtractionError("no dominant mode: projections below floor")
    return i, k, 1.0 - float(share[i])


def extract_expansion(sampler, alpha: float, r1: float, r2: float, k_max: int = 9,
                      n_angles: int = 512, dominance: float = 0.95,
                      floor: float = 1e-10) -> LocalExpansion:
    """Fit the leading term on two circles of radii ``r1 < r2``.

    Parameters
    ----------
    sampler : callable
        ``(x, y) -> v`` real gauged field (a :class:`P1Function` or an
        analytic sampler).
    alpha : float
        Crack direction of the limit configuration.
    r1, r2 : float
        Sampling radii; beta is extrapolated assuming an O(r^2) relative
        remainder.

    Returns
    -------
    LocalExpansion
    """
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    if k_max < 1 or k_max % 2 == 0:
        raise ValueError("k_max must be odd")
    fits = []
    for r in (r1, r2):
        ks, A, B, energy = circle_projections(sampler, alpha, r, k_max, n_angles)
        i, k, resid = _expansion_from(ks, A, B, energy, r, k_max, dominance, floor)
        fits.append((k, A[i], B[i], resid))
    if fits[0][0] != fits[1][0]:
        raise ExtractionError(f"inconsistent k between radii: {fits[0][0]} vs {fits[1][0]}")
    k = fits[0][0]
    b1 = math.hypot(fits[0][1], fits[0][2]) / r1 ** (k / 2)
    b2 = math.hypot(fits[1][1], fits[1][2]) / r2 ** (k / 2)
    beta = (r2 ** 2 * b1 - r1 ** 2 * b2) / (r2 ** 2 - r1 ** 2)
    if beta <= 0:
        beta = b1
    # A = beta cos(k w/2), B = -beta sin(k w/2)
    omega = reduce_omega(2 * math.atan2(-fits[0][2], fits[0][1]) / k, k)
    return LocalExpansion(k=k, beta=float(beta), omega=omega, fit_radius_pair=(float(r1), float(r2)),
                          fit_residual=fits[0][3])


@dataclass(frozen=True)
class BasisCase:
    """Canonical basis of a double eigenspace.

    ``variant`` is ``"same-k"`` (both expansions share k, distinct omega)
    or ``"split-k"`` (``first.k < second.k``).  ``coeffs`` holds the
    rotation: ``phi = coeffs[0] @ (v1, v2)`` and ``psi = coeffs[1] @ (v1, v2)``.
    """

    variant: str
    first: LocalExpansion
    second: LocalExpansion
    coeffs: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        if self.variant == "same-k":
            if self.first.k != self.second.k:
                raise ValueError("same-k case needs equal k")
        elif self.variant == "split-k":
            if not self.first.k < self.second.k:
                raise ValueError("split-k case needs k1 < k2")
        else:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def k(self) -> int:
        return self.first.k

    def combine(self, v1, v2):
        """Return ``(phi, psi)`` as arrays built from ``v1, v2``."""
        c = self.coeffs
        return c[0, 0] * v1 + c[0, 1] * v2, c[1, 0] * v1 + c[1, 1] * v2

    def to_dict(self) -> dict:
        return {"variant": self.variant, "first": asdict(self.first), "second": asdict(self.second),
                "coeffs": np.asarray(self.coeffs).tolist()}


def _rotated(s1, s2, c1, c2):
    def sample(x, y):
        return c1 * s1(x, y) + c2 * s2(x, y)

    return sample


def canonicalize_pair(s1, s2, alpha: float, r1: float, r2: float, k_max: int = 9,
                      n_angles: int = 512, rank_tol: float = 0.05, **kw) -> BasisCase:
    """Rotate an orthonormal pair into the canonical basis.

    The search over rotations is done in closed form: extraction is linear
    in the field, so every rotation's projections are combinations of the
    two input rows.  Let ``k`` be the smallest odd order carried by the
    pair.  If the 2x2 matrix of its (A, B) projections is numerically rank
    one, the rotation annihilating it carries a strictly higher order
    (split-k).  Otherwise the pair is same-k and is rotated so that the
    first member has omega = 0.
    """
    p1 = circle_projections(s1, alpha, r1, k_max, n_angles)
    p2 = circle_projections(s2, alpha, r1, k_max, n_angles)
    ks = p1[0]
    e_tot = p1[3] + p2[3]
    if e_tot <= 0:
        raise ExtractionError("extraction failed on all rotations: zero fields")
    k_index = None
    for i in range(len(ks)):
        m2 = p1[1][i] ** 2 + p1[2][i] ** 2 + p2[1][i] ** 2 + p2[2][i] ** 2
        if m2 / e_tot > 1e-3:
            k_index = i
            break
    if k_index is None:
        raise ExtractionError("extraction failed on all rotations: no mode above floor")
    mat = np.array([[p1[1][k_index], p1[2][k_index]], [p2[1][k_index], p2[2][k_index]]])
    u, sv, _ = np.linalg.svd(mat)
    if sv[1] <= rank_tol * sv[0]:
        # left singular vectors give the rotation; u[:, 1] kills mode k
        c_low = u[:, 0]
        if c_low[0] < 0 or (c_low[0] == 0 and c_low[1] < 0):
            c_low = -c_low
        c_high = np.array([-c_low[1], c_low[0]])
        e_low = extract_expansion(_rotated(s1, s2, *c_low), alpha, r1, r2, k_max, n_angles, **kw)
        e_high = extract_expansion(_rotated(s1, s2, *c_high), alpha, r1, r2, k_max, n_angles, **kw)
        if e_high.k > e_low.k:
            return BasisCase("split-k", e_low, e_high, np.array([c_low, c_high]))
    # same-k: phi has no cos(k t/2) component, so omega_phi = 0
    bvec = mat[:, 1]
    theta = math.atan2(-bvec[0], bvec[1])  # (cos th, sin th) . bvec = 0
    theta = math.fmod(theta, math.pi)
    if theta < 0:
        theta += math.pi
    c_phi = np.array([math.cos(theta), math.sin(theta)])
    c_psi = np.array([-math.sin(theta), math.cos(theta)])
    e_phi = extract_expansion(_rotated(s1, s2, *c_phi), alpha, r1, r2, k_max, n_angles, **kw)
    e_psi = extract_expansion(_rotated(s1, s2, *c_psi), alpha, r1, r2, k_max, n_angles, **kw)
    if e_phi.k != e_psi.k:
        lo, hi = (e_phi, e_psi) if e_phi.k < e_psi.k else (e_psi, e_phi)
        c = np.array([c_phi, c_psi]) if e_phi.k < e_psi.k else np.array([c_psi, c_phi])
        return BasisCase("split-k", lo, hi, c)
    return BasisCase("same-k", e_phi, e_psi, np.array([c_phi, c_psi]))
