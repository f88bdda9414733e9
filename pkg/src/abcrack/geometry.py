"""Planar domains, cracks along a ray, and graded cracked triangulations.

The magnetic problem with a half-integer pole at ``a`` is handled on the
domain slit along ``Gamma_a`` (the ray from the boundary through 0 up to the
pole).  A :class:`CrackedMesh` carries two coincident copies of every crack
node so that the two traces of a P1 field on the slit are independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import triangle as tr

SYMMETRY_TOL = 1e-12
SNAP_TOL = 1e-10
MIN_ANGLE_DEG = 20.0


class GeometryError(ValueError):
    """Invalid domain, crack, or mesh request."""


class MeshQualityError(RuntimeError):
    """Mesh generation failed to meet its quality targets."""


# --------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class DomainSpec:
    """Declarative description of a domain containing the origin.

    ``kind`` is ``"disk"`` (``radius``), ``"rectangle"`` (half-widths
    ``w1, w2``) or ``"polygon"`` (counterclockwise ``vertices``).
    ``symmetry`` lists declared tags among ``"x1-axis"``, ``"x2-axis"`` and
    ``"rotation:<l>"``; they are checked by :func:`build_domain`.
    """

    kind: str
    radius: float = 1.0
    w1: float = 1.0
    w2: float = 1.0
    vertices: tuple = ()
    symmetry: tuple = ()

    @classmethod
    def disk(cls, radius: float = 1.0, symmetry=()) -> "DomainSpec":
        return cls(kind="disk", radius=float(radius), symmetry=tuple(symmetry))

    @classmethod
    def rectangle(cls, w1: float, w2: float, symmetry=("x1-axis", "x2-axis")) -> "DomainSpec":
        return cls(kind="rectangle", w1=float(w1), w2=float(w2), symmetry=tuple(symmetry))

    @classmethod
    def polygon(cls, vertices, symmetry=()) -> "DomainSpec":
        verts = tuple((float(x), float(y)) for x, y in vertices)
        return cls(kind="polygon", vertices=verts, symmetry=tuple(symmetry))

    def to_dict(self) -> dict:
        if self.kind == "disk":
            d = {"kind": "disk", "radius": self.radius}
        elif self.kind == "rectangle":
            d = {"kind": "rectangle", "w1": self.w1, "w2": self.w2}
        else:
            d = {"kind": "polygon", "vertices": [list(v) for v in self.vertices]}
        d["symmetry"] = list(self.symmetry)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        d = dict(d)
        if "kind" not in d:
            raise GeometryError("domain needs a 'kind'")
        kind = d.pop("kind")
        required = {"rectangle": ("w1", "w2"), "polygon": ("vertices",)}.get(kind, ())
        missing = [key for key in required if key not in d]
        if missing:
            raise GeometryError(f"{kind} domain is missing keys: {missing}")
        sym = tuple(d.pop("symmetry", ()))
        if kind == "disk":
            spec = cls.disk(d.pop("radius", 1.0), symmetry=sym)
        elif kind == "rectangle":
            spec = cls.rectangle(d.pop("w1"), d.pop("w2"), symmetry=sym or ("x1-axis", "x2-axis"))
        elif kind == "polygon":
            spec = cls.polygon(d.pop("vertices"), symmetry=sym)
        else:
            raise GeometryError(f"unknown domain kind {kind!r}")
        if d:
            raise GeometryError(f"unknown domain keys: {sorted(d)}")
        return spec


@dataclass(frozen=True)
class Domain:
    """Validated boundary representation of a domain.

    For disks ``vertices`` is empty and ``radius`` describes the circle.
    """

    kind: str
    radius: float
    vertices: np.ndarray
    area: float
    diam: float
    symmetry: frozenset

    @property
    def is_disk(self) -> bool:
        return self.kind == "disk"

    def has_symmetry(self, tag: str) -> bool:
        if tag in self.symmetry:
            return True
        return tag.startswith("rotation:") and "rotation:any" in self.symmetry

    def contains(self, pts, margin: float = 0.0) -> np.ndarray:
        """Strict containment test, ``margin`` away from the boundary."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.is_disk:
            return np.hypot(pts[:, 0], pts[:, 1]) < self.radius - margin
        inside = _points_in_polygon(pts, self.vertices)
        dist = _distance_to_polyline(pts, np.vstack([self.vertices, self.vertices[:1]]))
        return inside & (dist > max(margin, 0.0))

    def to_spec(self) -> DomainSpec:
        if self.is_disk:
            return DomainSpec.disk(self.radius, symmetry=tuple(sorted(self.symmetry - {"rotation:any"})))
        return DomainSpec.polygon(self.vertices, symmetry=tuple(sorted(self.symmetry)))


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _is_simple(v: np.ndarray) -> bool:
    n = len(v)
    for i in range(n):
        a1, a2 = v[i], v[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(a1, a2, v[j], v[(j + 1) % n]):
                return False
    # repeated vertices also break simplicity
    return len({(round(x, 14), round(y, 14)) for x, y in v}) == n


def _points_in_polygon(pts: np.ndarray, v: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x1, y1 = v[:, 0][None, :], v[:, 1][None, :]
    x2, y2 = np.roll(v[:, 0], -1)[None, :], np.roll(v[:, 1], -1)[None, :]
    cond = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
    crossings = np.sum(cond & (x < xint), axis=1)
    return crossings % 2 == 1


def _distance_to_polyline(pts: np.ndarray, line: np.ndarray) -> np.ndarray:
    a = line[:-1][None, :, :]
    b = line[1:][None, :, :]
    p = pts[:, None, :]
    ab = b - a
    t = np.clip(np.sum((p - a) * ab, axis=2) / np.maximum(np.sum(ab * ab, axis=2), 1e-300), 0, 1)
    proj = a + t[..., None] * ab
    return np.min(np.linalg.norm(p - proj, axis=2), axis=1)


def _same_point_set(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    if len(a) != len(b):
        return False
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return bool(np.all(d.min(axis=1) <= tol) and np.all(d.min(axis=0) <= tol))


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def build_domain(spec: DomainSpec) -> Domain:
    """Validate ``spec`` and return its boundary representation."""
    tags = set(spec.symmetry)
    for tag in tags:
        if tag not in ("x1-axis", "x2-axis") and not tag.startswith("rotation:"):
            raise GeometryError(f"unknown symmetry tag {tag!r}")
    if spec.kind == "disk":
        if spec.radius <= 0:
            raise GeometryError("disk radius must be positive")
        r = spec.radius
        # every tag holds for a centred circle
        return Domain(kind="disk", radius=r, vertices=np.zeros((0, 2)), area=math.pi * r * r,
                      diam=2 * r, symmetry=frozenset(tags | {"x1-axis", "x2-axis", "rotation:any"}))
    if spec.kind == "rectangle":
        if spec.w1 <= 0 or spec.w2 <= 0:
            raise GeometryError("rectangle half-widths must be positive")
        w1, w2 = spec.w1, spec.w2
        verts = np.array([[-w1, -w2], [w1, -w2], [w1, w2], [-w1, w2]], dtype=float)
        tags |= {"x1-axis", "x2-axis"}
    elif spec.kind == "polygon":
        verts = np.array(spec.vertices, dtype=float)
        if verts.ndim != 2 or len(verts) < 3:
            raise GeometryError("polygon needs at least three vertices")
    else:
        raise GeometryError(f"unknown domain kind {spec.kind!r}")
    if not _is_simple(verts):
        raise GeometryError("polygon is self-intersecting")
    area = _signed_area(verts)
    if area <= 0:
        raise GeometryError("polygon vertices must be counterclockwise")
    closed = np.vstack([verts, verts[:1]])
    origin = np.zeros((1, 2))
    if not (_points_in_polygon(origin, verts)[0] and _distance_to_polyline(origin, closed)[0] > 1e-12):
        raise GeometryError("origin-not-interior: the origin must lie strictly inside the domain")
    diam = float(np.max(np.linalg.norm(verts[:, None] - verts[None, :], axis=2)))
    tol = SYMMETRY_TOL * max(1.0, diam)
    for tag in tags:
        if tag == "x1-axis":
            image = verts * np.array([1.0, -1.0])
        elif tag == "x2-axis":
            image = verts * np.array([-1.0, 1.0])
        else:
            ell = int(tag.split(":")[1])
            if ell < 1:
                raise GeometryError(f"bad rotation order in {tag!r}")
            image = verts @ _rotation(2 * math.pi / ell).T
        if not _same_point_set(verts, image, tol):
            raise GeometryError(f"symmetry tag {tag!r} fails validation")
    return Domain(kind=spec.kind if spec.kind == "polygon" else "rectangle", radius=0.0,
                  vertices=verts, area=area, diam=diam, symmetry=frozenset(tags))


# --------------------------------------------------------------------------
# cracks


def normalize_angle(alpha: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.fmod(alpha, 2 * math.pi)
    if a <= -math.pi:
        a += 2 * math.pi
    elif a > math.pi:
        a -= 2 * math.pi
    return a


@dataclass(frozen=True)
class CrackGeometry:
    """The slit Gamma_a from the boundary through 0 up to the pole.

    ``direction`` is (cos alpha, sin alpha); the plus side of the crack is
    the side into which ``normal`` = (-sin alpha, cos alpha) points.
    """

    alpha: float
    t_pole: float
    exit_point: tuple
    exit_edge: int = -1

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.alpha), math.sin(self.alpha)])

    @property
    def normal(self) -> np.ndarray:
        return np.array([-math.sin(self.alpha), math.cos(self.alpha)])

    @property
    def pole(self) -> np.ndarray:
        return self.t_pole * self.direction

    @property
    def crack_segment(self) -> tuple:
        return (np.asarray(self.exit_point), self.pole)

    @property
    def s_a_segment(self) -> tuple:
        return (np.zeros(2), self.pole)


def _ray_exit(domain: Domain, direction: np.ndarray) -> tuple[np.ndarray, int, list]:
    """Intersections of the ray s*direction, s > 0, with the boundary."""
    if domain.is_disk:
        return domain.radius * direction, -1, [domain.radius]
    v = domain.vertices
    n = len(v)
    hits = []
    for i in range(n):
        p, q = v[i], v[(i + 1) % n]
        e = q - p
        mat = np.array([[direction[0], -e[0]], [direction[1], -e[1]]])
        det = np.linalg.det(mat)
        if abs(det) < 1e-300:
            continue
        s, u = np.linalg.solve(mat, p)
        if s > 0 and -1e-14 <= u <= 1 + 1e-14:
            hits.append((s, u, i))
    if not hits:
        raise GeometryError("ray does not meet the boundary")
    hits.sort()
    s, u, i = hits[0]
    tol = SNAP_TOL * domain.diam
    edge_len = np.linalg.norm(v[(i + 1) % n] - v[i])
    if u * edge_len <= tol or (1 - u) * edge_len <= tol:
        raise GeometryError("crack exits through a polygon corner; configuration rejected")
    distinct = sorted({round(h[0], 12) for h in hits})
    return s * direction, i, distinct


def insert_crack(domain: Domain, alpha: float, t_pole: float) -> CrackGeometry:
    """Crack of slope ``alpha`` with the pole at distance ``t_pole``."""
    if t_pole < 0:
        raise GeometryError("t_pole must be non-negative")
    alpha = normalize_angle(float(alpha))
    d = np.array([math.cos(alpha), math.sin(alpha)])
    exit_pt, edge, hits = _ray_exit(domain, -d)
    if len(hits) != 1:
        raise GeometryError("ray exits through 0-side more than once (degenerate clipping)")
    if t_pole > 0:
        if not domain.contains(t_pole * d)[0]:
            raise GeometryError("pole outside domain")
        if not domain.is_disk:
            _, _, fwd = _ray_exit(domain, d)
            if fwd[0] <= t_pole:
                raise GeometryError("pole outside domain")
    return CrackGeometry(alpha=alpha, t_pole=float(t_pole), exit_point=tuple(map(float, exit_pt)),
                         exit_edge=edge)


# --------------------------------------------------------------------------
# sizing


@dataclass(frozen=True)
class SizeField:
    """Target element size, graded toward a set of centres.

    ``size(x) = h * max(d/L, (h/L)**mu) ** (1 - 1/mu)`` where ``d`` is the
    distance to the nearest centre and ``L`` the reference length; then
    optionally capped by ``cap`` within ``cap_radius`` of ``cap_segment``
    (the cap relaxes with slope 0.3 beyond that distance) and multiplied
    by ``max(1, |x|/growth_from)`` for far-field coarsening.
    """

    h: float
    mu: float = 2.0
    length: float = 1.0
    centers: tuple = ()
    cap: float = math.inf
    cap_segment: tuple | None = None
    cap_radius: float = 0.0
    growth_from: float = math.inf

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        s = np.full(len(pts), self.h)
        if self.centers and self.mu > 1:
            c = np.asarray(self.centers, dtype=float)
            d = np.min(np.linalg.norm(pts[:, None, :] - c[None, :, :], axis=2), axis=1)
            floor = (self.h / self.length) ** self.mu
            s = self.h * np.minimum(np.maximum(d / self.length, floor), 1.0) ** (1 - 1 / self.mu)
        if self.cap_segment is not None and math.isfinite(self.cap):
            line = np.asarray(self.cap_segment, dtype=float)
            dist = _distance_to_polyline(pts, line)
            # Lipschitz continuation of the cap keeps refinement passes few
            s = np.minimum(s, self.cap + 0.3 * np.maximum(dist - self.cap_radius, 0.0))
        if math.isfinite(self.growth_from):
            s = s * np.maximum(1.0, np.hypot(pts[:, 0], pts[:, 1]) / self.growth_from)
        return s


def _discretize_path(pts: np.ndarray, size: SizeField, closed: bool = False) -> np.ndarray:
    """Place nodes along a polyline so spacing follows ``size``.

    The node count on each piece is the integral of 1/size, rounded up; the
    nodes equidistribute that integral.  Input vertices are always kept.
    """
    path = np.vstack([pts, pts[:1]]) if closed else np.asarray(pts, dtype=float)
    out = [path[0]]
    for p, q in zip(path[:-1], path[1:]):
        length = float(np.linalg.norm(q - p))
        if length == 0:
            continue
        u = _dense_parameter(p, q, size)
        xy = p[None, :] + u[:, None] * (q - p)[None, :]
        inv = 1.0 / size(xy)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(u) * length)])
        m = max(1, int(math.ceil(cum[-1] - 1e-9)))
        targets = np.linspace(0, cum[-1], m + 1)[1:-1]
        ui = np.interp(targets, cum, u)
        for val in ui:
            out.append(p + val * (q - p))
        out.append(q)
    arr = np.array(out)
    if closed:
        arr = arr[:-1]
    return arr


def _dense_parameter(p, q, size: SizeField) -> np.ndarray:
    u = list(np.linspace(0.0, 1.0, 2001))
    length = float(np.linalg.norm(q - p))
    centers = list(size.centers)
    if size.cap_segment is not None:
        centers += [tuple(c) for c in size.cap_segment]
    for c in centers:
        c = np.asarray(c, dtype=float)
        t0 = float(np.clip(np.dot(c - p, q - p) / length ** 2, 0, 1))
        dist = float(np.linalg.norm(p + t0 * (q - p) - c))
        base = max(dist, 1e-14 * max(length, 1.0))
        geo = np.geomspace(base, max(length, base * 2), 400)
        off = np.sqrt(np.maximum(geo ** 2 - dist ** 2, 0.0)) / length
        u.extend(np.clip(t0 + off, 0, 1))
        u.extend(np.clip(t0 - off, 0, 1))
        u.append(t0)
    return np.unique(np.array(u))


def _arc_points(radius: float, theta0: float, theta1: float, size: SizeField) -> np.ndarray:
    """Nodes on the arc from theta0 to theta1 (both included)."""
    th = np.linspace(theta0, theta1, 20001)
    xy = radius * np.column_stack([np.cos(th), np.sin(th)])
    inv = 1.0 / size(xy)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(th) * radius)])
    m = max(2, int(math.ceil(cum[-1] - 1e-9)))
    ti = np.interp(np.linspace(0, cum[-1], m + 1), cum, th)
    ti[0], ti[-1] = theta0, theta1
    return radius * np.column_stack([np.cos(ti), np.sin(ti)])


# --------------------------------------------------------------------------
# triangulation helpers


def _triangulate(vertices: np.ndarray, segments: np.ndarray, size: SizeField,
                 holes: np.ndarray | None = None, max_passes: int = 25) -> tuple[np.ndarray, np.ndarray]:
    """Constrained quality triangulation without Steiner points on segments."""
    pslg = {"vertices": vertices, "segments": segments}
    if holes is not None and len(holes):
        pslg["holes"] = holes
    hmax = float(np.max(size(vertices)))
    area0 = math.sqrt(3) / 4 * hmax ** 2
    mesh = tr.triangulate(pslg, f"pq30YYa{area0:.17g}Q")
    for _ in range(max_passes):
        v, t = mesh["vertices"], mesh["triangles"]
        cen = v[t].mean(axis=1)
        target = math.sqrt(3) / 4 * size(cen) ** 2
        area = _areas(v, t)
        if np.all(area <= 1.6 * target):
            break
        mesh = tr.triangulate({"vertices": v, "segments": mesh["segments"], "triangles": t,
                               "triangle_max_area": target, **({"holes": holes} if holes is not None
                                                               and len(holes) else {})},
                              "rpq30YYaQ")
    else:
        raise MeshQualityError("size targets not met after bounded refinement passes")
    v = np.asarray(mesh["vertices"], dtype=float)
    t = np.asarray(mesh["triangles"], dtype=np.int64)
    if len(v) < len(vertices) or not np.array_equal(v[: len(vertices)], vertices):
        raise MeshQualityError("triangulator reordered input vertices")
    return v, t


def _areas(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def min_angles(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Smallest interior angle (degrees) of each triangle."""
    p = v[t]
    angs = []
    for i in range(3):
        a = p[:, (i + 1) % 3] - p[:, i]
        b = p[:, (i + 2) % 3] - p[:, i]
        cosang = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        angs.append(np.degrees(np.arccos(np.clip(cosang, -1, 1))))
    return np.min(np.column_stack(angs), axis=1)


def _reflect_upper(v: np.ndarray, t: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Mirror an upper half mesh through the x1-axis, sharing axis nodes."""
    on_axis = np.abs(v[:, 1]) <= tol
    v = v.copy()
    v[on_axis, 1] = 0.0
    new_index = np.arange(len(v))
    off = np.flatnonzero(~on_axis)
    new_index[off] = len(v) + np.arange(len(off))
    mirrored = v[off] * np.array([1.0, -1.0])
    verts = np.vstack([v, mirrored])
    lower = new_index[t][:, [0, 2, 1]]
    return verts, np.vstack([t, lower])


def duplicate_crack(vertices: np.ndarray, triangles: np.ndarray, crack_nodes: np.ndarray,
                    normal: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split the crack: every node in ``crack_nodes`` gets a minus copy.

    Triangles on the side ``x . normal < 0`` are rewired to the copies.
    Returns ``(vertices, triangles, pairs)`` with ``pairs[:, 0]`` plus nodes.
    """
    crack_nodes = np.asarray(crack_nodes, dtype=np.int64)
    n0 = len(vertices)
    minus = n0 + np.arange(len(crack_nodes))
    remap = np.full(n0, -1, dtype=np.int64)
    remap[crack_nodes] = minus
    tri = triangles.copy()
    cen = vertices[tri].mean(axis=1)
    # side is decided relative to the crack line through the touched node
    for j in range(3):
        idx = tri[:, j]
        hit = remap[idx] >= 0
        rel = cen[hit] - vertices[idx[hit]]
        below = rel @ normal < 0
        rows = np.flatnonzero(hit)[below]
        tri[rows, j] = remap[idx[rows]]
    verts = np.vstack([vertices, vertices[crack_nodes]])
    return verts, tri, np.column_stack([crack_nodes, minus])


# --------------------------------------------------------------------------
# cracked mesh


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CrackedMesh:
    """Triangulation of the slit domain with duplicated crack nodes.

    ``crack_pairs[i] = (plus, minus)`` are coincident nodes on the crack;
    ``s_a_pairs`` is the subset on the segment from 0 to the pole.  The tip
    node (the pole, or 0 when the pole sits at the origin) is not
    duplicated.  ``tip_node`` is -1 for crack-free meshes.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    crack_pairs: np.ndarray
    tip_node: int
    dirichlet_nodes: np.ndarray
    s_a_pairs: np.ndarray
    h: float
    grading_exponent: float
    crack: CrackGeometry | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("vertices", "triangles", "crack_pairs", "dirichlet_nodes", "s_a_pairs"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name))))

    @property
    def n_nodes(self) -> int:
        return len(self.vertices)

    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def euler_characteristic(self) -> int:
        used = np.unique(self.triangles)
        return len(used) - len(self.edges()) + len(self.triangles)

    def areas(self) -> np.ndarray:
        return _areas(self.vertices, self.triangles)

    def min_angle(self) -> float:
        return float(np.min(min_angles(self.vertices, self.triangles)))

    def identical_to(self, other: "CrackedMesh") -> bool:
        return (np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.triangles, other.triangles)
                and np.array_equal(self.crack_pairs, other.crack_pairs)
                and self.tip_node == other.tip_node
                and np.array_equal(self.dirichlet_nodes, other.dirichlet_nodes))


def default_h(domain: Domain) -> float:
    return 0.02 * domain.diam


def size_field_for(domain: Domain, crack: CrackGeometry | None, h: float, grading_exponent: float,
                   extra_centers=(), s_a_resolution: float = 10.0) -> SizeField:
    centers = []
    if crack is not None:
        centers.append(tuple(crack.pole))
    centers.extend(tuple(map(float, c)) for c in extra_centers)
    cap, cap_seg, cap_r = math.inf, None, 0.0
    if crack is not None and crack.t_pole > 0:
        cap = crack.t_pole / s_a_resolution
        cap_seg = (tuple(np.zeros(2)), tuple(crack.pole))
        cap_r = crack.t_pole
    return SizeField(h=h, mu=grading_exponent if centers else 1.0, length=domain.diam,
                     centers=tuple(centers), cap=cap, cap_segment=cap_seg, cap_radius=cap_r)


def _crack_line_points(crack: CrackGeometry, size: SizeField) -> np.ndarray:
    """Nodes from the exit point through 0 to the pole (inclusive)."""
    pts = [np.asarray(crack.exit_point), np.zeros(2)]
    if crack.t_pole > 0:
        pts.append(crack.pole)
    return _discretize_path(np.array(pts), size)


def generate_mesh(domain: Domain, crack: CrackGeometry | None, h: float | None = None,
                  grading_exponent: float = 2.0, symmetric: bool = False,
                  extra_centers=(), s_a_resolution: float = 10.0) -> CrackedMesh:
    """Graded conforming triangulation of the domain slit along ``crack``.

    ``symmetric=True`` meshes the upper half and mirrors it, which needs an
    x1-axis symmetric domain and a crack on the x1-axis (alpha in {0, pi}).
    ``extra_centers`` adds grading points (the origin for finite-pole
    minimizations).  Within distance ``t_pole`` of S_a the size is capped
    at ``t_pole / s_a_resolution``.
    """
    if h is None:
        h = default_h(domain)
    if h <= 0:
        raise GeometryError("h must be positive")
    if grading_exponent < 1:
        raise GeometryError("grading_exponent must be >= 1")
    size = size_field_for(domain, crack, h, grading_exponent, extra_centers, s_a_resolution)
    if symmetric:
        v, t, crack_idx, tip, bnd = _mesh_symmetric(domain, crack, size)
    else:
        v, t, crack_idx, tip, bnd = _mesh_general(domain, crack, size)
    if crack is not None:
        verts, tris, pairs = duplicate_crack(v, t, crack_idx, crack.normal)
        plus_pos = verts[pairs[:, 0]] @ crack.direction
        order = np.argsort(plus_pos, kind="stable")
        pairs = pairs[order]
        pos = verts[pairs[:, 0]] @ crack.direction
        s_a = pairs[(pos >= -1e-14) & (pos < crack.t_pole)] if crack.t_pole > 0 else pairs[:0]
        # boundary nodes on the crack (the exit point) keep both copies Dirichlet
        bset = set(int(i) for i in bnd)
        extra = [int(m) for p, m in pairs if int(p) in bset]
        dirichlet = np.array(sorted(bset | set(extra)), dtype=np.int64)
    else:
        verts, tris = v, t
        pairs = np.zeros((0, 2), dtype=np.int64)
        s_a = pairs
        tip = -1
        dirichlet = np.array(sorted(set(int(i) for i in bnd)), dtype=np.int64)
    mesh = CrackedMesh(vertices=verts, triangles=tris.astype(np.int64), crack_pairs=pairs.astype(np.int64),
                       tip_node=int(tip), dirichlet_nodes=dirichlet, s_a_pairs=s_a.astype(np.int64),
                       h=float(h), grading_exponent=float(grading_exponent), crack=crack,
                       meta={"symmetric": bool(symmetric)})
    if mesh.min_angle() < MIN_ANGLE_DEG:
        raise MeshQualityError(f"minimum angle {mesh.min_angle():.2f} below {MIN_ANGLE_DEG}")
    return mesh


def _boundary_loop(domain: Domain, size: SizeField, start: np.ndarray | None, edge: int) -> np.ndarray:
    """Closed boundary node loop (counterclockwise), starting at ``start``."""
    if domain.is_disk:
        th0 = 0.0 if start is None else math.atan2(start[1], start[0])
        pts = _arc_points(domain.radius, th0, th0 + 2 * math.pi, size)[:-1]
        if start is not None:
            pts[0] = start
        return pts
    v = domain.vertices
    if start is not None:
        n = len(v)
        order = [start] + [v[(edge + 1 + i) % n] for i in range(n)]
        poly = np.array(order)
    else:
        poly = v
    return _discretize_path(poly, size, closed=True)


def _mesh_general(domain: Domain, crack: CrackGeometry | None, size: SizeField):
    start = None if crack is None else np.asarray(crack.exit_point)
    edge = -1 if crack is None else crack.exit_edge
    loop = _boundary_loop(domain, size, start, edge)
    nb = len(loop)
    segs = [[i, (i + 1) % nb] for i in range(nb)]
    verts = [loop]
    crack_idx = np.zeros(0, dtype=np.int64)
    tip = -1
    if crack is not None:
        line = _crack_line_points(crack, size)
        # line[0] is the exit point, already loop[0]
        inner = line[1:]
        idx = np.concatenate([[0], nb + np.arange(len(inner))])
        verts.append(inner)
        segs += [[int(a), int(b)] for a, b in zip(idx[:-1], idx[1:])]
        crack_idx = idx[:-1]
        tip = int(idx[-1])
    vin = np.vstack(verts)
    v, t = _triangulate(vin, np.array(segs, dtype=np.int32), size)
    return v, t, crack_idx, tip, np.arange(nb)


def _clip_upper(poly: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon against y >= 0."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        pin, qin = p[1] >= 0, q[1] >= 0
        if pin:
            out.append(p)
        if pin != qin:
            s = p[1] / (p[1] - q[1])
            out.append(p + s * (q - p))
    res = np.array(out)
    res[np.abs(res[:, 1]) < 1e-15, 1] = 0.0
    return res


def _mesh_symmetric(domain: Domain, crack: CrackGeometry | None, size: SizeField):
    if not domain.has_symmetry("x1-axis"):
        raise GeometryError("symmetric mode needs an x1-axis symmetric domain")
    if crack is not None and abs(math.sin(crack.alpha)) > 1e-15:
        raise GeometryError("symmetric mode needs the crack on the x1-axis")
    tol = 1e-12 * domain.diam
    if domain.is_disk:
        R = domain.radius
        xl, xr = -R, R
        arc = _arc_points(R, 0.0, math.pi, size)[1:-1]
    else:
        half = _clip_upper(domain.vertices)
        on = np.abs(half[:, 1]) <= tol
        xs = half[on, 0]
        # the axis chord through the origin
        xl, xr = float(np.max(xs[xs < 0])), float(np.min(xs[xs > 0]))
        if np.count_nonzero(on) != 2:
            raise GeometryError("symmetric mode supports domains whose axis section is one interval")
        # walk the upper boundary from (xr, 0) to (xl, 0)
        i0 = int(np.flatnonzero(on & (np.abs(half[:, 0] - xr) <= tol))[0])
        n = len(half)
        path = [half[(i0 + j) % n] for j in range(n)]
        j_end = next(j for j, p in enumerate(path) if abs(p[1]) <= tol and abs(p[0] - xl) <= tol)
        arc = _discretize_path(np.array(path[: j_end + 1]), size)[1:-1]
    marks = [xl, 0.0, xr]
    if crack is not None and crack.t_pole > 0:
        marks.append(crack.pole[0])
    marks = sorted(set(marks))
    axis = _discretize_path(np.array([[m, 0.0] for m in marks]), size)
    # loop: axis left->right, then arc right->left
    loop = np.vstack([axis, arc])
    nb = len(loop)
    segs = np.array([[i, (i + 1) % nb] for i in range(nb)], dtype=np.int32)
    v, t = _triangulate(loop, segs, size)
    v, t = _reflect_upper(v, t, tol)
    n_axis = len(axis)
    bnd_upper = np.concatenate([[0, n_axis - 1], np.arange(n_axis, nb)])
    # mirrored arc nodes sit after the shared ones; find them by coordinates
    arc_up = v[bnd_upper]
    mirrored = arc_up * np.array([1.0, -1.0])
    from scipy.spatial import cKDTree
    tree = cKDTree(v)
    _, mir_idx = tree.query(mirrored)
    bnd = np.unique(np.concatenate([bnd_upper, mir_idx]))
    crack_idx = np.zeros(0, dtype=np.int64)
    tip = -1
    if crack is not None:
        ax = np.arange(n_axis)
        ax_x = v[ax, 0]
        s = ax_x * crack.direction[0]
        tip_s = crack.t_pole
        tip = int(ax[np.argmin(np.abs(s - tip_s))])
        crack_idx = ax[s < tip_s - tol]
    return v, t, crack_idx, tip, bnd


# --------------------------------------------------------------------------
# text format


def write_mesh(mesh: CrackedMesh, path) -> None:
    """Write the ``ABMESH 1`` line-oriented text format."""
    lines = ["ABMESH 1", str(len(mesh.vertices))]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(str(len(mesh.triangles)))
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines.append(str(len(mesh.crack_pairs)))
    lines += [f"{p} {m}" for p, m in mesh.crack_pairs.tolist()]
    lines.append(str(len(mesh.dirichlet_nodes)))
    lines += [str(i) for i in mesh.dirichlet_nodes.tolist()]
    lines.append(str(mesh.tip_node))
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path, h: float = float("nan"), grading_exponent: float = float("nan"),
              crack: CrackGeometry | None = None) -> CrackedMesh:
    """Read an ``ABMESH 1`` file; S_a pairs are recovered when ``crack`` is given."""
    tokens = Path(path).read_text().split("\n")
    it = iter(t for t in tokens if t.strip())
    if next(it).strip() != "ABMESH 1":
        raise GeometryError("not an ABMESH 1 file")
    nv = int(next(it))
    verts = np.array([[float(s) for s in next(it).split()] for _ in range(nv)]).reshape(nv, 2)
    nt = int(next(it))
    tris = np.array([[int(s) for s in next(it).split()] for _ in range(nt)], dtype=np.int64).reshape(nt, 3)
    npair = int(next(it))
    pairs = np.array([[int(s) for s in next(it).split()] for _ in range(npair)],
                     dtype=np.int64).reshape(npair, 2)
    nd = int(next(it))
    dirichlet = np.array([int(next(it)) for _ in range(nd)], dtype=np.int64)
    tip = int(next(it))
    s_a = pairs[:0]
    if crack is not None and crack.t_pole > 0 and npair:
        pos = verts[pairs[:, 0]] @ crack.direction
        s_a = pairs[(pos >= -1e-14) & (pos < crack.t_pole)]
    return CrackedMesh(vertices=verts, triangles=tris, crack_pairs=pairs, tip_node=tip,
                       dirichlet_nodes=dirichlet, s_a_pairs=s_a, h=h, grading_exponent=grading_exponent,
                       crack=crack)


# --------------------------------------------------------------------------
# nested disks for truncated blow-up problems


def nested_disk_mesh(radii, t_pole: float, size: SizeField) -> CrackedMesh:
    """Symmetric mesh of D_Rmax slit along x2 = 0, x1 <= t_pole.

    Every circle in ``radii`` is a constrained polygon, so the part of the
    mesh inside a smaller circle is itself a valid mesh of that disk (see
    :func:`restrict_to_radius`).  Nested discrete spaces make truncated
    minima monotone in the radius.
    """
    radii = sorted(float(r) for r in radii)
    rmax = radii[-1]
    if not 0 < t_pole < radii[0]:
        raise GeometryError("tip must lie inside the smallest disk")
    marks = sorted(set([-r for r in radii] + [0.0, t_pole] + radii))
    axis = _discretize_path(np.array([[m, 0.0] for m in marks]), size)
    n_axis = len(axis)
    verts = [axis]
    segs = [[i, i + 1] for i in range(n_axis - 1)]
    arcs = {}
    offset = n_axis
    for r in radii:
        arc = _arc_points(r, 0.0, math.pi, size)[1:-1]
        i_right = int(np.argmin(np.abs(axis[:, 0] - r)))
        i_left = int(np.argmin(np.abs(axis[:, 0] + r)))
        chain = [i_right] + list(offset + np.arange(len(arc))) + [i_left]
        segs += [[a, b] for a, b in zip(chain[:-1], chain[1:])]
        arcs[r] = chain
        verts.append(arc)
        offset += len(arc)
    vin = np.vstack(verts)
    v, t = _triangulate(vin, np.array(segs, dtype=np.int32), size)
    tol = 1e-12 * rmax
    v, t = _reflect_upper(v, t, tol)
    tip = int(np.argmin(np.abs(axis[:, 0] - t_pole)))
    crack_idx = np.arange(n_axis)[axis[:, 0] < t_pole - tol]
    normal = np.array([0.0, 1.0])
    verts_d, tris, pairs = duplicate_crack(v, t, crack_idx, normal)
    pairs = pairs[np.argsort(verts_d[pairs[:, 0], 0], kind="stable")]
    xs = verts_d[pairs[:, 0], 0]
    s_a = pairs[(xs >= -tol) & (xs < t_pole)]
    rad = np.hypot(verts_d[:, 0], verts_d[:, 1])
    dirichlet = np.flatnonzero(np.abs(rad - rmax) <= 1e-9 * rmax)
    crack = CrackGeometry(alpha=0.0, t_pole=float(t_pole), exit_point=(-rmax, 0.0))
    return CrackedMesh(vertices=verts_d, triangles=tris, crack_pairs=pairs, tip_node=tip,
                       dirichlet_nodes=dirichlet, s_a_pairs=s_a, h=size.h, grading_exponent=size.mu,
                       crack=crack, meta={"symmetric": True, "radii": tuple(radii)})


def restrict_to_radius(mesh: CrackedMesh, radius: float) -> CrackedMesh:
    """Sub-mesh inside the constrained circle polygon of the given radius."""
    v = mesh.vertices
    rad = np.hypot(v[:, 0], v[:, 1])
    on = np.flatnonzero(np.abs(rad - radius) <= 1e-9 * radius)
    if len(on) < 3:
        raise GeometryError(f"no constrained circle of radius {radius}")
    ang = np.arctan2(v[on, 1], v[on, 0])
    poly = v[on][np.argsort(ang, kind="stable")]
    # drop coincident crack copies from the polygon
    keep = np.ones(len(poly), dtype=bool)
    keep[1:] = np.linalg.norm(np.diff(poly, axis=0), axis=1) > 0
    poly = poly[keep]
    cen = v[mesh.triangles].mean(axis=1)
    inside = _points_in_polygon(cen, poly)
    tri = mesh.triangles[inside]
    used = np.unique(tri)
    new = np.full(len(v), -1, dtype=np.int64)
    new[used] = np.arange(len(used))
    pairs = mesh.crack_pairs
    ok = (new[pairs[:, 0]] >= 0) & (new[pairs[:, 1]] >= 0)
    pairs = new[pairs[ok]]
    s_ok = (new[mesh.s_a_pairs[:, 0]] >= 0) & (new[mesh.s_a_pairs[:, 1]] >= 0)
    s_a = new[mesh.s_a_pairs[s_ok]]
    dirichlet = new[np.intersect1d(on, used)]
    crack = mesh.crack
    if crack is not None:
        crack = CrackGeometry(alpha=crack.alpha, t_pole=crack.t_pole, exit_point=(-radius, 0.0))
    meta = dict(mesh.meta)
    meta["radius"] = float(radius)
    return CrackedMesh(vertices=v[used], triangles=new[tri], crack_pairs=pairs,
                       tip_node=int(new[mesh.tip_node]), dirichlet_nodes=np.sort(dirichlet),
                       s_a_pairs=s_a, h=mesh.h, grading_exponent=mesh.grading_exponent, crack=crack,
                       meta=meta)
