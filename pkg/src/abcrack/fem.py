"""P1 finite elements on cracked meshes.

Stiffness and mass are assembled over all nodes; Dirichlet nodes are then
deleted and every minus crack node is tied to its plus twin with weight -1,
which enforces ``gamma_plus + gamma_minus = 0`` exactly.  The reduction is a
congruence ``P^T K P`` so symmetry and definiteness carry over.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh, splu

SOLVER_TOL = 1e-9
CLUSTER_TOL = 1e-6


class AssemblyError(ValueError):
    pass


class EigenSolveError(RuntimeError):
    pass


def element_gradients(vertices: np.ndarray, triangles: np.ndarray):
    """Signed areas and the constant P1 basis gradients of each triangle.

    Returns ``area`` of shape (nt,) and ``grad`` of shape (nt, 3, 2).
    """
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    if np.any(np.abs(area) <= 1e-300):
        raise AssemblyError("degenerate (zero-area) triangle")
    # gradient of barycentric lambda_i = rot90(opposite edge) / (2 area)
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    grad = np.stack([np.column_stack([-e[:, 1], e[:, 0]]) for e in (e0, e1, e2)], axis=1)
    grad = grad / det[:, None, None]
    return np.abs(area), grad


def assemble(mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Full-node P1 stiffness ``K`` and mass ``M``."""
    v, t = mesh.vertices, mesh.triangles
    area, grad = element_gradients(v, t)
    ke = area[:, None, None] * np.einsum("eik,ejk->eij", grad, grad)
    me = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))[None]
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = len(v)
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    # exact symmetry regardless of summation order
    K = ((K + K.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    K.sum_duplicates()
    M.sum_duplicates()
    return K, M


@dataclass(frozen=True, eq=False)
class DofMap:
    """Node-to-DOF map with signed weights.

    ``dof[i]`` is the reduced index of node ``i`` (-1 if eliminated) and
    ``sign[i]`` is +1 or -1.  ``P`` is the (nodes x dofs) prolongation.
    """

    dof: np.ndarray
    sign: np.ndarray
    n_dofs: int
    P: sp.csr_matrix

    @classmethod
    def from_mesh(cls, mesh, antiperiodic: bool = True) -> "DofMap":
        n = mesh.n_nodes
        eliminated = np.zeros(n, dtype=bool)
        eliminated[mesh.dirichlet_nodes] = True
        minus = mesh.crack_pairs[:, 1] if len(mesh.crack_pairs) else np.zeros(0, dtype=np.int64)
        plus = mesh.crack_pairs[:, 0] if len(mesh.crack_pairs) else np.zeros(0, dtype=np.int64)
        used = np.zeros(n, dtype=bool)
        used[np.unique(mesh.triangles)] = True
        own = used & ~eliminated
        own[minus] = False
        dof = np.full(n, -1, dtype=np.int64)
        dof[own] = np.arange(int(own.sum()))
        sign = np.zeros(n)
        sign[own] = 1.0
        ok = ~eliminated[minus]
        dof[minus[ok]] = dof[plus[ok]]
        sign[minus[ok]] = -1.0 if antiperiodic else 1.0
        keep = dof >= 0
        P = sp.csr_matrix((sign[keep], (np.flatnonzero(keep), dof[keep])), shape=(n, int(own.sum())))
        return cls(dof=dof, sign=sign, n_dofs=int(own.sum()), P=P)

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Full nodal vector(s) from reduced coefficients."""
        return self.P @ x

    def restrict(self, u: np.ndarray) -> np.ndarray:
        """Reduced coefficients of a compliant full vector."""
        idx = np.flatnonzero(self.sign > 0)
        out = np.zeros(self.n_dofs) if u.ndim == 1 else np.zeros((self.n_dofs, u.shape[1]))
        out[self.dof[idx]] = u[idx]
        return out


def reduce(K, M, dofmap: DofMap):
    """Congruence ``(P^T K P, P^T M P)``."""
    if K.shape[0] != dofmap.P.shape[0]:
        raise ValueError("matrix and dof map sizes differ")
    P = dofmap.P
    Kr = (P.T @ K @ P).tocsr()
    Mr = (P.T @ M @ P).tocsr()
    return ((Kr + Kr.T) * 0.5).tocsr(), ((Mr + Mr.T) * 0.5).tocsr()


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Eigenvalue, M-normalized reduced vector and relative residual."""

    lam: float
    vector: np.ndarray
    residual: float


def _inf_norm(A) -> float:
    return float(np.max(np.abs(A).sum(axis=1)))


def clusters(values, rel_tol: float = CLUSTER_TOL) -> list[list[int]]:
    """Group ascending values whose consecutive relative gap is below ``rel_tol``."""
    values = list(values)
    if not values:
        return []
    groups = [[0]]
    for i in range(1, len(values)):
        a, b = values[i - 1], values[i]
        if abs(b - a) <= rel_tol * max(abs(a), abs(b), 1e-300):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def solve_eigs(Kr, Mr, count: int, shift: float | None = None, tol: float = SOLVER_TOL,
               guard: int = 3, cluster_tol: float = CLUSTER_TOL, max_retries: int = 4) -> list[EigenPair]:
    """Smallest ``count`` eigenpairs by shift-invert Lanczos (ARPACK).

    The lowest eigenvalues are sought near ``shift`` (default 0, below the
    spectrum of the positive definite reduced pencil).  ``guard`` extra
    vectors are computed so a cluster straddling position ``count`` is
    returned whole.  Vectors are M-orthonormalized and residuals checked.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    n = Kr.shape[0]
    nev = min(count + guard, n - 1)
    sigma = 0.0 if shift is None else float(shift)
    knorm = _inf_norm(Kr)
    last_err = None
    for attempt in range(max_retries):
        try:
            lu = splu((Kr - sigma * Mr).tocsc())
            op = LinearOperator((n, n), matvec=lu.solve, dtype=float)
            rng = np.random.default_rng(12345)
            v0 = rng.standard_normal(n)
            vals, vecs = eigsh(Kr, k=nev, M=Mr, sigma=sigma, which="LM", OPinv=op, v0=v0,
                               tol=0, maxiter=20 * n)
            break
        except RuntimeError as exc:  # singular factor or ARPACK failure
            last_err = exc
            sigma = sigma - (1e-3 + abs(sigma) * 1e-3) * (attempt + 1)
    else:
        raise EigenSolveError(f"shift-invert failed after {max_retries} shifts: {last_err}")
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    # full clusters: extend the cut while the next value is in the same cluster
    cut = count
    while cut < len(vals) and abs(vals[cut] - vals[cut - 1]) <= cluster_tol * abs(vals[cut]):
        cut += 1
    if cut == len(vals) and cut > count and nev < n - 1:
        return solve_eigs(Kr, Mr, count, shift, tol, guard + 4, cluster_tol, max_retries)
    vals, vecs = vals[:cut], vecs[:, :cut]
    # M-orthonormalize (Cholesky of the Gram matrix)
    gram = vecs.T @ (Mr @ vecs)
    L = np.linalg.cholesky(0.5 * (gram + gram.T))
    vecs = np.linalg.solve(L, vecs.T).T
    # Rayleigh-Ritz on the span to re-diagonalize
    kk = vecs.T @ (Kr @ vecs)
    w, q = np.linalg.eigh(0.5 * (kk + kk.T))
    vecs = vecs @ q
    out = []
    for lam, vec in zip(w, vecs.T):
        res = float(np.linalg.norm(Kr @ vec - lam * (Mr @ vec)) / (knorm * np.linalg.norm(vec)))
        if res > tol:
            raise EigenSolveError(f"residual {res:.2e} above tolerance {tol:.1e} at lambda={lam:.6g}")
        out.append(EigenPair(lam=float(lam), vector=vec, residual=res))
    return out


@dataclass(frozen=True, eq=False)
class Discretization:
    """Assembled and reduced operators of one mesh, ready for solves."""

    mesh: object
    K: sp.csr_matrix
    M: sp.csr_matrix
    dofmap: DofMap
    Kr: sp.csr_matrix
    Mr: sp.csr_matrix

    @classmethod
    def build(cls, mesh) -> "Discretization":
        K, M = assemble(mesh)
        dm = DofMap.from_mesh(mesh)
        Kr, Mr = reduce(K, M, dm)
        return cls(mesh=mesh, K=K, M=M, dofmap=dm, Kr=Kr, Mr=Mr)

    def eigs(self, count: int, shift: float | None = None, **kw) -> list[EigenPair]:
        return solve_eigs(self.Kr, self.Mr, count, shift, **kw)

    def full(self, pair_or_vec) -> np.ndarray:
        vec = pair_or_vec.vector if isinstance(pair_or_vec, EigenPair) else pair_or_vec
        return self.dofmap.expand(vec)


def richardson(coarse: float, fine: float, ratio: float = 2.0, order: float = 2.0) -> float:
    """Extrapolate ``value(h)`` with error ~ h**order from h and h/ratio."""
    f = ratio ** order
    return (f * fine - coarse) / (f - 1.0)


def dump_coo(A, path) -> None:
    """Write a sparse matrix as ``i j value`` lines (debugging aid)."""
    C = sp.coo_matrix(A)
    lines = [f"{i} {j} {x!r}" for i, j, x in zip(C.row.tolist(), C.col.tolist(), C.data.tolist())]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
