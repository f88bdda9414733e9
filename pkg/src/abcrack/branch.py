"""Eigenvalue branches as the pole moves along a ray, power fits and cones.

Branches are identified by index ordering: the pair ``(lambda_N, lambda_N+1)``
at pole ``t (cos alpha, sin alpha)`` is compared with the double eigenvalue
found at ``t = 0``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fem
from .geometry import Domain, generate_mesh, insert_crack


class BranchError(RuntimeError):
    pass


@dataclass(frozen=True)
class HPolicy:
    """Mesh policy for branch solves.

    ``h`` is the global size; near S_a the size is at most
    ``t / s_a_resolution``.  ``symmetric`` meshes the upper half and mirrors
    it, which needs an x1-symmetric domain and alpha in {0, pi}.
    """

    h: float = 0.04
    grading_exponent: float = 2.0
    s_a_resolution: float = 10.0
    symmetric: bool = False


@dataclass(frozen=True)
class BranchSample:
    alpha: float
    t: float
    j: int
    lam: float
    residual: float
    h: float


@dataclass(frozen=True)
class Window:
    """Eigenvalue indices ``(N, N+1)`` (0-based) of a double limit eigenvalue."""

    N: int
    lam0: float
    gap0: float
    values0: tuple

    @property
    def indices(self) -> tuple:
        return (self.N, self.N + 1)


def _can_mirror(domain: Domain, alpha: float) -> bool:
    return domain.has_symmetry("x1-axis") and abs(math.sin(alpha)) < 1e-15


def mesh_for(domain: Domain, alpha: float, t: float, policy: HPolicy):
    crack = insert_crack(domain, alpha, t)
    sym = policy.symmetric and _can_mirror(domain, crack.alpha)
    return generate_mesh(domain, crack, policy.h, policy.grading_exponent, symmetric=sym,
                         s_a_resolution=policy.s_a_resolution)


def solve_at(domain: Domain, alpha: float, t: float, count: int, policy: HPolicy):
    """Eigenpairs and discretization at pole distance ``t`` (t = 0 allowed)."""
    mesh = mesh_for(domain, alpha, t, policy)
    disc = fem.Discretization.build(mesh)
    return disc.eigs(count), disc


def find_window(domain: Domain, alpha: float, policy: HPolicy, N: int | None = None,
                max_index: int = 8, window_tol: float = 2e-2) -> Window:
    """Locate a double eigenvalue at t = 0.

    ``window_tol`` bounds the relative internal gap of a discrete double
    eigenvalue; the discrete pair is only double up to discretization
    error, far above the solver level.  With ``N=None`` the first double
    cluster is taken.
    """
    pairs, _ = solve_at(domain, alpha, 0.0, max_index + 2, policy)
    lams = [p.lam for p in pairs]
    candidates = [N] if N is not None else range(len(lams) - 1)
    i = 0
    while i < len(lams) - 1:
        a, b = lams[i], lams[i + 1]
        gap = (b - a) / b
        if i in candidates and gap <= window_tol:
            # the third value must be separated, otherwise the cluster is not double
            if i + 2 < len(lams) and (lams[i + 2] - b) / lams[i + 2] <= window_tol:
                raise BranchError(f"window misidentification: cluster at index {i} is not double")
            return Window(N=i, lam0=0.5 * (a + b), gap0=b - a, values0=(a, b))
        i += 1
    raise BranchError("window misidentification: no double eigenvalue at t = 0 in range")


def trace_branch(domain: Domain, alpha: float, t_list, window: Window, policy: HPolicy) -> list[BranchSample]:
    """Solve at each pole distance and emit the two window eigenvalues."""
    t_list = [float(t) for t in t_list]
    if any(t <= 0 for t in t_list):
        raise BranchError("pole distances must be positive")
    if any(b >= a for a, b in zip(t_list[:-1], t_list[1:])):
        raise BranchError("t_list must be strictly decreasing")
    out = []
    count = window.N + 2
    for t in t_list:
        try:
            pairs, _ = solve_at(domain, alpha, t, count, policy)
        except Exception as exc:
            raise BranchError(f"solve failed at alpha={alpha:.6g}, t={t:.6g}: {exc}") from exc
        for j in window.indices:
            p = pairs[j]
            out.append(BranchSample(alpha=float(alpha), t=t, j=j, lam=p.lam, residual=p.residual, h=policy.h))
    return out


def branch_csv(samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "t", "j", "lambda", "residual", "h"])
    for s in samples:
        w.writerow([repr(s.alpha), repr(s.t), s.j, repr(s.lam), repr(s.residual), repr(s.h)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class PowerFit:
    """Power law ``lambda - lambda0 ~ coeff t^k_fit`` for one branch.

    ``k_fit`` and ``coeff`` come from the least-squares line through
    ``(log t, log|lambda - lambda0|)``.  ``coeff_limit`` estimates
    ``lim (lambda - lambda0) / t^k`` with ``k`` the odd integer nearest
    ``k_fit``: ``(lambda - lambda0) / t^k`` is fitted linearly in ``t`` and
    evaluated at 0, removing the first correction to the leading term.
    """

    k_fit: float
    coeff: float
    r2: float
    t_range: tuple
    lam0: float
    n_used: int
    k_odd: int
    coeff_limit: float

    def to_dict(self) -> dict:
        return asdict(self)


class FitError(ValueError):
    pass


def _nearest_odd(x: float) -> int:
    k = int(round((x - 1) / 2)) * 2 + 1
    return max(k, 1)


def fit_power(t, lam, lam0: float, solve_tol: float = 1e-9) -> PowerFit:
    """Fit ``lam - lam0 = coeff t^k`` on log-log axes.

    Samples with ``|lam - lam0|`` within ``10 * solve_tol * lam0`` are
    discarded; at least four must remain and share one sign.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(lam, dtype=float) - lam0
    keep = np.abs(d) > 10 * solve_tol * max(abs(lam0), 1.0)
    t, d = t[keep], d[keep]
    if len(t) < 4:
        raise FitError(f"too few usable samples ({len(t)} < 4)")
    sgn = np.sign(d)
    if not np.all(sgn == sgn[0]):
        raise FitError("sign change across samples (branch crossing or noise)")
    x, y = np.log(t), np.log(np.abs(d))
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ np.array([slope, icpt])
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    k_odd = _nearest_odd(slope)
    q = d / t ** k_odd
    B = np.column_stack([np.ones_like(t), t])
    (c0, _), *_ = np.linalg.lstsq(B, q, rcond=None)
    return PowerFit(k_fit=float(slope), coeff=float(sgn[0] * math.exp(icpt)), r2=float(r2),
                    t_range=(float(t.min()), float(t.max())), lam0=float(lam0), n_used=int(len(t)),
                    k_odd=int(k_odd), coeff_limit=float(c0))


def fit_window(samples, window: Window, solve_tol: float = 1e-9) -> tuple[PowerFit, PowerFit]:
    """Fits of the lower and the upper branch."""
    fits = []
    for j in window.indices:
        rows = sorted((s.t, s.lam) for s in samples if s.j == j)
        ts, ls = zip(*rows)
        fits.append(fit_power(ts, ls, window.lam0, solve_tol))
    return fits[0], fits[1]


def antipodal_deviation(domain: Domain, alpha: float, t: float, window: Window, policy: HPolicy) -> np.ndarray:
    """``|lambda_j(a) - lambda_j(-a)|`` for the window indices."""
    p1, _ = solve_at(domain, alpha, t, window.N + 2, policy)
    p2, _ = solve_at(domain, alpha + math.pi, t, window.N + 2, policy)
    return np.array([abs(p1[j].lam - p2[j].lam) for j in window.indices])


# --------------------------------------------------------------------------
# cones


@dataclass
class Verdict:
    alpha: float
    gap: float
    threshold: float
    status: str  # "split", "no-split" or "inconclusive"
    values: tuple = ()

    @property
    def split(self) -> bool:
        return self.status == "split"


@dataclass
class BifurcationReport:
    """Per-direction split verdicts and the maximal split intervals."""

    verdicts: list
    intervals: list
    period: float
    periodic: bool | None
    rotation_invariant: dict = field(default_factory=dict)
    window: Window | None = None
    fits: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)

    @property
    def inconclusive(self) -> bool:
        return any(v.status == "inconclusive" for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "window": None if self.window is None else asdict(self.window),
            "verdicts": [{"alpha": v.alpha, "gap": v.gap, "threshold": v.threshold, "status": v.status,
                          "values": list(v.values)} for v in self.verdicts],
            "intervals": [list(iv) for iv in self.intervals],
            "period": self.period,
            "periodic": self.periodic,
            "rotation_invariant": self.rotation_invariant,
            "fits": self.fits,
            "predictions": self.predictions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def split_intervals(alphas, flags) -> list[tuple[float, float]]:
    """Maximal runs of ``True`` on the grid, as closed [first, last] pairs."""
    out, run = [], []
    for a, f in zip(alphas, flags):
        if f:
            run.append(a)
        elif run:
            out.append((run[0], run[-1]))
            run = []
    if run:
        out.append((run[0], run[-1]))
    return out


def _shift_invariant(alphas, statuses, shift: float, period: float) -> bool | None:
    """Verdicts invariant under alpha -> alpha + shift (modulo ``period``)?"""
    n = len(alphas)
    step = period / n
    m = shift / step
    if abs(m - round(m)) > 1e-9:
        return None
    m = int(round(m)) % n
    return all(statuses[i] == statuses[(i + m) % n] for i in range(n))


def classify_gap(alpha: float, lo: float, hi: float, window: Window, solve_tol: float = 1e-9) -> Verdict:
    """Split verdict from the two window eigenvalues at a probe distance.

    Split when the gap exceeds ``max(5 solve_tol lambda0, 10 gap0)``; gaps
    between ``2 gap0`` and that threshold are inconclusive.
    """
    thr = max(5 * solve_tol * window.lam0, 10 * window.gap0)
    gap = hi - lo
    if gap > thr:
        status = "split"
    elif gap > 2 * window.gap0:
        status = "inconclusive"
    else:
        status = "no-split"
    return Verdict(alpha=float(alpha), gap=float(gap), threshold=thr, status=status, values=(float(lo), float(hi)))


def scan_cones(domain: Domain, alphas, t_probes, window: Window, policy: HPolicy, k: int = 1,
               solve_tol: float = 1e-9) -> BifurcationReport:
    """Split verdict per direction at the smallest probe distance.

    ``alphas`` must be a uniform grid over one period [0, 2pi/k) with at
    least 16 points.  A direction is split when the window gap exceeds
    ``max(5 solve_tol lambda0, 10 gap0)``; gaps between ``2 gap0`` and the
    threshold are reported as inconclusive rather than guessed.
    """
    alphas = [float(a) for a in alphas]
    period = 2 * math.pi / k
    if len(alphas) < 16:
        raise BranchError("alpha grid needs at least 16 points")
    step = period / len(alphas)
    if any(abs(a - (alphas[0] + i * step)) > 1e-9 for i, a in enumerate(alphas)):
        raise BranchError("alpha grid must be uniform over one period [0, 2pi/k)")
    t_min = min(float(t) for t in t_probes)
    verdicts = []
    for a in alphas:
        pairs, _ = solve_at(domain, a, t_min, window.N + 2, policy)
        verdicts.append(classify_gap(a, pairs[window.N].lam, pairs[window.N + 1].lam, window, solve_tol))
    statuses = [v.status for v in verdicts]
    intervals = split_intervals(alphas, [v.split for v in verdicts])
    periodic = _shift_invariant(alphas, statuses, math.pi / k, period)
    rot = {}
    for tag in sorted(domain.symmetry):
        if tag.startswith("rotation:") and tag != "rotation:any":
            ell = int(tag.split(":")[1])
            rot[tag] = _shift_invariant(alphas, statuses, 2 * math.pi / ell, period)
    return BifurcationReport(verdicts=verdicts, intervals=intervals, period=period, periodic=periodic,
                             rotation_invariant=rot, window=window)


# --------------------------------------------------------------------------
# predictions


def predict_vs_measure(case, alpha: float, prediction, fits) -> dict:
    """Compare fitted coefficients and exponents with the blow-up prediction.

    ``prediction`` is an RMatrix (same-k; slopes are its eigenvalues) or,
    for split-k, the value ``C(alpha, phi_1)``: the branch on the side of
    its sign carries the ``|a|^k1`` term and the other is flat at that
    order.
    """
    lower, upper = fits
    if case.variant == "same-k":
        mu = np.sort(np.asarray(prediction.eigenvalues, dtype=float))
        k = case.first.k
    else:
        c = float(prediction)
        mu = np.array([c, 0.0]) if c < 0 else np.array([0.0, c])
        k = case.first.k
    rec = {"alpha": float(alpha), "variant": case.variant, "k": int(k), "mu_pred": mu.tolist(), "branches": []}
    for fit, m in zip((lower, upper), mu):
        rel = abs(fit.coeff_limit - m) / abs(m) if m != 0 else None
        rec["branches"].append({"coeff_fit": fit.coeff, "coeff_limit": fit.coeff_limit, "k_fit": fit.k_fit,
                                "mu_pred": float(m), "rel_err": rel, "k_err": abs(fit.k_fit - k)})
    rec["predicted_split"] = bool(mu[0] < mu[1])
    rec["measured_split"] = bool(lower.coeff_limit < upper.coeff_limit)
    return rec
