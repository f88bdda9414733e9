"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

Oracles are analytic (disk Bessel data, 2 pi^2 for the unit square) or
structural (symmetry, sign and monotonicity properties).  Branch
coefficients are compared through ``PowerFit.coeff_limit``, the t -> 0
limit of (lambda - lambda0)/t^k; the raw log-log intercept is printed
alongside for reference.
"""
import math
import time

import numpy as np
import pytest

from abcrack.blowup import (compute_C, compute_R_matrix, compute_Ua_and_ra, disk_ray_data, extrapolate_G,
                            g_curve, g_property_suite, r_matrix_extrapolated)
from abcrack.branch import (HPolicy, antipodal_deviation, classify_gap, find_window, fit_window, solve_at,
                            trace_branch)
from abcrack.disk_oracle import disk_eigenfunction, disk_expansion, disk_mode, disk_spectrum
from abcrack.fem import Discretization, richardson
from abcrack.geometry import DomainSpec, build_domain, generate_mesh
from abcrack.localexp import P1Function, canonicalize_pair, extract_expansion, gauged_sampler

pytestmark = pytest.mark.slow

T_GRID = np.geomspace(0.2, 0.05, 6)
POLICY = HPolicy(h=0.04)


@pytest.fixture(scope="module")
def disk():
    return build_domain(DomainSpec.disk(1.0))


@pytest.fixture(scope="module")
def g1():
    return extrapolate_G(1)


@pytest.fixture(scope="module")
def g3():
    return extrapolate_G(3)


def _disk_case(domain, alpha):
    pairs, disc = solve_at(domain, alpha, 0.0, 2, POLICY)
    f1 = P1Function(disc.mesh, disc.full(pairs[0]))
    f2 = P1Function(disc.mesh, disc.full(pairs[1]))
    return canonicalize_pair(f1, f2, alpha, 4 * POLICY.h, 8 * POLICY.h)


@pytest.fixture(scope="module")
def disk_fits(disk):
    out = {}
    for alpha in (0.0, math.pi / 3):
        w = find_window(disk, alpha, POLICY)
        out[alpha] = (w, fit_window(trace_branch(disk, alpha, T_GRID, w, POLICY), w))
    return out


def test_criterion_01_disk_spectrum(disk, criterion_log):
    start = time.perf_counter()
    exact = disk_spectrum(3)
    levels = []
    for h in (0.04, 0.02):
        pairs, _ = solve_at(disk, 0.0, 0.0, 6, HPolicy(h=h))
        levels.append(np.array([p.lam for p in pairs[:6]]))
    ext = richardson(levels[0], levels[1])
    errs, gaps = [], []
    for c in range(3):
        pair = ext[2 * c: 2 * c + 2]
        errs.append(abs(pair.mean() - exact[2 * c][0]) / exact[2 * c][0])
        gaps.append(abs(pair[1] - pair[0]) / pair.mean())
    elapsed = time.perf_counter() - start
    ok = max(errs) <= 5e-3 and max(gaps) <= 1e-2 and elapsed <= 120
    criterion_log(1, ok, f"max rel err {max(errs):.2e} (<= 5e-3), max gap {max(gaps):.2e} (<= 1e-2), {elapsed:.0f}s")
    assert ok


def test_criterion_02_unit_square(criterion_log):
    start = time.perf_counter()
    square = build_domain(DomainSpec.rectangle(0.5, 0.5))
    vals = []
    for h in (0.04, 0.02):
        mesh = generate_mesh(square, None, h)
        vals.append(Discretization.build(mesh).eigs(1)[0].lam)
    lam = richardson(vals[0], vals[1])
    rel = abs(lam - 2 * math.pi ** 2) / (2 * math.pi ** 2)
    elapsed = time.perf_counter() - start
    ok = rel <= 5e-3 and elapsed <= 30
    criterion_log(2, ok, f"lambda1 {lam:.6f} vs 2pi^2, rel err {rel:.2e}, {elapsed:.0f}s")
    assert ok


def test_criterion_03_g_properties(g1, g3, criterion_log):
    lines, ok = [], True
    for g in (g1, g3):
        suite = g_property_suite(g)
        failed = [k for k, v in suite.items() if not k.startswith("_") and not v]
        ok &= not failed
        lines.append(f"k={g.k}: {'all properties hold' if not failed else 'failed ' + ','.join(failed)}")
    criterion_log(3, ok, "; ".join(lines))
    assert ok


def test_criterion_04_diagonal_consistency(disk, criterion_log):
    start = time.perf_counter()
    worst = 0.0
    for alpha in (0.0, math.pi / 7, math.pi / 3):
        case = _disk_case(disk, alpha)
        R = compute_R_matrix(alpha, case)
        curve = g_curve(case.k, 32.0, 1 / 16)
        for i, e in enumerate((case.first, case.second)):
            c = compute_C(alpha, e, curve).value
            worst = max(worst, abs(R.entries[i, i] - c) / abs(c))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed <= 120
    criterion_log(4, ok, f"max rel diff diag(R) vs C {worst:.2e} at 3 angles, {elapsed:.0f}s")
    assert ok


def test_criterion_05_disk_bifurcation(disk_fits, criterion_log):
    (_, (lo, hi)) = disk_fits[0.0]
    (_, (lo3, hi3)) = disk_fits[math.pi / 3]
    k_ok = all(0.9 <= f.k_fit <= 1.1 for f in (lo, hi, lo3, hi3))
    sign_ok = lo.coeff_limit < 0 < hi.coeff_limit
    sym_ok = abs(lo.coeff_limit + hi.coeff_limit) <= 0.2 * hi.coeff_limit
    rot = max(abs(lo3.coeff_limit / lo.coeff_limit - 1), abs(hi3.coeff_limit / hi.coeff_limit - 1))
    ok = k_ok and sign_ok and sym_ok and rot <= 0.10
    criterion_log(5, ok, f"k_fit {lo.k_fit:.3f}/{hi.k_fit:.3f}, coeff {lo.coeff_limit:.3f}/{hi.coeff_limit:.3f} "
                         f"(log-log {lo.coeff:.2f}/{hi.coeff:.2f}), rotation change {rot:.1e}")
    assert ok


def test_criterion_06_slope_prediction(disk, disk_fits, g1, criterion_log):
    case = _disk_case(disk, 0.0)
    R = r_matrix_extrapolated(0.0, (case.first, case.second), g1)
    mu = np.sort(R.eigenvalues)
    (_, (lo, hi)) = disk_fits[0.0]
    errs = [abs(lo.coeff_limit - mu[0]) / abs(mu[0]), abs(hi.coeff_limit - mu[1]) / abs(mu[1])]
    ok = max(errs) <= 0.15
    criterion_log(6, ok, f"mu {mu[0]:.3f}/{mu[1]:.3f} vs measured {lo.coeff_limit:.3f}/{hi.coeff_limit:.3f}, "
                         f"max rel err {max(errs):.2e}")
    assert ok


def test_criterion_07_rectangle(criterion_log):
    rect = build_domain(DomainSpec.rectangle(1.0, 0.6))
    w = find_window(rect, 0.0, POLICY)
    lo, hi = fit_window(trace_branch(rect, 0.0, T_GRID, w, POLICY), w)
    pairs, _ = solve_at(rect, 0.0, 0.05, w.N + 2, POLICY)
    verdict = classify_gap(0.0, pairs[w.N].lam, pairs[w.N + 1].lam, w)
    anti = max(float(antipodal_deviation(rect, 0.0, t, w, POLICY).max()) for t in (0.2, 0.05))
    odd = all(round(f.k_fit) % 2 == 1 for f in (lo, hi))
    ok = verdict.split and lo.coeff_limit * hi.coeff_limit < 0 and odd and anti <= 2 * w.gap0
    criterion_log(7, ok, f"window N={w.N}, verdict {verdict.status}, coeff {lo.coeff_limit:.2f}/{hi.coeff_limit:.2f}, "
                         f"k_fit {lo.k_fit:.3f}/{hi.k_fit:.3f}, antipodal {anti:.1e} <= {2 * w.gap0:.1e}")
    assert ok


def test_criterion_08_finite_form(disk, g1, criterion_log):
    mode = disk_mode(1, 1)
    ts = (0.1, 0.05, 0.025)
    rays = [disk_ray_data(mode, v, 0.0) for v in "uv"]
    samples = [compute_Ua_and_ra(disk, 0.0, t, rays, mode.lam, h=0.02) for t in ts]
    lines, ok = [], True
    for i, var in enumerate("uv"):
        c = compute_C(0.0, disk_expansion(mode, var), g1).value
        scaled = [s.matrix[i, i] / s.t for s in samples]
        dev = abs(scaled[-1] - c) / abs(c)
        trend = abs(scaled[-1] - c) < abs(scaled[0] - c)
        slope = np.polyfit(np.log(ts), np.log([s.norms[i] for s in samples]), 1)[0]
        ok &= dev <= 0.15 and trend and 0.4 <= slope <= 0.6
        lines.append(f"{var}: t^-1 r_a {', '.join(f'{x:.3f}' for x in scaled)} -> C {c:.3f} "
                     f"(dev {dev:.1e}), energy slope {slope:.3f}")
    criterion_log(8, ok, "; ".join(lines))
    assert ok


def test_criterion_09_extraction(criterion_log):
    start = time.perf_counter()
    worst_w, worst_b, k_ok = 0.0, 0.0, True
    for k in (1, 3, 5):
        mode = disk_mode(k, 1)
        for var in "uv":
            ref = disk_expansion(mode, var)
            for alpha in (0.0, 0.7, -2.0):
                e = extract_expansion(gauged_sampler(disk_eigenfunction(mode, var), alpha), alpha, 0.02, 0.04)
                k_ok &= e.k == ref.k
                dw = abs(e.omega - ref.omega)
                worst_w = max(worst_w, min(dw, 2 * math.pi / k - dw))
                worst_b = max(worst_b, abs(e.beta / ref.beta - 1))
    elapsed = time.perf_counter() - start
    ok = k_ok and worst_w <= 1e-3 and worst_b <= 1e-2 and elapsed <= 10
    criterion_log(9, ok, f"k exact {k_ok}, max omega err {worst_w:.1e}, max beta rel err {worst_b:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_10_determinism(tmp_path, criterion_log):
    from abcrack.cli import load_config, run

    configs = [
        ("branch", ["t_grid=[0.2, 0.1, 0.05]", "h=0.06"]),
        ("spectrum", ["h_levels=[0.06, 0.03]"]),
        ("validate-disk", ["h_levels=[0.06, 0.03]", "tolerances.spectrum_rel=1.0", "tolerances.cluster_gap_rel=1.0"]),
    ]
    same = {}
    for kind, sets in configs:
        cfg = load_config(kind=kind, sets=sets)
        a, _ = run(cfg, tmp_path / f"{kind}-a")
        b, _ = run(cfg, tmp_path / f"{kind}-b")
        for csv_a in sorted(a.glob("*.csv")):
            same[f"{kind}/{csv_a.name}"] = csv_a.read_bytes() == (b / csv_a.name).read_bytes()
    ok = all(same.values()) and len(same) >= 3
    criterion_log(10, ok, f"{sum(same.values())}/{len(same)} CSVs byte-identical across independent reruns")
    assert ok
