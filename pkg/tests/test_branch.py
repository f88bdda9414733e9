import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from abcrack.blowup import RMatrix
from abcrack.branch import (BifurcationReport, BranchError, BranchSample, FitError, HPolicy, Window, _shift_invariant,
                            branch_csv, classify_gap, find_window, fit_power, fit_window, predict_vs_measure,
                            scan_cones, split_intervals, trace_branch)
from abcrack.geometry import DomainSpec, build_domain
from abcrack.localexp import BasisCase, LocalExpansion

COARSE = HPolicy(h=0.08)


@pytest.fixture(scope="module")
def disk():
    return build_domain(DomainSpec.disk(1.0))


@given(st.floats(min_value=-20, max_value=20).filter(lambda c: abs(c) > 0.1),
       st.floats(min_value=-5, max_value=5), st.sampled_from([1, 3]))
def test_fit_power_recovers_exact_laws(coeff, corr, k):
    t = np.geomspace(0.2, 0.05, 6)
    lam0 = 10.0
    lam = lam0 + coeff * t ** k * (1 + 0.01 * corr * t)
    fit = fit_power(t, lam, lam0)
    assert fit.k_odd == k
    assert fit.coeff_limit == pytest.approx(coeff, rel=1e-9)
    assert fit.k_fit == pytest.approx(k, abs=0.05)
    assert fit.n_used == 6 and fit.t_range == pytest.approx((0.05, 0.2))


def test_fit_power_errors():
    t = np.geomspace(0.2, 0.05, 6)
    with pytest.raises(FitError, match="too few"):
        fit_power(t, np.full(6, 10.0), 10.0)
    with pytest.raises(FitError, match="sign"):
        fit_power(t, 10.0 + np.array([1, -1, 1, -1, 1, -1]) * t, 10.0)


def test_split_intervals():
    a = [0, 1, 2, 3, 4, 5]
    assert split_intervals(a, [True, True, False, True, False, True]) == [(0, 1), (3, 3), (5, 5)]
    assert split_intervals(a, [False] * 6) == []
    assert split_intervals(a, [True] * 6) == [(0, 5)]


def test_shift_invariance():
    alphas = [i * 2 * math.pi / 8 for i in range(8)]
    st_ = ["split", "no-split"] * 4
    assert _shift_invariant(alphas, st_, 2 * 2 * math.pi / 8, 2 * math.pi) is True
    assert _shift_invariant(alphas, st_, 2 * math.pi / 8, 2 * math.pi) is False
    assert _shift_invariant(alphas, st_, 0.1, 2 * math.pi) is None


def test_classify_gap_thresholds():
    w = Window(N=0, lam0=10.0, gap0=0.01, values0=(9.995, 10.005))
    assert classify_gap(0.0, 9.0, 11.0, w).status == "split"
    assert classify_gap(0.0, 9.96, 10.04, w).status == "inconclusive"
    assert classify_gap(0.0, 9.995, 10.005, w).status == "no-split"
    assert classify_gap(0.0, 9.0, 11.0, w).threshold == pytest.approx(0.1)


def test_branch_csv_is_stable():
    s = [BranchSample(alpha=0.0, t=0.1, j=0, lam=9.5, residual=1e-15, h=0.04)]
    assert branch_csv(s) == "alpha,t,j,lambda,residual,h\n0.0,0.1,0,9.5,1e-15,0.04\n"


def test_window_and_trace_on_disk(disk):
    w = find_window(disk, 0.0, COARSE)
    assert w.N == 0 and w.indices == (0, 1)
    assert w.lam0 == pytest.approx(math.pi ** 2, rel=2e-2)
    samples = trace_branch(disk, 0.0, [0.2, 0.1], w, COARSE)
    assert [(s.t, s.j) for s in samples] == [(0.2, 0), (0.2, 1), (0.1, 0), (0.1, 1)]
    lo = [s.lam for s in samples if s.j == 0]
    hi = [s.lam for s in samples if s.j == 1]
    # the branches leave the double value in opposite directions, linearly in t
    assert lo[0] < lo[1] < w.lam0 < hi[1] < hi[0]
    with pytest.raises(BranchError):
        trace_branch(disk, 0.0, [0.1, 0.2], w, COARSE)
    with pytest.raises(BranchError):
        trace_branch(disk, 0.0, [0.1, 0.0], w, COARSE)


def test_window_misidentification(disk):
    with pytest.raises(BranchError, match="misidentification"):
        find_window(disk, 0.0, COARSE, N=1, max_index=4)


def test_scan_cones_grid_checks(disk):
    w = Window(N=0, lam0=9.87, gap0=0.01, values0=(9.86, 9.87))
    with pytest.raises(BranchError):
        scan_cones(disk, [0.0, 1.0], [0.05], w, COARSE)
    with pytest.raises(BranchError):
        scan_cones(disk, list(np.linspace(0, 6, 16) ** 1.01), [0.05], w, COARSE)


def test_report_serializes():
    w = Window(N=0, lam0=9.87, gap0=0.01, values0=(9.86, 9.87))
    v = classify_gap(0.0, 9.0, 11.0, w)
    rep = BifurcationReport(verdicts=[v], intervals=[(0.0, 0.0)], period=2 * math.pi, periodic=None, window=w)
    d = json.loads(rep.to_json())
    assert d["verdicts"][0]["status"] == "split"
    assert d["window"]["N"] == 0
    assert not rep.inconclusive


def test_predict_vs_measure_same_k():
    t = np.geomspace(0.2, 0.05, 6)
    w = Window(N=0, lam0=10.0, gap0=0.0, values0=(10.0, 10.0))
    samples = [BranchSample(0.0, float(x), j, 10.0 + c * x, 0.0, 0.04)
               for x in t for j, c in ((0, -9.0), (1, 10.0))]
    fits = fit_window(samples, w)
    e = LocalExpansion(k=1, beta=1.0, omega=0.0)
    case = BasisCase("same-k", e, LocalExpansion(k=1, beta=1.0, omega=math.pi))
    rec = predict_vs_measure(case, 0.0, RMatrix(alpha=0.0, entries=np.diag([10.0, -10.0])), fits)
    assert rec["mu_pred"] == [-10.0, 10.0]
    assert_allclose([b["rel_err"] for b in rec["branches"]], [0.1, 0.0], atol=1e-9)
    assert rec["predicted_split"] and rec["measured_split"]


def test_predict_vs_measure_split_k():
    w = Window(N=0, lam0=10.0, gap0=0.0, values0=(10.0, 10.0))
    t = np.geomspace(0.2, 0.05, 6)
    samples = [BranchSample(0.0, float(x), j, 10.0 + c * x ** k, 0.0, 0.04)
               for x in t for j, c, k in ((0, -4.0, 1), (1, 2.0, 3))]
    fits = fit_window(samples, w)
    case = BasisCase("split-k", LocalExpansion(k=1, beta=1.0, omega=0.0), LocalExpansion(k=3, beta=1.0, omega=0.0))
    rec = predict_vs_measure(case, 0.0, -4.0, fits)
    assert rec["mu_pred"] == [-4.0, 0.0]
    assert rec["branches"][0]["rel_err"] == pytest.approx(0.0, abs=1e-9)
    assert rec["branches"][1]["rel_err"] is None
