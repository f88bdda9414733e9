import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from abcrack.disk_oracle import disk_eigenfunction, disk_expansion, disk_mode
from abcrack.geometry import DomainSpec, build_domain, generate_mesh, insert_crack
from abcrack.localexp import (ExtractionError, LocalExpansion, P1Function, canonicalize_pair, circle_projections,
                              extract_expansion, f_alpha, gauge_to_real, gauged_sampler, reduce_omega)

angles = st.floats(min_value=-3.0, max_value=3.0)


def synthetic(k, beta, omega, alpha, extra=()):
    """Gauged field made of leading terms, plus optional (k, beta, omega) extras."""

    def sample(x, y):
        r = np.hypot(x, y)
        t = np.mod(np.arctan2(y, x), 2 * math.pi)
        out = beta * r ** (k / 2) * np.sin(k / 2 * (t - omega))
        for kk, bb, ww in extra:
            out = out + bb * r ** (kk / 2) * np.sin(kk / 2 * (t - ww))
        return f_alpha(alpha, t) * out

    return sample


def test_f_alpha_values():
    assert f_alpha(0.0, 0.5) == 1.0
    assert f_alpha(0.0, math.pi + 0.1) == -1.0
    assert f_alpha(0.5, math.pi + 0.4) == 1.0
    assert_allclose(f_alpha(0.0, np.array([0.1, 4.0])), [1.0, -1.0])


@given(angles, st.floats(min_value=0.0, max_value=6.28))
def test_f_alpha_is_2pi_periodic(alpha, t):
    assert f_alpha(alpha, t) == f_alpha(alpha, t + 2 * math.pi) or abs(math.fmod(t, 2 * math.pi)) < 1e-9


def test_gauge_to_real_rejects_non_k_real_input():
    t = np.linspace(0.1, 6.0, 20)
    with pytest.raises(ValueError, match="K-real"):
        gauge_to_real(np.exp(1j * t), t, 0.0)
    v, res = gauge_to_real(np.exp(0.5j * t) * np.sin(t / 2), t, 0.0)
    assert res < 1e-15
    assert_allclose(v, np.where(t < math.pi, 1.0, -1.0) * np.sin(t / 2))


def test_expansion_validation_and_json():
    with pytest.raises(ValueError):
        LocalExpansion(k=2, beta=1.0, omega=0.0)
    with pytest.raises(ValueError):
        LocalExpansion(k=1, beta=-1.0, omega=0.0)
    with pytest.raises(ValueError):
        LocalExpansion(k=3, beta=1.0, omega=3.0)
    e = LocalExpansion(k=3, beta=1.25, omega=0.5, fit_residual=1e-4)
    back = LocalExpansion.from_json(e.to_json())
    assert (back.k, back.beta, back.omega, back.fit_residual) == (3, 1.25, 0.5, 1e-4)


@given(st.floats(min_value=-100, max_value=100), st.sampled_from([1, 3, 5, 7]))
def test_reduce_omega_range(w, k):
    out = reduce_omega(w, k)
    period = 2 * math.pi / k
    assert 0.0 <= out < period
    # congruent to the input modulo the period
    m = (w - out) / period
    assert abs(m - round(m)) < 1e-9


def test_circle_projections_of_a_pure_mode():
    k, beta, omega, alpha, r = 3, 1.7, 0.4, 0.9, 0.2
    ks, A, B, energy = circle_projections(synthetic(k, beta, omega, alpha), alpha, r, 7)
    i = list(ks).index(k)
    amp = beta * r ** (k / 2)
    assert_allclose([A[i], B[i]], [amp * math.cos(k * omega / 2), -amp * math.sin(k * omega / 2)], atol=1e-13)
    assert_allclose(np.delete(A, i), 0.0, atol=1e-13)
    assert energy == pytest.approx(amp ** 2, rel=1e-12)
    with pytest.raises(ValueError):
        circle_projections(synthetic(1, 1, 0, 0), 0.0, 0.1, 3, n_angles=64)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([1, 3, 5]), st.floats(min_value=0.1, max_value=10.0), st.floats(min_value=0.0, max_value=1.0),
       angles)
def test_extract_recovers_synthetic_leading_term(k, beta, frac, alpha):
    omega = frac * 2 * math.pi / k * 0.999
    # a higher-order correction must not disturb the leading data
    f = synthetic(k, beta, omega, alpha, extra=[(k + 2, 0.3 * beta, 0.2)])
    e = extract_expansion(f, alpha, 0.01, 0.02)
    assert e.k == k
    dw = abs(e.omega - omega)
    assert min(dw, 2 * math.pi / k - dw) < 1e-9
    assert e.beta == pytest.approx(beta, rel=1e-3)


def test_extract_errors():
    mixed = synthetic(1, 1.0, 0.0, 0.0, extra=[(3, 1.0 / 0.1, 0.0)])
    with pytest.raises(ExtractionError, match="dominant"):
        extract_expansion(mixed, 0.0, 0.1, 0.11)
    with pytest.raises(ExtractionError):
        extract_expansion(lambda x, y: np.zeros_like(x), 0.0, 0.1, 0.2)
    with pytest.raises(ValueError):
        extract_expansion(mixed, 0.0, 0.2, 0.1)


def test_p1_function_is_exact_on_linears_and_sees_crack_sides():
    disk = build_domain(DomainSpec.disk(1.0))
    crack = insert_crack(disk, 0.0, 0.0)
    mesh = generate_mesh(disk, crack, 0.1)
    x, y = mesh.vertices.T
    f = P1Function(mesh, 2 * x - 3 * y + 1)
    pts = np.random.default_rng(3).uniform(-0.6, 0.6, (200, 2))
    assert_allclose(f(pts[:, 0], pts[:, 1]), 2 * pts[:, 0] - 3 * pts[:, 1] + 1, atol=1e-12)
    # a field with jump 2 across the negative x1 axis
    vals = np.zeros(mesh.n_nodes)
    vals[mesh.crack_pairs[:, 0]] = 1.0
    vals[mesh.crack_pairs[:, 1]] = -1.0
    g = P1Function(mesh, vals)
    above, below = g(-0.5, 1e-9), g(-0.5, -1e-9)
    assert above == pytest.approx(1.0) and below == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        g(np.array([2.0]), np.array([0.0]))


def test_disk_pair_same_k_canonical_basis():
    m = disk_mode(1, 1)
    alpha = 0.0
    u = gauged_sampler(disk_eigenfunction(m, "u"), alpha)
    v = gauged_sampler(disk_eigenfunction(m, "v"), alpha)
    th = 0.6
    s1 = lambda x, y: math.cos(th) * u(x, y) + math.sin(th) * v(x, y)  # noqa: E731
    s2 = lambda x, y: -math.sin(th) * u(x, y) + math.cos(th) * v(x, y)  # noqa: E731
    case = canonicalize_pair(s1, s2, alpha, 0.02, 0.04)
    assert case.variant == "same-k" and case.k == 1
    assert case.first.omega == pytest.approx(0.0, abs=1e-9)
    assert case.second.omega == pytest.approx(disk_expansion(m, "v").omega, abs=1e-9)
    assert case.first.beta == pytest.approx(m.beta, rel=1e-3)
    assert_allclose(np.abs(np.linalg.det(case.coeffs)), 1.0)


def test_split_k_pair():
    alpha = 0.3
    a = synthetic(1, 1.0, 0.2, alpha)
    b = synthetic(3, 2.0, 0.1, alpha)
    s1 = lambda x, y: 0.6 * a(x, y) + 0.8 * b(x, y)  # noqa: E731
    s2 = lambda x, y: -0.8 * a(x, y) + 0.6 * b(x, y)  # noqa: E731
    case = canonicalize_pair(s1, s2, alpha, 0.01, 0.02)
    assert case.variant == "split-k"
    assert (case.first.k, case.second.k) == (1, 3)
    assert case.second.omega == pytest.approx(0.1, abs=1e-6)
