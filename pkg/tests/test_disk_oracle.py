import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, special

from abcrack.disk_oracle import (bessel_half, bessel_half_prime, bessel_zero, disk_eigenfunction,
                                 disk_expansion, disk_gauged, disk_mode, disk_spectrum, gamma_half,
                                 spectrum_rows)
from abcrack.localexp import gauge_to_real

odd_k = st.integers(min_value=0, max_value=8).map(lambda i: 2 * i + 1)


@given(odd_k)
def test_gamma_half_matches_gamma(k):
    assert_allclose(gamma_half(k), math.gamma(k / 2 + 1), rtol=1e-14)


@settings(max_examples=60)
@given(odd_k, st.floats(min_value=1e-3, max_value=60.0))
def test_bessel_half_matches_scipy(k, x):
    assert_allclose(bessel_half(k, x), special.jv(k / 2, x), rtol=1e-9, atol=1e-13)


@pytest.mark.parametrize("k", [1, 3, 5, 7])
def test_series_and_recursion_agree_on_overlap(k):
    x = np.linspace(k / 2, k / 2 + 6, 25)
    assert_allclose(bessel_half(k, x, method="series"), bessel_half(k, x, method="recursion"),
                    rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_bessel_prime_by_finite_difference(k):
    x = np.array([0.7, 2.3, 8.1])
    eps = 1e-6
    fd = (bessel_half(k, x + eps) - bessel_half(k, x - eps)) / (2 * eps)
    assert_allclose(bessel_half_prime(k, x), fd, rtol=1e-7)


def test_bessel_half_rejects_bad_input():
    with pytest.raises(ValueError):
        bessel_half(2, 1.0)
    with pytest.raises(ValueError):
        bessel_half(1, 0.0)
    with pytest.raises(ValueError):
        bessel_half(1, 1.0, method="magic")


def test_zeros_of_first_orders():
    # J_{1/2} ~ sin x, J_{3/2} zeros solve tan x = x
    for n in range(1, 5):
        assert bessel_zero(1, n) == pytest.approx(n * math.pi, rel=1e-15)
    z = bessel_zero(3, 1)
    assert_allclose(math.tan(z), z, rtol=1e-11)
    assert_allclose(z, 4.493409457909064, rtol=1e-14)


@pytest.mark.parametrize("k,n", [(3, 2), (5, 1), (7, 3), (11, 2)])
def test_zeros_match_scipy_root(k, n):
    z = bessel_zero(k, n)
    assert abs(special.jv(k / 2, z)) < 1e-12
    # index check: exactly n - 1 sign changes before z
    grid = np.linspace(1e-3, z - 1e-6, 4000)
    changes = np.count_nonzero(np.diff(np.sign(special.jv(k / 2, grid))))
    assert changes == n - 1


def test_disk_spectrum_is_doubled_and_sorted():
    spec = disk_spectrum(4)
    lams = [row[0] for row in spec]
    assert len(spec) == 8
    assert lams == sorted(lams)
    assert spec[0::2] == spec[1::2]
    assert_allclose(lams[::2][:3], [math.pi ** 2, 4.493409457909064 ** 2, 5.763459196894550 ** 2], rtol=1e-12)
    assert [(k, n) for _, k, n in spec[::2]] == [(1, 1), (3, 1), (5, 1), (1, 2)]
    assert spectrum_rows(2) == [(lam, k, n, 2) for lam, k, n in spec[:4:2]]


def test_disk_mode_is_normalized():
    m = disk_mode(3, 1)
    u = disk_eigenfunction(m, "u")
    # |u|^2 = B^2 J^2 sin^2: angular integral is pi
    val, _ = integrate.quad(lambda r: abs(u(r, math.pi / 3)) ** 2 / math.sin(m.k * math.pi / 6) ** 2 * r,
                            0, 1, epsabs=1e-14)
    assert_allclose(math.pi * val, 1.0, rtol=1e-10)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_beta_is_small_r_amplitude(k):
    m = disk_mode(k, 1)
    r = 1e-5
    assert_allclose(m.B * bessel_half(k, m.z * r) / r ** (k / 2), m.beta, rtol=1e-8)


@pytest.mark.parametrize("variant", ["u", "v"])
def test_eigenfunctions_are_k_real_and_vanish_on_boundary(variant):
    m = disk_mode(1, 1)
    f = disk_eigenfunction(m, variant)
    t = np.linspace(0.01, 2 * math.pi - 0.01, 50)
    _, residue = gauge_to_real(f(0.6, t), t, 0.0)
    assert residue < 1e-14
    assert np.max(np.abs(f(1.0, t))) < 1e-12


def test_disk_gauged_matches_sampler_on_the_ray():
    m = disk_mode(3, 1)
    alpha = 0.4
    on_ray, normal = disk_gauged(m, "u", alpha)
    f = disk_eigenfunction(m, "u")
    s = np.array([0.1, 0.4, 0.8])
    t_plus = alpha + 1e-9
    direct, _ = gauge_to_real(f(s, t_plus), np.full(3, t_plus), alpha, tol=None)
    assert_allclose(on_ray(s), direct, rtol=1e-7)
    eps = 1e-6
    fd = (gauge_to_real(f(s, alpha + eps / s), alpha + eps / s, alpha, tol=None)[0]
          - gauge_to_real(f(s, alpha - eps / s), alpha - eps / s, alpha, tol=None)[0]) / (2 * eps)
    assert_allclose(normal(s), fd, rtol=1e-6)


def test_disk_expansion_phases():
    m = disk_mode(5, 1)
    assert disk_expansion(m, "u").omega == 0.0
    assert disk_expansion(m, "v").omega == pytest.approx(math.pi / 5)
    with pytest.raises(ValueError):
        disk_expansion(m, "w")
