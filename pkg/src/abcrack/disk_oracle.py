"""Closed-form half-integer Bessel functions and the exact disk spectrum.

For a pole at the centre of the unit disk the magnetic eigenvalues are the
squares of the zeros of J_{k/2}, k odd, each of multiplicity two.  Everything
here is elementary (sin/cos recursion or the ascending series), so the module
serves as the independent oracle for the finite element code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .localexp import LocalExpansion


def _check_order(k: int) -> None:
    if k < 1 or k % 2 == 0:
        raise ValueError(f"k must be an odd natural number, got {k}")


def gamma_half(k: int) -> float:
    """Gamma(k/2 + 1) for odd k, in closed form."""
    _check_order(k)
    n = (k + 1) // 2  # k/2 + 1 = n + 1/2
    return math.factorial(2 * n) * math.sqrt(math.pi) / (4 ** n * math.factorial(n))


def _series(k: int, x: np.ndarray) -> np.ndarray:
    nu = k / 2
    half = x / 2
    term = half ** nu / gamma_half(k)
    total = term.copy()
    q = -half * half
    for m in range(1, 200):
        term = term * q / (m * (m + nu))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total) + 1e-300):
            break
    return total


def _recursion(k: int, x: np.ndarray) -> np.ndarray:
    c = np.sqrt(2.0 / (np.pi * x))
    j_prev = c * np.cos(x)   # J_{-1/2}
    j_cur = c * np.sin(x)    # J_{1/2}
    nu = 0.5
    for _ in range((k - 1) // 2):
        j_prev, j_cur = j_cur, (2 * nu / x) * j_cur - j_prev
        nu += 1.0
    return j_cur


def bessel_half(k: int, x, method: str = "auto"):
    """J_{k/2}(x) for odd ``k`` and ``x > 0``.

    Forward recursion from J_{-1/2}, J_{1/2} is used for ``x >= k/2``; below
    that the recursion loses digits and the ascending series takes over.
    ``method`` may force ``"recursion"`` or ``"series"``.
    """
    _check_order(k)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise ValueError("bessel_half requires x > 0")
    if method == "series":
        out = _series(k, xa)
    elif method == "recursion":
        out = _recursion(k, xa)
    elif method == "auto":
        out = np.where(xa < k / 2, _series(k, np.minimum(xa, k / 2)),
                       _recursion(k, np.maximum(xa, k / 2)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out) if np.ndim(out) == 0 else out


def bessel_half_prime(k: int, x):
    """Derivative of J_{k/2}; uses J'_nu = J_{nu-1} - (nu/x) J_nu."""
    xa = np.asarray(x, dtype=float)
    nu = k / 2
    if k == 1:
        lower = np.sqrt(2.0 / (np.pi * xa)) * np.cos(xa)
    else:
        lower = bessel_half(k - 2, xa)
    return lower - nu / xa * bessel_half(k, xa)


@lru_cache(maxsize=None)
def bessel_zero(k: int, n: int) -> float:
    """n-th positive zero of J_{k/2}.

    No zero lies in (0, k/2]; beyond that consecutive zeros are more than
    pi apart, so a pi/4 scan brackets each one exactly once.
    """
    _check_order(k)
    if n < 1:
        raise ValueError("zero index n must be >= 1")
    if k == 1:
        return n * math.pi
    step = math.pi / 4
    a = k / 2
    fa = bessel_half(k, a)
    found = 0
    for _ in range(100000):
        b = a + step
        fb = bessel_half(k, b)
        if fa == 0.0:
            fa = bessel_half(k, a + 1e-9)
        if fa * fb < 0:
            found += 1
            if found == n:
                z = optimize.brentq(lambda s: bessel_half(k, s), a, b, xtol=1e-15, rtol=1e-15)
                for _ in range(3):
                    d = bessel_half_prime(k, z)
                    z_new = z - bessel_half(k, z) / d
                    if abs(z_new - z) > step:
                        break
                    z = z_new
                return float(z)
        a, fa = b, fb
    raise RuntimeError(f"could not bracket zero {n} of J_{k}/2")


def disk_spectrum(count: int) -> list[tuple[float, int, int]]:
    """The first ``count`` distinct disk eigenvalues, each listed twice.

    Entries are ``(lambda, k, n)`` with ``lambda = z_{n,k}^2``, sorted
    ascending.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    # z_{n,1} = n*pi bounds every candidate we could ever need
    cands: list[tuple[float, int, int]] = []
    bound = bessel_zero(1, count) ** 2
    k = 1
    while True:
        z1 = bessel_zero(k, 1)
        if z1 * z1 > bound:
            break
        n = 1
        while True:
            z = bessel_zero(k, n)
            if z * z > bound:
                break
            cands.append((z * z, k, n))
            n += 1
        k += 2
    cands.sort()
    out = []
    for entry in cands[:count]:
        out.extend([entry, entry])
    return out


@dataclass(frozen=True)
class DiskMode:
    """One double eigenvalue of the unit disk with the pole at the centre."""

    k: int
    n: int
    z: float
    lam: float
    B: float
    beta: float


def _normalization(k: int, z: float) -> float:
    val, _ = integrate.quad(lambda r: bessel_half(k, z * r) ** 2 * r if r > 0 else 0.0,
                            0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    return 1.0 / math.sqrt(math.pi * val)


@lru_cache(maxsize=None)
def disk_mode(k: int, n: int) -> DiskMode:
    z = bessel_zero(k, n)
    B = _normalization(k, z)
    beta = B * z ** (k / 2) / (2 ** (k / 2) * gamma_half(k))
    return DiskMode(k=k, n=n, z=z, lam=z * z, B=B, beta=beta)


def disk_eigenfunction(mode: DiskMode, variant: str = "u"):
    """Sampler ``(r, t) -> complex`` for the K-real eigenfunctions u or v.

    ``t`` is taken in [0, 2*pi); the factor e^{it/2} makes the result
    anti-periodic in that branch.
    """
    if variant not in ("u", "v"):
        raise ValueError("variant must be 'u' or 'v'")
    k, B, z = mode.k, mode.B, mode.z

    def sample(r, t):
        r = np.asarray(r, dtype=float)
        t = np.mod(np.asarray(t, dtype=float), 2 * np.pi)
        rr = np.where(r > 0, r, 1.0)
        radial = np.where(r > 0, bessel_half(k, z * rr), 0.0)
        ang = np.sin(k * t / 2) if variant == "u" else -np.cos(k * t / 2)
        return B * np.exp(0.5j * t) * radial * ang

    return sample


def disk_gauged(mode: DiskMode, variant: str, alpha: float):
    """Real gauge-transformed eigenfunction on the disk cut along Gamma_0^alpha.

    Returns ``on_ray(s)`` and ``normal_on_ray(s)``: the value and the
    derivative along nu_alpha at distance ``s`` on the ray of direction
    alpha (plus side).
    """
    from .localexp import f_alpha

    k, B, z = mode.k, mode.B, mode.z
    sgn = 1.0 if variant == "u" else -1.0

    def angular(t):
        return np.sin(k * t / 2) if variant == "u" else np.cos(k * t / 2)

    def angular_dt(t):
        return (k / 2) * np.cos(k * t / 2) if variant == "u" else -(k / 2) * np.sin(k * t / 2)

    t_ray = float(np.mod(alpha, 2 * np.pi))
    f_ray = float(f_alpha(alpha, t_ray))

    def on_ray(s):
        s = np.asarray(s, dtype=float)
        ss = np.where(s > 0, s, 1.0)
        radial = np.where(s > 0, bessel_half(k, z * ss), 0.0)
        return sgn * f_ray * B * radial * angular(t_ray)

    def normal_on_ray(s):
        # grad . nu_alpha = (1/s) d/dt at t = alpha
        s = np.asarray(s, dtype=float)
        return sgn * f_ray * B * bessel_half(k, z * s) / s * angular_dt(t_ray)

    return on_ray, normal_on_ray


def disk_expansion(mode: DiskMode, variant: str = "u") -> LocalExpansion:
    """Analytic local expansion (k, beta, omega) of u or v at the centre."""
    if variant not in ("u", "v"):
        raise ValueError("variant must be 'u' or 'v'")
    omega = 0.0 if variant == "u" else math.pi / mode.k
    return LocalExpansion(k=mode.k, beta=mode.beta, omega=omega,
                          fit_radius_pair=(0.0, 0.0), fit_residual=0.0)


def spectrum_rows(count: int) -> list[tuple[float, int, int, int]]:
    """Rows ``(lambda, k, n, mult)`` for the spectrum CSV."""
    spec = disk_spectrum(count)
    return [(lam, k, n, 2) for lam, k, n in spec[::2]]
