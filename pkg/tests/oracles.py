"""Brute-force references that share no code with the closed-form assembly."""
from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.special import gamma

_T2, _W2 = leggauss(2)


def c1s(s):
    return s * 2 ** (2 * s) * gamma((1 + 2 * s) / 2) / (math.sqrt(math.pi) * gamma(1 - s))


def tent(x, center, h):
    return np.maximum(1.0 - np.abs(x - center) / h, 0.0)


def _overlap(r, xi, xj, h):
    """int (phi_i(x) - phi_i(x+r)) (phi_j(x) - phi_j(x+r)) dx, exactly.

    The integrand is piecewise quadratic in x; two Gauss points per piece.
    """
    knots = np.array([xi - h, xi, xi + h, xj - h, xj, xj + h])
    bps = np.unique(np.concatenate([knots, knots - r]))
    a, b = bps[:-1], bps[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * _T2[None, :]
    f = (tent(x, xi, h) - tent(x + r, xi, h)) * (tent(x, xj, h) - tent(x + r, xj, h))
    return float(np.sum(half[:, None] * _W2[None, :] * f))


def stiffness_oracle(s, h, i, j, L=None, epsrel=1e-12):
    """(c_{1,s}/2) * double integral for tent functions centred at nodes i, j.

    Integrates over r = y - x >= 0 (the integrand is even in r); the inner x
    integral is exact, the outer one adaptive with the r^{1-2s} singularity
    moved into the quadrature weight.  Beyond R = (|i-j|+2) h the inner
    integral is the constant 2 <phi_i, phi_j> and the tail is analytic.
    """
    x0 = -L if L is not None else 0.0
    xi, xj = x0 + i * h, x0 + j * h
    k = abs(i - j)
    R = (k + 2) * h
    total = 0.0
    # first cell: the inner integral is a polynomial of degree <= 3 in r
    # with a double zero at r = 0, so integrate its moments exactly
    r = 0.5 * h * (1.0 + np.cos(np.linspace(0.0, np.pi, 12)))
    coef = np.polyfit(r, [_overlap(t, xi, xj, h) for t in r], 5)
    for c, n in zip(coef, range(5, -1, -1)):
        if n >= 2:
            total += c * h ** (n - 2 * s) / (n - 2 * s)
    for m in range(1, k + 2):
        val, _ = quad(
            lambda r: _overlap(r, xi, xj, h) * r ** (-1.0 - 2.0 * s),
            m * h,
            (m + 1) * h,
            epsrel=epsrel,
            epsabs=0.0,
            limit=200,
        )
        total += val
    mass = mass_oracle(h, i, j)
    total += 2.0 * mass * R ** (-2.0 * s) / (2.0 * s)
    return 0.5 * c1s(s) * 2.0 * total


def mass_oracle(h, i, j):
    if abs(i - j) > 1:
        return 0.0
    xi, xj = i * h, j * h
    lo, hi = max(xi, xj) - h, min(xi, xj) + h
    pts = sorted({lo, xi, xj, hi})
    return sum(quad(lambda x: tent(x, xi, h) * tent(x, xj, h), a, b)[0] for a, b in zip(pts[:-1], pts[1:]))


def fourier_oracle(s, h, k):
    """Same entry through the symbol |xi|^{2s} of the operator."""
    f = lambda xi: xi ** (2 * s) * np.sinc(xi * h / (2 * np.pi)) ** 4 * h * h * np.cos(k * h * xi)
    upper = 400.0 / h
    val, _ = quad(f, 0.0, upper, limit=4000, epsabs=1e-13)
    return 2.0 * val / (2.0 * np.pi)
