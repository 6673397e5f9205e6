"""Uniform P1 mesh and exact assembly of the 1D fractional Laplacian.

The stiffness entries are closed-form expressions in ``k = |i - j|``; no
numerical integration is involved.  The matrix is symmetric Toeplitz, so
only its first row ``a(0), ..., a(N-1)`` is stored.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import toeplitz
from scipy.special import gamma

__all__ = [
    "FracProblem",
    "StiffnessMatrix",
    "MassMatrix",
    "make_mesh",
    "normalization_constant",
    "kernel_integral",
    "stiffness_entry",
    "stiffness_row",
    "assemble_stiffness",
    "assemble_mass",
    "assemble_load",
    "SERIES_THRESHOLD",
]

# Beyond this k the fourth difference is summed from its asymptotic series.
SERIES_THRESHOLD = 5
_SERIES_TERMS = 14


@dataclass(frozen=True)
class FracProblem:
    """Fractional order ``s``, half-width ``L`` and ``N`` interior nodes."""

    s: float
    L: float
    N: int
    h: float = field(init=False)
    warnings: tuple[str, ...] = field(init=False, default=())

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"fractional order s must lie in (0, 1), got {self.s}")
        if not self.L > 0.0:
            raise ValueError(f"half-width L must be positive, got {self.L}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "h", 2.0 * self.L / (self.N + 1))
        notes = ()
        if self.s <= 0.01 or self.s >= 0.99:
            notes = (f"s={self.s} is close to an endpoint of (0, 1); conditioning degrades",)
        object.__setattr__(self, "warnings", notes)

    @property
    def nodes(self) -> np.ndarray:
        """Interior nodes ``x_i = -L + i*h``, ``i = 1..N``."""
        return -self.L + self.h * np.arange(1, self.N + 1)


def make_mesh(s: float, L: float, N: int) -> FracProblem:
    problem = FracProblem(s, L, N)
    for msg in problem.warnings:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return problem


def normalization_constant(s: float) -> float:
    """The constant ``c_{1,s}`` in front of the singular integral."""
    return s * 4.0**s * gamma(0.5 + s) / (math.sqrt(math.pi) * gamma(1.0 - s))


def _expm1_ratio(z):
    # expm1(z)/z with the removable singularity at 0 filled in
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = z != 0.0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def _g(x, tau):
    # (x^(2+tau) - x^2) / tau; reduces to x^2 ln x at tau = 0
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    lx = np.log(x[pos])
    out[pos] = x[pos] ** 2 * lx * _expm1_ratio(tau * lx)
    return out


def _fourth_difference_direct(k, tau):
    # f(k+2) - 4 f(k+1) + 6 f(k) - 4 f(k-1) + f(k-2) with f = _g
    k = np.asarray(k, dtype=float)
    return (
        _g(k + 2, tau)
        - 4.0 * _g(k + 1, tau)
        + 6.0 * _g(k, tau)
        - 4.0 * _g(k - 1, tau)
        + _g(k - 2, tau)
    )


def _fourth_difference_series(k, tau):
    # Central fourth difference of x^p / tau, p = 2 + tau, expanded as
    # sum_{n even >= 4} (2^(n+1) - 8)/n! * d^n/dx^n, so the (p-2) factor of
    # the derivatives cancels tau analytically.
    k = np.asarray(k, dtype=float)
    p = 2.0 + tau
    inv2 = 1.0 / (k * k)
    # falling factorial p(p-1)(p-3) for n = 4, tau already divided out
    ff = p * (p - 1.0) * (p - 3.0)
    total = np.zeros_like(k)
    term_scale = np.ones_like(k)
    for n in range(4, 4 + 2 * _SERIES_TERMS, 2):
        if n > 4:
            ff *= (p - (n - 2)) * (p - (n - 1))
            term_scale = term_scale * inv2
        total += (2.0 ** (n + 1) - 8.0) / math.factorial(n) * ff * term_scale
    return total * k ** (p - 4.0)


def _fourth_difference(k, tau):
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    near = k <= SERIES_THRESHOLD
    out[near] = _fourth_difference_direct(k[near], tau)
    out[~near] = _fourth_difference_series(k[~near], tau)
    return out


def kernel_integral(s: float, h: float, k) -> np.ndarray:
    """Double integral of the tent-function kernel, without ``c_{1,s}/2``.

    This is the quantity whose closed forms are ``8 ln 2``, ``9 ln 3 - 16 ln 2``
    and ``56 ln 2 - 36 ln 3`` at ``s = 1/2`` for ``k = 0, 1, 2``.
    """
    k = np.atleast_1d(np.asarray(k))
    if np.any(k < 0) or np.any(k != np.round(k)):
        raise ValueError("k must be a non-negative integer")
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s must lie in (0, 1), got {s}")
    if not h > 0.0:
        raise ValueError(f"mesh size h must be positive, got {h}")
    k = k.astype(float)
    out = np.empty_like(k)

    if s == 0.5:
        ln2, ln3 = math.log(2.0), math.log(3.0)
        out[k == 0] = 8.0 * ln2
        out[k == 1] = 9.0 * ln3 - 16.0 * ln2
        out[k == 2] = 56.0 * ln2 - 36.0 * ln3
        far = k > 2
        out[far] = _fourth_difference(k[far], 0.0)
        return out

    # Written with tau = 1 - 2s divided out of every numerator, so the
    # expressions stay accurate as s -> 1/2.
    tau = 1.0 - 2.0 * s
    p = 3.0 - 2.0 * s
    denom = s * (1.0 - s) * p
    scale = h**tau
    ln2, ln3 = math.log(2.0), math.log(3.0)
    r2 = ln2 * _expm1_ratio(tau * ln2)
    r3 = ln3 * _expm1_ratio(tau * ln3)
    out[k == 0] = scale * 4.0 * r2 / denom
    out[k == 1] = scale * (9.0 * r3 - 16.0 * r2) / (2.0 * denom)
    far = k >= 2
    out[far] = scale * _fourth_difference(k[far], tau) / (2.0 * denom)
    return out


def stiffness_entry(s: float, h: float, k) -> np.ndarray | float:
    """Closed-form value ``a(k)`` of the stiffness integrals, ``k = |i - j|``.

    Returns the bare double integral (the values tabulated for ``s = 1/2``);
    the assembled Galerkin matrix multiplies it by ``c_{1,s}/2``.
    """
    values = kernel_integral(s, h, k)
    if np.ndim(k) == 0:
        return float(values[0])
    return values


@dataclass(frozen=True)
class StiffnessMatrix:
    """Symmetric Toeplitz Galerkin matrix of the fractional bilinear form.

    ``diag_values[k]`` is the entry on the k-th diagonal and already includes
    the factor ``c_{1,s}/2``.
    """

    diag_values: np.ndarray
    s: float
    h: float

    @property
    def n(self) -> int:
        return len(self.diag_values)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def toarray(self) -> np.ndarray:
        return toeplitz(self.diag_values)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Product with ``x`` through a circulant embedding of size ``2N``."""
        x = np.asarray(x, dtype=float)
        n = self.n
        col = np.concatenate([self.diag_values, [0.0], self.diag_values[:0:-1]])
        symbol = np.fft.rfft(col)
        y = np.fft.irfft(symbol * np.fft.rfft(x, n=2 * n, axis=0).T, n=2 * n).T
        return y[:n]

    def __matmul__(self, x):
        return self.matvec(x)


def stiffness_row(problem: FracProblem) -> np.ndarray:
    k = np.arange(problem.N)
    return 0.5 * normalization_constant(problem.s) * kernel_integral(problem.s, problem.h, k)


def assemble_stiffness(problem: FracProblem) -> StiffnessMatrix:
    row = stiffness_row(problem)
    row.setflags(write=False)
    return StiffnessMatrix(row, problem.s, problem.h)


@dataclass(frozen=True)
class MassMatrix:
    n: int
    main: float
    off: float

    def toarray(self) -> np.ndarray:
        a = np.diag(np.full(self.n, self.main))
        if self.n > 1:
            a += np.diag(np.full(self.n - 1, self.off), 1)
            a += np.diag(np.full(self.n - 1, self.off), -1)
        return a

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.main * x
        y[1:] += self.off * x[:-1]
        y[:-1] += self.off * x[1:]
        return y

    def __matmul__(self, x):
        return self.matvec(x)


def assemble_mass(problem: FracProblem) -> MassMatrix:
    return MassMatrix(problem.N, 2.0 * problem.h / 3.0, problem.h / 6.0)


def assemble_load(problem: FracProblem, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Load vector ``F_i = int f phi_i`` with 3-point Gauss-Legendre per element."""
    t, w = leggauss(3)
    h = problem.h
    # elements K_0..K_N between consecutive nodes x_0..x_{N+1}
    left = -problem.L + h * np.arange(problem.N + 1)
    xq = left[:, None] + 0.5 * h * (t + 1.0)[None, :]
    fq = np.asarray(f(xq), dtype=float)
    fq = np.broadcast_to(fq, xq.shape)
    if not np.all(np.isfinite(fq)):
        raise ValueError("source term returned non-finite values")
    lam = 0.5 * (t + 1.0)  # local coordinate in [0, 1]
    weights = 0.5 * h * w
    # rising half of phi_{e+1} and falling half of phi_e on element e
    rising = (fq * lam * weights).sum(axis=1)
    falling = (fq * (1.0 - lam) * weights).sum(axis=1)
    return rising[:-1] + falling[1:]
