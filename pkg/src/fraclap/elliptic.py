"""Discrete fractional Poisson problem and its error analysis against the
closed-form solution for a constant right-hand side."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.sparse.linalg import LinearOperator, cg
from scipy.special import gamma

from .mesh import FracProblem, StiffnessMatrix, assemble_load, assemble_stiffness

__all__ = [
    "EllipticSolution",
    "ErrorReport",
    "NumericalFailure",
    "solve_elliptic",
    "exact_solution",
    "exact_integral",
    "hs_error",
    "linf_error",
    "convergence_study",
    "loglog_slope",
]


class NumericalFailure(RuntimeError):
    """A solver produced something that cannot be right (non-SPD matrix,
    negative squared norm, ...)."""


@dataclass
class EllipticSolution:
    problem: FracProblem
    coeffs: np.ndarray
    load: np.ndarray
    method: str = "cholesky"
    residual: float = 0.0

    def __call__(self, x) -> np.ndarray:
        """Piecewise-linear reconstruction, zero outside ``(-L, L)``."""
        p = self.problem
        xp = np.concatenate([[-p.L], p.nodes, [p.L]])
        up = np.concatenate([[0.0], self.coeffs, [0.0]])
        return np.interp(x, xp, up, left=0.0, right=0.0)

    @property
    def integral(self) -> float:
        # exact for P1 functions with zero boundary values
        return self.problem.h * float(np.sum(self.coeffs))


@dataclass
class ErrorReport:
    s: float
    N: int
    h: float
    hs_error: float = math.nan
    linf_error: float = math.nan
    residual: float = math.nan
    failed: str | None = field(default=None)


def _relative_residual(A: StiffnessMatrix, u, F) -> float:
    nF = np.linalg.norm(F)
    r = np.linalg.norm(A.matvec(u) - F)
    return float(r / nF) if nF > 0 else float(r)


def solve_elliptic(
    problem: FracProblem,
    load: np.ndarray,
    method: str = "cholesky",
    stiffness: StiffnessMatrix | None = None,
    tol: float = 1e-13,
) -> EllipticSolution:
    """Solve ``A_h u = F``.

    ``method="cholesky"`` factors the dense Toeplitz matrix; ``method="cg"``
    runs conjugate gradients with the FFT matrix-vector product.
    """
    A = assemble_stiffness(problem) if stiffness is None else stiffness
    F = np.asarray(load, dtype=float)
    if F.shape != (problem.N,):
        raise ValueError(f"load has shape {F.shape}, expected ({problem.N},)")
    if not np.any(F):
        u = np.zeros(problem.N)
    elif method == "cholesky":
        try:
            factor = cho_factor(A.toarray(), lower=True, check_finite=True)
        except LinAlgError as exc:
            raise NumericalFailure("stiffness matrix is not positive definite") from exc
        u = cho_solve(factor, F)
    elif method == "cg":
        op = LinearOperator(A.shape, matvec=A.matvec, dtype=float)
        # Jacobi scaling is exact here: the diagonal is constant
        u, info = cg(op, F, rtol=tol, atol=0.0, maxiter=10 * problem.N)
        if info != 0:
            raise NumericalFailure(f"CG did not converge (info={info})")
    else:
        raise ValueError(f"unknown method {method!r}")
    return EllipticSolution(problem, u, F, method, _relative_residual(A, u, F))


def exact_solution(s: float, L: float, x) -> np.ndarray:
    """Solution of ``(-d^2)^s u = 1`` on ``(-L, L)`` with zero exterior data."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > L):
        raise ValueError("x must satisfy |x| <= L")
    const = 2.0 ** (-2.0 * s) * math.sqrt(math.pi) / (gamma(0.5 + s) * gamma(1.0 + s))
    return const * np.maximum(L * L - x * x, 0.0) ** s


def exact_integral(s: float, L: float) -> float:
    return math.pi * L ** (2 * s + 1) / (2 ** (2 * s) * gamma(s + 0.5) * gamma(s + 1.5))


def hs_error(solution: EllipticSolution, rtol: float = 1e-12) -> float:
    """Energy-norm error for ``f = 1``, from Galerkin orthogonality:
    ``||u - u_h||^2 = int u - int u_h``."""
    p = solution.problem
    exact = exact_integral(p.s, p.L)
    gap = exact - solution.integral
    if gap < 0.0:
        if gap < -rtol * exact:
            raise NumericalFailure(f"negative squared energy error {gap:.3e}")
        gap = 0.0
    return math.sqrt(gap)


def linf_error(solution: EllipticSolution) -> float:
    p = solution.problem
    return float(np.max(np.abs(solution.coeffs - exact_solution(p.s, p.L, p.nodes))))


def _one(x):
    return np.ones_like(x)


def _study_cell(s: float, N: int, L: float, f: Callable, method: str) -> ErrorReport:
    problem = FracProblem(s, L, N)
    report = ErrorReport(s, N, problem.h)
    try:
        sol = solve_elliptic(problem, assemble_load(problem, f), method=method)
        report.hs_error = hs_error(sol)
        report.linf_error = linf_error(sol)
        report.residual = sol.residual
    except (NumericalFailure, LinAlgError, ValueError) as exc:
        report.failed = str(exc)
    return report


def convergence_study(
    s_list: Iterable[float],
    N_list: Iterable[int],
    f: Callable = _one,
    L: float = 1.0,
    method: str = "cholesky",
    jobs: int = 1,
) -> list[ErrorReport]:
    """One :class:`ErrorReport` per ``(s, N)`` cell, in row-major order.

    The error norms compare against the closed-form solution, which is only
    valid for ``f = 1``.
    """
    cells = [(float(s), int(N)) for s in s_list for N in N_list]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(lambda c: _study_cell(c[0], c[1], L, f, method), cells))
    return [_study_cell(s, N, L, f, method) for s, N in cells]


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log10 y`` against ``log10 x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.polyfit(np.log10(x), np.log10(y), 1)[0])
