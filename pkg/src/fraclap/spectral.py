"""Generalized eigenvalues of the pencil ``(A_h, M_h)`` compared with the
asymptotic law for the Dirichlet fractional Laplacian on ``(-1, 1)``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .mesh import FracProblem, assemble_mass, assemble_stiffness

__all__ = ["SpectrumReport", "asymptotic_eigenvalue", "discrete_spectrum"]


def asymptotic_eigenvalue(s: float, k) -> np.ndarray:
    """``(k pi / 2 - (1 - s) pi / 4) ** (2 s)``, valid on ``(-1, 1)`` up to O(1/k)."""
    k = np.asarray(k, dtype=float)
    return (k * math.pi / 2.0 - (1.0 - s) * math.pi / 4.0) ** (2.0 * s)


@dataclass
class SpectrumReport:
    s: float
    N: int
    eigenvalues: np.ndarray
    asymptotic: np.ndarray

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, len(self.eigenvalues) + 1)

    @property
    def rel_gap(self) -> np.ndarray:
        # signed: positive when the discrete value lies above the prediction
        return (self.eigenvalues - self.asymptotic) / self.asymptotic

    def rows(self):
        for k, lam, asym, gap in zip(self.k, self.eigenvalues, self.asymptotic, self.rel_gap):
            yield {
                "s": self.s,
                "N": self.N,
                "k": int(k),
                "lambda_discrete": float(lam),
                "lambda_asymptotic": float(asym),
                "rel_gap": float(gap),
            }


def discrete_spectrum(problem: FracProblem, K: int) -> SpectrumReport:
    """The ``K`` smallest eigenvalues of ``A_h x = lambda M_h x``.

    The asymptotic column is only meaningful for ``L = 1``.
    """
    if not 1 <= K <= problem.N:
        raise ValueError(f"K must satisfy 1 <= K <= N={problem.N}, got {K}")
    A = assemble_stiffness(problem).toarray()
    Mh = assemble_mass(problem).toarray()
    lam = eigh(A, Mh, eigvals_only=True, subset_by_index=[0, K - 1])
    return SpectrumReport(problem.s, problem.N, lam, asymptotic_eigenvalue(problem.s, np.arange(1, K + 1)))
