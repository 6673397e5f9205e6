"""scikit-learn style front ends.

``FractionalPoissonSolver`` fits the discrete solution for a source term and
predicts ``u_h`` at arbitrary points.  ``PenalizedHUMControl`` fits the
penalized HUM control for an initial datum.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _validation as v
from .elliptic import exact_solution, hs_error, linf_error, solve_elliptic
from .hum import ControlSetup, minimize_dual, penalty_from_rule, primal_energy
from .evolution import TimeGrid, make_region
from .mesh import FracProblem, assemble_load, assemble_stiffness


def _one(x):
    return np.ones_like(x)


class FractionalPoissonSolver(BaseEstimator):
    """P1 solver for ``(-d^2)^s u = f`` on ``(-L, L)``, ``u = 0`` outside.

    Parameters
    ----------
    s : float
        Fractional order in (0, 1).
    L : float
        Half-width of the domain.
    n_nodes : int
        Number of interior mesh nodes.
    method : {"cholesky", "cg"}
        Dense Cholesky, or CG with FFT Toeplitz products.
    """

    def __init__(self, s=0.5, L=1.0, n_nodes=50, method="cholesky"):
        self.s = s
        self.L = L
        self.n_nodes = n_nodes
        self.method = method

    def _validate_params(self):
        v.check_order(self.s)
        v.check_positive(self.L, "L")
        v.check_positive_int(self.n_nodes, "n_nodes")
        if self.method not in ("cholesky", "cg"):
            raise ValueError(f"method must be 'cholesky' or 'cg', got {self.method!r}")

    def fit(self, source=None, y=None):
        """``source`` is a callable ``f(x)``, nodal load values, or None for ``f = 1``."""
        self._validate_params()
        problem = FracProblem(self.s, self.L, self.n_nodes)
        if source is None:
            load = assemble_load(problem, _one)
        elif callable(source):
            load = assemble_load(problem, source)
        else:
            load = v.check_nodal(source, problem.N, "source")
        self.problem_ = problem
        self.stiffness_ = assemble_stiffness(problem)
        self.solution_ = solve_elliptic(problem, load, method=self.method, stiffness=self.stiffness_)
        self.coef_ = self.solution_.coeffs
        self.nodes_ = problem.nodes
        self.constant_source_ = source is None
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        return self.solution_(v.check_points(X, self.L))

    def errors(self):
        """``(hs_error, linf_error)`` against the closed-form solution (``f = 1`` only)."""
        check_is_fitted(self, "solution_")
        if not self.constant_source_:
            raise ValueError("error norms need the constant source f = 1")
        return hs_error(self.solution_), linf_error(self.solution_)

    def exact(self, X):
        return exact_solution(self.s, self.L, v.check_points(X, self.L))


class PenalizedHUMControl(BaseEstimator):
    """Penalized HUM control of the fractional heat equation from a region.

    ``eps`` is a number or a rule in ``h`` (``"h"``, ``"h^2"``...).
    """

    def __init__(
        self,
        s=0.8,
        L=1.0,
        n_nodes=63,
        T=0.3,
        n_steps=2000,
        omega=(-0.3, 0.8),
        eps="h",
        tol=1e-8,
        max_iter=1000,
    ):
        self.s = s
        self.L = L
        self.n_nodes = n_nodes
        self.T = T
        self.n_steps = n_steps
        self.omega = omega
        self.eps = eps
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, z0=None, y=None):
        """``z0`` is a callable, nodal values, or None for ``sin(pi x)``."""
        v.check_order(self.s)
        L = v.check_positive(self.L, "L")
        v.check_positive_int(self.n_nodes, "n_nodes")
        v.check_positive(self.T, "T")
        v.check_positive_int(self.n_steps, "n_steps")
        v.check_positive(self.tol, "tol")
        v.check_positive_int(self.max_iter, "max_iter")
        a, b = v.check_interval(self.omega, L)
        problem = FracProblem(self.s, L, self.n_nodes)
        if z0 is None:
            values = np.sin(np.pi * problem.nodes)
        elif callable(z0):
            values = np.asarray(z0(problem.nodes), dtype=float)
        else:
            values = v.check_nodal(z0, problem.N, "z0")
        setup = ControlSetup(
            problem,
            TimeGrid(self.T, self.n_steps),
            make_region(problem, a, b),
            penalty_from_rule(self.eps, problem.h),
            values,
        )
        self.setup_ = setup
        self.result_ = minimize_dual(setup, tol=self.tol, max_iter=self.max_iter)
        self.control_ = self.result_.control
        self.phiT_ = self.result_.phiT_opt
        self.n_iter_ = self.result_.cg_iterations
        return self

    def controlled_trajectory(self):
        check_is_fitted(self, "result_")
        return self.setup_.system.solve_forward(self.setup_.z0, self.control_)

    def free_trajectory(self):
        check_is_fitted(self, "result_")
        return self.setup_.system.solve_forward(self.setup_.z0)

    def primal_energy(self):
        check_is_fitted(self, "result_")
        return primal_energy(self.control_, self.setup_)
