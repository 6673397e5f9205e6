"""Implicit Euler for the controlled fractional heat equation and its
backward adjoint.

Forward, for ``n = 1..M``::

    (M_h + dt A_h) z^n = M_h z^{n-1} + dt * h * 1_omega v^n

Adjoint, for ``n = M..1``::

    (M_h + dt A_h) phi^n = M_h phi^{n+1},    phi^{M+1} = phi^T

The control enters through the nodal mask weighted by ``h``.  With that
choice the two schemes satisfy the exact discrete duality

    sum_n dt (v^n, 1_omega phi^n)_h = (z^M, phi^{M+1})_M - (z^0, phi^1)_M

where ``(u, w)_h = h sum u_i w_i`` and ``(u, w)_M = u^T M_h w``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .mesh import FracProblem, assemble_mass, assemble_stiffness

__all__ = [
    "TimeGrid",
    "ControlRegion",
    "Trajectory",
    "HeatSystem",
    "make_region",
]


@dataclass(frozen=True)
class TimeGrid:
    T: float
    M: int

    def __post_init__(self):
        if not self.T > 0.0:
            raise ValueError(f"final time T must be positive, got {self.T}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"number of time steps M must be a positive integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.M + 1)


@dataclass(frozen=True)
class ControlRegion:
    a: float
    b: float
    mask: np.ndarray

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


def make_region(problem: FracProblem, a: float, b: float) -> ControlRegion:
    """Nodes strictly inside ``(a, b)`` are controlled."""
    if not (-problem.L <= a < b <= problem.L):
        raise ValueError(f"control region ({a}, {b}) must satisfy -L <= a < b <= L")
    x = problem.nodes
    # nodes that sit on an endpoint up to rounding are outside
    tol = 1e-9 * problem.h
    mask = ((x > a + tol) & (x < b - tol)).astype(float)
    if not mask.any():
        raise ValueError(f"control region ({a}, {b}) contains no mesh node")
    mask.setflags(write=False)
    return ControlRegion(float(a), float(b), mask)


@dataclass
class Trajectory:
    """States stacked row-wise.

    Forward trajectories hold ``z^0..z^M``; adjoint ones hold
    ``phi^1..phi^{M+1}``.  Either way ``states[j]`` lives at ``times[j]``.
    """

    states: np.ndarray
    times: np.ndarray
    kind: str = "forward"

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]


class HeatSystem:
    """Factorizes ``M_h + dt A_h`` once; all solves reuse it."""

    def __init__(self, problem: FracProblem, grid: TimeGrid, region: ControlRegion):
        if region.mask.shape != (problem.N,):
            raise ValueError("control region does not match the mesh")
        self.problem = problem
        self.grid = grid
        self.region = region
        self.stiffness = assemble_stiffness(problem)
        self.mass = assemble_mass(problem)
        A = self.stiffness.toarray()
        Mh = self.mass.toarray()
        self.system_matrix = Mh + grid.dt * A
        try:
            self.factor = cho_factor(self.system_matrix, lower=True)
        except LinAlgError as exc:
            raise ArithmeticError("M_h + dt A_h is not positive definite") from exc
        # Propagators built from the one factorization: one step of the
        # homogeneous scheme, and the response to a unit nodal control.
        self.propagator = cho_solve(self.factor, Mh)
        self.input_map = cho_solve(self.factor, np.diag(grid.dt * problem.h * region.mask))

    @property
    def N(self) -> int:
        return self.problem.N

    @property
    def M(self) -> int:
        return self.grid.M

    def mass_inner(self, u, w) -> float:
        return float(u @ self.mass.matvec(w))

    def h_inner(self, u, w) -> float:
        return self.problem.h * float(np.dot(u, w))

    def energy(self, z) -> float:
        """``z^T A_h z``."""
        return float(z @ self.stiffness.matvec(z))

    def step_forward(self, z, source=None) -> np.ndarray:
        """One implicit Euler step; ``source`` is the nodal control ``v^{n+1}``."""
        rhs = self.mass.matvec(np.asarray(z, dtype=float))
        if source is not None:
            rhs = rhs + self.grid.dt * self.problem.h * self.region.mask * source
        return cho_solve(self.factor, rhs)

    def step_backward(self, phi) -> np.ndarray:
        return cho_solve(self.factor, self.mass.matvec(np.asarray(phi, dtype=float)))

    def _check_state(self, x, name):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.N,):
            raise ValueError(f"{name} has shape {x.shape}, expected ({self.N},)")
        return x

    def _check_control(self, control):
        if control is None:
            return None
        control = np.asarray(control, dtype=float)
        if control.shape != (self.M, self.N):
            raise ValueError(f"control has shape {control.shape}, expected ({self.M}, {self.N})")
        return control

    def solve_forward(self, z0, control=None) -> Trajectory:
        """Forward trajectory ``z^0..z^M``; ``control[n-1]`` is ``v^n``."""
        z = self._check_state(z0, "z0")
        control = self._check_control(control)
        states = np.empty((self.M + 1, self.N))
        states[0] = z
        P, B = self.propagator, self.input_map
        for n in range(1, self.M + 1):
            z = P @ z
            if control is not None:
                z = z + B @ control[n - 1]
            states[n] = z
        return Trajectory(states, self.grid.times, "forward")

    def terminal_state(self, z0, control=None) -> np.ndarray:
        """``z^M`` only; the control response is accumulated as a Horner sum."""
        z = self._check_state(z0, "z0")
        control = self._check_control(control)
        P, B = self.propagator, self.input_map
        if control is None:
            for _ in range(self.M):
                z = P @ z
            return z
        BV = control @ B.T  # row n-1 holds B v^n
        for n in range(self.M):
            z = P @ z + BV[n]
        return z

    def solve_adjoint(self, phiT) -> Trajectory:
        """Backward trajectory, ``states[n-1] = phi^n`` for ``n = 1..M+1``."""
        phi = self._check_state(phiT, "phiT")
        states = np.empty((self.M + 1, self.N))
        states[self.M] = phi
        P = self.propagator
        for n in range(self.M - 1, -1, -1):
            phi = P @ phi
            states[n] = phi
        # phi^n pairs with v^n at t_n = n dt; phi^{M+1} = phi^T sits at T
        times = np.minimum(self.grid.dt * np.arange(1, self.M + 2), self.grid.T)
        return Trajectory(states, times, "adjoint")
