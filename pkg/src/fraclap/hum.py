"""Penalized HUM for the fully discrete fractional heat equation.

The dual functional over final adjoint data is

    J(phi^T) = 1/2 sum_n dt |1_omega phi^n|_h^2 + eps/2 |phi^T|_M^2 + (phi^1, y0)_M

and its minimizer gives the control ``v^n = 1_omega phi^n``.  The matching
primal functional is

    F(v) = 1/2 sum_n dt |v^n|_h^2 + 1/(2 eps) |z^M|_M^2

so that ``inf F = -min J``.  Control-space norms use ``(u, w)_h = h u.w``;
state-space pairings use the mass matrix, the product in which the Gram
operator below is self-adjoint.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .evolution import ControlRegion, HeatSystem, TimeGrid, make_region
from .mesh import FracProblem

__all__ = [
    "ControlSetup",
    "HumResult",
    "make_setup",
    "penalty_from_rule",
    "gram_apply",
    "gradient_apply",
    "dual_functional",
    "minimize_dual",
    "primal_energy",
    "controllability_study",
]

logger = logging.getLogger(__name__)

CONVENTIONS = {
    "control_input": "h-weighted nodal mask: (M_h + dt A_h) z^n = M_h z^{n-1} + dt*h*1_omega*v^n",
    "control_norm": "(u,w)_h = h*sum(u_i*w_i)",
    "state_pairing": "(u,w)_M = u^T M_h w (terminal penalty, eps term, (phi^1, y0))",
    "cg_inner_product": "mass matrix",
    "terminal_norm": "|y^M|_h",
    "primal_control_term": "1/2 factor",
}


def penalty_from_rule(rule: str | float, h: float) -> float:
    """``"h"``, ``"h^alpha"`` or a literal positive number."""
    if isinstance(rule, (int, float)):
        eps = float(rule)
    else:
        rule = rule.strip().replace(" ", "")
        if rule == "h":
            eps = h
        elif rule.startswith("h^") or rule.startswith("h**"):
            eps = h ** float(rule.split("^")[-1].split("**")[-1])
        else:
            eps = float(rule)
    if not eps > 0.0:
        raise ValueError(f"penalization parameter must be positive, got {eps}")
    return eps


@dataclass
class ControlSetup:
    problem: FracProblem
    grid: TimeGrid
    region: ControlRegion
    eps: float
    z0: np.ndarray
    system: HeatSystem = field(repr=False, default=None)

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError(f"penalization parameter must be positive, got {self.eps}")
        self.z0 = np.asarray(self.z0, dtype=float)
        if self.z0.shape != (self.problem.N,):
            raise ValueError("initial datum does not match the mesh")
        if self.system is None:
            self.system = HeatSystem(self.problem, self.grid, self.region)


def make_setup(
    s: float,
    N: int,
    L: float = 1.0,
    T: float = 0.3,
    M: int = 2000,
    omega: tuple[float, float] = (-0.3, 0.8),
    eps: str | float = "h",
    z0: Callable[[np.ndarray], np.ndarray] | np.ndarray | None = None,
) -> ControlSetup:
    """Nodal interpolation of ``z0`` (default ``sin(pi x)``) on a fresh mesh."""
    problem = FracProblem(s, L, N)
    grid = TimeGrid(T, M)
    region = make_region(problem, *omega)
    if z0 is None:
        z0 = lambda x: np.sin(np.pi * x)  # noqa: E731
    values = z0(problem.nodes) if callable(z0) else np.asarray(z0, dtype=float)
    return ControlSetup(problem, grid, region, penalty_from_rule(eps, problem.h), values)


@dataclass
class HumResult:
    phiT_opt: np.ndarray
    control: np.ndarray
    terminal_state: np.ndarray
    cost: float
    optimal_energy: float
    terminal_norm: float
    dual_value: float
    cg_iterations: int
    cg_residual: float
    converged: bool
    eps: float
    wall_time: float = 0.0


def gram_apply(phiT, system: HeatSystem) -> np.ndarray:
    """Terminal state from zero data under the control ``1_omega phi^n``."""
    adj = system.solve_adjoint(phiT)
    control = adj.states[:-1] * system.region.mask
    return system.terminal_state(np.zeros(system.N), control)


def gradient_apply(phiT, setup: ControlSetup, z_free=None) -> np.ndarray:
    """Gradient of the dual functional in the mass inner product."""
    system = setup.system
    if z_free is None:
        z_free = system.terminal_state(setup.z0)
    return gram_apply(phiT, system) + setup.eps * np.asarray(phiT, dtype=float) + z_free


def _control_norm_sq(control, system: HeatSystem) -> float:
    return system.grid.dt * system.problem.h * float(np.sum(control * control))


def dual_functional(phiT, setup: ControlSetup) -> float:
    system = setup.system
    phiT = np.asarray(phiT, dtype=float)
    adj = system.solve_adjoint(phiT)
    control = adj.states[:-1] * system.region.mask
    return (
        0.5 * _control_norm_sq(control, system)
        + 0.5 * setup.eps * system.mass_inner(phiT, phiT)
        + system.mass_inner(adj.states[0], setup.z0)
    )


def primal_energy(control, setup: ControlSetup) -> float:
    """Primal functional evaluated by running the forward scheme."""
    system = setup.system
    control = np.asarray(control, dtype=float)
    zM = system.terminal_state(setup.z0, control)
    return 0.5 * _control_norm_sq(control, system) + system.mass_inner(zM, zM) / (2.0 * setup.eps)


def minimize_dual(setup: ControlSetup, tol: float = 1e-8, max_iter: int = 1000) -> HumResult:
    """Conjugate gradient on ``(Lambda + eps I) phi^T = -z_free^M``.

    Stops at relative residual ``tol`` in the mass norm.  Hitting
    ``max_iter`` is reported through ``converged``, not raised: slow
    convergence at small ``eps`` is itself a symptom of missing
    observability.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    start = time.perf_counter()
    system = setup.system
    eps = setup.eps
    minner = system.mass_inner

    z_free = system.terminal_state(setup.z0)
    b = -z_free
    b_norm = math.sqrt(minner(b, b))
    phi = np.zeros(system.N)
    it = 0
    rel = 0.0
    if b_norm > 0.0:
        r = b.copy()
        p = r.copy()
        rr = minner(r, r)
        rel = math.sqrt(rr) / b_norm
        while rel > tol and it < max_iter:
            Gp = gram_apply(p, system) + eps * p
            alpha = rr / minner(p, Gp)
            phi += alpha * p
            r -= alpha * Gp
            rr_new = minner(r, r)
            p = r + (rr_new / rr) * p
            rr = rr_new
            it += 1
            rel = math.sqrt(rr) / b_norm
        logger.debug("CG stopped after %d iterations, residual %.3e", it, rel)

    adj = system.solve_adjoint(phi)
    control = adj.states[:-1] * system.region.mask
    yM = system.terminal_state(setup.z0, control)
    dual = (
        0.5 * _control_norm_sq(control, system)
        + 0.5 * eps * minner(phi, phi)
        + minner(adj.states[0], setup.z0)
    )
    return HumResult(
        phiT_opt=phi,
        control=control,
        terminal_state=yM,
        cost=math.sqrt(_control_norm_sq(control, system)),
        optimal_energy=-dual,
        terminal_norm=math.sqrt(system.h_inner(yM, yM)),
        dual_value=dual,
        cg_iterations=it,
        cg_residual=rel,
        converged=rel <= tol,
        eps=eps,
        wall_time=time.perf_counter() - start,
    )


STUDY_COLUMNS = ("s", "N", "h", "dt", "eps", "cost", "inf_F", "terminal_norm", "cg_iters")


def _study_cell(s, N, template, tol, max_iter):
    row = {"s": float(s), "N": int(N)}
    try:
        setup = make_setup(s, N, **template)
        res = minimize_dual(setup, tol=tol, max_iter=max_iter)
        row.update(
            h=setup.problem.h,
            dt=setup.grid.dt,
            eps=setup.eps,
            cost=res.cost,
            inf_F=res.optimal_energy,
            terminal_norm=res.terminal_norm,
            cg_iters=res.cg_iterations,
            converged=res.converged,
            cg_residual=res.cg_residual,
        )
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        row["failed"] = str(exc)
    return row


def controllability_study(
    s_list,
    N_list,
    setup_template: dict | None = None,
    tol: float = 1e-8,
    max_iter: int = 1000,
    jobs: int = 1,
) -> list[dict]:
    """Diagnostics per ``(s, N)``; ``setup_template`` holds the
    :func:`make_setup` keywords other than ``s`` and ``N``."""
    template = dict(setup_template or {})
    cells = [(float(s), int(N)) for s in s_list for N in N_list]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(lambda c: _study_cell(c[0], c[1], template, tol, max_iter), cells))
    return [_study_cell(s, N, template, tol, max_iter) for s, N in cells]
