"""IMEX time stepping for the cell density with step-doubling error control.

One step of size ``dt`` from ``(u, v)``:

1. face flux ``F = chemotactic_flux(u, v)`` (explicit, upwind);
2. ``(I - dt Δ_h) u* = u - dt div F`` (backward-Euler diffusion, CG);
3. ``(I - Δ_h) v* = g(u*)``.

Both the implicit diffusion operator and the flux divergence telescope, so
``∫u`` is conserved to rounding.  The local error is estimated by comparing
one full step with two half steps; the two-half-step result is kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .elliptic import DEFAULT_TOL, solve_shifted
from .errors import DomainViolation, NonConvergence, NumericalFailure
from .grid import ScalarField, div_arrays
from .model import ModelParams, flux_arrays, g_eval


@dataclass(frozen=True)
class StepController:
    dt: float = 1e-8
    dt_min: float = 1e-14
    dt_max: float = 1.0
    rtol: float = 1e-4
    cfl: float = 0.5
    shrink: float = 0.5
    grow: float = 1.25
    safety: float = 0.9

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt <= self.dt_max):
            raise ValueError(f"need 0 < dt_min <= dt <= dt_max, got {self.dt_min}, {self.dt}, {self.dt_max}")
        if not (0 < self.cfl <= 1):
            raise ValueError(f"cfl must be in (0, 1], got {self.cfl}")
        if not (0 < self.rtol <= 0.1):
            raise ValueError(f"rtol must be in (0, 0.1], got {self.rtol}")

    @property
    def at_floor(self) -> bool:
        return self.dt <= self.dt_min


@dataclass(frozen=True)
class SimState:
    t: float
    u: ScalarField
    v: ScalarField
    step_index: int = 0


class StepResult(NamedTuple):
    state: SimState
    accepted: bool
    err_est: float
    cfl_dt: float
    reason: str = ""


@dataclass(frozen=True)
class SolverOptions:
    """Linear-solver settings shared by the diffusion and signal solves."""

    tol: float = DEFAULT_TOL
    max_iter: int = 20000
    preconditioner: str | None = "dct"


def advective_dt(v: np.ndarray, law, hx: float, hy: float, cfl: float) -> float:
    """``cfl * min(hx, hy) / max|χ(v_face) ∂v|``; infinite for a flat signal."""
    _, _, ax, ay = flux_arrays(np.zeros_like(v), v, law, hx, hy)
    speed = max(np.abs(ax).max(), np.abs(ay).max())
    if speed == 0.0:
        return math.inf
    return cfl * min(hx, hy) / speed


def _substep(u, v, dt, params, grid, opts, tendency=None):
    hx, hy = grid.hx, grid.hy
    if tendency is None:
        fx, fy, _, _ = flux_arrays(u, v, params.sensitivity, hx, hy)
        tendency = div_arrays(fx, fy, hx, hy)
    rhs = u - dt * tendency
    u_new, _, _ = solve_shifted(rhs, grid, dt, opts.tol, opts.max_iter, u, opts.preconditioner)
    v_new, _, _ = solve_shifted(
        g_eval(params.production, u_new), grid, 1.0, opts.tol, opts.max_iter, v, opts.preconditioner
    )
    return u_new, v_new


def imex_update(state: SimState, params: ModelParams, dt: float, opts: SolverOptions = SolverOptions()) -> SimState:
    """One plain IMEX step of size ``dt`` (no error control, no checks)."""
    grid = state.u.grid
    u, v = _substep(state.u.values, state.v.values, dt, params, grid, opts)
    return SimState(state.t + dt, ScalarField(grid, u), ScalarField(grid, v), state.step_index + 1)


def step(
    state: SimState,
    params: ModelParams,
    ctrl: StepController,
    opts: SolverOptions = SolverOptions(),
    err_floor: float | None = None,
) -> StepResult:
    """Attempt one step of size ``ctrl.dt``.

    A rejected step returns the input state unchanged together with the
    reason.  Rejection while ``dt`` is already at ``dt_min`` raises
    ``NumericalFailure``.

    ``err_floor`` guards the relative error against near-zero fields; the
    default is ``1e-3`` times the mean density (the mean is conserved).
    """
    grid = state.u.grid
    u, v = state.u.values, state.v.values
    dt = ctrl.dt
    if err_floor is None:
        err_floor = 1e-3 * abs(u.mean())
    law = params.sensitivity

    try:
        cfl_dt = advective_dt(v, law, grid.hx, grid.hy, ctrl.cfl)
        fx, fy, _, _ = flux_arrays(u, v, law, grid.hx, grid.hy)
        tend = div_arrays(fx, fy, grid.hx, grid.hy)
        u_full, _ = _substep(u, v, dt, params, grid, opts, tend)
        u_half, v_half = _substep(u, v, 0.5 * dt, params, grid, opts, tend)
        u_two, v_two = _substep(u_half, v_half, 0.5 * dt, params, grid, opts)
        if not (np.all(np.isfinite(u_two)) and np.all(np.isfinite(v_two))):
            raise NonConvergence("non-finite values after step")
        if not np.all(law.in_domain(v_two)):
            raise DomainViolation(f"signal left the {law.name} sensitivity domain (min v = {v_two.min():.6g})")
    except (NonConvergence, DomainViolation) as exc:
        return _reject(state, ctrl, math.inf, math.inf, f"{type(exc).__name__}: {exc}")

    err = float(np.abs(u_full - u_two).max() / (np.abs(u).max() + err_floor))
    reason = ""
    if err > ctrl.rtol:
        reason = f"error estimate {err:.3e} > rtol"
    elif u_two.min() < -1e-12 * np.abs(u_two).max():
        reason = f"negative density {u_two.min():.3e}"
    if reason:
        return _reject(state, ctrl, err, cfl_dt, reason)

    new = SimState(
        t=state.t + dt,
        u=ScalarField(grid, u_two),
        v=ScalarField(grid, v_two),
        step_index=state.step_index + 1,
    )
    return StepResult(new, True, err, cfl_dt, "")


def _reject(state, ctrl, err, cfl_dt, reason):
    if ctrl.at_floor:
        raise NumericalFailure(f"step rejected at dt_min={ctrl.dt_min:g} (t={state.t:.6g}): {reason}")
    return StepResult(state, False, err, cfl_dt, reason)


def adapt(ctrl: StepController, accepted: bool, err_est: float, cfl_dt: float) -> StepController:
    """Next step size: shrink on rejection, otherwise grow within the CFL limit."""
    if not accepted:
        return replace(ctrl, dt=max(ctrl.dt_min, ctrl.dt * ctrl.shrink))
    if err_est > 0:
        factor = min(ctrl.grow, ctrl.safety * math.sqrt(ctrl.rtol / err_est))
    else:
        factor = ctrl.grow
    dt = min(ctrl.dt_max, cfl_dt, ctrl.dt * factor)
    return replace(ctrl, dt=max(ctrl.dt_min, dt))
