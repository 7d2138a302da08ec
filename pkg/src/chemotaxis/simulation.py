"""Run lifecycle: initial data, time loop, diagnostics and outcome classification."""

from __future__ import annotations

import csv
import enum
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .elliptic import solve_helmholtz
from .errors import NonConvergence, NumericalFailure
from .grid import GridSpec, ScalarField, gradient_energy, integrate
from .integrator import SimState, SolverOptions, StepController, adapt, step
from .model import Constant, ModelParams, PowerShift, g_eval


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams = field(default_factory=lambda: ModelParams(Constant(1e3), PowerShift(0.5)))
    grid: GridSpec = field(default_factory=lambda: GridSpec(64, 64, 0.1, 0.1))
    u_bar: float = 1.0
    sigma: float = 1.0
    seed: int = 0
    t_end: float = 100.0
    # events
    blowup_threshold: float = 1e10
    collapse_fraction: float = 0.25
    steady_rel_tol: float = 1e-7
    steady_window: int = 50
    heterogeneity_tol: float = 1e-3
    # step control
    dt0: float = 1e-8
    dt_min: float = 1e-14
    dt_max: float = 1.0
    rtol: float = 1e-4
    cfl: float = 0.5
    # bookkeeping
    solver: SolverOptions = field(default_factory=SolverOptions)
    diag_stride: int = 1
    max_steps: int | None = None
    label: str = ""

    def __post_init__(self):
        if not self.u_bar > 0:
            raise ValueError(f"u_bar must be positive, got {self.u_bar}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        for name in ("t_end", "blowup_threshold", "steady_rel_tol", "heterogeneity_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.collapse_fraction <= 1:
            raise ValueError("collapse_fraction must be in (0, 1]")
        if self.steady_window < 1 or self.diag_stride < 1:
            raise ValueError("steady_window and diag_stride must be >= 1")
        self.controller()  # validates the step-control fields

    def controller(self) -> StepController:
        return StepController(
            dt=self.dt0, dt_min=self.dt_min, dt_max=self.dt_max, rtol=self.rtol, cfl=self.cfl
        )

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class DiagnosticsSample:
    t: float
    dt: float
    mass: float
    max_u: float
    min_u: float
    min_v: float
    max_v: float
    grad_energy: float
    err_est: float


CSV_FIELDS = ("t", "dt", "mass", "max_u", "min_u", "min_v", "max_v", "grad_energy", "err_est")


class Outcome(str, enum.Enum):
    STEADY_HOMOGENEOUS = "SteadyHomogeneous"
    STEADY_HETEROGENEOUS = "SteadyHeterogeneous"
    BLOW_UP = "BlowUp"
    HORIZON_REACHED = "HorizonReached"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class RunOutcome:
    variant: Outcome
    final: DiagnosticsSample
    heterogeneity: float
    homogeneous: bool
    t_detect: float | None = None
    max_u: float | None = None
    reason: str = ""
    steps: int = 0
    rejected: int = 0
    wall_time: float = 0.0

    @property
    def is_blowup(self) -> bool:
        return self.variant is Outcome.BLOW_UP

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"] = self.variant.value
        return d


class RunResult(NamedTuple):
    outcome: RunOutcome
    timeseries: list
    final_u: ScalarField
    final_v: ScalarField
    snapshots: dict


# -- initial data ----------------------------------------------------------

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def cell_uniforms(seed: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) variates keyed by ``(seed, i, j)``.

    A SplitMix64 hash chain over the key, so every cell's draw depends only
    on its own indices and the seed, not on the grid size or visit order.
    """
    s = np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _splitmix64(s)
        z = _splitmix64(z ^ np.asarray(i, dtype=np.uint64))
        z = _splitmix64(z ^ (np.asarray(j, dtype=np.uint64) * np.uint64(0xD1B54A32D192ED03)))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def init_u(grid: GridSpec, u_bar: float, sigma: float, seed: int) -> ScalarField:
    """``|ū + σ η|`` with η ~ U[-1/2, 1/2) drawn independently per cell."""
    if not u_bar > 0 or sigma < 0:
        raise ValueError("need u_bar > 0 and sigma >= 0")
    if sigma == 0:
        return ScalarField.constant(grid, u_bar)
    jj, ii = np.indices(grid.shape)
    eta = cell_uniforms(seed, ii, jj) - 0.5
    return ScalarField(grid, np.abs(u_bar + sigma * eta))


def init_v(u0: ScalarField, params: ModelParams, solver: SolverOptions = SolverOptions()) -> ScalarField:
    """Signal consistent with ``u0``: ``(I - Δ_h) v0 = g(u0)``."""
    w = ScalarField(u0.grid, g_eval(params.production, u0.values))
    v, _ = solve_helmholtz(w, solver.tol, solver.max_iter, preconditioner=solver.preconditioner)
    return v


# -- diagnostics -----------------------------------------------------------


def sample(state: SimState, dt: float, err_est: float) -> DiagnosticsSample:
    u, v = state.u.values, state.v.values
    return DiagnosticsSample(
        t=state.t,
        dt=dt,
        mass=integrate(state.u),
        max_u=float(u.max()),
        min_u=float(u.min()),
        min_v=float(v.min()),
        max_v=float(v.max()),
        grad_energy=gradient_energy(state.v),
        err_est=err_est,
    )


def heterogeneity(u: ScalarField) -> float:
    """``(max u - min u) / mean u``."""
    a = u.values
    return float((a.max() - a.min()) / a.mean())


def gradient_energy_bound(mass: float, area: float, lambda2: float = 1.0) -> float:
    """``(λ₂² / 4)(|Ω| + m)``, the a-priori bound on ``∫|∇v|²`` for β <= 1/2."""
    return 0.25 * lambda2**2 * (area + mass)


def write_timeseries(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for s in samples:
            w.writerow([repr(float(getattr(s, k))) for k in CSV_FIELDS])


def read_timeseries(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [DiagnosticsSample(**{k: float(r[k]) for k in CSV_FIELDS}) for r in rows]


# -- time loop -------------------------------------------------------------

_MONOTONE_WINDOW = 10


def run(config: SimConfig, dump_times=(), progress=None) -> RunResult:
    """Integrate until blow-up, steady state, the horizon, or failure.

    Blow-up is declared when ``max u`` reaches ``blowup_threshold``, when a
    single cell holds ``collapse_fraction`` of the total mass (the grid's
    resolution limit for a collapsing aggregate), or when ``dt`` is pinned at
    ``dt_min`` while ``max u`` keeps increasing.

    ``dump_times`` requests ``(u, v)`` snapshots at the first accepted
    state with ``t >= t_dump``; they are returned in ``snapshots``.
    """
    clock = time.perf_counter()
    grid, params = config.grid, config.params
    u0 = init_u(grid, config.u_bar, config.sigma, config.seed)
    try:
        v0 = init_v(u0, params, config.solver)
    except NonConvergence as exc:
        state = SimState(0.0, u0, ScalarField(grid, np.full(grid.shape, np.nan)))
        s0 = DiagnosticsSample(0.0, config.dt0, integrate(u0), *_extrema(u0), np.nan, np.nan, np.nan, np.nan)
        oc = RunOutcome(Outcome.NUMERICAL_FAILURE, s0, heterogeneity(u0), False, reason=str(exc))
        return RunResult(oc, [s0], u0, state.v, {})

    state = SimState(0.0, u0, v0, 0)
    ctrl = config.controller()
    mass0 = integrate(u0)
    floor = 1e-3 * config.u_bar
    cell_mass_limit = config.collapse_fraction * mass0 / grid.cell_area

    timeseries = [sample(state, ctrl.dt, 0.0)]
    pending_dumps = sorted(float(t) for t in dump_times)
    snapshots = {}
    _take_snapshots(state, pending_dumps, snapshots)

    quiet = 0
    rejected = 0
    recent_max = []
    pinned = 0
    variant = None
    t_detect = None
    reason = ""
    last_err = 0.0

    while variant is None:
        if config.max_steps is not None and state.step_index >= config.max_steps:
            variant = Outcome.HORIZON_REACHED
            reason = f"step budget of {config.max_steps} exhausted at t={state.t:.6g}"
            break
        remaining = config.t_end - state.t
        trial = ctrl if ctrl.dt <= remaining else replace(ctrl, dt=max(remaining, ctrl.dt_min))
        try:
            res = step(state, params, trial, config.solver, err_floor=floor)
        except NumericalFailure as exc:
            if len(recent_max) >= 3 and all(b > a for a, b in zip(recent_max, recent_max[1:])):
                variant, t_detect = Outcome.BLOW_UP, state.t
                reason = f"dt exhausted at dt_min with max u increasing ({exc})"
            else:
                variant, reason = Outcome.NUMERICAL_FAILURE, str(exc)
            break

        if not res.accepted:
            rejected += 1
            ctrl = adapt(trial, False, res.err_est, res.cfl_dt)
            continue

        old_u = state.u.values
        state = res.state
        last_err = res.err_est
        new_u = state.u.values
        umax = float(new_u.max())
        ctrl = adapt(trial, True, res.err_est, res.cfl_dt)

        rate = float(np.abs(new_u - old_u).max() / (trial.dt * (np.abs(old_u).max() + floor)))
        quiet = quiet + 1 if rate < config.steady_rel_tol else 0
        recent_max = (recent_max + [umax])[-_MONOTONE_WINDOW:]
        pinned = pinned + 1 if trial.dt <= config.dt_min else 0

        if state.step_index % config.diag_stride == 0:
            timeseries.append(sample(state, trial.dt, res.err_est))
        _take_snapshots(state, pending_dumps, snapshots)
        if progress is not None:
            progress(state, trial.dt)

        if umax >= config.blowup_threshold:
            variant, t_detect = Outcome.BLOW_UP, state.t
            reason = f"max u {umax:.4g} >= threshold {config.blowup_threshold:g}"
        elif umax >= cell_mass_limit:
            variant, t_detect = Outcome.BLOW_UP, state.t
            reason = (
                f"one cell holds {umax * grid.cell_area / mass0:.1%} of the total mass "
                f"(max u {umax:.4g}); collapse to grid scale"
            )
        elif pinned >= _MONOTONE_WINDOW and all(b > a for a, b in zip(recent_max, recent_max[1:])):
            variant, t_detect = Outcome.BLOW_UP, state.t
            reason = "dt pinned at dt_min with max u strictly increasing"
        elif quiet >= config.steady_window:
            variant = Outcome.STEADY_HETEROGENEOUS
            reason = f"relative rate below {config.steady_rel_tol:g} for {quiet} steps"
        elif state.t >= config.t_end * (1 - 1e-12):
            variant = Outcome.HORIZON_REACHED
        elif not np.isfinite(umax):
            variant, reason = Outcome.NUMERICAL_FAILURE, "non-finite density"

    final = sample(state, ctrl.dt, last_err)
    if timeseries[-1].t != final.t:
        timeseries.append(final)
    het = heterogeneity(state.u)
    homogeneous = het < config.heterogeneity_tol
    if variant is Outcome.STEADY_HETEROGENEOUS and homogeneous:
        variant = Outcome.STEADY_HOMOGENEOUS
    outcome = RunOutcome(
        variant=variant,
        final=final,
        heterogeneity=het,
        homogeneous=homogeneous,
        t_detect=t_detect,
        max_u=final.max_u if variant is Outcome.BLOW_UP else None,
        reason=reason,
        steps=state.step_index,
        rejected=rejected,
        wall_time=time.perf_counter() - clock,
    )
    return RunResult(outcome, timeseries, state.u, state.v, snapshots)


def _extrema(f: ScalarField):
    return float(f.values.max()), float(f.values.min())


def _take_snapshots(state, pending, out):
    while pending and state.t >= pending[0]:
        out[pending.pop(0)] = (state.u, state.v)


# -- refinement check ------------------------------------------------------


class BlowupConfirmation(NamedTuple):
    confirmed: bool
    refined_outcome: RunOutcome
    prior_outcome: RunOutcome
    refined_grids: list
    detail: str


def confirm_blowup(config: SimConfig, prior: RunOutcome | None = None, rounds: int = 1) -> BlowupConfirmation:
    """Re-run a blow-up case on refined grids.

    Each round doubles ``nx`` and ``ny`` and quarters ``rtol``.  Blow-up is
    confirmed when every refined run also ends in ``BlowUp`` with a detection
    time within a factor 10 of the coarse one.  Two rounds give 16x the
    cells.

    Raises ``ValueError`` if ``prior`` (run here when omitted) is not a
    blow-up.
    """
    if prior is None:
        prior = run(config).outcome
    if not prior.is_blowup:
        raise ValueError(f"confirm_blowup needs a prior BlowUp outcome, got {prior.variant.value}")
    cfg = config
    refined = prior
    grids = []
    detail = ""
    for _ in range(rounds):
        cfg = cfg.with_(grid=cfg.grid.refined(2), rtol=cfg.rtol / 4)
        grids.append(cfg.grid)
        refined = run(cfg).outcome
        if not refined.is_blowup:
            detail = (
                f"refined {cfg.grid.nx}x{cfg.grid.ny} run ended {refined.variant.value} "
                f"(max u {refined.final.max_u:.4g}); coarse result looks like a resolution artefact"
            )
            return BlowupConfirmation(False, refined, prior, grids, detail)
        ratio = refined.t_detect / prior.t_detect if prior.t_detect else math.inf
        if not (0.1 <= ratio <= 10):
            detail = f"detection times differ by factor {ratio:.3g} on {cfg.grid.nx}x{cfg.grid.ny}"
            return BlowupConfirmation(False, refined, prior, grids, detail)
    detail = f"blow-up persists on {cfg.grid.nx}x{cfg.grid.ny} (t_detect {refined.t_detect:.4g} vs {prior.t_detect:.4g})"
    return BlowupConfirmation(True, refined, prior, grids, detail)
