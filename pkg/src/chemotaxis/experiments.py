"""Configuration files, figure presets and β sweeps.

Config files are plain ``key = value`` lines grouped in ``[sections]``
(``grid``, ``model``, ``init``, ``control``, ``events``, ``sweep``).  A key
may also carry its section as a dotted prefix (``model.beta = 0.5``).
Quotes around values are optional, ``#`` starts a comment.

Defaults (every key is optional)::

    [grid]     nx = 64, ny = 64, lx = 0.1, ly = 0.1
    [model]    sensitivity = constant   (constant | inverse | inverse_power | log)
               chi = 1000               (coefficient χ or χ₀; alias chi0)
               k = 1                    (inverse_power exponent)
               production = power_shift (linear | power_shift)
               beta = 0.5, lambda1 = 1, lambda2 = 1
    [init]     u_bar = 1, sigma = 1, seed = 0
    [control]  t_end = 100, dt0 = 1e-8, dt_min = 1e-14, dt_max = 1,
               rtol = 1e-4, cfl = 0.5, tol = 1e-10, preconditioner = dct,
               max_steps = none, diag_stride = 1
    [events]   blowup_threshold = 1e10, collapse_fraction = 0.25,
               steady_rel_tol = 1e-7, steady_window = 50,
               heterogeneity_tol = 1e-3
    [sweep]    beta = start:stop:step | comma list, runs_per_beta = 1,
               concurrency = 1

A file with a ``[sweep]`` section parses to a ``SweepSpec``.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

from .errors import ParseError, UnknownPreset, ValidationError
from .grid import GridSpec
from .integrator import SolverOptions
from .model import PRODUCTIONS, SENSITIVITIES, Linear, ModelParams, PowerShift
from .simulation import Outcome, SimConfig, run

CONFIG_HELP = __doc__.split("\n\n", 1)[1]

SECTIONS = {
    "grid": {"nx": int, "ny": int, "lx": float, "ly": float},
    "model": {
        "sensitivity": str,
        "chi": float,
        "chi0": float,
        "k": float,
        "production": str,
        "beta": float,
        "lambda1": float,
        "lambda2": float,
    },
    "init": {"u_bar": float, "sigma": float, "seed": int},
    "control": {
        "t_end": float,
        "dt0": float,
        "dt_min": float,
        "dt_max": float,
        "rtol": float,
        "cfl": float,
        "tol": float,
        "preconditioner": str,
        "max_steps": int,
        "diag_stride": int,
    },
    "events": {
        "blowup_threshold": float,
        "collapse_fraction": float,
        "steady_rel_tol": float,
        "steady_window": int,
        "heterogeneity_tol": float,
    },
    "sweep": {"beta": str, "runs_per_beta": int, "concurrency": int},
}


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig
    beta_values: tuple = ()
    runs_per_beta: int = 1
    concurrency: int = 1
    label: str = ""

    def __post_init__(self):
        betas = tuple(float(b) for b in self.beta_values)
        if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
            raise ValidationError("sweep beta values must be strictly increasing")
        if any(not 0 <= b <= 1 for b in betas):
            raise ValidationError("sweep beta values must lie in [0, 1]")
        if self.runs_per_beta < 1 or self.concurrency < 1:
            raise ValidationError("runs_per_beta and concurrency must be >= 1")
        object.__setattr__(self, "beta_values", betas)

    def configs(self) -> list:
        """One ``SimConfig`` per (β, seed), in canonical order."""
        out = []
        base_prod = self.base.params.production
        lam = dict(lambda1=base_prod.lambda1, lambda2=base_prod.lambda2)
        for beta in self.beta_values:
            params = replace(self.base.params, production=PowerShift(beta, **lam))
            for r in range(self.runs_per_beta):
                seed = self.base.seed + r
                out.append(replace(self.base, params=params, seed=seed, label=f"beta={beta:g},seed={seed}"))
        return out


@dataclass(frozen=True)
class SweepRow:
    beta: float
    seed: int
    outcome: str
    max_u: float
    heterogeneity: float
    t_detect: float | None
    t_final: float
    wall_time: float
    reason: str = ""


SWEEP_FIELDS = ("beta", "seed", "outcome", "max_u", "heterogeneity", "t_detect", "t_final", "wall_time", "reason")


class SweepSummary(NamedTuple):
    transitions: list  # (beta_prev, beta, outcome_prev, outcome)
    first_transition: tuple | None  # (beta_prev, beta)
    largest_jump: tuple | None  # (beta_prev, beta, ratio of final max u)


# -- parsing ---------------------------------------------------------------


def parse_range(text: str) -> list:
    """``"a:b:step"`` (inclusive) or ``"x, y, z"`` to a list of floats."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        start, stop, stp = (float(p) for p in parts)
        if stp <= 0 or stop < start:
            raise ValueError(f"bad range {text!r}")
        n = int(math.floor((stop - start) / stp + 1e-9)) + 1
        return [round(start + i * stp, 12) for i in range(n)]
    return [float(p) for p in text.replace(",", " ").split()]


def _read_entries(lines, path=None):
    entries = {}
    section = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {raw.strip()!r}", lineno, path)
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ParseError(f"unknown section [{section}]", lineno, path)
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {raw.strip()!r}", lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        sect = section
        if "." in key:
            sect, key = key.split(".", 1)
            sect = sect.lower()
        if sect is None:
            raise ParseError(f"key {key!r} outside any section", lineno, path)
        if sect not in SECTIONS:
            raise ParseError(f"unknown section {sect!r}", lineno, path)
        if key not in SECTIONS[sect]:
            raise ParseError(f"unknown key {sect}.{key}", lineno, path)
        if (sect, key) in entries:
            raise ParseError(f"duplicate key {sect}.{key}", lineno, path)
        value = value.strip().strip("\"'")
        kind = SECTIONS[sect][key]
        try:
            if kind is str or key == "max_steps" and value.lower() == "none":
                parsed = value if kind is str else None
            elif kind is int:
                f = float(value)
                if f != int(f):
                    raise ValueError
                parsed = int(f)
            else:
                parsed = float(value)
        except ValueError:
            raise ParseError(f"{sect}.{key}: cannot read {value!r} as {kind.__name__}", lineno, path) from None
        entries[(sect, key)] = (parsed, lineno)
    return entries


def config_from_entries(entries: dict):
    """Build a ``SimConfig`` (or ``SweepSpec``) from parsed entries."""

    def get(sect, key, default):
        return entries.get((sect, key), (default, None))[0]

    try:
        grid = GridSpec(get("grid", "nx", 64), get("grid", "ny", 64), get("grid", "lx", 0.1), get("grid", "ly", 0.1))

        sname = get("model", "sensitivity", "constant").lower()
        if sname not in SENSITIVITIES:
            raise ValidationError(f"model.sensitivity must be one of {sorted(SENSITIVITIES)}, got {sname!r}")
        chi = get("model", "chi", None)
        chi0 = get("model", "chi0", None)
        if chi is not None and chi0 is not None:
            raise ValidationError("set model.chi or model.chi0, not both")
        coef = chi if chi is not None else (chi0 if chi0 is not None else 1e3)
        if sname == "constant":
            sens = SENSITIVITIES[sname](coef)
        elif sname == "inverse_power":
            sens = SENSITIVITIES[sname](coef, get("model", "k", 1.0))
        else:
            sens = SENSITIVITIES[sname](coef)

        pname = get("model", "production", "power_shift").lower()
        if pname not in PRODUCTIONS:
            raise ValidationError(f"model.production must be one of {sorted(PRODUCTIONS)}, got {pname!r}")
        lam1, lam2 = get("model", "lambda1", 1.0), get("model", "lambda2", 1.0)
        if pname == "linear":
            prod = Linear(lam1, lam2)
        else:
            prod = PowerShift(get("model", "beta", 0.5), lam2, lam1)

        precond = get("control", "preconditioner", "dct")
        precond = None if str(precond).lower() in ("none", "") else str(precond).lower()
        if precond not in (None, "jacobi", "dct"):
            raise ValidationError(f"control.preconditioner must be none, jacobi or dct, got {precond!r}")
        tol = get("control", "tol", 1e-10)
        if not 0 < tol <= 1e-2:
            raise ValidationError(f"control.tol must be in (0, 1e-2], got {tol}")
        cfg = SimConfig(
            params=ModelParams(sens, prod),
            grid=grid,
            u_bar=get("init", "u_bar", 1.0),
            sigma=get("init", "sigma", 1.0),
            seed=get("init", "seed", 0),
            t_end=get("control", "t_end", 100.0),
            blowup_threshold=get("events", "blowup_threshold", 1e10),
            collapse_fraction=get("events", "collapse_fraction", 0.25),
            steady_rel_tol=get("events", "steady_rel_tol", 1e-7),
            steady_window=get("events", "steady_window", 50),
            heterogeneity_tol=get("events", "heterogeneity_tol", 1e-3),
            dt0=get("control", "dt0", 1e-8),
            dt_min=get("control", "dt_min", 1e-14),
            dt_max=get("control", "dt_max", 1.0),
            rtol=get("control", "rtol", 1e-4),
            cfl=get("control", "cfl", 0.5),
            solver=SolverOptions(tol=tol, preconditioner=precond),
            diag_stride=get("control", "diag_stride", 1),
            max_steps=get("control", "max_steps", None),
        )
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from None

    if not any(sect == "sweep" for sect, _ in entries):
        return cfg
    try:
        betas = parse_range(get("sweep", "beta", ""))
    except ValueError as exc:
        raise ValidationError(f"sweep.beta: {exc}") from None
    if betas and pname != "power_shift":
        raise ValidationError("a beta sweep needs model.production = power_shift")
    return SweepSpec(cfg, tuple(betas), get("sweep", "runs_per_beta", 1), get("sweep", "concurrency", 1))


def parse_config_text(text: str, path=None):
    return config_from_entries(_read_entries(text.splitlines(), path))


def parse_config(path):
    """Parse a config file into a ``SimConfig`` or ``SweepSpec``.

    Raises ``ParseError`` (with line number) for syntax problems and unknown
    keys, ``ValidationError`` for values that violate a model invariant.
    """
    path = Path(path)
    return parse_config_text(path.read_text(), path)


# -- presets ---------------------------------------------------------------


def _cfg(label, sens, prod, u_bar, sigma, **kw):
    return SimConfig(params=ModelParams(sens, prod), u_bar=u_bar, sigma=sigma, label=label, **kw)


def _fine_grid(coarse, fine):
    return tuple(sorted(set(parse_range(coarse)) | set(parse_range(fine))))


def preset(name: str) -> list:
    """Parameter sets of the published simulation figures.

    ``fig1``-``fig3`` return lists of ``SimConfig``; ``fig4a``/``fig4b``
    return a one-element list holding a ``SweepSpec``.
    """
    from .model import Constant, Logarithmic, Singular

    if name == "fig1":
        return [
            _cfg(f"fig1 u_bar={u:g} chi={chi:g}", Constant(chi), Linear(), u, 1.0)
            for u, chi in [(1, 1e2), (1, 1e3), (10, 1e2), (10, 1e3)]
        ]
    if name == "fig2":
        sqrt = PowerShift(0.5)
        return [
            _cfg("fig2a", Constant(1e4), sqrt, 1.0, 1.0),
            _cfg("fig2b", Constant(1e3), sqrt, 10.0, 10.0),
            _cfg("fig2c", Constant(1e3), sqrt, 100.0, 100.0),
        ]
    if name == "fig3":
        sqrt = PowerShift(0.5)
        return [
            _cfg("fig3a inverse", Singular(1e4), sqrt, 100.0, 10.0),
            _cfg("fig3b log", Logarithmic(1e4), sqrt, 100.0, 10.0),
        ]
    if name == "fig4a":
        base = _cfg("fig4a", Constant(1e3), PowerShift(0.5), 10.0, 1.0)
        return [SweepSpec(base, _fine_grid("0.30:0.80:0.05", "0.36:0.44:0.01"), label="fig4a")]
    if name == "fig4b":
        base = _cfg("fig4b", Singular(1e4), PowerShift(0.5), 100.0, 10.0)
        return [SweepSpec(base, _fine_grid("0.30:0.80:0.05", "0.60:0.70:0.01"), label="fig4b")]
    raise UnknownPreset(f"unknown preset {name!r}; choose from {PRESETS}")


PRESETS = ("fig1", "fig2", "fig3", "fig4a", "fig4b")


# -- sweeps ----------------------------------------------------------------


def run_one(config: SimConfig) -> SweepRow:
    """Run one sweep member; failures become ``NumericalFailure`` rows."""
    clock = time.perf_counter()
    beta = config.params.production.beta
    try:
        oc = run(config).outcome
    except Exception as exc:  # a sweep never aborts wholesale
        return SweepRow(beta, config.seed, Outcome.NUMERICAL_FAILURE.value, math.nan, math.nan, None, math.nan,
                        time.perf_counter() - clock, f"{type(exc).__name__}: {exc}")
    return SweepRow(
        beta=beta,
        seed=config.seed,
        outcome=oc.variant.value,
        max_u=oc.final.max_u,
        heterogeneity=oc.heterogeneity,
        t_detect=oc.t_detect,
        t_final=oc.final.t,
        wall_time=time.perf_counter() - clock,
        reason=oc.reason,
    )


def run_sweep(spec: SweepSpec, out_csv=None, on_row=None) -> list:
    """Run every (β, seed) member with at most ``spec.concurrency`` in flight.

    ``on_row`` is called from this (single) process as each row completes.
    The returned rows, and ``out_csv`` if given, are sorted by (β, seed).
    """
    configs = spec.configs()
    rows = []
    sink = None
    if out_csv is not None:
        sink = open(out_csv, "w", newline="")
        writer = csv.writer(sink)
        writer.writerow(SWEEP_FIELDS)

    def collect(row):
        # single writer: rows land in completion order, then get canonicalized
        rows.append(row)
        if sink is not None:
            writer.writerow(_csv_cells(row))
            sink.flush()
        if on_row is not None:
            on_row(row)

    try:
        if spec.concurrency == 1 or len(configs) <= 1:
            for cfg in configs:
                collect(run_one(cfg))
        else:
            workers = min(spec.concurrency, len(configs))
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for fut in as_completed([pool.submit(run_one, cfg) for cfg in configs]):
                    collect(fut.result())
    finally:
        if sink is not None:
            sink.close()
    rows.sort(key=lambda r: (r.beta, r.seed))
    if out_csv is not None:
        write_sweep_csv(rows, out_csv)
    return rows


def _csv_cells(row):
    return ["" if getattr(row, k) is None else getattr(row, k) for k in SWEEP_FIELDS]


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_FIELDS)
        for r in rows:
            w.writerow(_csv_cells(r))


def read_sweep_csv(path) -> list:
    with open(path, newline="") as fh:
        out = []
        for r in csv.DictReader(fh):
            out.append(
                SweepRow(
                    beta=float(r["beta"]),
                    seed=int(r["seed"]),
                    outcome=r["outcome"],
                    max_u=float(r["max_u"]),
                    heterogeneity=float(r["heterogeneity"]),
                    t_detect=float(r["t_detect"]) if r["t_detect"] else None,
                    t_final=float(r["t_final"]),
                    wall_time=float(r["wall_time"]),
                    reason=r["reason"],
                )
            )
    return out


def summarize_sweep(rows) -> SweepSummary:
    """Outcome transitions between consecutive β and the largest max-u jump.

    With several seeds per β the first seed's row represents that β.
    """
    by_beta = {}
    for r in sorted(rows, key=lambda r: (r.beta, r.seed)):
        by_beta.setdefault(r.beta, r)
    reps = list(by_beta.values())
    transitions = [
        (a.beta, b.beta, a.outcome, b.outcome) for a, b in zip(reps, reps[1:]) if a.outcome != b.outcome
    ]
    jump = None
    for a, b in zip(reps, reps[1:]):
        if a.max_u > 0 and math.isfinite(a.max_u) and math.isfinite(b.max_u):
            ratio = b.max_u / a.max_u
            if jump is None or ratio > jump[2]:
                jump = (a.beta, b.beta, ratio)
    first = (transitions[0][0], transitions[0][1]) if transitions else None
    return SweepSummary(transitions, first, jump)


def default_concurrency() -> int:
    return max(1, (os.cpu_count() or 1))
