"""``sim`` command line: run a config, a figure preset, or a β sweep.

Exit codes: 0 when the simulations completed (blow-up is a result, not an
error), 1 for configuration errors, 2 when a single run ends in
``NumericalFailure``.  Sweeps record failed members as rows and exit 0.

Outputs in ``--out``: ``timeseries.csv`` and ``outcome.json`` per run,
``sweep.csv`` per sweep, and for each ``--dump-fields`` time ``t`` the
density ``fields_t<t>.dat`` plus the signal ``fields_t<t>_v.dat``.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import textwrap
from dataclasses import replace
from pathlib import Path

from .errors import ParseError, UnknownPreset, ValidationError
from .experiments import CONFIG_HELP, PRESETS, SweepSpec, parse_config, preset, run_sweep, summarize_sweep
from .grid import GridSpec, write_field
from .simulation import Outcome, SimConfig, run, write_timeseries

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _times(text: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated times, got {text!r}") from None
    if any(not (math.isfinite(t) and t >= 0) for t in vals):
        raise argparse.ArgumentTypeError("dump times must be finite and >= 0")
    return vals


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    common.add_argument("--grid", type=_positive_int, metavar="N", help="use an N x N grid")
    common.add_argument("--seed", type=int, metavar="S", help="base seed for the initial perturbation")
    common.add_argument("--t-end", type=float, metavar="T", help="final time")
    common.add_argument("--threads", type=_positive_int, metavar="K", help="concurrent sweep runs")
    common.add_argument("--dump-fields", type=_times, default=[], metavar="t1,t2", help="write u, v snapshots")
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(
        prog="sim",
        description="2-D parabolic-elliptic chemotaxis simulator",
        epilog="config file format and defaults:\n" + textwrap.indent(CONFIG_HELP, "  "),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)
    fmt = dict(epilog=p.epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    r = sub.add_parser("run", parents=[common], help="run one config file", **fmt)
    r.add_argument("config", type=Path)
    s = sub.add_parser("sweep", parents=[common], help="run a beta sweep config file", **fmt)
    s.add_argument("config", type=Path)
    pr = sub.add_parser("preset", parents=[common], help=f"run a figure preset ({', '.join(PRESETS)})")
    pr.add_argument("name")
    return p


def _override(cfg: SimConfig, args) -> SimConfig:
    changes = {}
    if args.grid is not None:
        changes["grid"] = GridSpec(args.grid, args.grid, cfg.grid.lx, cfg.grid.ly)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    return replace(cfg, **changes) if changes else cfg


def _override_sweep(spec: SweepSpec, args) -> SweepSpec:
    spec = replace(spec, base=_override(spec.base, args))
    if args.threads is not None:
        spec = replace(spec, concurrency=args.threads)
    return spec


def _slug(label: str, k: int) -> str:
    return re.sub(r"[^A-Za-z0-9.=_-]+", "_", label).strip("_") or f"run{k}"


def _log(args, msg):
    if not args.quiet:
        print(msg, flush=True)


def _run_single(cfg: SimConfig, out: Path, args) -> bool:
    out.mkdir(parents=True, exist_ok=True)
    result = run(cfg, dump_times=args.dump_fields)
    write_timeseries(result.timeseries, out / "timeseries.csv")
    for t, (u, v) in result.snapshots.items():
        write_field(u, out / f"fields_t{t:g}.dat")
        write_field(v, out / f"fields_t{t:g}_v.dat")
    oc = result.outcome
    info = oc.to_dict()
    info["config"] = {"label": cfg.label, "model": cfg.params.describe(), "grid": [cfg.grid.nx, cfg.grid.ny],
                      "u_bar": cfg.u_bar, "sigma": cfg.sigma, "seed": cfg.seed, "t_end": cfg.t_end}
    (out / "outcome.json").write_text(json.dumps(info, indent=2, default=str))
    _log(args, f"{cfg.label or 'run'}: {oc.variant.value} at t={oc.final.t:.6g}, max u={oc.final.max_u:.6g}"
               + (f" ({oc.reason})" if oc.reason else ""))
    return oc.variant is not Outcome.NUMERICAL_FAILURE


def _run_sweep(spec: SweepSpec, out: Path, args) -> bool:
    out.mkdir(parents=True, exist_ok=True)
    rows = run_sweep(spec, out / "sweep.csv",
                     on_row=lambda r: _log(args, f"beta={r.beta:g} seed={r.seed}: {r.outcome} max u={r.max_u:.6g}"))
    summ = summarize_sweep(rows)
    if summ.first_transition:
        _log(args, f"first outcome change between beta={summ.first_transition[0]:g} and {summ.first_transition[1]:g}")
    if summ.largest_jump:
        a, b, ratio = summ.largest_jump
        _log(args, f"largest max-u jump x{ratio:.3g} between beta={a:g} and {b:g}")
    failed = sum(r.outcome == Outcome.NUMERICAL_FAILURE.value for r in rows)
    if failed:
        _log(args, f"{failed} of {len(rows)} runs ended in NumericalFailure (recorded in sweep.csv)")
    return True  # failures are rows, not errors


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "preset":
            items = preset(args.name)
        else:
            items = [parse_config(args.config)]
    except (ParseError, ValidationError, UnknownPreset, OSError) as exc:
        print(f"sim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "sweep" and not isinstance(items[0], SweepSpec):
        print(f"sim: error: {args.config} has no [sweep] section", file=sys.stderr)
        return EXIT_CONFIG

    ok = True
    multi = len(items) > 1
    for k, item in enumerate(items):
        out = args.out / _slug(item.label, k) if multi else args.out
        if isinstance(item, SweepSpec):
            ok &= _run_sweep(_override_sweep(item, args), out, args)
        else:
            ok &= _run_single(_override(item, args), out, args)
    return EXIT_OK if ok else EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
