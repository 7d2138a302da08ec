"""A coarse sweep over the production exponent β in g(u) = (1 + u)^β.

Small β gives the homogeneous state, larger β a heterogeneous spike, and
larger still a collapse.  The full presets (`sim preset fig4a`) use the
64x64 grid and a finer β grid; this demo uses 32x32 to stay quick.

Run:  python demos/05_beta_sweep.py   (a few minutes)
"""
# %%
import os
from dataclasses import replace

from chemotaxis.experiments import SweepSpec, preset, run_sweep, summarize_sweep
from chemotaxis.grid import GridSpec
from chemotaxis.model import instability_ratio

(spec,) = preset("fig4a")
base = replace(spec.base, grid=GridSpec(32, 32))
demo = SweepSpec(base, (0.3, 0.4, 0.45, 0.5, 0.6, 0.8), concurrency=os.cpu_count() or 1)

# %% Linear theory first: where does the constant state lose stability?
for b in demo.beta_values:
    cfg = demo.configs()[demo.beta_values.index(b)]
    print(f"beta={b:4.2f}  stability ratio {instability_ratio(cfg.u_bar, cfg.params, cfg.grid):6.3f}")

# %%
rows = run_sweep(demo)
for r in rows:
    print(f"beta={r.beta:4.2f}  {r.outcome:20s} max u={r.max_u:10.4g}  heterogeneity={r.heterogeneity:9.3g}  "
          f"({r.wall_time:.1f} s)")
summary = summarize_sweep(rows)
print("first outcome change between beta =", summary.first_transition)
