"""A run that relaxes to the homogeneous steady state, and the linear
stability ratio that predicts it.

Run:  python demos/03_homogeneous_run.py   (a few seconds)
"""
# %%
from chemotaxis.experiments import preset
from chemotaxis.model import instability_ratio
from chemotaxis.simulation import run

# %% Ratio < 1: small perturbations of the constant state decay.
for cfg in preset("fig1"):
    r = instability_ratio(cfg.u_bar, cfg.params, cfg.grid)
    print(f"{cfg.label:28s} stability ratio {r:8.3f}  ({'unstable' if r > 1 else 'stable'})")

# %%
cfg = preset("fig1")[0]  # u_bar = 1, chi = 100, g(u) = u
res = run(cfg)
oc = res.outcome
print(f"\n{cfg.label}: {oc.variant.value} after {oc.steps} steps, t = {oc.final.t:.4g}")
print(f"final max u = {oc.final.max_u:.6f}, heterogeneity = {oc.heterogeneity:.2e}")

# %% A few diagnostics along the way: mass is conserved to rounding.
m0 = res.timeseries[0].mass
for s in res.timeseries[:: max(1, len(res.timeseries) // 8)]:
    print(f"t={s.t:10.4g}  dt={s.dt:9.3g}  max u={s.max_u:8.5f}  mass drift={(s.mass - m0) / m0:+.1e}")
