"""Solving the signal equation (I - Δ_h) v = w.

Run:  python demos/02_signal_solver.py
"""
# %%
import time

import numpy as np

from chemotaxis.elliptic import check_elliptic_bounds, solve_helmholtz
from chemotaxis.grid import GridSpec, ScalarField, integrate, laplacian_neumann
from chemotaxis.model import PowerShift, g_eval

grid = GridSpec(64, 64)

# %% Manufactured check: choose v*, build w = v* - Δ_h v*, recover v*.
vstar = ScalarField.from_function(grid, lambda x, y: 2 + np.cos(np.pi * x / 0.1) * np.cos(2 * np.pi * y / 0.1))
w = ScalarField(grid, vstar.values - laplacian_neumann(vstar).values)
for precond in (None, "jacobi", "dct"):
    t0 = time.perf_counter()
    v, rep = solve_helmholtz(w, preconditioner=precond)
    err = np.abs(v.values - vstar.values).max()
    print(f"{precond!s:7} iterations={rep.iterations:4d} residual={rep.final_residual_rel:.1e} "
          f"max error={err:.1e} ({1e3 * (time.perf_counter() - t0):.1f} ms)")

# %% Maximum principle and mean identity: v lies between min w and max w,
# and ∫v = ∫w.
rng = np.random.default_rng(1)
w = ScalarField(grid, rng.random(grid.shape) ** 4)
v, rep = solve_helmholtz(w, preconditioner="dct")
print("bounds hold:", check_elliptic_bounds(v, w), f"  w in [{w.values.min():.3g}, {w.values.max():.3g}],",
      f"v in [{rep.min_v:.3g}, {rep.max_v:.3g}]")
print("∫v - ∫w =", integrate(v) - integrate(w))

# %% With g(u) = (1 + u)^β >= 1 the signal never drops below 1.
u = ScalarField(grid, 100 * rng.random(grid.shape))
v, rep = solve_helmholtz(ScalarField(grid, g_eval(PowerShift(0.5), u.values)), preconditioner="dct")
print("min v with g = sqrt(1+u):", rep.min_v)
