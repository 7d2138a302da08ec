"""Grids, fields and the conservative Neumann operators.

Run:  python demos/01_grid_and_operators.py
"""
# %%
import tempfile
from pathlib import Path

import numpy as np

from chemotaxis.grid import (
    GridSpec,
    ScalarField,
    divergence,
    gradient_energy,
    gradient_faces,
    integrate,
    laplacian_neumann,
    read_field,
    write_field,
)

# %% The default domain is the 0.1 x 0.1 square; values are stored (ny, nx).
grid = GridSpec(64, 64)
print(grid, "h =", grid.hx, "cells:", grid.size)

f = ScalarField.from_function(grid, lambda x, y: np.cos(np.pi * x / 0.1) * np.cos(np.pi * y / 0.1))
print("integral of f:", integrate(f))  # zero by symmetry

# %% Boundary faces carry zero flux, so the Laplacian integrates to zero
# and its leading eigenvalue on this mode is -2 π² / 0.01.
F = gradient_faces(f)
print("boundary faces zero:", F.boundary_is_zero())
lap = laplacian_neumann(f)
print("∫Δf =", integrate(lap))
ratio = lap.values / f.values
print("Δf / f ≈", np.median(ratio), "continuum:", -2 * np.pi**2 / 0.01)

# %% Summation by parts: ∫|∇f|² = -<f, Δf>.
print("gradient energy:", gradient_energy(f), "vs", -grid.cell_area * np.vdot(f.values, lap.values))

# %% Any face flux has zero net divergence.
rng = np.random.default_rng(0)
F_rand = gradient_faces(ScalarField(grid, rng.random(grid.shape)))
print("∫ div F for a random field:", integrate(divergence(F_rand)))

# %% Plain-text dumps round-trip exactly.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "f.dat"
    write_field(f, path)
    print("round trip exact:", np.array_equal(read_field(path).values, f.values))
