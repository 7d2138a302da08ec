"""Uniform cell-centered grid, scalar fields and conservative operators.

Cell (i, j) sits at x = (i + 1/2) hx, y = (j + 1/2) hy.  Field values are
stored as ``(ny, nx)`` arrays, so the row-major flattening puts cell (i, j)
at index ``j * nx + i`` (row j = 0 first).

Neumann closure: every boundary face carries zero flux.  The Laplacian is
built as ``divergence(gradient_faces(f))`` so both paths share one
floating-point evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    lx: float = 0.1
    ly: float = 0.1

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx, ny must be integers")
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs nx, ny >= 2, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("lx and ly must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, Y)`` arrays of cell-center coordinates, shape (ny, nx)."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.nx * factor, self.ny * factor, self.lx, self.ly)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Cell averages of a scalar quantity on ``grid``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.size != self.grid.size:
            raise ValueError(
                f"expected {self.grid.size} values for {self.grid.nx}x{self.grid.ny}, "
                f"got {vals.size}"
            )
        object.__setattr__(self, "values", vals.reshape(self.grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        X, Y = grid.cell_centers()
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape).astype(float))

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __repr__(self):
        return f"ScalarField({self.grid.nx}x{self.grid.ny}, min={self.values.min():.6g}, max={self.values.max():.6g})"


@dataclass(frozen=True, eq=False)
class FaceFluxField:
    """Normal components on cell faces.

    ``fx`` has shape ``(ny, nx + 1)``: fx[j, i] lives on the face between
    cells (i - 1, j) and (i, j).  ``fy`` has shape ``(ny + 1, nx)``.
    """

    grid: GridSpec
    fx: np.ndarray
    fy: np.ndarray

    def __post_init__(self):
        g = self.grid
        fx = np.asarray(self.fx, dtype=float).reshape(g.ny, g.nx + 1)
        fy = np.asarray(self.fy, dtype=float).reshape(g.ny + 1, g.nx)
        object.__setattr__(self, "fx", fx)
        object.__setattr__(self, "fy", fy)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FaceFluxField":
        return cls(grid, np.zeros((grid.ny, grid.nx + 1)), np.zeros((grid.ny + 1, grid.nx)))

    def boundary_is_zero(self) -> bool:
        return bool(
            np.all(self.fx[:, 0] == 0)
            and np.all(self.fx[:, -1] == 0)
            and np.all(self.fy[0, :] == 0)
            and np.all(self.fy[-1, :] == 0)
        )

    def max_abs(self) -> float:
        return float(max(np.abs(self.fx).max(), np.abs(self.fy).max()))


class FieldStats(NamedTuple):
    min: float
    max: float
    mean: float
    l1: float
    l2: float
    linf: float


# -- array kernels ---------------------------------------------------------
# Hot loops in the integrator call these directly on raw (ny, nx) arrays.


def grad_arrays(a: np.ndarray, hx: float, hy: float) -> tuple[np.ndarray, np.ndarray]:
    ny, nx = a.shape
    gx = np.zeros((ny, nx + 1))
    gy = np.zeros((ny + 1, nx))
    gx[:, 1:-1] = (a[:, 1:] - a[:, :-1]) / hx
    gy[1:-1, :] = (a[1:, :] - a[:-1, :]) / hy
    return gx, gy


def div_arrays(fx: np.ndarray, fy: np.ndarray, hx: float, hy: float) -> np.ndarray:
    return (fx[:, 1:] - fx[:, :-1]) / hx + (fy[1:, :] - fy[:-1, :]) / hy


def laplacian_array(a: np.ndarray, hx: float, hy: float) -> np.ndarray:
    # same floating-point operations as div_arrays(*grad_arrays(a)), fewer temporaries
    dx = (a[:, 1:] - a[:, :-1]) / hx
    dy = (a[1:, :] - a[:-1, :]) / hy
    lx = np.zeros_like(a)
    lx[:, :-1] += dx
    lx[:, 1:] -= dx
    lx /= hx
    ly = np.zeros_like(a)
    ly[:-1, :] += dy
    ly[1:, :] -= dy
    ly /= hy
    lx += ly
    return lx


# -- field-level operators -------------------------------------------------


def integrate(f: ScalarField) -> float:
    """Midpoint quadrature of ``f`` over the domain."""
    return float(f.grid.cell_area * f.values.sum())


def gradient_faces(f: ScalarField) -> FaceFluxField:
    g = f.grid
    gx, gy = grad_arrays(f.values, g.hx, g.hy)
    return FaceFluxField(g, gx, gy)


def divergence(F: FaceFluxField) -> ScalarField:
    g = F.grid
    return ScalarField(g, div_arrays(F.fx, F.fy, g.hx, g.hy))


def laplacian_neumann(f: ScalarField) -> ScalarField:
    """Five-point Laplacian with mirror ghost cells (zero normal derivative)."""
    return divergence(gradient_faces(f))


def inner(f: ScalarField, g: ScalarField) -> float:
    """Cell-area weighted dot product."""
    return float(f.grid.cell_area * np.vdot(f.values, g.values))


def field_stats(f: ScalarField) -> FieldStats:
    a = f.values
    w = f.grid.cell_area
    return FieldStats(
        min=float(a.min()),
        max=float(a.max()),
        mean=float(a.mean()),
        l1=float(w * np.abs(a).sum()),
        l2=float(np.sqrt(w * np.vdot(a, a))),
        linf=float(np.abs(a).max()),
    )


def gradient_energy(f: ScalarField) -> float:
    """Discrete ``∫|∇f|²``: squared face gradients weighted by cell area.

    Every interior face contributes ``hx*hy*(∂f)²``, which equals
    ``-⟨f, Δ_h f⟩`` by summation by parts.
    """
    g = f.grid
    gx, gy = grad_arrays(f.values, g.hx, g.hy)
    return float(g.cell_area * (np.vdot(gx, gx) + np.vdot(gy, gy)))


# -- dump format -----------------------------------------------------------


def write_field(f: ScalarField, path) -> None:
    """Write the plain-text dump: header ``nx ny lx ly`` then ny rows."""
    g = f.grid
    with open(path, "w") as fh:
        fh.write(f"{g.nx} {g.ny} {g.lx!r} {g.ly!r}\n")
        for row in f.values:
            fh.write(" ".join(f"{x:.17g}" for x in row))
            fh.write("\n")


def read_field(path) -> ScalarField:
    lines = Path(path).read_text().split("\n")
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: bad header {lines[0]!r}")
    grid = GridSpec(int(head[0]), int(head[1]), float(head[2]), float(head[3]))
    rows = [ln.split() for ln in lines[1:] if ln.strip()]
    if len(rows) != grid.ny or any(len(r) != grid.nx for r in rows):
        raise ValueError(f"{path}: expected {grid.ny} rows of {grid.nx} values")
    return ScalarField(grid, np.array(rows, dtype=float))
