"""Independent reference computations shared by the unit and acceptance tests."""

import numpy as np
import sympy as sp

from chemotaxis.grid import GridSpec, ScalarField, divergence, laplacian_neumann
from chemotaxis.model import chemotactic_flux


def dense_operator(grid, a=1.0):
    """Assemble I - a Δ_h column by column (independent of the CG path)."""
    n = grid.size
    A = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        A[:, k] = e - a * laplacian_neumann(ScalarField(grid, e)).flat()
    return A


def exact_chemotactic_divergence(law_expr):
    """Analytic ∇·(u χ(v) ∇v) on the unit square via sympy."""
    x, y = sp.symbols("x y")
    u = 1 + sp.Rational(1, 2) * sp.cos(sp.pi * x) * sp.cos(sp.pi * y)
    v = 2 + sp.cos(sp.pi * x) + sp.Rational(1, 2) * sp.cos(2 * sp.pi * y)
    chi = law_expr(v)
    expr = sp.diff(u * chi * sp.diff(v, x), x) + sp.diff(u * chi * sp.diff(v, y), y)
    f = sp.lambdify((x, y), expr, "numpy")
    fu = sp.lambdify((x, y), u, "numpy")
    fv = sp.lambdify((x, y), v, "numpy")
    return f, fu, fv


def chemotactic_divergence_order(law, law_expr, sizes=(32, 64, 128, 256)):
    """Least-squares slope of log(RMS error) against log(h); returns (order, errors)."""
    f, fu, fv = exact_chemotactic_divergence(law_expr)
    hs, errs = [], []
    for n in sizes:
        g = GridSpec(n, n, 1.0, 1.0)
        X, Y = g.cell_centers()
        num = divergence(chemotactic_flux(ScalarField(g, fu(X, Y)), ScalarField(g, fv(X, Y)), law)).values
        hs.append(g.hx)
        errs.append(np.sqrt(np.mean((num - f(X, Y)) ** 2)))
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0]), errs


class Shifted:
    """χ(v + 1): keeps the log law's argument above 1 on the test data."""

    def __init__(self, law):
        self.law, self.name = law, law.name

    def in_domain(self, v):
        return self.law.in_domain(np.asarray(v) + 1.0)

    def __call__(self, v):
        return self.law(np.asarray(v) + 1.0)
