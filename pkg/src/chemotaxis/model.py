"""Constitutive laws: chemotactic sensitivity χ(v) and signal production g(u).

Sensitivities
    Constant        χ(v) = chi
    Singular        χ(v) = chi0 / v          (Weber-Fechner), v > 0
    PowerSingular   χ(v) = chi0 / v**k,       v > 0, k >= 1
    Logarithmic     χ(v) = chi0 * log(v),     v > 1 so that χ > 0

Productions
    Linear          g(u) = u
    PowerShift      g(u) = lambda2 * (1 + u)**beta,  0 <= beta <= 1

The boundedness theory covers productions with
``lambda1 <= g(s) <= lambda2 * (1 + s)**beta`` for ``beta <= 1/2``;
``validate_production`` checks those bounds on sample points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainViolation
from .grid import FaceFluxField, ScalarField

# slack for roundoff-level negative densities
POSITIVITY_SLACK = 1e-12


@dataclass(frozen=True)
class Constant:
    chi: float
    name = "constant"

    def __post_init__(self):
        if not self.chi > 0:
            raise ValueError(f"constant sensitivity needs chi > 0, got {self.chi}")

    def in_domain(self, v):
        return np.ones_like(np.asarray(v), dtype=bool)

    def __call__(self, v):
        return np.full_like(np.asarray(v, dtype=float), self.chi)


@dataclass(frozen=True)
class Singular:
    chi0: float
    name = "inverse"

    def __post_init__(self):
        if not self.chi0 > 0:
            raise ValueError(f"inverse sensitivity needs chi0 > 0, got {self.chi0}")

    def in_domain(self, v):
        return np.asarray(v) > 0

    def __call__(self, v):
        return self.chi0 / np.asarray(v, dtype=float)


@dataclass(frozen=True)
class PowerSingular:
    chi0: float
    k: float = 1.0
    name = "inverse_power"

    def __post_init__(self):
        if not self.chi0 > 0:
            raise ValueError(f"inverse_power sensitivity needs chi0 > 0, got {self.chi0}")
        if not self.k >= 1:
            raise ValueError(f"inverse_power sensitivity needs k >= 1, got {self.k}")

    def in_domain(self, v):
        return np.asarray(v) > 0

    def __call__(self, v):
        return self.chi0 / np.asarray(v, dtype=float) ** self.k


@dataclass(frozen=True)
class Logarithmic:
    chi0: float
    name = "log"

    def __post_init__(self):
        if not self.chi0 > 0:
            raise ValueError(f"log sensitivity needs chi0 > 0, got {self.chi0}")

    def in_domain(self, v):
        return np.asarray(v) > 1

    def __call__(self, v):
        return self.chi0 * np.log(np.asarray(v, dtype=float))


SensitivityLaw = Union[Constant, Singular, PowerSingular, Logarithmic]


@dataclass(frozen=True)
class Linear:
    lambda1: float = 1.0
    lambda2: float = 1.0
    name = "linear"

    def __post_init__(self):
        _check_lambdas(self.lambda1, self.lambda2)

    @property
    def beta(self) -> float:
        return 1.0

    def __call__(self, u):
        return np.asarray(u, dtype=float).copy()

    def derivative(self, u):
        return np.ones_like(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class PowerShift:
    beta: float = 0.5
    lambda2: float = 1.0
    lambda1: float = 1.0
    name = "power_shift"

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"power_shift needs beta in [0, 1], got {self.beta}")
        _check_lambdas(self.lambda1, self.lambda2)

    def __call__(self, u):
        return self.lambda2 * (1.0 + np.asarray(u, dtype=float)) ** self.beta

    def derivative(self, u):
        return self.lambda2 * self.beta * (1.0 + np.asarray(u, dtype=float)) ** (self.beta - 1.0)


ProductionLaw = Union[Linear, PowerShift]


def _check_lambdas(l1, l2):
    if not (0 < l1 <= l2):
        raise ValueError(f"need 0 < lambda1 <= lambda2, got {l1}, {l2}")


@dataclass(frozen=True)
class ModelParams:
    sensitivity: SensitivityLaw
    production: ProductionLaw = field(default_factory=PowerShift)

    def describe(self) -> dict:
        """Flat description, used for config echoes and output metadata."""
        d = {"sensitivity": self.sensitivity.name, "production": self.production.name}
        for law in (self.sensitivity, self.production):
            for k, v in law.__dict__.items():
                d[k] = v
        return d


SENSITIVITIES = {
    "constant": Constant,
    "inverse": Singular,
    "inverse_power": PowerSingular,
    "log": Logarithmic,
}
PRODUCTIONS = {"linear": Linear, "power_shift": PowerShift}


def chi_eval(law: SensitivityLaw, v):
    """Evaluate χ(v), scalar or array.

    Raises ``DomainViolation`` if any ``v`` lies outside the law's domain
    (v <= 0 for the singular laws, v <= 1 for the logarithmic one).
    """
    ok = law.in_domain(v)
    if not np.all(ok) or not np.all(np.isfinite(v)):
        bad = np.asarray(v)[~np.asarray(ok)] if np.ndim(v) else v
        raise DomainViolation(f"{law.name} sensitivity evaluated outside its domain at v={np.min(bad)!r}")
    out = law(v)
    return float(out) if np.ndim(out) == 0 else out


def g_eval(law: ProductionLaw, u):
    """Evaluate g(u); negative ``u`` beyond roundoff slack is rejected."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < -POSITIVITY_SLACK):
        raise DomainViolation(f"production evaluated at negative density u={arr.min()!r}")
    out = law(np.maximum(arr, 0.0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ProductionCheck:
    ok: bool
    violations: list
    note: str = ""

    def __bool__(self):
        return self.ok


def validate_production(law: ProductionLaw, samples, beta_bound: float | None = None) -> ProductionCheck:
    """Check ``lambda1 <= g(s) <= lambda2 * (1 + s)**beta`` at every sample.

    ``beta_bound`` defaults to the law's own exponent (1 for ``Linear``).
    Returns a truthy/falsy ``ProductionCheck`` listing ``(s, g(s), reason)``
    for each violation.
    """
    beta = law.beta if beta_bound is None else beta_bound
    s = np.asarray(samples, dtype=float).ravel()
    gs = np.asarray(law(s), dtype=float)
    upper = law.lambda2 * (1.0 + s) ** beta
    violations = []
    for si, gi, ui in zip(s, gs, upper):
        if gi < law.lambda1:
            violations.append((float(si), float(gi), f"g < lambda1={law.lambda1}"))
        elif gi > ui * (1 + 1e-14):
            violations.append((float(si), float(gi), f"g > lambda2*(1+s)^{beta}"))
    note = ""
    if isinstance(law, Linear) or beta > 0.5:
        note = "outside the boundedness hypotheses (needs lambda1 <= g, beta <= 1/2)"
    return ProductionCheck(not violations, violations, note)


# -- chemotactic flux ------------------------------------------------------


def flux_arrays(u: np.ndarray, v: np.ndarray, law: SensitivityLaw, hx: float, hy: float):
    """Upwind chemotactic face flux on raw arrays.

    Returns ``(fx, fy, ax, ay)`` where ``a = χ(v_face) ∂v`` is the face
    drift velocity and ``f = u_upwind * a``.  Boundary faces are zero.
    """
    ny, nx = u.shape
    fx = np.zeros((ny, nx + 1))
    fy = np.zeros((ny + 1, nx))
    ax = np.zeros((ny, nx + 1))
    ay = np.zeros((ny + 1, nx))

    vfx = 0.5 * (v[:, 1:] + v[:, :-1])
    vfy = 0.5 * (v[1:, :] + v[:-1, :])
    ax[:, 1:-1] = chi_eval(law, vfx) * (v[:, 1:] - v[:, :-1]) / hx
    ay[1:-1, :] = chi_eval(law, vfy) * (v[1:, :] - v[:-1, :]) / hy

    a = ax[:, 1:-1]
    fx[:, 1:-1] = np.where(a > 0, u[:, :-1], u[:, 1:]) * a
    a = ay[1:-1, :]
    fy[1:-1, :] = np.where(a > 0, u[:-1, :], u[1:, :]) * a
    return fx, fy, ax, ay


def chemotactic_flux(u: ScalarField, v: ScalarField, law: SensitivityLaw) -> FaceFluxField:
    """Face flux of ``u χ(v) ∇v`` with ``u`` taken from the upwind cell.

    ``v`` on a face is the mean of its two cells; ``∂v`` is the face
    difference.  A positive face value means transport in +x (+y).
    """
    if np.any(u.values < -POSITIVITY_SLACK):
        raise DomainViolation(f"negative density {u.values.min()!r} in chemotactic flux")
    g = u.grid
    fx, fy, _, _ = flux_arrays(u.values, v.values, law, g.hx, g.hy)
    return FaceFluxField(g, fx, fy)


def max_drift_speed(v: ScalarField, law: SensitivityLaw) -> float:
    """``max over faces |χ(v_face) ∂v|``, the advective CFL speed."""
    g = v.grid
    _, _, ax, ay = flux_arrays(np.zeros(g.shape), v.values, law, g.hx, g.hy)
    return float(max(np.abs(ax).max(), np.abs(ay).max()))


def homogeneous_state(u_bar: float, params: ModelParams) -> tuple[float, float]:
    """Spatially uniform equilibrium ``(u_s, v_s) = (ū, g(ū))``."""
    return float(u_bar), float(g_eval(params.production, u_bar))


def instability_ratio(u_bar: float, params: ModelParams, grid) -> float:
    """Linear-stability ratio of the homogeneous state on ``grid``.

    Mode with Laplacian eigenvalue -λ grows at rate
    ``-λ + ū χ(v̄) g'(ū) λ / (1 + λ)``; the state is unstable iff
    ``ū χ(v̄) g'(ū) > 1 + λ₁`` with λ₁ the smallest nonzero discrete
    eigenvalue.  Returns ``ū χ(v̄) g'(ū) / (1 + λ₁)`` (> 1 means unstable).
    """
    _, v_s = homogeneous_state(u_bar, params)
    drive = u_bar * chi_eval(params.sensitivity, v_s) * float(params.production.derivative(u_bar))
    lam1 = min(
        (2.0 / grid.hx * math.sin(math.pi / (2 * grid.nx))) ** 2,
        (2.0 / grid.hy * math.sin(math.pi / (2 * grid.ny))) ** 2,
    )
    return drive / (1.0 + lam1)
