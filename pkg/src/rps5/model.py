"""Vector field, equilibria and closed-form stability quantities of the
five-species cyclic competition model.

Species ``j`` suppresses ``j+1`` (rate ``c_a``) and ``j+3`` (rate ``c_b``)
and is boosted by ``j+2`` (rate ``e_b``) and ``j+4`` (rate ``e_a``), indices
mod 5.  The system is equivariant under the cyclic permutation
``rho(x1..x5) = (x5, x1, x2, x3, x4)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoInteriorEquilibrium

__all__ = [
    "BETA",
    "Params",
    "Equilibrium",
    "XiQSpectrum",
    "DerivedQuantities",
    "rotate",
    "vector_field",
    "jacobian",
    "axis_equilibrium",
    "xi_q",
    "xi_q_eigenvalues",
    "xi_q_stability",
    "xi_t",
    "derived_quantities",
    "sufficient_condition",
]

#: Ratio cos(pi/5)/cos(2*pi/5) = (sqrt(5)+1)/(sqrt(5)-1), the slope constant
#: in the interior-equilibrium Hopf conditions.
BETA = (math.sqrt(5.0) + 1.0) / (math.sqrt(5.0) - 1.0)


@dataclass(frozen=True)
class Params:
    """Competition (``c_a``, ``c_b``) and expansion (``e_a``, ``e_b``) rates.

    All four rates must be strictly positive; this is what restricts the
    inter-species interactions to pure dominance relations.
    """

    c_a: float
    c_b: float
    e_a: float
    e_b: float

    def __post_init__(self) -> None:
        for name in ("c_a", "c_b", "e_a", "e_b"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be a positive finite real, got {value!r}")


@dataclass(frozen=True)
class Equilibrium:
    """An equilibrium point together with its eigenvalues.

    ``kind`` is one of ``"axis"`` (single species, ``index`` in 1..5),
    ``"interior5"`` (all five present) or ``"interior3"`` (three adjacent
    species, ``index`` is the rotation applied to the base copy).
    """

    kind: str
    index: int
    coords: np.ndarray
    eigenvalues: np.ndarray


def rotate(x, k: int = 1) -> np.ndarray:
    """Apply the cyclic symmetry rho^k, rho(x1..x5) = (x5, x1, x2, x3, x4)."""
    return np.roll(np.asarray(x, dtype=float), k)


def vector_field(p: Params, x) -> np.ndarray:
    """Time derivative of the population densities at state ``x``."""
    x = np.asarray(x, dtype=float)
    total = x.sum()
    growth = (
        1.0
        - total
        - p.c_a * np.roll(x, -1)
        + p.e_b * np.roll(x, -2)
        - p.c_b * np.roll(x, -3)
        + p.e_a * np.roll(x, -4)
    )
    return x * growth


def _growth_rates(p: Params, x: np.ndarray) -> np.ndarray:
    return (
        1.0
        - x.sum()
        - p.c_a * np.roll(x, -1)
        + p.e_b * np.roll(x, -2)
        - p.c_b * np.roll(x, -3)
        + p.e_a * np.roll(x, -4)
    )


def jacobian(p: Params, x) -> np.ndarray:
    """Analytic Jacobian of :func:`vector_field`."""
    x = np.asarray(x, dtype=float)
    # d(growth_j)/d(x_k) depends only on (k - j) mod 5
    coeff = np.array([0.0, -p.c_a, p.e_b, -p.c_b, p.e_a]) - 1.0
    offsets = (np.arange(5)[None, :] - np.arange(5)[:, None]) % 5
    jac = x[:, None] * coeff[offsets]
    jac[np.diag_indices(5)] += _growth_rates(p, x)
    return jac


def axis_equilibrium(p: Params, j: int) -> Equilibrium:
    """Single-species equilibrium with species ``j`` (1..5) at density one.

    The eigenvalue in the direction of species ``i`` is listed at position
    ``i-1``; for ``j=1`` the values are ``(-1, e_a, -c_b, e_b, -c_a)`` and
    the remaining copies follow by the cyclic symmetry.
    """
    if j not in (1, 2, 3, 4, 5):
        raise ValueError(f"axis index must be in 1..5, got {j}")
    coords = np.zeros(5)
    coords[j - 1] = 1.0
    base = np.array([-1.0, p.e_a, -p.c_b, p.e_b, -p.c_a])
    return Equilibrium(
        kind="axis",
        index=j,
        coords=coords,
        eigenvalues=np.roll(base, j - 1).astype(complex),
    )


def xi_q(p: Params) -> Equilibrium:
    """Fully symmetric interior equilibrium (x, x, x, x, x)."""
    denom = 5.0 + p.c_a + p.c_b - (p.e_a + p.e_b)
    if denom <= 0.0:
        raise NoInteriorEquilibrium(
            f"5 + c_a + c_b - e_a - e_b = {denom} <= 0: no interior equilibrium "
            "in the positive orthant"
        )
    x = 1.0 / denom
    return Equilibrium(
        kind="interior5",
        index=0,
        coords=np.full(5, x),
        eigenvalues=xi_q_eigenvalues(p).mu.copy(),
    )


@dataclass(frozen=True)
class XiQSpectrum:
    """Eigenvalues of the interior equilibrium, via the circulant structure.

    ``mu[j-1]`` for j = 1..4 comes from the root-of-unity formula
    ``mu_j = -x (c_a w - e_a conj(w) + c_b conj(w)^2 - e_b w^2)`` with
    ``w = exp(2*pi*i*j/5)``.  That reduction uses ``sum_k w^k = 0`` and is
    therefore invalid at ``w = 1``; the fifth (radial) eigenvalue equals
    exactly ``-1`` and is stored at ``radial_index``.
    """

    x: float
    mu: np.ndarray
    radial_index: int
    re_mu1: float
    re_mu2: float


def xi_q_eigenvalues(p: Params) -> XiQSpectrum:
    """Closed-form spectrum of the Jacobian at the interior equilibrium."""
    denom = 5.0 + p.c_a + p.c_b - (p.e_a + p.e_b)
    if denom <= 0.0:
        raise NoInteriorEquilibrium(
            f"5 + c_a + c_b - e_a - e_b = {denom} <= 0: no interior equilibrium"
        )
    x = 1.0 / denom
    mu = np.empty(5, dtype=complex)
    for j in range(1, 5):
        w = cmath.exp(2j * math.pi * j / 5.0)
        wc = w.conjugate()
        mu[j - 1] = -x * (p.c_a * w - p.e_a * wc + p.c_b * wc * wc - p.e_b * w * w)
    mu[4] = -1.0
    cos1 = math.cos(2.0 * math.pi / 5.0)
    cos2 = math.cos(math.pi / 5.0)
    re_mu1 = -x * ((p.c_a - p.e_a) * cos1 - (p.c_b - p.e_b) * cos2)
    re_mu2 = -x * (-(p.c_a - p.e_a) * cos2 + (p.c_b - p.e_b) * cos1)
    return XiQSpectrum(x=x, mu=mu, radial_index=4, re_mu1=re_mu1, re_mu2=re_mu2)


def xi_q_stability(p: Params, tol: float = 1e-12) -> str:
    """Verdict for the interior equilibrium: "stable", "unstable" or "boundary".

    Stability holds iff ``e_a - c_a < BETA*(e_b - c_b)`` and
    ``e_b - c_b < BETA*(e_a - c_a)``; equality of either expression within
    ``tol`` gives "boundary" (both conditions are Hopf curves).
    """
    da = p.e_a - p.c_a
    db = p.e_b - p.c_b
    g1 = BETA * db - da
    g2 = BETA * da - db
    if abs(g1) <= tol or abs(g2) <= tol:
        return "boundary"
    return "stable" if (g1 > 0.0 and g2 > 0.0) else "unstable"


def xi_t(p: Params, rotation: int = 0) -> Equilibrium:
    """Three-species equilibrium in the subspace x4 = x5 = 0, rotated by rho^rotation.

    The base copy solves the linear system obtained by zeroing the growth
    rates of species 1..3 with x4 = x5 = 0.
    """
    if rotation not in (0, 1, 2, 3, 4):
        raise ValueError(f"rotation must be in 0..4, got {rotation}")
    a = np.array(
        [
            [1.0, 1.0 + p.c_a, 1.0 - p.e_b],
            [1.0 - p.e_a, 1.0, 1.0 + p.c_a],
            [1.0 + p.c_b, 1.0 - p.e_a, 1.0],
        ]
    )
    try:
        sol = np.linalg.solve(a, np.ones(3))
    except np.linalg.LinAlgError as exc:
        raise NoInteriorEquilibrium(f"three-species system is singular: {exc}") from exc
    if np.any(sol <= 0.0):
        raise NoInteriorEquilibrium(
            f"three-species equilibrium {sol} not in the positive orthant"
        )
    coords = np.zeros(5)
    coords[:3] = sol
    coords = rotate(coords, rotation)
    return Equilibrium(
        kind="interior3",
        index=rotation,
        coords=coords,
        eigenvalues=np.linalg.eigvals(jacobian(p, coords)),
    )


@dataclass(frozen=True)
class DerivedQuantities:
    """Closed-form stability combinations for the three-species objects.

    ``delta_t``   resonance quantity of the three-species cycle,
                  ``c_a^2 c_b / (e_a^2 e_b)``; the cycle attracts within its
                  subspace iff > 1 and the equilibrium inside iff < 1.
    ``lambda_4``, ``lambda_5``
                  transverse eigenvalues of the three-species equilibrium in
                  the x4 / x5 directions (diagonal entries of the block
                  Jacobian); None when that equilibrium does not exist.
    ``delta_tq``  ``-lambda_4/lambda_5``; the cycle through the rotated
                  copies of the equilibrium loses stability as this drops
                  through 1.  None when undefined.
    ``nu_4``, ``nu_5``
                  transverse-stability combinations of the AAB pattern; it
                  requires delta_t > 1, nu_4 < 0 and nu_5 < 0.
    """

    delta_t: float
    lambda_4: float | None
    lambda_5: float | None
    delta_tq: float | None
    nu_4: float
    nu_5: float
    beta: float
    mu: np.ndarray | None
    sufficient: bool


def derived_quantities(p: Params) -> DerivedQuantities:
    """Evaluate all closed-form stability quantities at ``p``."""
    delta_t = p.c_a**2 * p.c_b / (p.e_a**2 * p.e_b)
    nu_4 = -p.c_b + p.c_a**2 / p.e_a + p.c_a * p.e_a / p.e_b
    nu_5 = -p.c_b - p.c_a**2 / p.e_a + p.c_a * p.c_b * p.e_b / p.e_a**2
    lambda_4 = lambda_5 = delta_tq = None
    try:
        xt = xi_t(p).coords
    except NoInteriorEquilibrium:
        xt = None
    if xt is not None:
        x1, x2, x3 = xt[0], xt[1], xt[2]
        total = x1 + x2 + x3
        lambda_4 = 1.0 - total + p.e_b * x1 - p.c_b * x2 + p.e_a * x3
        lambda_5 = 1.0 - total - p.c_a * x1 + p.e_b * x2 - p.c_b * x3
        delta_tq = -lambda_4 / lambda_5 if lambda_5 != 0.0 else None
    try:
        mu = xi_q_eigenvalues(p).mu
    except NoInteriorEquilibrium:
        mu = None
    return DerivedQuantities(
        delta_t=delta_t,
        lambda_4=lambda_4,
        lambda_5=lambda_5,
        delta_tq=delta_tq,
        nu_4=nu_4,
        nu_5=nu_5,
        beta=BETA,
        mu=mu,
        sufficient=sufficient_condition(p),
    )


def sufficient_condition(p: Params) -> bool:
    """Whether min(c_a, c_b) > max(e_a, e_b).

    This guarantees asymptotic stability of the whole network of
    single-species equilibria; cycling patterns can be strongly attracting
    well outside this region.
    """
    return min(p.c_a, p.c_b) > max(p.e_a, p.e_b)
