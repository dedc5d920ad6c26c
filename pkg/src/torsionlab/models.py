"""Model constants and comparison verdicts for torsional rigidity.

``r_kd`` is the radius of the round sphere that serves as isoperimetric model
for manifolds with ``Ric >= (n-1) K`` and diameter at most ``D``. The gap
factor below is the same constant written with sine integrals; the two are
evaluated from different integrands so that their agreement is a check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quad import gl_integrate
from .manifold import RevolutionManifold, make_manifold
from .radial import DEFAULT_N, solve_radial_ball
from .symmetrization import alpha as volume_ratio

CELLS = 256


def _integral(func, a: float, b: float, cells: int = CELLS) -> float:
    if b == a:
        return 0.0
    edges = np.linspace(a, b, cells + 1)
    return float(np.sum(gl_integrate(func, edges[:-1], edges[1:])))


def _cos_power(n):
    return lambda t: np.cos(t) ** (n - 1)


def _sin_power(n):
    return lambda t: np.sin(t) ** (n - 1)


@dataclass(frozen=True)
class RKD:
    radius: float
    branch: str  # "positive", "flat" or "negative"
    attained_by: str = ""  # K < 0 only: "ratio" or "root"


def r_kd_details(K: float, D: float, n: int) -> RKD:
    """``R(K, D)`` with the branch used and, for ``K < 0``, which argument of the max wins."""
    if not D > 0:
        raise ValueError("diameter bound D must be positive")
    if n < 2:
        raise ValueError("dimension must be at least 2")
    if K > 0:
        s = math.sqrt(K)
        if D * s > math.pi * (1 + 1e-14):
            raise ValueError("D sqrt(K) exceeds pi, beyond the Myers bound")
        top = _integral(_cos_power(n), 0.0, min(D * s, math.pi) / 2.0)
        return RKD((top / _integral(_cos_power(n), 0.0, math.pi / 2.0)) ** (1.0 / n) / s, "positive")
    if K == 0:
        return RKD(0.5 * n * _integral(_cos_power(n), 0.0, math.pi / 2.0) ** (-1.0 / n) * D, "flat")
    s = math.sqrt(-K)
    top = _integral(lambda t: np.cosh(2.0 * t) ** ((n - 1) / 2.0), 0.0, D * s)
    ratio = top / _integral(_sin_power(n), 0.0, math.pi)
    root = ratio ** (1.0 / n)
    if ratio >= root:
        return RKD(ratio / s, "negative", "ratio")
    return RKD(root / s, "negative", "root")


def r_kd(K: float, D: float, n: int) -> float:
    """Radius of the model sphere for ``Ric >= (n-1) K g``, ``diam <= D``."""
    return r_kd_details(K, D, n).radius


def perelman_gap_factor(eps_pk: float, n: int) -> float:
    """``(1 - int_0^{eps/2} sin^{n-1} / int_0^{pi/2} sin^{n-1})^{2/n}``.

    ``eps_pk`` is an input: the constant it stands for has no known formula.
    """
    if not 0.0 <= eps_pk <= math.pi:
        raise ValueError("eps_pk must lie in [0, pi]")
    frac = _integral(_sin_power(n), 0.0, eps_pk / 2.0) / _integral(_sin_power(n), 0.0, math.pi / 2.0)
    return max(0.0, 1.0 - frac) ** (2.0 / n)


def sphere_cap_radius_for_fraction(beta: float, n: int) -> float:
    """Radius of the cap of the unit ``n``-sphere holding a fraction ``beta`` of its volume."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    sphere = make_manifold("sphere", n)
    return float(sphere.radius_for_volume(beta * sphere.total_volume))


def sphere_cap_rigidity(beta: float, n: int, N: int = DEFAULT_N) -> float:
    """Torsional rigidity of the unit-sphere cap of relative volume ``beta``."""
    r = sphere_cap_radius_for_fraction(beta, n)
    return solve_radial_ball(make_manifold("sphere", n), r, N).rigidity


@dataclass(frozen=True)
class ModelBound:
    K: float
    D: float
    n: int
    R_KD: float
    rigidity_bound: float
    provenance: str


def model_bound(K: float, D: float, n: int, beta: float) -> ModelBound:
    """Upper bound ``R(K,D)^2 E(cap of relative volume beta)`` on the rigidity."""
    R = r_kd(K, D, n)
    return ModelBound(K, D, n, R, R * R * sphere_cap_rigidity(beta, n), "sphere of radius R(K,D)")


def gromov_model(K: float, D: float, n: int) -> RevolutionManifold:
    """The round sphere of radius ``R(K, D)``."""
    return make_manifold("sphere", n, radius=r_kd(K, D, n))


@dataclass(frozen=True)
class ComparisonReport:
    E_domain: float
    E_model: float
    slack: float
    passed: bool
    model_radius: float
    alpha: float
    E_unit_cap_scaled: float | None = None  # R(K,D)^2 E(Omega**) on the Gromov path


def comparison_verdict(
    E_domain: float,
    volume: float,
    model: RevolutionManifold,
    *,
    source_total: float = math.inf,
    model_volume: float | None = None,
    K: float | None = None,
    D: float | None = None,
    tol: float = 0.02,
    N: int = DEFAULT_N,
) -> ComparisonReport:
    """Compare a domain's rigidity with that of the model ball of matching relative volume.

    ``source_total`` is the total volume of the ambient manifold (``inf`` for
    complete non-compact ones). If ``model_volume`` is given it must equal
    ``alpha^-1 volume``. With ``K`` and ``D`` the report also carries
    ``R(K,D)^2`` times the rigidity of the unit-sphere cap of the same
    relative volume, which must agree with the model value.
    """
    a = volume_ratio(source_total, model)
    target = volume / a
    if model_volume is not None and abs(model_volume - target) > 1e-9 * target:
        raise ValueError(
            f"model ball volume {model_volume:.12g} is not alpha^-1 Vol(Omega) = {target:.12g}"
        )
    r_star = float(model.radius_for_volume(target))
    E_model = solve_radial_ball(model, r_star, N).rigidity
    scaled = None
    if K is not None and D is not None:
        R = r_kd(K, D, model.n)
        scaled = R * R * sphere_cap_rigidity(target / model.total_volume, model.n, N)
    return ComparisonReport(
        E_domain, E_model, E_model - E_domain, bool(E_domain <= E_model * (1 + tol)), r_star, a, scaled
    )
