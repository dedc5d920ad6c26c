"""Cheeger-type bounds for torsional rigidity and a family showing they are sharp.

Every manifold here has two poles. For a domain ``Omega`` holding at most
half the volume, the rigidity satisfies ``E(Omega) <= 1 / H^2`` where ``H`` is
the infimum of boundary area over enclosed volume. Only radial quantities
are computed: ``H_rad`` scans the centred balls of the manifold and ``H_Omega``
scans the level sets of a radial torsion function.

The sharpness family lives on ``[-(R+eta), R+eta] x S^{n-1}`` with the even
profile ``eps exp(-delta |t|)`` capped by sine arcs near ``|t| = R + eta``.
Its manifold is stored in the coordinate ``s = R + eta - t`` measured from
the pole ``x0`` at ``t = R + eta``, so that ``Omega_r = {t >= r}`` is the
geodesic ball ``B(x0, R + eta - r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .manifold import RevolutionManifold, validate
from .radial import DEFAULT_N, RadialTorsionSolution, energy_functional, solve_radial_ball

SCAN_POINTS = 4000


def a_eps(epsilon: float) -> float:
    """Positive root of ``2 (1 + x) exp(-x) = epsilon``."""
    if not 0.0 < epsilon < 2.0:
        raise ValueError("epsilon must lie in (0, 2) for a positive root")
    g = lambda x: 2.0 * (1.0 + x) * math.exp(-x) - epsilon  # noqa: E731
    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
    return brentq(g, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def minimal_R(n: int, epsilon: float, delta: float) -> float:
    """Smallest admissible ``R = 2 A_eps / ((n - 1) delta)``."""
    return 2.0 * a_eps(epsilon) / ((n - 1) * delta)


@dataclass(frozen=True)
class CheegerFamily:
    n: int
    epsilon: float
    delta: float
    R: float
    lam: float
    eta: float
    manifold: RevolutionManifold

    @property
    def half_length(self) -> float:
        return self.R + self.eta

    def closed_form_profile(self, t):
        """``b_eps(t)`` in the symmetric coordinate ``t in [-(R+eta), R+eta]``."""
        return self.manifold.profile(self.half_length - np.asarray(t, dtype=float))

    def ball_radius(self, r: float) -> float:
        """Radius about ``x0`` of ``Omega_r = {t >= r}``."""
        return self.half_length - r

    def relative_volume(self, r):
        m = self.manifold
        return m.ball_volume(self.half_length - np.asarray(r, dtype=float)) / m.total_volume


def build_family(n: int, epsilon: float, delta: float, R: float | None = None) -> CheegerFamily:
    """The sharpness family for parameters with ``delta > 1/n`` and ``eps <= 1/(n delta)``.

    ``R`` defaults to the smallest value for which the rigidity bound is
    guaranteed, ``2 A_eps / ((n-1) delta)``.
    """
    if not delta > 1.0 / n:
        raise ValueError("delta must exceed 1/n")
    if not 0.0 < epsilon <= 1.0 / (n * delta):
        raise ValueError("epsilon must lie in (0, 1/(n delta)]")
    R = minimal_R(n, epsilon, delta) if R is None else float(R)
    if not R > 0:
        raise ValueError("R must be positive")
    lam = math.exp(delta * R) / epsilon * math.sqrt(1.0 - (epsilon * delta * math.exp(-delta * R)) ** 2)
    eta = math.atan(lam / delta) / lam
    L = R + eta
    neck = epsilon * math.exp(-delta * R)
    sin_eta = math.sin(lam * eta)

    def b(s):
        u = np.abs(L - s)
        d = np.clip(np.minimum(s, 2.0 * L - s), 0.0, eta)  # distance to the nearer pole in the caps
        return np.where(u <= R, epsilon * np.exp(-delta * u), neck * np.sin(lam * d) / sin_eta)

    def db(s):
        sign = np.sign(L - s)
        u = np.abs(L - s)
        d = np.clip(np.minimum(s, 2.0 * L - s), 0.0, eta)
        du = np.where(u <= R, -delta * epsilon * np.exp(-delta * u), -neck * lam * np.cos(lam * d) / sin_eta)
        return -sign * du

    def d2b(s):
        u = np.abs(L - s)
        d = np.clip(np.minimum(s, 2.0 * L - s), 0.0, eta)
        return np.where(u <= R, delta**2 * epsilon * np.exp(-delta * u), -lam**2 * neck * np.sin(lam * d) / sin_eta)

    m = RevolutionManifold(
        n, 2.0 * L, b, db, d2b, two_poles=True, kind="cheeger_family",
        params={"epsilon": epsilon, "delta": delta, "R": R},
        breakpoints=(eta, L, L + R),
    )
    return CheegerFamily(n, epsilon, delta, R, lam, eta, validate(m))


# -- isoperimetric ratios ------------------------------------------------------
def _refine_min(func, grid: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    k = int(np.argmin(values))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    best = (float(values[k]), float(grid[k]))
    if hi > lo:
        res = minimize_scalar(func, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(hi, 1.0)})
        if res.fun < best[0]:
            best = (float(res.fun), float(res.x))
    return best


def h_rad(target, grid: int = SCAN_POINTS) -> tuple[float, float]:
    """Infimum of ``area(dB) / min(Vol(B), Vol(M - B))`` over centred balls ``B = B(x0, s)``.

    Returns ``(infimum, argmin)`` with the argmin as the ball radius ``s``.
    For a :class:`CheegerFamily` the argmin is converted to the domain
    parameter ``r`` of ``Omega_r``.
    """
    family = target if isinstance(target, CheegerFamily) else None
    m = family.manifold if family else target
    if not m.two_poles:
        raise ValueError("H_rad needs a manifold with two poles")
    total = m.total_volume
    pad = 1e-9 * m.t_max
    s = np.unique(np.concatenate([
        np.linspace(pad, m.t_max - pad, grid), [b for b in m.breakpoints], [0.5 * m.t_max],
    ]))

    def ratio(x):
        v = m.ball_volume(x)
        with np.errstate(divide="ignore"):
            return m.ball_boundary_area(x) / np.minimum(v, total - v)

    inf, arg = _refine_min(ratio, s, ratio(s))
    if family:
        arg = family.half_length - arg
    return inf, arg


def h_omega(sol: RadialTorsionSolution) -> float:
    """Infimum of ``area / volume`` over the level sets of a radial torsion function.

    The level sets are the balls ``B(x0, s)`` with ``0 < s <= r0``.
    """
    m = sol.manifold
    s = sol.grid[1:]

    def ratio(x):
        return m.ball_boundary_area(x) / m.ball_volume(x)

    return _refine_min(ratio, s, ratio(s))[0]


# -- sharpness -----------------------------------------------------------------
@dataclass(frozen=True)
class SharpnessReport:
    n: int
    epsilon: float
    delta: float
    R: float
    r: float
    beta: float
    lam: float
    eta: float
    H_rad: float
    E: float
    paper_lower_bound: float  # (1 - eps) / ((n-1) delta)^2
    product: float  # E * H_rad^2
    product_delta: float  # E * ((n-1) delta)^2
    ok: bool
    B_bound: float | None = None  # (1-eps)(1-B sqrt eps)^2 / H_rad^2 when B is supplied


def locate_r(family: CheegerFamily, beta: float) -> float:
    """``r`` in ``[0, R/2]`` with ``Vol(Omega_r) / Vol(M) = beta``."""
    v = lambda r: float(family.relative_volume(r)) - beta  # noqa: E731
    lo, hi = 0.0, 0.5 * family.R
    if abs(v(lo)) <= 1e-14:
        return 0.0
    if v(lo) < 0 or v(hi) > 0:
        raise RuntimeError(f"relative volume {beta} not bracketed on [0, R/2]; profile is inconsistent")
    return brentq(v, lo, hi, xtol=1e-13)


def sharpness_experiment(
    n: int, epsilon: float, delta: float, beta: float,
    R: float | None = None, N: int = DEFAULT_N, B: float | None = None,
) -> SharpnessReport:
    """Rigidity of the domain of relative volume ``beta`` in the sharpness family."""
    if not epsilon / 4.0 <= beta <= 0.5:
        raise ValueError("beta must lie in [eps/4, 1/2]")
    fam = build_family(n, epsilon, delta, R)
    r = locate_r(fam, beta)
    E = solve_radial_ball(fam.manifold, fam.ball_radius(r), N).rigidity
    H, _ = h_rad(fam)
    k = (n - 1) * delta
    bound = (1.0 - epsilon) / k**2
    b_bound = None if B is None else (1 - epsilon) * (1 - B * math.sqrt(epsilon)) ** 2 / H**2
    return SharpnessReport(
        n, epsilon, delta, fam.R, r, float(fam.relative_volume(r)), fam.lam, fam.eta,
        H, E, bound, E * H * H, E * k * k, bool(E >= bound), b_bound,
    )


@dataclass(frozen=True)
class TrialFunctionBound:
    value: float  # (2 int u - int |grad u|^2) / Vol
    mean: float  # (1/Vol) int u
    exact: float  # rigidity of Omega_r
    displayed: float  # (1 - 2 (1+x) e^-x) / ((n-1) delta)^2
    displayed_mean: float  # (1 - (1+x) e^-x) / ((n-1) delta)^2
    ok: bool


def paper_test_function_bound(family: CheegerFamily, r: float, N: int = DEFAULT_N) -> TrialFunctionBound:
    """Energy functional of the piecewise-linear test function on ``Omega_r``.

    ``u = (t - r) / ((n-1) delta)`` on ``[r, R]`` and constant on the cap.
    ``ok`` records that it does not exceed the exact rigidity and does not
    fall below the closed-form lower bound.
    """
    if not 0.0 <= r <= family.R:
        raise ValueError("r must lie in [0, R]")
    k = (family.n - 1) * family.delta
    L, eta = family.half_length, family.eta
    sol = solve_radial_ball(family.manifold, family.ball_radius(r), N)

    def u(s):  # s = L - t
        return np.where(s <= eta, (family.R - r) / k, (L - s - r) / k)

    def du(s):
        return np.where(s <= eta, 0.0, -1.0 / k)

    value = energy_functional(sol, u, du)
    x, _, _, dv = sol.samples
    mean = float(np.sum(u(x) * dv) / sol.volume)
    z = k * (family.R - r)
    displayed = (1.0 - 2.0 * (1.0 + z) * math.exp(-z)) / k**2
    displayed_mean = (1.0 - (1.0 + z) * math.exp(-z)) / k**2
    exact = sol.rigidity
    ok = value <= exact * (1 + 1e-10) + 1e-14 and value >= displayed - 1e-6 and mean >= displayed_mean - 1e-6
    return TrialFunctionBound(value, mean, exact, displayed, displayed_mean, bool(ok))


# -- proof chain ---------------------------------------------------------------
@dataclass(frozen=True)
class ChainReport:
    volume: float
    E: float
    H_omega: float
    integral_f: float  # Vol * E
    coarea_bound: float  # (1/H) int |grad f|
    cauchy_schwarz_bound: float  # (1/H) sqrt(Vol) sqrt(int |grad f|^2)
    product: float  # E * H_omega^2
    ok: bool
    product_rad: float | None = None  # E * H_rad^2, observational


def cheeger_chain_check(sol: RadialTorsionSolution, with_h_rad: bool = True, rtol: float = 1e-10) -> ChainReport:
    """Evaluate each inequality in the chain ``Vol E <= (1/H) int|grad f| <= ... `` for a radial solve."""
    m = sol.manifold
    if not m.two_poles:
        raise ValueError("the chain check needs a compact manifold with two poles")
    if sol.volume > 0.5 * m.total_volume * (1 + 1e-12):
        raise ValueError("domain holds more than half the volume")
    H = h_omega(sol)
    _, _, gx, dv = sol.samples
    grad_l1 = float(np.sum(gx * dv))
    lhs = sol.integral_f
    coarea = grad_l1 / H
    cs = math.sqrt(sol.volume * sol.energy) / H
    product = sol.rigidity * H * H
    ok = lhs <= coarea * (1 + rtol) and coarea <= cs * (1 + rtol) and product <= 1.0 + 1e-6
    prod_rad = None
    if with_h_rad:
        hr, _ = h_rad(m)
        prod_rad = sol.rigidity * hr * hr
    return ChainReport(sol.volume, sol.rigidity, H, lhs, coarea, cs, product, bool(ok), prod_rad)
