"""Exact torsion function of geodesic balls about a pole.

For ``B(x0, r0)`` the torsion problem ``-div grad f = 1``, ``f = 0`` on the
boundary reduces to ``f'(t) = -V(t) / theta(t)`` with ``V(t) = int_0^t theta``,
hence ``f(t) = int_t^{r0} V(s) / theta(s) ds``. Both integrals are evaluated
by composite Gauss-Legendre quadrature, the inner one through the manifold's
cumulative volume table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._quad import INNER_ORDER, gl_integrate, gl_nodes, segmented_grid
from .manifold import RevolutionManifold

DEFAULT_N = 4096


@dataclass(frozen=True)
class RadialTorsionSolution:
    """Torsion function of ``B(x0, r0)`` on ``manifold`` with its integrals.

    ``f`` holds nodal values on ``grid``; ``integral_f`` is ``int f dv`` and
    ``energy`` is ``int |grad f|^2 dv``, computed along independent routes so
    that their agreement is a genuine check.
    """

    manifold: RevolutionManifold
    r0: float
    grid: np.ndarray
    f: np.ndarray
    volume: float
    integral_f: float
    energy: float
    center: str = "x0"
    _quad: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def rigidity(self) -> float:
        return (2.0 * self.integral_f - self.energy) / self.volume

    @property
    def mean_value(self) -> float:
        return self.integral_f / self.volume

    @property
    def identity_defect(self) -> float:
        return abs(self.integral_f - self.energy) / self.integral_f

    @property
    def sup(self) -> float:
        return float(self.f[0])

    # -- pointwise evaluation ----------------------------------------------
    def _slope(self, s):
        m = self.manifold
        return m._reduced_volume(s) / m.density(s)

    def derivative(self, s):
        """``f'(s) = -V(s) / theta(s)``; zero at the pole."""
        s = np.asarray(s, dtype=float)
        safe = np.where(s > 0, s, 1.0)
        return np.where(s > 0, -self._slope(safe), 0.0)

    def value(self, s):
        """Torsion function at arbitrary radii in ``[0, r0]``."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.r0)
        k = np.clip(np.searchsorted(self.grid, s, side="right") - 1, 0, len(self.grid) - 2)
        return self.f[k + 1] + gl_integrate(self._slope, s, self.grid[k + 1])

    # -- quadrature samples ------------------------------------------------
    @cached_property
    def samples(self):
        """``(x, f, |f'|, dv)`` at every quadrature node, flattened."""
        q = self._quad
        return q["x"].ravel(), q["fx"].ravel(), q["gx"].ravel(), q["dv"].ravel()

    @property
    def max_gradient(self) -> float:
        return float(np.max(self.samples[2]))


def _radial_grid(m: RevolutionManifold, r0: float, N: int) -> np.ndarray:
    inner = [t for t in m.breakpoints if 0.0 < t < r0]
    return segmented_grid([0.0, *inner, r0], N)


def solve_radial_ball(m: RevolutionManifold, r0: float, N: int = DEFAULT_N) -> RadialTorsionSolution:
    """Torsion function and rigidity of the geodesic ball ``B(x0, r0)``."""
    if not 0.0 < r0 < m.t_max:
        raise ValueError(f"r0={r0} outside (0, {m.t_max}); the complement must have interior")
    if N < 64:
        raise ValueError("N must be at least 64")
    grid = _radial_grid(m, r0, N)
    a, b = grid[:-1], grid[1:]
    slope = lambda s: m._reduced_volume(s) / m.density(s)  # noqa: E731

    cell = gl_integrate(slope, a, b)
    f = np.concatenate([np.cumsum(cell[::-1])[::-1], [0.0]])

    x, w = gl_nodes(a, b)
    bk = np.broadcast_to(b[:, None], x.shape)
    fx = f[1:, None] + gl_integrate(slope, x, bk, INNER_ORDER)
    theta = m.density(x)
    Vx = m._reduced_volume(x)
    gx = Vx / theta
    dv = m.omega * w * theta

    integral_f = float(np.sum(fx * dv))
    # energy via V^2 / theta, an integrand that never touches f itself
    energy = float(m.omega * np.sum(w * Vx * Vx / theta))
    volume = m.ball_volume(r0)
    return RadialTorsionSolution(
        manifold=m, r0=float(r0), grid=grid, f=f, volume=volume,
        integral_f=integral_f, energy=energy,
        _quad={"x": x, "w": w, "fx": fx, "gx": gx, "dv": dv},
    )


def solve_radial_cap_at_far_pole(m: RevolutionManifold, r: float, N: int = DEFAULT_N) -> RadialTorsionSolution:
    """Torsion data of the cap ``{t >= r}`` around the far pole ``x1``.

    Reduced to :func:`solve_radial_ball` on the manifold re-coordinatized from
    ``x1``; the returned solution lives in those reflected coordinates.
    """
    if not m.two_poles:
        raise ValueError("manifold lacks a second pole")
    if not 0.0 < r < m.t_max:
        raise ValueError(f"inner coordinate r={r} outside (0, {m.t_max})")
    sol = solve_radial_ball(m.reflected(), m.t_max - r, N)
    object.__setattr__(sol, "center", "x1")
    return sol


def rigidity_scaled(m: RevolutionManifold, r0: float, lam: float, N: int = DEFAULT_N) -> tuple[float, float]:
    """Rigidity of ``B(x0, r0)`` under ``g`` and under ``lam^2 g``.

    Under ``lam^2 g`` the same point set is the ball of radius ``lam * r0``.
    """
    scaled = m.scaled(lam)
    if lam * r0 >= scaled.t_max:
        raise ValueError("scaled radius exceeds the scaled truncation")
    return solve_radial_ball(m, r0, N).rigidity, solve_radial_ball(scaled, lam * r0, N).rigidity


def energy_functional(sol: RadialTorsionSolution, u, du) -> float:
    """``(2 int u - int |u'|^2) / Vol`` for a radial test function.

    ``u`` and ``du`` are callables of the radial coordinate; integration uses
    the solution's quadrature nodes.
    """
    x, _, _, dv = sol.samples
    return float((2.0 * np.sum(u(x) * dv) - np.sum(du(x) ** 2 * dv)) / sol.volume)


def maximality_check(sol: RadialTorsionSolution, trials: int = 100, seed: int = 0, modes: int = 6) -> bool:
    """Random admissible perturbations never increase the energy functional.

    Perturbations are cosine series ``sum a_k cos((2k-1) pi t / (2 r0))``,
    which vanish at ``r0`` and are smooth through the pole. Draws come from
    numpy's PCG64 generator.
    """
    rng = np.random.default_rng(seed)
    x, fx, gx, dv = sol.samples
    fprime = -gx
    base = float((2.0 * np.sum(fx * dv) - np.sum(fprime**2 * dv)) / sol.volume)
    k = np.arange(1, modes + 1)
    freq = (2 * k - 1) * math.pi / (2.0 * sol.r0)
    ok = True
    for _ in range(trials):
        coef = rng.normal(size=modes) * sol.sup * rng.uniform(0.01, 1.0)
        phi = np.cos(np.outer(x, freq)) @ coef
        dphi = -(np.sin(np.outer(x, freq)) * freq) @ coef
        u, du = fx + phi, fprime + dphi
        value = float((2.0 * np.sum(u * dv) - np.sum(du**2 * dv)) / sol.volume)
        ok &= value <= base + 1e-9
    return bool(ok)


def euclidean_ball_rigidity(n: int, r0: float) -> float:
    """Closed form ``r0^2 / (n (n + 2))`` for the flat ball."""
    return r0 * r0 / (n * (n + 2))
