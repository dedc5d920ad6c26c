"""Radial rearrangement of torsion fields onto a model manifold.

A nonnegative field ``f`` on ``Omega`` is summarized by its distribution
function ``A(t) = Vol{f > t}`` on a uniform ladder of levels. Each level set
volume, divided by ``alpha``, is realized by a centred ball of radius ``R(t)``
on the model, and the rearranged profile is ``fbar(r) = inf{t : R(t) <= r}``.

Two interpolations of ``fbar`` are used. The step function is the literal
inf-formula and serves every measure statement; the monotone piecewise-linear
curve through the points ``(R_j, t_j)`` serves statements that need a
derivative (energies) and the ``L^p`` means, where the step's one-level bias
would otherwise dominate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._quad import gl_nodes
from .fem import ScalarField
from .manifold import RevolutionManifold
from .radial import RadialTorsionSolution

DEFAULT_LEVELS = 1024
MIN_RADIAL_POINTS = 512


def alpha(M, M_star) -> float:
    """Volume ratio ``alpha(M, M*)``: 1 when both volumes are infinite.

    Arguments are manifolds or plain total volumes. A finite volume paired
    with an infinite one is rejected: no comparison bound can be expected
    between such spaces.
    """
    v = M.total_volume if isinstance(M, RevolutionManifold) else float(M)
    w = M_star.total_volume if isinstance(M_star, RevolutionManifold) else float(M_star)
    if math.isinf(v) and math.isinf(w):
        return 1.0
    if math.isinf(v) or math.isinf(w):
        raise ValueError("one volume is finite and the other infinite; no comparison is possible")
    if v <= 0 or w <= 0:
        raise ValueError("volumes must be positive")
    return float(v / w)


# -- field adapters ------------------------------------------------------------
@dataclass(frozen=True)
class _Samples:
    values: np.ndarray
    weights: np.ndarray
    volume: float
    sup: float
    energy: float
    max_gradient: float
    radial: RadialTorsionSolution | None = None
    spread: np.ndarray | None = None  # half-width of the value range over each node's cell


def radial_level_radius(sol: RadialTorsionSolution, t) -> np.ndarray:
    """Radius ``rho`` with ``f(rho) = t`` for a radial torsion solution.

    A grid lookup brackets each root, then safeguarded Newton steps polish it.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    g, f = sol.grid, sol.f
    k = np.clip(np.searchsorted(-f, -t, side="left") - 1, 0, len(g) - 2)
    lo, hi = g[k].copy(), g[k + 1].copy()
    rho = np.interp(-t, -f, g)
    for _ in range(60):
        res = sol.value(rho) - t
        if np.all(np.abs(res) <= 4 * np.finfo(float).eps * np.maximum(np.abs(t), sol.sup * 1e-3)):
            break
        lo = np.where(res > 0, rho, lo)
        hi = np.where(res > 0, hi, rho)
        d = sol.derivative(rho)
        step = np.where(d < 0, rho - res / np.where(d < 0, d, -1.0), 0.5 * (lo + hi))
        rho = np.where((step >= lo) & (step <= hi), step, 0.5 * (lo + hi))
    rho = np.where(t >= sol.sup, 0.0, rho)
    return np.where(t <= 0.0, sol.r0, rho)


def _cell_spread(field_: ScalarField) -> np.ndarray:
    """Half-width of a uniform law with the variance of ``f`` over each node's dual cell.

    With ``f`` linear on the cell its values are a sum of two independent
    uniforms of half-widths ``|f_t| dt / 2`` and ``|f_theta| dtheta / 2``.
    """
    mesh, f, inside = field_.mesh, field_.values, field_.mask.inside
    h = np.hypot(_inner_difference(f, inside, 0), _inner_difference(f, inside, 1))
    return 0.5 * h[inside]


def _inner_difference(f, inside, axis):
    """Mean of the one-sided value differences to neighbours that lie inside the domain.

    Outside values are not extensions of ``f``, so they would understate
    the slope at boundary nodes.
    """
    total = np.zeros_like(f)
    count = np.zeros_like(f)
    for shift in (1, -1):
        if axis == 1:
            g, ok = np.roll(f, shift, axis=1), np.roll(inside, shift, axis=1)
        else:
            g, ok = np.zeros_like(f), np.zeros_like(inside)
            src, dst = (slice(None, -1), slice(1, None)) if shift == 1 else (slice(1, None), slice(None, -1))
            g[dst], ok[dst] = f[src], inside[src]
        total += np.where(ok, np.abs(f - g), 0.0)
        count += ok
    return total / np.maximum(count, 1)


def _smeared_tail(values, weights, spread, levels, sup):
    """``sum_i w_i P(X_i > t)`` with ``X_i`` uniform on ``[v_i - h_i, v_i + h_i]`` clipped to ``[0, sup]``."""
    lo = np.maximum(values - spread, 0.0)
    hi = np.minimum(values + spread, sup)
    flat = hi - lo <= 1e-14 * sup
    A = np.zeros_like(levels)
    if flat.any():
        vs = np.sort(values[flat])
        order = np.argsort(values[flat], kind="stable")
        tail = np.concatenate([np.cumsum(weights[flat][order][::-1])[::-1], [0.0]])
        A += tail[np.searchsorted(vs, levels, side="right")]
    w, lo, hi = weights[~flat], lo[~flat], hi[~flat]
    c = w / (hi - lo)
    A += w.sum()
    for x, sign in ((lo, -1.0), (hi, 1.0)):
        order = np.argsort(x)
        xs, cs = x[order], c[order]
        C = np.concatenate([[0.0], np.cumsum(cs)])
        CX = np.concatenate([[0.0], np.cumsum(cs * xs)])
        k = np.searchsorted(xs, levels, side="left")
        A += sign * (levels * C[k] - CX[k])
    return np.clip(A, 0.0, weights.sum())


def _samples(field_) -> _Samples:
    if isinstance(field_, RadialTorsionSolution):
        _, fx, gx, dv = field_.samples
        return _Samples(fx, dv, field_.volume, field_.sup, field_.energy, float(gx.max()), field_)
    if isinstance(field_, ScalarField):
        v = np.maximum(field_.inside_values, 0.0)
        w = field_.inside_weights
        grad = field_.gradient_norms()[field_.mask.inside]
        return _Samples(
            v, w, float(w.sum()), float(v.max()), field_.dirichlet_energy(), float(grad.max()),
            spread=_cell_spread(field_),
        )
    raise TypeError(f"unsupported field type {type(field_).__name__}")


# -- distribution function -----------------------------------------------------
@dataclass(frozen=True)
class DistributionData:
    levels: np.ndarray  # t_0 = 0 < ... < t_J = sup f
    A: np.ndarray  # Vol{f > t_j}
    volume: float  # Vol(Omega) in the units of A
    R: np.ndarray | None = None
    alpha: float | None = None

    @property
    def sup(self) -> float:
        return float(self.levels[-1])

    @property
    def J(self) -> int:
        return len(self.levels) - 1

    def rows(self):
        """``(t_j, A_j, R_j)`` triples for CSV export."""
        R = self.R if self.R is not None else np.full_like(self.A, np.nan)
        return zip(self.levels.tolist(), self.A.tolist(), R.tolist())


def distribution_function(field_, J: int = DEFAULT_LEVELS, smooth: bool = False) -> DistributionData:
    """``A(t_j) = Vol{f > t_j}`` on ``J`` uniform levels in ``[0, sup f]``.

    Grid fields sum node weights; radial solutions use the exact ball volume
    at the inverted level radius. With ``smooth`` a grid node's weight is
    spread uniformly over the values ``f`` takes on its cell, which removes
    the cell-scale staircase from ``A`` (it matters once level spacing drops
    below the value jump between neighbouring nodes).
    """
    if J < 1:
        raise ValueError("need at least one level")
    s = _samples(field_)
    if not s.sup > 0:
        raise ValueError("field vanishes identically")
    levels = s.sup * np.arange(J + 1) / J
    levels[-1] = s.sup
    if s.radial is not None:
        m = s.radial.manifold
        A = m.ball_volume(radial_level_radius(s.radial, levels))
        A[0] = s.volume
        A[-1] = 0.0
        return DistributionData(levels, np.minimum.accumulate(A), s.volume)
    if smooth and s.spread is not None:
        A = _smeared_tail(s.values, s.weights, s.spread, levels, s.sup)
        A[0], A[-1] = s.volume, 0.0
        return DistributionData(levels, np.minimum.accumulate(A), s.volume)
    order = np.argsort(s.values, kind="stable")
    vs = s.values[order]
    tail = np.concatenate([np.cumsum(s.weights[order][::-1])[::-1], [0.0]])
    A = tail[np.searchsorted(vs, levels, side="right")]
    return DistributionData(levels, A, s.volume)


# -- rearranged field ----------------------------------------------------------
@dataclass(frozen=True)
class SymmetrizedField:
    """Radial rearrangement ``f* = fbar(rho)`` on ``model`` centred at its pole."""

    model: RevolutionManifold
    distribution: DistributionData
    rho: np.ndarray
    values: np.ndarray  # step fbar on rho
    center: str = "x*"

    @property
    def levels(self) -> np.ndarray:
        return self.distribution.levels

    @property
    def radii(self) -> np.ndarray:
        return self.distribution.R

    @property
    def alpha(self) -> float:
        return self.distribution.alpha

    @property
    def support_radius(self) -> float:
        return float(self.radii[0])

    @property
    def volume(self) -> float:
        return float(self.model.ball_volume(self.support_radius))

    def step(self, r) -> np.ndarray:
        """Inf-formula ``fbar(r) = min{t_j : R_j <= r}`` (right-continuous steps)."""
        r = np.asarray(r, dtype=float)
        j = np.searchsorted(-self.radii, -r, side="left")
        return self.levels[np.minimum(j, len(self.levels) - 1)]

    @cached_property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Knots ``(R, t)`` of the monotone linear interpolant, increasing in ``R``.

        Runs of equal radius collapse to their smallest level, which is the
        value the inf-formula assigns at that radius.
        """
        R, t = self.radii[::-1], self.levels[::-1]
        keep = np.concatenate([[True], np.diff(R) > 0])
        # within a run of equal radii (ordered by decreasing t) keep the last entry
        last = np.concatenate([keep[1:], [True]])
        return R[last], t[last]

    def linear(self, r) -> np.ndarray:
        R, t = self.nodes
        return np.interp(np.asarray(r, dtype=float), R, t, right=0.0)

    def slopes(self) -> np.ndarray:
        R, t = self.nodes
        return -np.diff(t) / np.diff(R)

    def _segments(self):
        R, t = self.nodes
        return R[:-1], R[1:]

    def lp_mean(self, p: float) -> float:
        """``(1/Vol*) int (f*)^p`` with the linear profile, by radial quadrature."""
        a, b = self._segments()
        x, w = gl_nodes(a, b)
        m = self.model
        total = m.omega * np.sum(w * self.linear(x) ** p * m.density(x))
        return float(total / self.volume)

    def energy_mean(self) -> float:
        """``(1/Vol*) int |grad f*|^2`` for the linear profile (exact per segment)."""
        R, _ = self.nodes
        dV = np.diff(self.model.ball_volume(R))
        return float(np.sum(self.slopes() ** 2 * dV) / self.volume)

    def rows(self):
        """``(rho, fbar)`` pairs for CSV export."""
        return zip(self.rho.tolist(), self.values.tolist())


def symmetrize(field_, model: RevolutionManifold, alpha_: float = 1.0, J: int = DEFAULT_LEVELS,
               points: int = MIN_RADIAL_POINTS) -> SymmetrizedField:
    """Rearrange ``field_`` onto ``model`` with volume ratio ``alpha_``."""
    if points < MIN_RADIAL_POINTS:
        raise ValueError(f"radial grid needs at least {MIN_RADIAL_POINTS} points")
    dist = field_ if isinstance(field_, DistributionData) else distribution_function(field_, J, smooth=True)
    target = dist.A / alpha_
    cap = model.total_volume if model.compact else model.table_volume
    if target[0] > cap * (1 + 1e-12):
        raise ValueError(f"alpha^-1 Vol(Omega) = {target[0]:.6g} exceeds the model volume {cap:.6g}")
    R = np.asarray(model.radius_for_volume(np.minimum(target, cap)), dtype=float)
    R = np.minimum.accumulate(R)
    R[-1] = 0.0
    dist = DistributionData(dist.levels, dist.A, dist.volume, R, alpha_)
    rho = np.linspace(0.0, R[0], points)
    sym = SymmetrizedField(model, dist, rho, np.empty(0))
    object.__setattr__(sym, "values", sym.step(rho))
    return sym


# -- checks --------------------------------------------------------------------
def check_lp_equality(field_, sym: SymmetrizedField, p: float) -> float:
    """Relative defect between the ``L^p`` means of ``f`` and ``f*``."""
    if not 1.0 <= p < math.inf:
        raise ValueError("p must lie in [1, inf)")
    s = _samples(field_)
    lhs = float(np.sum(s.values**p * s.weights) / s.volume)
    rhs = sym.lp_mean(p)
    return abs(lhs - rhs) / lhs


@dataclass(frozen=True)
class EnergyCheck:
    lhs: float
    rhs: float
    margin: float
    ok: bool


def check_energy_decrease(field_, sym: SymmetrizedField, slack: float = 0.02) -> EnergyCheck:
    """Normalized Dirichlet energies of ``f`` and of its rearrangement.

    ``ok`` records ``lhs >= rhs - slack * lhs``.
    """
    s = _samples(field_)
    lhs = s.energy / s.volume
    rhs = sym.energy_mean()
    return EnergyCheck(lhs, rhs, lhs - rhs, bool(lhs >= rhs - slack * lhs))


def equimeasurability_defect(sym: SymmetrizedField) -> float:
    """Worst ``|Vol*{f* > t_j} - A_j / alpha|`` in units of the local radial cell volume.

    ``{f* > t_j}`` is measured on the radial grid, so values up to 1 are the
    resolution limit.
    """
    m, rho, vals = sym.model, sym.rho, sym.values
    V = m.ball_volume(rho)
    cells = np.diff(V)
    worst = 0.0
    for j, t in enumerate(sym.levels[:-1]):
        k = int(np.searchsorted(-vals, -t, side="left"))  # first grid point with fbar <= t
        measured = V[min(k, len(V) - 1)]
        cell = cells[min(max(k - 1, 0), len(cells) - 1)]
        worst = max(worst, abs(measured - sym.distribution.A[j] / sym.alpha) / cell)
    return worst


def lipschitz_ratio(field_, sym: SymmetrizedField) -> float:
    """Largest slope of the rearranged profile over the largest ``|grad f|`` of the source."""
    return float(sym.slopes().max() / _samples(field_).max_gradient)


@dataclass(frozen=True)
class LayerCake:
    integral_f: float
    integral_A: float
    lower: float  # sum t_i (A_i - A_{i+1})
    upper: float  # sum t_{i+1} (A_i - A_{i+1})
    ok: bool

    @property
    def defect(self) -> float:
        return abs(self.integral_f - self.integral_A) / self.integral_f


def layer_cake(field_, J: int = DEFAULT_LEVELS, rtol: float = 1e-12) -> LayerCake:
    """``int f`` against ``int_0^sup A(t) dt`` with the lower and upper Riemann sums.

    ``ok`` records the sandwich ``S- <= int f <= S+`` and the gap bound
    ``S+ - S- <= (sup f / J) A(0)``, both up to rounding (``rtol``).
    """
    s = _samples(field_)
    dist = distribution_function(field_, J)
    t, A = dist.levels, dist.A
    if s.radial is not None:
        integral = s.radial.integral_f
    else:
        integral = float(np.sum(s.values * s.weights))
    dA = A[:-1] - A[1:]
    lower = float(np.sum(t[:-1] * dA))
    upper = float(np.sum(t[1:] * dA))
    trap = float(np.sum(0.5 * (A[:-1] + A[1:]) * np.diff(t)))
    slack = rtol * abs(integral)
    ok = lower - slack <= integral <= upper + slack and upper - lower <= s.sup / J * A[0] + slack
    return LayerCake(integral, trap, lower, upper, bool(ok))


@dataclass(frozen=True)
class CoareaCheck:
    lhs: float
    rhs: float
    defect: float


def coarea_check(field_, phi, cells: int = 256) -> CoareaCheck:
    """Coarea formula for a radial solution and a radial weight ``phi(t)``.

    The left side integrates ``phi |f'|`` over the ball; the right side
    integrates the level-sphere measure ``omega theta(rho(s)) phi(rho(s))``
    over level values ``s``, with ``rho(s)`` obtained by inverting ``f``.
    """
    if not isinstance(field_, RadialTorsionSolution):
        raise TypeError("coarea check needs a radial solution: grid level sets have no exact measure")
    m = field_.manifold
    x, _, gx, dv = field_.samples
    lhs = float(np.sum(phi(x) * gx * dv))
    # s = sup (1 - u^2) removes the square-root behaviour of rho(s) at the maximum
    edges = np.linspace(0.0, 1.0, cells + 1)
    u, w = gl_nodes(edges[:-1], edges[1:])
    s = field_.sup * (1.0 - u * u)
    rho = radial_level_radius(field_, s.ravel()).reshape(s.shape)
    rhs = float(np.sum(2.0 * field_.sup * u * w * m.omega * m.density(rho) * phi(rho)))
    scale = max(abs(lhs), abs(rhs))
    return CoareaCheck(lhs, rhs, abs(lhs - rhs) / scale if scale > 0 else 0.0)


def sup_difference(a: SymmetrizedField, b: SymmetrizedField) -> float:
    """Sup-norm distance of two rearranged step profiles on the finer radial grid."""
    r = a.rho if len(a.rho) >= len(b.rho) else b.rho
    return float(np.max(np.abs(a.step(r) - b.step(r))))


def radial_field_of(sym: SymmetrizedField, N: int = 4096) -> RadialTorsionSolution:
    """Wrap the linear rearranged profile as a radial sample set for re-symmetrization."""
    m, r0 = sym.model, sym.support_radius
    grid = np.linspace(0.0, r0, N + 1)
    x, w = gl_nodes(grid[:-1], grid[1:])
    fx = sym.linear(x)
    dv = m.omega * w * m.density(x)
    R, t = sym.nodes
    seg = np.clip(np.searchsorted(R, x, side="right") - 1, 0, len(R) - 2)
    gx = sym.slopes()[seg]
    energy = float(np.sum(gx**2 * dv))
    return _ProfileSolution(
        manifold=m, r0=r0, grid=grid, f=sym.linear(grid), volume=sym.volume,
        integral_f=float(np.sum(fx * dv)), energy=energy,
        _quad={"x": x, "w": w, "fx": fx, "gx": gx, "dv": dv}, profile=sym,
    )


@dataclass(frozen=True)
class _ProfileSolution(RadialTorsionSolution):
    """A radial sample set whose values come from a rearranged profile, not a torsion solve."""

    profile: SymmetrizedField | None = None

    def value(self, s):
        return self.profile.linear(s)

    def derivative(self, s):
        R, _ = self.profile.nodes
        s = np.asarray(s, dtype=float)
        seg = np.clip(np.searchsorted(R, s, side="right") - 1, 0, len(R) - 2)
        return np.where(s < R[-1], -self.profile.slopes()[seg], 0.0)

