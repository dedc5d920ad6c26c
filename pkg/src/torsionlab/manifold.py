"""Manifolds of revolution ``dt^2 + b(t)^2 g_{S^{n-1}}`` and their ball geometry.

A manifold is described by its profile ``b`` on ``[0, t_max]``; ``t`` is the
geodesic distance from the pole ``x0`` at ``t = 0``. When ``b(t_max) = 0`` the
manifold is compact with a second pole ``x1`` at ``t = t_max``. Infinite
profiles (plane, hyperbolic plane, paraboloid, ...) are truncated at a finite
``t_max``; every domain used with them must lie strictly inside.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.special import gamma

from ._quad import INNER_ORDER, gl_integrate, segmented_grid

Q_TOL = 1e-10
R_TOL = 1e-12
POLE_TOL = 1e-6
TABLE_CELLS = 8192
DEFAULT_TRUNCATION = 10.0

Profile = Callable[[np.ndarray], np.ndarray]

CATALOG = (
    "euclidean",
    "sphere",
    "hyperbolic",
    "capped_cylinder",
    "paraboloid",
    "hyperboloid_sheet",
    "remark26_surface",
    "cubic_flare",
    "custom",
)


def sphere_measure(n: int) -> float:
    """Surface measure of the unit ``(n-1)``-sphere in ``R^n``."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


@dataclass(frozen=True)
class RevolutionManifold:
    """An ``n``-dimensional manifold of revolution around the pole ``x0``.

    ``breakpoints`` lists interior coordinates where the profile is not
    smooth (creases, curvature jumps). Quadrature tables split there and
    curvature evaluation refuses their neighbourhood.
    """

    n: int
    t_max: float
    b: Profile
    db: Profile | None = None
    d2b: Profile | None = None
    two_poles: bool = False
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    breakpoints: tuple[float, ...] = ()
    truncated: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ValueError("t_max must be positive and finite (truncate infinite profiles)")
        inner = [t for t in self.breakpoints if 0.0 < t < self.t_max]
        object.__setattr__(self, "breakpoints", tuple(sorted(set(inner))))

    # -- profile -----------------------------------------------------------
    @property
    def omega(self) -> float:
        return sphere_measure(self.n)

    @property
    def h_b(self) -> float:
        return 1e-5 * self.t_max

    @property
    def compact(self) -> bool:
        return self.two_poles

    def profile(self, t):
        return self.b(np.asarray(t, dtype=float))

    def profile_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.db is not None:
            return self.db(t)
        h = self.h_b
        return (self.b(t + h) - self.b(t - h)) / (2.0 * h)

    def profile_second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.d2b is not None:
            return self.d2b(t)
        h = self.h_b
        return (self.b(t + h) - 2.0 * self.b(t) + self.b(t - h)) / h**2

    def density(self, t):
        """Normal-coordinates volume density ``theta(t) = b(t)^(n-1)``."""
        return self.profile(t) ** (self.n - 1)

    # -- volume table ------------------------------------------------------
    @cached_property
    def _table(self):
        edges = segmented_grid([0.0, *self.breakpoints, self.t_max], TABLE_CELLS)
        cells = gl_integrate(self.density, edges[:-1], edges[1:])
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        return edges, cum

    def _reduced_volume(self, r):
        """``int_0^r theta`` for array ``r`` inside ``[0, t_max]``."""
        edges, cum = self._table
        r = np.asarray(r, dtype=float)
        k = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, len(edges) - 2)
        return cum[k] + gl_integrate(self.density, edges[k], r, INNER_ORDER)

    @property
    def total_volume(self) -> float:
        if not self.compact:
            return math.inf
        return self.omega * float(self._table[1][-1])

    @property
    def table_volume(self) -> float:
        """Volume of the (possibly truncated) coordinate range ``[0, t_max]``."""
        return self.omega * float(self._table[1][-1])

    def ball_volume(self, r):
        """Volume of the geodesic ball ``B(x0, r)``; accepts scalars or arrays."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0) or np.any(r_arr > self.t_max * (1 + 1e-14)):
            raise ValueError(f"radius outside [0, {self.t_max}]")
        out = self.omega * self._reduced_volume(np.minimum(r_arr, self.t_max))
        return float(out) if np.ndim(r) == 0 else out

    def ball_boundary_area(self, r):
        """Area of the geodesic sphere ``dB(x0, r)``: ``omega * b(r)^(n-1)``."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr <= 0) or np.any(r_arr >= self.t_max):
            raise ValueError(f"radius outside (0, {self.t_max})")
        out = self.omega * self.density(r_arr)
        return float(out) if np.ndim(r) == 0 else out

    def radius_for_volume(self, v, r_tol: float = R_TOL):
        """Invert :meth:`ball_volume` by bracketed bisection.

        The table supplies the bracketing cell; bisection inside it runs until
        the bracket is narrower than ``r_tol``.
        """
        v_arr = np.atleast_1d(np.asarray(v, dtype=float))
        top = self.table_volume
        if np.any(v_arr < 0) or np.any(v_arr > top * (1 + 1e-13)):
            raise ValueError(f"volume outside [0, {top}]")
        edges, cum = self._table
        u = v_arr / self.omega
        k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(edges) - 2)
        lo = edges[k].copy()
        hi = edges[k + 1].copy()
        base = cum[k]
        while np.max(hi - lo) > r_tol:
            mid = 0.5 * (lo + hi)
            below = base + gl_integrate(self.density, edges[k], mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= np.spacing(hi) * 4):
                break
        out = 0.5 * (lo + hi)
        out[v_arr == 0] = 0.0
        return float(out[0]) if np.ndim(v) == 0 else out

    # -- transformations ---------------------------------------------------
    def scaled(self, lam: float) -> "RevolutionManifold":
        """The same manifold with metric ``lam^2 g`` (profile ``lam * b(t / lam)``)."""
        if lam <= 0:
            raise ValueError("scale must be positive")
        b, db, d2b = self.b, self.db, self.d2b
        return RevolutionManifold(
            n=self.n,
            t_max=lam * self.t_max,
            b=lambda t: lam * b(t / lam),
            db=None if db is None else (lambda t: db(t / lam)),
            d2b=None if d2b is None else (lambda t: d2b(t / lam) / lam),
            two_poles=self.two_poles,
            kind=self.kind,
            params={**self.params, "scale": lam * self.params.get("scale", 1.0)},
            breakpoints=tuple(lam * t for t in self.breakpoints),
            truncated=self.truncated,
        )

    def reflected(self) -> "RevolutionManifold":
        """Re-coordinatize a two-pole manifold from its far pole ``x1``."""
        if not self.two_poles:
            raise ValueError("manifold has no second pole to reflect about")
        L, b, db, d2b = self.t_max, self.b, self.db, self.d2b
        return RevolutionManifold(
            n=self.n,
            t_max=L,
            b=lambda t: b(L - t),
            db=None if db is None else (lambda t: -db(L - t)),
            d2b=None if d2b is None else (lambda t: d2b(L - t)),
            two_poles=True,
            kind=self.kind,
            params={**self.params, "reflected": not self.params.get("reflected", False)},
            breakpoints=tuple(L - t for t in self.breakpoints),
            truncated=self.truncated,
        )

    def describe(self) -> str:
        extra = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}(n={self.n}{',' if extra else ''}{extra})"


def validate(m: RevolutionManifold, samples: int = 2001) -> RevolutionManifold:
    """Check profile positivity and pole regularity.

    A non-positive interior value is fatal. Pole slope mismatch only warns,
    since cusped profiles are legitimate inputs.
    """
    t = np.linspace(0.0, m.t_max, samples)[1:-1]
    if np.any(~np.isfinite(m.profile(t))) or np.any(m.profile(t) <= 0):
        raise ValueError(f"profile of {m.kind} is not positive on (0, t_max)")
    if abs(float(m.profile(0.0))) > POLE_TOL:
        raise ValueError(f"profile of {m.kind} does not vanish at the pole")
    slope0 = float(m.profile_derivative(np.array(0.0))) if m.db is not None else (
        float(m.profile(m.h_b)) / m.h_b
    )
    if abs(slope0 - 1.0) > POLE_TOL:
        warnings.warn(f"{m.kind}: b'(0) = {slope0:.8g}, pole is not smooth", stacklevel=2)
    if m.two_poles:
        if abs(float(m.profile(m.t_max))) > POLE_TOL:
            raise ValueError(f"{m.kind}: two_poles but b(t_max) != 0")
        slope1 = float(m.profile_derivative(np.array(m.t_max))) if m.db is not None else (
            -float(m.profile(m.t_max - m.h_b)) / m.h_b
        )
        if abs(slope1 + 1.0) > POLE_TOL:
            warnings.warn(f"{m.kind}: b'(t_max) = {slope1:.8g}, far pole is not smooth", stacklevel=2)
    return m


# -- catalog -----------------------------------------------------------------
def _curve_profile(h1, h2, t_max: float, samples: int = 40001):
    """Arclength profile of the meridian ``z = h(rho)`` of a surface of revolution.

    Returns ``(b, db, d2b)`` with ``b(t) = rho(t)``. The inversion
    ``t -> rho`` is a cubic Hermite interpolant with exact nodal slopes.
    """
    speed = lambda rho: np.sqrt(1.0 + h1(rho) ** 2)  # noqa: E731
    rho_max = t_max  # arclength dominates rho, so rho(t_max) <= t_max
    rho = np.linspace(0.0, rho_max, samples)
    t = np.concatenate([[0.0], np.cumsum(gl_integrate(speed, rho[:-1], rho[1:]))])
    rho_of_t = CubicHermiteSpline(t, rho, 1.0 / speed(rho))

    def b(s):
        return rho_of_t(s)

    def db(s):
        return 1.0 / speed(rho_of_t(s))

    def d2b(s):
        r = rho_of_t(s)
        return -h1(r) * h2(r) / (1.0 + h1(r) ** 2) ** 2

    return b, db, d2b


def _read_profile_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header line
    arr = np.array(rows, dtype=float)
    return arr[:, 0], arr[:, 1]


def make_manifold(kind: str, n: int = 2, **params) -> RevolutionManifold:
    """Build a catalog manifold.

    Parameters by kind: ``sphere(radius)``, ``euclidean(t_max)``,
    ``hyperbolic(radius, t_max)``, ``capped_cylinder(length, caps)``,
    ``paraboloid(t_max)``, ``hyperboloid_sheet(t_max)``, ``remark26_surface(R)``,
    ``cubic_flare(c, t_max)`` and ``custom(t, b)`` or ``custom(path)``.
    """
    if kind not in CATALOG:
        raise ValueError(f"unknown manifold kind {kind!r}; expected one of {CATALOG}")
    trunc = float(params.get("t_max", DEFAULT_TRUNCATION))
    if kind == "euclidean":
        m = RevolutionManifold(
            n, trunc, lambda t: t.copy(), lambda t: np.ones_like(t), lambda t: np.zeros_like(t),
            kind=kind, params={"t_max": trunc}, truncated=True,
        )
    elif kind == "sphere":
        rho = float(params.get("radius", 1.0))
        m = RevolutionManifold(
            n, math.pi * rho,
            lambda t: rho * np.sin(t / rho),
            lambda t: np.cos(t / rho),
            lambda t: -np.sin(t / rho) / rho,
            two_poles=True, kind=kind, params={"radius": rho},
        )
    elif kind == "hyperbolic":
        rho = float(params.get("radius", 1.0))
        m = RevolutionManifold(
            n, trunc,
            lambda t: rho * np.sinh(t / rho),
            lambda t: np.cosh(t / rho),
            lambda t: np.sinh(t / rho) / rho,
            kind=kind, params={"radius": rho, "t_max": trunc}, truncated=True,
        )
    elif kind == "capped_cylinder":
        m = _capped_cylinder(n, float(params.get("length", 2.0)), int(params.get("caps", 2)), trunc)
    elif kind == "paraboloid":
        b, db, d2b = _curve_profile(lambda r: 2.0 * r, lambda r: 2.0 + 0.0 * r, trunc)
        m = RevolutionManifold(n, trunc, b, db, d2b, kind=kind, params={"t_max": trunc}, truncated=True)
    elif kind == "hyperboloid_sheet":
        b, db, d2b = _curve_profile(
            lambda r: r / np.sqrt(1.0 + r * r), lambda r: (1.0 + r * r) ** -1.5, trunc
        )
        m = RevolutionManifold(n, trunc, b, db, d2b, kind=kind, params={"t_max": trunc}, truncated=True)
    elif kind == "remark26_surface":
        R = float(params.get("R", 1.0))
        if not 0.0 < R < math.pi / 2:
            raise ValueError("remark26_surface needs R in (0, pi/2)")
        # meridian: unit-circle arc from the pole to the crease z = 0, then mirrored
        m = RevolutionManifold(
            n, 2.0 * R,
            lambda t: np.sin(np.minimum(t, 2.0 * R - t)),
            lambda t: np.where(t <= R, np.cos(t), -np.cos(2.0 * R - t)),
            lambda t: -np.sin(np.minimum(t, 2.0 * R - t)),
            two_poles=True, kind=kind, params={"R": R}, breakpoints=(R,),
        )
    elif kind == "cubic_flare":
        c = float(params.get("c", 1.0))
        if c < 0:
            raise ValueError("cubic_flare needs c >= 0")
        m = RevolutionManifold(
            n, trunc, lambda t: t + c * t**3, lambda t: 1.0 + 3.0 * c * t**2, lambda t: 6.0 * c * t,
            kind=kind, params={"c": c, "t_max": trunc}, truncated=True,
        )
    else:
        m = _custom(n, params)
    return validate(m)


def _capped_cylinder(n: int, length: float, caps: int, trunc: float) -> RevolutionManifold:
    if length < 0 or caps not in (1, 2):
        raise ValueError("capped_cylinder needs length >= 0 and caps in {1, 2}")
    half = math.pi / 2
    end = half + length
    if caps == 2:
        t_max = math.pi + length

        def b(t):
            return np.where(t < half, np.sin(t), np.where(t <= end, 1.0, np.cos(t - end)))

        def db(t):
            return np.where(t < half, np.cos(t), np.where(t <= end, 0.0, -np.sin(t - end)))

        def d2b(t):
            return np.where(t < half, -np.sin(t), np.where(t <= end, 0.0, -np.cos(t - end)))

        return RevolutionManifold(
            n, t_max, b, db, d2b, two_poles=True, kind="capped_cylinder",
            params={"length": length, "caps": caps}, breakpoints=(half, end),
        )
    t_max = max(trunc, half + 1.0)
    return RevolutionManifold(
        n, t_max,
        lambda t: np.where(t < half, np.sin(t), 1.0),
        lambda t: np.where(t < half, np.cos(t), 0.0),
        lambda t: np.where(t < half, -np.sin(t), 0.0),
        kind="capped_cylinder", params={"length": math.inf, "caps": 1, "t_max": t_max},
        breakpoints=(half,), truncated=True,
    )


def _custom(n: int, params: dict) -> RevolutionManifold:
    if "path" in params:
        t, bv = _read_profile_csv(params["path"])
    else:
        t = np.asarray(params.get("t"), dtype=float)
        bv = np.asarray(params.get("b"), dtype=float)
    if t.ndim != 1 or t.shape != bv.shape or len(t) < 4:
        raise ValueError("custom profile needs matching 1-D arrays of at least 4 samples")
    if np.any(np.diff(t) <= 0) or t[0] != 0.0:
        raise ValueError("custom profile t must start at 0 and strictly increase")
    spline = PchipInterpolator(t, bv)
    d1, d2 = spline.derivative(1), spline.derivative(2)
    return RevolutionManifold(
        n, float(t[-1]), spline, d1, d2,
        two_poles=abs(bv[-1]) <= POLE_TOL, kind="custom",
        params={"samples": int(len(t))}, truncated=abs(bv[-1]) > POLE_TOL,
    )


# -- curvature ---------------------------------------------------------------
def gauss_curvature(m: RevolutionManifold, t):
    """Gauss curvature ``-b''/b`` of a surface of revolution (``n = 2`` only)."""
    if m.n != 2:
        raise ValueError("Gauss curvature is defined here for surfaces (n = 2) only")
    t_arr = np.asarray(t, dtype=float)
    guard = 2.0 * m.h_b
    if np.any(t_arr <= guard) or np.any(t_arr >= m.t_max - guard):
        raise ValueError("curvature requested too close to a pole or outside (0, t_max)")
    for bp in m.breakpoints:
        if np.any(np.abs(t_arr - bp) < guard):
            raise ValueError(f"curvature undefined near the profile crease at t={bp:.6g}")
    out = -m.profile_second_derivative(t_arr) / m.profile(t_arr)
    return float(out) if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class CurvatureReport:
    passed: bool
    positive: bool
    decreasing: bool
    samples: int
    violations: list = field(default_factory=list)


def isoperimetric_at_pole_sufficient(
    m: RevolutionManifold, grid: int = 2000, s_tol: float = 1e-12
) -> CurvatureReport:
    """Sufficient test for isoperimetry at the pole of a rotationally symmetric plane.

    Holds when the Gauss curvature is positive and strictly decreasing in the
    distance from the pole. A ``False`` verdict is inconclusive.
    """
    guard = 4.0 * m.h_b
    t = np.linspace(guard, m.t_max - guard, grid)
    for bp in m.breakpoints:
        t = t[np.abs(t - bp) >= guard]
    K = gauss_curvature(m, t)
    positive = bool(np.all(K > 0))
    drop = K[:-1] - K[1:]
    bad = np.nonzero(drop <= s_tol)[0]
    violations = [(float(t[i]), float(t[i + 1]), float(K[i]), float(K[i + 1])) for i in bad[:20]]
    decreasing = bad.size == 0
    return CurvatureReport(positive and decreasing, positive, decreasing, int(t.size), violations)


def crease_competitor(R: float) -> tuple[float, float]:
    """Boundary lengths ``(4R, 2 pi sin R)`` for the half-surface and the ball.

    Both domains carry half the area of the crease surface; the half cut by a
    plane through the poles has the shorter boundary.
    """
    return 4.0 * R, 2.0 * math.pi * math.sin(R)


def profile_points(m: RevolutionManifold, count: int = 512) -> Sequence[tuple[float, float]]:
    t = np.linspace(0.0, m.t_max, count)
    return list(zip(t.tolist(), m.profile(t).tolist()))
