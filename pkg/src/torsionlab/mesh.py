"""Periodic ``(t, theta)`` grids on surfaces of revolution.

Nodes sit at cell centres ``t_i = t_lo + (i + 1/2) dt`` and ``theta_j = j dtheta``.
When ``t_lo = 0`` (or ``t_hi`` is the far pole) the first (last) row of cells
closes on the pole: its inner face has zero length, so no ``1/b`` weight is
ever evaluated at ``b = 0`` and the cap's measure belongs to that row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quad import gl_integrate
from .manifold import RevolutionManifold


@dataclass(frozen=True)
class Mesh2D:
    manifold: RevolutionManifold
    t_lo: float
    t_hi: float
    Nt: int
    Ntheta: int
    row_weights: np.ndarray  # node measure per row, identical along theta
    t_face_weights: np.ndarray  # Nt - 1 interior faces: b(t_face) dtheta / dt
    theta_edge_weights: np.ndarray  # per row: dt / (b(t_i) dtheta)

    @property
    def dt(self) -> float:
        return (self.t_hi - self.t_lo) / self.Nt

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.Ntheta

    @property
    def t(self) -> np.ndarray:
        return self.t_lo + (np.arange(self.Nt) + 0.5) * self.dt

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.Ntheta) * self.dtheta

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nt, self.Ntheta)

    @property
    def pole_lo(self) -> bool:
        return self.t_lo == 0.0

    @property
    def pole_hi(self) -> bool:
        return self.manifold.two_poles and self.t_hi == self.manifold.t_max

    @property
    def node_volume_weights(self) -> np.ndarray:
        return np.broadcast_to(self.row_weights[:, None], self.shape)

    @property
    def total_weight(self) -> float:
        return float(self.row_weights.sum() * self.Ntheta)

    def grids(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.t, self.theta, indexing="ij")


def build_mesh(m: RevolutionManifold, t_range, Nt: int, Ntheta: int) -> Mesh2D:
    """Assemble lumped node measures and edge coefficients of the Dirichlet form.

    The energy of a nodal field is ``sum_edges w_edge (f_a - f_b)^2`` with
    ``w = b(t_face) dtheta / dt`` across rows and ``w = dt / (b(t_i) dtheta)``
    along a row.
    """
    if m.n != 2:
        raise ValueError("the grid solver handles surfaces (n = 2) only")
    if Nt < 16 or Ntheta < 16:
        raise ValueError("mesh resolution must be at least 16 x 16")
    t_lo, t_hi = float(t_range[0]), float(t_range[1])
    if not 0.0 <= t_lo < t_hi <= m.t_max:
        raise ValueError(f"t_range {t_range} not inside [0, {m.t_max}]")
    dt = (t_hi - t_lo) / Nt
    dth = 2.0 * math.pi / Ntheta
    edges = t_lo + np.arange(Nt + 1) * dt
    edges[-1] = t_hi
    centers = 0.5 * (edges[:-1] + edges[1:])
    b_c = m.profile(centers)
    b_f = m.profile(edges[1:-1])
    if np.any(b_c <= 0) or np.any(b_f <= 0):
        raise ValueError("profile degenerates inside the mesh range")
    rows = dth * gl_integrate(m.profile, edges[:-1], edges[1:])
    return Mesh2D(
        manifold=m, t_lo=t_lo, t_hi=t_hi, Nt=int(Nt), Ntheta=int(Ntheta),
        row_weights=rows, t_face_weights=b_f * dth / dt, theta_edge_weights=dt / (b_c * dth),
    )
