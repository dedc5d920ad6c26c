"""Torsion problem on masked grids of a surface of revolution.

Unknowns live on the nodes inside the domain. The Dirichlet condition is
imposed at the boundary crossing of each cut edge, located by linear
interpolation of the level set: a cut edge of weight ``w`` whose crossing sits
a fraction ``s`` of the way from its inside node contributes ``w / s`` to the
diagonal. The matrix stays symmetric positive definite and an M-matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .domains import DomainMask
from .mesh import Mesh2D

log = logging.getLogger(__name__)

S_MIN = 1e-6
DEFAULT_CG_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Iterative solve did not reach the requested residual."""


class AssemblyError(RuntimeError):
    """The discrete solution violates the maximum principle."""


@dataclass(frozen=True)
class CutEdge:
    """Inside node ``(i, j)`` whose neighbour in ``direction`` is outside."""

    i: np.ndarray
    j: np.ndarray
    s: np.ndarray
    axis: int  # 0: across rows (t), 1: along a row (theta)
    direction: np.ndarray  # +1 / -1 step towards the outside node


@dataclass(frozen=True)
class ScalarField:
    mesh: Mesh2D
    mask: DomainMask
    values: np.ndarray
    stiffness: sp.csr_matrix = field(repr=False)
    index: np.ndarray = field(repr=False)
    cuts: tuple = field(default=(), repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def inside_values(self) -> np.ndarray:
        return self.values[self.mask.inside]

    @property
    def inside_weights(self) -> np.ndarray:
        return self.mesh.node_volume_weights[self.mask.inside]

    def integral(self, p: float = 1.0) -> float:
        return float(np.sum(self.inside_values**p * self.inside_weights))

    def dirichlet_energy(self) -> float:
        u = self.inside_values
        return float(u @ (self.stiffness @ u))

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.mesh, self.mask, values, self.stiffness, self.index, self.cuts, {})

    def gradient_norms(self) -> np.ndarray:
        """Cell-centred ``|grad f|`` from central differences (one-sided at edges)."""
        mesh, f = self.mesh, self.values
        ft = np.gradient(f, mesh.dt, axis=0)
        fth = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * mesh.dtheta)
        b = mesh.manifold.profile(mesh.t)[:, None]
        return np.hypot(ft, fth / b)


def _cut_fraction(phi_in, phi_out):
    s = -phi_in / (phi_out - phi_in)
    return np.clip(s, S_MIN, 1.0)


def assemble(mask: DomainMask):
    """Stiffness matrix, load vector, unknown index map and cut edges."""
    mesh = mask.mesh
    Nt, Nth = mesh.shape
    inside, phi = mask.inside, mask.phi
    index = -np.ones(mesh.shape, dtype=np.int64)
    count = int(inside.sum())
    index[inside] = np.arange(count)

    rows, cols, vals = [], [], []
    diag = np.zeros(count)
    cuts = []

    def couple(ia, ib, w):
        rows.extend([ia, ib])
        cols.extend([ib, ia])
        vals.extend([-w, -w])
        np.add.at(diag, ia, w)
        np.add.at(diag, ib, w)

    # across rows
    wt = np.broadcast_to(mesh.t_face_weights[:, None], (Nt - 1, Nth))
    a_in, b_in = inside[:-1], inside[1:]
    both = a_in & b_in
    couple(index[:-1][both], index[1:][both], wt[both])
    for sel, pin, pout, step in (
        (a_in & ~b_in, (slice(None, -1), slice(None)), (slice(1, None), slice(None)), 1),
        (~a_in & b_in, (slice(1, None), slice(None)), (slice(None, -1), slice(None)), -1),
    ):
        ii, jj = np.nonzero(sel)
        i_in = ii if step == 1 else ii + 1
        s = _cut_fraction(phi[pin][sel], phi[pout][sel])
        np.add.at(diag, index[i_in, jj], wt[sel] / s)
        cuts.append(CutEdge(i_in, jj, s, 0, np.full(ii.size, step)))

    # along rows (periodic)
    wth = np.broadcast_to(mesh.theta_edge_weights[:, None], (Nt, Nth))
    nxt = np.roll(inside, -1, axis=1)
    nxt_index = np.roll(index, -1, axis=1)
    nxt_phi = np.roll(phi, -1, axis=1)
    both = inside & nxt
    couple(index[both], nxt_index[both], wth[both])
    sel = inside & ~nxt
    ii, jj = np.nonzero(sel)
    s = _cut_fraction(phi[sel], nxt_phi[sel])
    np.add.at(diag, index[sel], wth[sel] / s)
    cuts.append(CutEdge(ii, jj, s, 1, np.full(ii.size, 1)))
    sel = ~inside & nxt
    ii, jj = np.nonzero(sel)
    jn = (jj + 1) % Nth
    s = _cut_fraction(phi[ii, jn], phi[sel])
    np.add.at(diag, index[ii, jn], wth[sel] / s)
    cuts.append(CutEdge(ii, jn, s, 1, np.full(ii.size, -1)))

    rows = np.concatenate([np.asarray(r).ravel() for r in rows] + [np.arange(count)])
    cols = np.concatenate([np.asarray(c).ravel() for c in cols] + [np.arange(count)])
    vals = np.concatenate([np.asarray(v).ravel() for v in vals] + [diag])
    K = sp.csr_matrix((vals, (rows, cols)), shape=(count, count))
    load = mesh.node_volume_weights[inside].copy()
    return K, load, index, tuple(cuts)


def pcg(A, b, tol: float, maxiter: int, restarts: int = 10):
    """Jacobi-preconditioned conjugate gradients from a zero initial guess.

    Returns ``(x, iterations, relative_residual)``. The recursive residual
    drifts from ``b - A x`` on large systems, so the iteration restarts from
    the true residual until that one meets ``tol``.
    """
    inv_diag = 1.0 / A.diagonal()
    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    it = 0
    for _ in range(restarts + 1):
        r = b - A @ x
        if np.linalg.norm(r) <= tol * bnorm:
            break
        z = inv_diag * r
        p = z.copy()
        rz = r @ z
        while it < maxiter and np.linalg.norm(r) > tol * bnorm:
            Ap = A @ p
            alpha = rz / (p @ Ap)
            x += alpha * p
            r -= alpha * Ap
            z = inv_diag * r
            rz_new = r @ z
            p *= rz_new / rz
            p += z
            rz = rz_new
            it += 1
    return x, it, float(np.linalg.norm(b - A @ x) / bnorm)


def solve_torsion_fem(mask: DomainMask, cg_tol: float = DEFAULT_CG_TOL, maxiter: int | None = None) -> ScalarField:
    """Solve ``-div grad f = 1`` in the masked domain with ``f = 0`` on its boundary."""
    if not 0.0 < cg_tol <= 1e-4:
        raise ValueError("cg_tol must lie in (0, 1e-4]")
    K, load, index, cuts = assemble(mask)
    maxiter = maxiter or max(20000, 20 * (mask.mesh.Nt + mask.mesh.Ntheta))
    u, iters, res = pcg(K, load, cg_tol, maxiter)
    if res > cg_tol:
        raise ConvergenceError(f"CG stalled at relative residual {res:.3e} after {iters} iterations")
    if u.min() < -1e-10 * max(u.max(), 0.0):
        raise AssemblyError(f"maximum principle violated: min f = {u.min():.3e}")
    values = np.zeros(mask.mesh.shape)
    values[mask.inside] = u
    field_ = ScalarField(mask.mesh, mask, values, K, index, cuts)
    integral = float(load @ u)
    energy = float(u @ (K @ u))
    field_.diagnostics.update(
        iterations=iters, residual=res, unknowns=int(u.size),
        identity_defect=abs(integral - energy) / integral,
    )
    log.debug("fem solve: %d unknowns, %d iterations, residual %.2e", u.size, iters, res)
    return field_


@dataclass(frozen=True)
class RigidityResult:
    rigidity: float
    identity_defect: float
    integral_f: float
    energy: float
    volume: float


def rigidity_fem(field_: ScalarField, volume: float | None = None) -> RigidityResult:
    """Energy functional ``(2 int f - int |grad f|^2) / Vol`` of a grid field.

    ``volume`` defaults to the exact measure of the continuum domain. The
    identity defect is ``|int f / Vol - E| / E`` (zero when ``E = 0``).
    """
    vol = field_.mask.volume if volume is None else volume
    integral = field_.integral()
    energy = field_.dirichlet_energy()
    value = (2.0 * integral - energy) / vol
    defect = abs(integral / vol - value) / value if value > 0 else 0.0
    return RigidityResult(value, defect, integral, energy, vol)


@dataclass(frozen=True)
class GradientStats:
    min: float
    max: float
    mean: float
    spread: float
    count: int


def _unit_normal_component(mask: DomainMask, t, theta, axis):
    """Component of the level-set unit normal along the cut edge direction."""
    m = mask.mesh.manifold
    h = 1e-6
    ls = mask.spec.level_set
    pt = (ls(m, t + h, theta) - ls(m, t - h, theta)) / (2 * h)
    pth = (ls(m, t, theta + h) - ls(m, t, theta - h)) / (2 * h) / m.profile(t)
    norm = np.hypot(pt, pth)
    return np.abs(pt if axis == 0 else pth) / norm


def boundary_gradient_stats(field_: ScalarField, min_cosine: float = 0.3) -> GradientStats:
    """Spread of ``|grad f|`` over the boundary, from one-sided differences at cut edges.

    Along each cut edge a quadratic through the boundary zero and the two
    nearest inside nodes gives the directional derivative, which is divided by
    the cosine between edge and boundary normal. Edges nearly tangent to the
    boundary (cosine below ``min_cosine``) are skipped.
    """
    mesh, mask, f = field_.mesh, field_.mask, field_.values
    Nt, Nth = mesh.shape
    b = mesh.manifold.profile(mesh.t)
    out = []
    for cut in field_.cuts:
        if cut.i.size == 0:
            continue
        i, j, s, d = cut.i, cut.j, cut.s, cut.direction
        if cut.axis == 0:
            h = np.full(i.size, mesh.dt)
            i2, j2 = i - d, j
            ok2 = (i2 >= 0) & (i2 < Nt)
            i2 = np.clip(i2, 0, Nt - 1)
            tb = mesh.t[i] + d * s * mesh.dt
            thb = mesh.theta[j]
        else:
            h = b[i] * mesh.dtheta
            i2, j2 = i, (j - d) % Nth
            ok2 = np.ones(i.size, dtype=bool)
            tb = mesh.t[i]
            thb = mesh.theta[j] + d * s * mesh.dtheta
        ok2 &= mask.inside[i2, j2]
        d1 = s * h
        d2 = d1 + h
        f1, f2 = f[i, j], f[i2, j2]
        quad = (f1 * d2**2 - f2 * d1**2) / (d1 * d2 * (d2 - d1))
        slope = np.where(ok2, quad, f1 / d1)
        cos = _unit_normal_component(mask, tb, thb, cut.axis)
        keep = cos >= min_cosine
        out.append(np.abs(slope[keep]) / cos[keep])
    g = np.concatenate(out)
    mean = float(g.mean())
    return GradientStats(float(g.min()), float(g.max()), mean, float((g.max() - g.min()) / mean), int(g.size))


def field_rows(field_: ScalarField):
    """``(t, theta, f)`` triples for CSV export."""
    T, TH = field_.mesh.grids()
    return zip(T.ravel().tolist(), TH.ravel().tolist(), field_.values.ravel().tolist())
