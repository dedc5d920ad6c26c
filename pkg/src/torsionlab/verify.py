"""Property suites runnable from the command line.

Each suite evaluates the invariants of one part of the toolkit at a fixed
default resolution and returns one :class:`Property` per check. Grid-based
suites run at ``FEM_MESH`` nodes per direction, which keeps the whole
selection to a few minutes; the test suite repeats the grid checks at 512.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cheeger import a_eps, build_family, cheeger_chain_check, h_rad, sharpness_experiment
from .config import SUITES
from .domains import BallSpec, RectUnionSpec, StarSpec, fit_mesh, rasterize_domain
from .fem import boundary_gradient_stats, rigidity_fem, solve_torsion_fem
from .manifold import make_manifold
from .models import comparison_verdict, perelman_gap_factor, r_kd, sphere_cap_rigidity
from .radial import euclidean_ball_rigidity, maximality_check, rigidity_scaled, solve_radial_ball
from .symmetrization import (
    check_energy_decrease, check_lp_equality, coarea_check, equimeasurability_defect, layer_cake,
    lipschitz_ratio, radial_field_of, sup_difference, symmetrize,
)

FEM_MESH = 256

# non-radial domains used by the symmetrization and comparison checks: (kind, params, spec)
STAR_CASES = (
    ("euclidean", {}, StarSpec(1.0, 0.3, 3)),
    ("euclidean", {}, StarSpec(0.8, 0.2, 5, 0.3)),
    ("euclidean", {}, StarSpec(1.2, 0.15, 2)),
    ("euclidean", {}, StarSpec(1.0, 0.1, 4, 0.5)),
    ("sphere", {}, StarSpec(1.0, 0.3, 3)),
    ("sphere", {}, StarSpec(0.7, 0.2, 4)),
    ("sphere", {}, StarSpec(1.2, 0.1, 5, 0.2)),
    ("hyperbolic", {}, StarSpec(1.0, 0.3, 3)),
    ("hyperbolic", {}, StarSpec(0.8, 0.2, 2)),
    ("hyperbolic", {}, StarSpec(1.1, 0.15, 6, 0.4)),
)
RECT_CASES = (
    ("euclidean", {}, RectUnionSpec(((0.3, 1.0, 0.0, math.pi / 2), (0.3, 0.6, math.pi / 2, math.pi)))),
    ("sphere", {}, RectUnionSpec(((0.5, 1.2, 0.0, math.pi),))),
    ("hyperbolic", {}, RectUnionSpec(((0.2, 0.9, 0.0, 2.0),))),
)
FLARE_CASES = (
    ("cubic_flare", {"c": 1.0}, StarSpec(0.6, 0.3, 3)),
    ("cubic_flare", {"c": 1.0}, RectUnionSpec(((0.2, 0.8, 0.0, 2.5),))),
    ("cubic_flare", {"c": 0.1}, StarSpec(1.0, 0.25, 4)),
    ("cubic_flare", {"c": 0.1}, RectUnionSpec(((0.4, 1.2, 1.0, 3.0), (0.4, 0.7, 3.0, 4.5)))),
)


def comparison_model(kind: str):
    """Model space for a shipped comparison: the manifold itself when it is a space form, else the plane."""
    if kind in ("euclidean", "sphere", "hyperbolic"):
        return make_manifold(kind)
    return make_manifold("euclidean")


@dataclass(frozen=True)
class Property:
    suite: str
    name: str
    value: float
    threshold: float
    ok: bool


def _le(suite, name, value, threshold):
    return Property(suite, name, float(value), float(threshold), bool(value <= threshold))


def _ge(suite, name, value, threshold):
    return Property(suite, name, float(value), float(threshold), bool(value >= threshold))


def _solve(kind, params, spec, mesh=FEM_MESH):
    m = make_manifold(kind, **params)
    mask = rasterize_domain(fit_mesh(m, spec, mesh), spec)
    return m, mask, solve_torsion_fem(mask)


# -- suites --------------------------------------------------------------------
def radial_suite(seed: int = 0) -> list[Property]:
    s = "radial"
    out = []
    errs = [
        abs(solve_radial_ball(make_manifold("euclidean", n), r0).rigidity / euclidean_ball_rigidity(n, r0) - 1)
        for n in (2, 3, 4, 5) for r0 in (0.5, 1.0, 2.0)
    ]
    out.append(_le(s, "closed_form_euclidean", max(errs), 1e-8))
    rng = np.random.default_rng(seed)
    homog, defects = [], []
    for i in range(20):
        kind = ("sphere", "hyperbolic", "euclidean", "paraboloid")[i % 4]
        m = make_manifold(kind)
        lam = float(rng.uniform(0.3, 3.0))
        r0 = float(rng.uniform(0.1, 0.9 * min(m.t_max, m.t_max / lam) if kind != "sphere" else 3.0))
        e, e_scaled = rigidity_scaled(m, r0, lam)
        homog.append(abs(e_scaled / (lam * lam * e) - 1))
        defects.append(solve_radial_ball(m, r0).identity_defect)
    out.append(_le(s, "homogeneity", max(homog), 1e-8))
    out.append(_le(s, "energy_identity", max(defects), 1e-6))
    sphere = make_manifold("sphere")
    coarse = solve_radial_ball(sphere, 1.2, 4096).rigidity
    fine = solve_radial_ball(sphere, 1.2, 8192).rigidity
    out.append(_le(s, "refinement_4096", abs(fine / coarse - 1), 1e-6))
    cap = solve_radial_ball(sphere, math.pi / 2).rigidity
    out.append(_le(s, "hemisphere_2ln2-1", abs(cap - (2 * math.log(2) - 1)), 1e-10))
    ok = maximality_check(solve_radial_ball(make_manifold("hyperbolic"), 1.0), 100, seed)
    out.append(Property(s, "maximality", float(ok), 1.0, ok))
    return out


def fem_suite(seed: int = 0, mesh: int = FEM_MESH) -> list[Property]:
    s = "fem"
    out = []
    for kind, r0 in (("euclidean", 1.0), ("sphere", math.pi / 2), ("hyperbolic", 1.0)):
        m = make_manifold(kind)
        exact = solve_radial_ball(m, r0).rigidity
        errs = []
        for N in (mesh // 2, mesh):
            _, mask, f = _solve(kind, {}, BallSpec(r0), N)
            res = rigidity_fem(f)
            errs.append(abs(res.rigidity / exact - 1))
        out.append(_le(s, f"{kind}_ball_error", errs[-1], 0.01))
        out.append(_ge(s, f"{kind}_convergence_ratio", errs[0] / errs[1], 1.8))
        out.append(_le(s, f"{kind}_identity_defect", f.diagnostics["identity_defect"], 1e-3))
        out.append(_le(s, f"{kind}_ball_gradient_spread", boundary_gradient_stats(f).spread, 0.05))
        vals = f.inside_values
        out.append(_ge(s, f"{kind}_maximum_principle", vals.min() / vals.max(), -1e-10))
    spec = StarSpec(1.0, 0.3, 3)
    m, mask, f = _solve("euclidean", {}, spec, mesh)
    out.append(_ge(s, "star_gradient_spread", boundary_gradient_stats(f).spread, 0.20))
    e0 = rigidity_fem(f).rigidity
    shift = 2 * math.pi / mesh * 7
    _, _, g = _solve("euclidean", {}, spec.rotated(shift), mesh)
    out.append(_le(s, "rotation_equivariance", abs(rigidity_fem(g).rigidity / e0 - 1), 1e-6))
    return out


def symmetrization_suite(seed: int = 0, mesh: int = FEM_MESH) -> list[Property]:
    s = "symmetrization"
    out = []
    for kind, params, spec in STAR_CASES[::3]:
        m, mask, f = _solve(kind, params, spec, mesh)
        sym = symmetrize(f, m, 1.0)
        worst = max(check_lp_equality(f, sym, p) for p in (1, 2, 3))
        out.append(_le(s, f"{kind}_star_lp_equality", worst, 0.02))
        e = check_energy_decrease(f, sym)
        out.append(_ge(s, f"{kind}_star_energy_decrease", (e.lhs - e.rhs) / e.lhs, -0.02))
        out.append(_le(s, f"{kind}_star_equimeasurability", equimeasurability_defect(sym), 1.0))
    disk = solve_radial_ball(make_manifold("euclidean"), 1.0)
    sym = symmetrize(disk, disk.manifold, 1.0)
    out.append(_le(s, "radial_lp_equality", max(check_lp_equality(disk, sym, p) for p in (1, 2, 3)), 1e-3))
    e = check_energy_decrease(disk, sym)
    out.append(_le(s, "radial_energy_equality", abs(e.lhs - e.rhs) / e.lhs, 1e-3))
    out.append(_le(s, "radial_lipschitz", lipschitz_ratio(disk, sym), 1.05))
    again = symmetrize(radial_field_of(sym), disk.manifold, 1.0)
    cell_jump = float(np.max(np.abs(np.diff(sym.values))))
    out.append(_le(s, "idempotence", sup_difference(sym, again), cell_jump + sym.levels[1]))
    cap = solve_radial_ball(make_manifold("sphere"), math.pi / 2)
    lc = layer_cake(cap)
    out.append(_le(s, "layer_cake_cap", lc.defect, 0.01))
    out.append(Property(s, "layer_cake_sandwich", float(lc.ok), 1.0, lc.ok))
    cc = coarea_check(cap, lambda t: cap.value(t))
    out.append(_le(s, "coarea_cap", cc.defect, 1e-4))
    return out


def models_suite(seed: int = 0, mesh: int = FEM_MESH) -> list[Property]:
    s = "models"
    out = [_le(s, "R(1,pi)=1", max(abs(r_kd(1.0, math.pi, n) - 1) for n in range(2, 7)), 1e-10)]
    D = np.linspace(0.05, math.pi, 51)[:-1]
    worst = max(r_kd(1.0, d, n) for d in D for n in range(2, 7))
    out.append(Property(s, "R(1,D)<1", worst, 1.0, bool(worst < 1.0)))
    steps = min(np.min(np.diff([r_kd(1.0, d, n) for d in D])) for n in range(2, 7))
    out.append(_ge(s, "R(1,D)_monotone", steps, 0.0))
    eps = np.linspace(0.05, math.pi - 0.05, 20)
    gap = max(abs(perelman_gap_factor(e, n) - r_kd(1.0, math.pi - e, n) ** 2) for e in eps for n in range(2, 7))
    out.append(_le(s, "gap_factor_cross_check", gap, 1e-10))
    caps = [sphere_cap_rigidity(b, 2, 2048) for b in np.linspace(0.05, 0.95, 19)]
    out.append(_ge(s, "cap_rigidity_increasing", float(np.min(np.diff(caps))), 1e-12))
    for kind, params, spec in FLARE_CASES[:1] + FLARE_CASES[2:3]:
        m, mask, f = _solve(kind, params, spec, mesh)
        rep = comparison_verdict(rigidity_fem(f).rigidity, mask.volume, make_manifold("euclidean"))
        out.append(_le(s, f"cartan_hadamard_{kind}_c{params['c']}", rep.E_domain / rep.E_model, 1.02))
    return out


def cheeger_suite(seed: int = 0) -> list[Property]:
    s = "cheeger"
    out = []
    eps_grid = (0.5, 0.2, 0.1, 0.05)
    inv = max(abs(2 * (1 + a_eps(e)) * math.exp(-a_eps(e)) - e) for e in (*eps_grid, 0.01, 1.0, 1.9))
    out.append(_le(s, "a_eps_inverse", inv, 1e-10))
    for eps in eps_grid:
        fam = build_family(2, eps, 1.0)
        t = np.linspace(0.0, fam.half_length, 4001)
        excess = float(np.max(fam.closed_form_profile(t) / (eps * np.exp(-t)) - 1))
        out.append(_le(s, f"profile_bound_eps{eps}", excess, 1e-12))
        H, _ = h_rad(fam)
        out.append(_ge(s, f"H_rad_eps{eps}", H, 1.0))
        r = np.linspace(0.0, fam.half_length, 401)
        v_excess = float(np.max(fam.relative_volume(r) - 0.5 * np.exp(-r)))
        out.append(_le(s, f"volume_decay_eps{eps}", v_excess, 1e-12))
    reps = [sharpness_experiment(2, e, 1.0, 0.3) for e in eps_grid]
    out.append(_ge(s, "sweep_lower_bound", min(r.product_delta - (1 - r.epsilon) for r in reps), 0.0))
    prods = [r.product_delta for r in reps]
    out.append(_ge(s, "sweep_monotone", float(np.min(np.diff(prods))), 0.0))
    out.append(_le(s, "sweep_limit", prods[-1], 1.02))
    sphere = make_manifold("sphere")
    chain = max(cheeger_chain_check(solve_radial_ball(sphere, r), with_h_rad=False).product for r in (0.3, 1.0, 1.5, math.pi / 2))
    out.append(_le(s, "chain_bound_sphere", chain, 1 + 1e-6))
    fam = build_family(2, 0.1, 1.0)
    c = cheeger_chain_check(solve_radial_ball(fam.manifold, fam.ball_radius(fam.R / 2)), with_h_rad=False)
    out.append(Property(s, "chain_family", c.product, 1 + 1e-6, c.ok))
    a = cheeger_chain_check(solve_radial_ball(sphere, 1.0), with_h_rad=False).product
    b = cheeger_chain_check(solve_radial_ball(sphere.scaled(2.5), 2.5), with_h_rad=False).product
    out.append(_le(s, "chain_scale_invariance", abs(b / a - 1), 1e-8))
    return out


SUITE_FUNCS = {
    "radial": radial_suite,
    "fem": fem_suite,
    "symmetrization": symmetrization_suite,
    "models": models_suite,
    "cheeger": cheeger_suite,
}


def run_suites(selection=None, seed: int = 0) -> list[Property]:
    selection = list(SUITES) if selection is None else list(selection)
    if not selection:
        raise ValueError("empty suite selection")
    bad = [name for name in selection if name not in SUITE_FUNCS]
    if bad:
        raise ValueError(f"unknown suites {bad}")
    out = []
    for name in selection:
        out.extend(SUITE_FUNCS[name](seed=seed))
    return out
