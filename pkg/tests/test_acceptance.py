"""The ten acceptance criteria, each at its stated tolerance and runtime budget.

Run ``pytest tests/test_acceptance.py`` to see one pass/fail line per
criterion in the terminal summary.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from torsionlab.cheeger import build_family, cheeger_chain_check, h_rad, sharpness_experiment
from torsionlab.domains import BallSpec, StarSpec, fit_mesh, rasterize_domain
from torsionlab.fem import boundary_gradient_stats, rigidity_fem, solve_torsion_fem
from torsionlab.manifold import make_manifold, crease_competitor
from torsionlab.models import comparison_verdict, perelman_gap_factor, r_kd
from torsionlab.radial import euclidean_ball_rigidity, rigidity_scaled, solve_radial_ball
from torsionlab.symmetrization import (
    check_energy_decrease, check_lp_equality, coarea_check, layer_cake, symmetrize,
)
from torsionlab.verify import FLARE_CASES, RECT_CASES, STAR_CASES, comparison_model

MESH = 512


class Budget:
    def __init__(self, seconds: float):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.2f}s, budget {self.seconds}s"


def _solve(kind, params, spec, N=MESH):
    m = make_manifold(kind, **params)
    mask = rasterize_domain(fit_mesh(m, spec, N), spec)
    return m, mask, solve_torsion_fem(mask)


@pytest.mark.criterion(1, "radial oracle exactness (flat balls, 1e-8)")
def test_radial_oracle_exactness():
    with Budget(1.0):
        worst = 0.0
        for n in (2, 3, 4, 5):
            m = make_manifold("euclidean", n)
            for r0 in (0.5, 1.0, 2.0):
                worst = max(worst, abs(solve_radial_ball(m, r0).rigidity / euclidean_ball_rigidity(n, r0) - 1))
    assert worst <= 1e-8


@pytest.mark.criterion(2, "FEM vs radial oracle at 512x512 (1%, ratio >= 1.8)")
def test_fem_against_oracle():
    with Budget(60.0):
        for kind, r0 in (("euclidean", 1.0), ("sphere", math.pi / 2), ("hyperbolic", 1.0)):
            exact = solve_radial_ball(make_manifold(kind), r0).rigidity
            errs = [abs(rigidity_fem(_solve(kind, {}, BallSpec(r0), k)[2]).rigidity / exact - 1)
                    for k in (MESH // 2, MESH)]
            assert errs[1] <= 0.01, (kind, errs)
            assert errs[0] / errs[1] >= 1.8, (kind, errs)


@pytest.mark.criterion(3, "homogeneity on 20 random radial cases (1e-8)")
def test_homogeneity():
    rng = np.random.default_rng(20240613)
    kinds = ("sphere", "hyperbolic", "euclidean", "paraboloid", "cubic_flare")
    with Budget(5.0):
        for i in range(20):
            m = make_manifold(kinds[i % len(kinds)], int(rng.integers(2, 5)))
            lam = float(rng.uniform(0.3, 3.0))
            r0 = float(rng.uniform(0.1, 0.9)) * min(m.t_max, 3.0)
            a, b = rigidity_scaled(m, r0, lam)
            assert abs(b / (lam * lam * a) - 1) <= 1e-8, (m.kind, lam, r0)


@pytest.mark.criterion(4, "symmetrization: Lp equality 2%, energy decrease -2%, radial equality 1e-3")
def test_symmetrization_suite():
    assert len(STAR_CASES) >= 10
    with Budget(600.0):
        for kind, params, spec in STAR_CASES:
            m, _, f = _solve(kind, params, spec)
            sym = symmetrize(f, m)
            for p in (1, 2, 3):
                assert check_lp_equality(f, sym, p) <= 0.02, (kind, spec, p)
            e = check_energy_decrease(f, sym)
            assert e.lhs >= e.rhs - 0.02 * e.lhs, (kind, spec, e)
        for kind, r0 in (("euclidean", 1.0), ("sphere", math.pi / 2), ("hyperbolic", 1.0), ("sphere", 0.6)):
            sol = solve_radial_ball(make_manifold(kind), r0)
            sym = symmetrize(sol, sol.manifold)
            for p in (1, 2, 3):
                assert check_lp_equality(sol, sym, p) <= 1e-3
            e = check_energy_decrease(sol, sym)
            assert abs(e.lhs - e.rhs) <= 1e-3 * e.lhs


@pytest.mark.criterion(5, "comparison E(Omega) <= E(Omega*)(1+2%) on all shipped non-radial domains")
def test_rigidity_comparison():
    kinds = {k for k, _, _ in STAR_CASES + RECT_CASES + FLARE_CASES}
    assert {"euclidean", "sphere", "hyperbolic", "cubic_flare"} <= kinds
    assert {p["c"] for k, p, _ in FLARE_CASES} == {1.0, 0.1}
    with Budget(600.0):
        for kind, params, spec in STAR_CASES + RECT_CASES + FLARE_CASES:
            m, mask, f = _solve(kind, params, spec)
            rep = comparison_verdict(rigidity_fem(f).rigidity, mask.volume, comparison_model(kind),
                                     source_total=m.total_volume)
            assert rep.E_domain <= rep.E_model * 1.02, (kind, params, spec, rep)


@pytest.mark.criterion(6, "model constants R(1,pi)=1, R(1,D)<1, gap factor cross-check")
def test_model_constants():
    with Budget(5.0):
        for n in range(2, 8):
            assert abs(r_kd(1.0, math.pi, n) - 1.0) <= 1e-10
        for n in range(2, 6):
            for D in np.linspace(0.0, math.pi, 51)[1:-1]:
                assert r_kd(1.0, D, n) < 1.0
            for eps in np.linspace(0.0, math.pi, 22)[1:-1]:
                assert abs(perelman_gap_factor(eps, n) - r_kd(1.0, math.pi - eps, n) ** 2) <= 1e-10


@pytest.mark.criterion(7, "layer cake within 1% at J=1024 with exact sandwich; coarea <= 1e-4")
def test_layer_cake_and_coarea():
    with Budget(30.0):
        cases = [solve_radial_ball(make_manifold(k), r) for k, r in
                 (("euclidean", 1.0), ("sphere", math.pi / 2), ("hyperbolic", 1.0))]
        cases.append(_solve("euclidean", {}, StarSpec(1.0, 0.3, 3))[2])
        cases.append(_solve("sphere", {}, StarSpec(0.7, 0.2, 4))[2])
        for field in cases:
            lc = layer_cake(field, 1024, rtol=0.0)
            assert lc.defect <= 0.01
            assert lc.lower <= lc.integral_f <= lc.upper
        for sol in cases[:3]:
            assert coarea_check(sol, lambda t: np.ones_like(t)).defect <= 1e-4
            assert coarea_check(sol, sol.value).defect <= 1e-4


@pytest.mark.criterion(8, "Cheeger suite: H_rad, rigidity bound, chain, monotone sharpness sweep")
def test_cheeger_suite():
    with Budget(120.0):
        for eps in (0.5, 0.2, 0.1, 0.05):
            for delta in (1.0, 2.0):
                eps_ok = min(eps, 1 / (2 * delta))
                fam = build_family(2, eps_ok, delta)
                H, _ = h_rad(fam)
                assert H >= delta * (1 - 1e-12)
                for r in (0.0, fam.R / 4, fam.R / 2):
                    E = solve_radial_ball(fam.manifold, fam.ball_radius(r)).rigidity
                    assert E >= (1 - eps_ok) / delta**2
                    if fam.relative_volume(r) <= 0.5:
                        assert cheeger_chain_check(
                            solve_radial_ball(fam.manifold, fam.ball_radius(r)), with_h_rad=False
                        ).product <= 1 + 1e-6
        for kind, params in (("sphere", {}), ("capped_cylinder", {"length": 3.0}), ("remark26_surface", {"R": 1.2})):
            m = make_manifold(kind, **params)
            for frac in (0.05, 0.2, 0.35, 0.5):
                r = float(m.radius_for_volume(frac * m.total_volume))
                assert cheeger_chain_check(solve_radial_ball(m, r), with_h_rad=False).product <= 1 + 1e-6
        prods = []
        for eps in (0.5, 0.2, 0.1, 0.05):
            rep = sharpness_experiment(2, eps, 1.0, 0.3)
            assert rep.product_delta >= 1 - eps
            prods.append(rep.product_delta)
        assert all(a <= b for a, b in zip(prods, prods[1:]))
        assert prods[-1] <= 1.02


@pytest.mark.criterion(9, "crease surface: 4R < 2 pi sin R")
def test_crease_competitor():
    with Budget(1.0):
        for R in (0.5, 1.0, 1.4):
            straight, circle = crease_competitor(R)
            m = make_manifold("remark26_surface", R=R)
            assert circle == pytest.approx(m.ball_boundary_area(R), rel=1e-12)
            assert circle - straight > 0.01


@pytest.mark.criterion(10, "harmonic-domain detector at 512x512 (balls <= 5%, star >= 20%)")
def test_harmonic_detector():
    with Budget(60.0):
        for kind, r0 in (("euclidean", 1.0), ("sphere", math.pi / 2), ("hyperbolic", 1.0)):
            assert boundary_gradient_stats(_solve(kind, {}, BallSpec(r0))[2]).spread <= 0.05
        assert boundary_gradient_stats(_solve("euclidean", {}, StarSpec(1.0, 0.3, 3))[2]).spread >= 0.20
