from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from torsionlab.cheeger import (
    a_eps, build_family, cheeger_chain_check, h_omega, h_rad, minimal_R, paper_test_function_bound,
    sharpness_experiment,
)
from torsionlab.manifold import make_manifold
from torsionlab.radial import solve_radial_ball


def lambert_root(eps):
    # 2 (1 + x) e^-x = eps  <=>  x = -1 - W_{-1}(-eps / (2e))
    return float(-1.0 - lambertw(-eps / (2 * math.e), -1).real)


@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0, 1.9, 1e-6])
def test_a_eps_against_lambert(eps):
    assert a_eps(eps) == pytest.approx(lambert_root(eps), rel=1e-12)


def test_a_eps_examples():
    assert a_eps(2 - 1e-12) == pytest.approx(0.0, abs=1e-5)
    assert a_eps(0.1) == pytest.approx(4.75, abs=0.01)
    assert a_eps(0.5) == pytest.approx(2.6926, abs=1e-4)
    with pytest.raises(ValueError):
        a_eps(2.5)


@pytest.mark.parametrize("eps,R,lam,eta", [(0.1, 2.0, 73.88, 0.02108), (0.5, 1.0, 5.345, 0.2592)])
def test_family_parameters(eps, R, lam, eta):
    fam = build_family(2, eps, 1.0, R)
    assert fam.lam == pytest.approx(lam, rel=1e-3)
    assert fam.eta == pytest.approx(eta, rel=2e-3)
    exact_lam = math.exp(R) / eps * math.sqrt(1 - (eps * math.exp(-R)) ** 2)
    assert fam.lam == pytest.approx(exact_lam, rel=1e-14)
    assert fam.eta == pytest.approx(math.atan(exact_lam) / exact_lam, rel=1e-14)


def test_profile_continuous_at_neck_end():
    fam = build_family(2, 0.2, 1.0)
    R = fam.R
    left, right = fam.closed_form_profile(np.array([R - 1e-10, R + 1e-10]))
    assert left == pytest.approx(0.2 * math.exp(-R), rel=1e-8)
    assert right == pytest.approx(0.2 * math.exp(-R), rel=1e-8)


def test_family_gates():
    with pytest.raises(ValueError):
        build_family(2, 0.1, 0.4)
    with pytest.raises(ValueError):
        build_family(2, 0.6, 1.0)
    assert build_family(2, 0.1, 1.0).R == pytest.approx(minimal_R(2, 0.1, 1.0))


def test_h_rad_examples():
    H, _ = h_rad(build_family(2, 0.1, 1.0, R=2.0))
    assert H >= 1.0
    H, arg = h_rad(make_manifold("sphere"))
    assert H == pytest.approx(1.0, abs=1e-9)
    assert arg == pytest.approx(math.pi / 2, abs=1e-4)


def test_h_rad_long_cylinder():
    m = make_manifold("capped_cylinder", length=6.0)
    H, arg = h_rad(m)
    assert H == pytest.approx(2 * math.pi / (0.5 * m.total_volume), rel=1e-9)
    assert arg == pytest.approx(0.5 * m.t_max, abs=1e-3)


def test_h_rad_needs_two_poles():
    with pytest.raises(ValueError):
        h_rad(make_manifold("euclidean"))


def test_sharpness_examples():
    rep = sharpness_experiment(2, 0.1, 1.0, 0.3)
    assert rep.E >= 0.9 and rep.ok
    assert rep.beta == pytest.approx(0.3, abs=1e-10)
    assert rep.product == pytest.approx(rep.E * rep.H_rad**2)
    half = sharpness_experiment(2, 0.5, 1.0, 0.5)
    assert half.r == 0.0 and half.E >= 0.5
    with pytest.raises(ValueError):
        sharpness_experiment(2, 0.1, 1.0, 0.6)


def test_optional_universal_constant():
    rep = sharpness_experiment(2, 0.1, 1.0, 0.3, B=0.5)
    assert rep.B_bound == pytest.approx(0.9 * (1 - 0.5 * math.sqrt(0.1)) ** 2 / rep.H_rad**2)
    assert sharpness_experiment(2, 0.1, 1.0, 0.3).B_bound is None


def test_sweep_is_monotone():
    prods = [sharpness_experiment(2, e, 1.0, 0.3).product_delta for e in (0.5, 0.2, 0.1, 0.05)]
    assert all(p >= 1 - e for p, e in zip(prods, (0.5, 0.2, 0.1, 0.05)))
    assert all(a <= b for a, b in zip(prods, prods[1:]))
    assert prods[-1] <= 1.02


def test_trial_function_bound():
    fam = build_family(2, 0.1, 1.0)
    tb = paper_test_function_bound(fam, fam.R / 2)
    assert tb.ok and tb.displayed >= 0.9 and tb.value >= 0.9
    assert tb.value <= tb.exact
    zero = paper_test_function_bound(fam, fam.R)
    assert zero.value == pytest.approx(0.0, abs=1e-14)


def test_chain_on_hemisphere():
    sol = solve_radial_ball(make_manifold("sphere"), math.pi / 2)
    rep = cheeger_chain_check(sol)
    assert rep.H_omega == pytest.approx(1.0, abs=1e-9)
    assert rep.product == pytest.approx(2 * math.log(2) - 1, abs=1e-8)
    assert rep.ok and rep.product_rad == pytest.approx(rep.product, rel=1e-8)


def test_chain_on_family_tightens():
    slack = []
    for eps in (0.5, 0.1):
        fam = build_family(2, eps, 1.0)
        rep = cheeger_chain_check(solve_radial_ball(fam.manifold, fam.ball_radius(fam.R / 2)), with_h_rad=False)
        assert rep.ok
        slack.append(1 - rep.product)
    assert slack[1] < slack[0]


def test_chain_rejects_large_domains():
    with pytest.raises(ValueError):
        cheeger_chain_check(solve_radial_ball(make_manifold("sphere"), 2.0))


def test_h_omega_is_level_set_infimum():
    # on the flat disk area/volume = 2/r is minimized on the outermost level set
    sol = solve_radial_ball(make_manifold("euclidean"), 1.5)
    assert h_omega(sol) == pytest.approx(2 / 1.5, rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(eps=st.floats(0.02, 0.5), delta=st.floats(0.6, 2.0), extra=st.floats(0.0, 2.0))
def test_family_profile_and_volume_bounds(eps, delta, extra):
    eps = min(eps, 1.0 / (2 * delta))
    fam = build_family(2, eps, delta, minimal_R(2, eps, delta) + extra)
    t = np.linspace(0.0, fam.half_length, 2001)
    assert np.all(fam.closed_form_profile(t) <= eps * np.exp(-delta * t) * (1 + 1e-12))
    r = np.linspace(0.0, fam.half_length, 301)
    assert np.all(fam.relative_volume(r) <= 0.5 * np.exp(-delta * r) + 1e-12)
    H, _ = h_rad(fam, 1500)
    assert H >= delta * (1 - 1e-9)


@settings(max_examples=10, deadline=None)
@given(kind=st.sampled_from(["sphere", "capped_cylinder", "remark26_surface"]), frac=st.floats(0.05, 0.5),
       lam=st.floats(0.3, 3.0))
def test_chain_bound_and_scale_invariance(kind, frac, lam):
    m = make_manifold(kind)
    r = float(m.radius_for_volume(frac * m.total_volume))
    a = cheeger_chain_check(solve_radial_ball(m, r, 1024), with_h_rad=False)
    b = cheeger_chain_check(solve_radial_ball(m.scaled(lam), lam * r, 1024), with_h_rad=False)
    assert a.ok and a.product <= 1 + 1e-6
    assert b.product == pytest.approx(a.product, rel=1e-8)
