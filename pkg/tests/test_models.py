from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import fem_case
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from torsionlab.domains import BallSpec, RectUnionSpec, StarSpec
from torsionlab.fem import rigidity_fem
from torsionlab.manifold import make_manifold
from torsionlab.models import (
    comparison_verdict, gromov_model, model_bound, perelman_gap_factor, r_kd, r_kd_details,
    sphere_cap_radius_for_fraction, sphere_cap_rigidity,
)

LN2 = 2 * math.log(2) - 1


@pytest.mark.parametrize("n", [2, 3, 4, 7])
def test_round_sphere_constant(n):
    assert r_kd(1.0, math.pi, n) == pytest.approx(1.0, abs=1e-12)


def test_flat_branch():
    assert r_kd(0.0, 1.0, 2) == pytest.approx(1.0, abs=1e-12)
    assert r_kd_details(0.0, 1.0, 2).branch == "flat"


def test_positive_branch_value():
    expected = (quad(math.cos, 0, math.pi / 4)[0] / quad(math.cos, 0, math.pi / 2)[0]) ** 0.5
    assert r_kd(1.0, math.pi / 2, 2) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.8409, abs=1e-4)


def test_negative_branch_reports_winner():
    n, D = 3, 2.0
    top = quad(lambda t: math.cosh(2 * t) ** ((n - 1) / 2), 0, D)[0]
    ratio = top / quad(lambda t: math.sin(t) ** (n - 1), 0, math.pi)[0]
    det = r_kd_details(-1.0, D, n)
    assert det.radius == pytest.approx(max(ratio, ratio ** (1 / n)), rel=1e-10)
    assert det.attained_by == ("ratio" if ratio >= ratio ** (1 / n) else "root")
    small = r_kd_details(-1.0, 0.1, 2)
    assert small.attained_by == "root"


def test_rkd_rejects_bad_input():
    with pytest.raises(ValueError):
        r_kd(1.0, 4.0, 2)
    with pytest.raises(ValueError):
        r_kd(1.0, -1.0, 2)


@pytest.mark.parametrize("beta,n,expected", [
    (0.5, 2, math.pi / 2), (0.5, 3, math.pi / 2), ((1 - math.cos(1)) / 2, 2, 1.0), (0.25, 2, math.pi / 3),
])
def test_cap_radius(beta, n, expected):
    assert sphere_cap_radius_for_fraction(beta, n) == pytest.approx(expected, abs=1e-11)


def test_cap_rigidity():
    assert sphere_cap_rigidity(0.5, 2) == pytest.approx(LN2, abs=1e-11)
    # cap of radius pi/3: f(t) = 2 log(cos(t/2) / cos(pi/6))
    r = math.pi / 3
    num = quad(lambda t: 2 * math.log(math.cos(t / 2) / math.cos(r / 2)) * math.sin(t), 0, r, epsabs=1e-14)[0]
    assert sphere_cap_rigidity(0.25, 2) == pytest.approx(num / (1 - math.cos(r)), rel=1e-10)
    caps = [sphere_cap_rigidity(b, 2, 1024) for b in (0.2, 0.05, 0.01, 0.001)]
    assert all(a > b for a, b in zip(caps, caps[1:])) and caps[-1] < 1e-3


def test_gap_factor_examples():
    assert perelman_gap_factor(0.0, 3) == 1.0
    assert perelman_gap_factor(math.pi, 2) == pytest.approx(0.0, abs=1e-14)
    assert perelman_gap_factor(math.pi / 2, 2) == pytest.approx(math.cos(math.pi / 4), rel=1e-12)
    with pytest.raises(ValueError):
        perelman_gap_factor(4.0, 2)


def test_model_bound_and_gromov_sphere():
    mb = model_bound(1.0, math.pi / 2, 2, 0.5)
    assert mb.rigidity_bound == pytest.approx(mb.R_KD**2 * LN2, rel=1e-10)
    g = gromov_model(1.0, math.pi / 2, 2)
    assert g.total_volume == pytest.approx(4 * math.pi * mb.R_KD**2, rel=1e-10)


# -- verdicts ------------------------------------------------------------------
def test_star_against_disk():
    m, mask, f = fem_case("euclidean", (), StarSpec(1.0, 0.3, 3), 256)
    rep = comparison_verdict(rigidity_fem(f).rigidity, mask.volume, m)
    assert rep.passed and rep.slack > 0
    assert rep.model_radius == pytest.approx(math.sqrt(1.045), rel=1e-10)


def test_disk_against_itself():
    m, mask, f = fem_case("euclidean", (), BallSpec(1.0), 256)
    rep = comparison_verdict(rigidity_fem(f).rigidity, mask.volume, m)
    assert rep.passed
    assert abs(rep.slack) <= 0.01 * rep.E_model


def test_sphere_band_against_cap():
    # a band patch with the area of the cap of radius 1
    sphere = make_manifold("sphere")
    area = sphere.ball_volume(1.0)
    t1, t2 = 0.5, 1.2
    width = area / (math.cos(t1) - math.cos(t2))
    spec = RectUnionSpec(((t1, t2, 0.0, width),))
    m, mask, f = fem_case("sphere", (), spec, 256)
    assert mask.volume == pytest.approx(area, rel=1e-12)
    rep = comparison_verdict(rigidity_fem(f).rigidity, mask.volume, sphere, source_total=sphere.total_volume,
                             K=1.0, D=math.pi)
    assert rep.passed and rep.slack > 0
    assert rep.model_radius == pytest.approx(1.0, abs=1e-10)
    assert rep.E_unit_cap_scaled == pytest.approx(rep.E_model, rel=1e-10)


def test_volume_ratio_mismatch_is_rejected():
    sphere = make_manifold("sphere")
    with pytest.raises(ValueError):
        comparison_verdict(0.1, 1.0, sphere, source_total=sphere.total_volume, model_volume=2.0)
    with pytest.raises(ValueError):
        comparison_verdict(0.1, 1.0, sphere)


def test_scaled_sphere_uses_relative_volume():
    big = make_manifold("sphere", radius=2.0)
    rep = comparison_verdict(0.1, big.total_volume / 2, make_manifold("sphere"), source_total=big.total_volume)
    assert rep.alpha == pytest.approx(4.0, rel=1e-12)
    assert rep.model_radius == pytest.approx(math.pi / 2, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 6), d1=st.floats(0.05, math.pi - 0.05), d2=st.floats(0.05, math.pi - 0.05))
def test_rkd_monotone_below_one(n, d1, d2):
    lo, hi = sorted((d1, d2))
    assert r_kd(1.0, lo, n) <= r_kd(1.0, hi, n) + 1e-15
    assert r_kd(1.0, hi, n) < 1.0


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 6), eps=st.floats(0.0, math.pi))
def test_gap_factor_cross_check(n, eps):
    f = perelman_gap_factor(eps, n)
    assert 0.0 <= f <= 1.0
    if eps < math.pi:
        assert f == pytest.approx(r_kd(1.0, math.pi - eps, n) ** 2, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(K=st.floats(0.1, 4.0), D=st.floats(0.1, 1.0), n=st.integers(2, 5))
def test_rkd_scaling(K, D, n):
    # Ric >= (n-1) K and diam <= D is the rescaling by sqrt(K) of curvature 1 and diameter D sqrt(K)
    D = D * math.pi / math.sqrt(K)
    assert r_kd(K, D, n) == pytest.approx(r_kd(1.0, D * math.sqrt(K), n) / math.sqrt(K), rel=1e-12)


def test_cap_fraction_range():
    with pytest.raises(ValueError):
        sphere_cap_radius_for_fraction(1.0, 2)
    assert np.isfinite(sphere_cap_radius_for_fraction(1e-6, 2))
