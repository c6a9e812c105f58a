import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from willmore_lab import energy, grid, metrics, shape
from willmore_lab.errors import ParameterError

TWO_PI = 2 * np.pi


def report(fam, params, res=64):
    imm = grid.make_family(fam, params, (res, res))
    return energy.willmore(imm, grid.family_chart(fam, params))


# ---------------------------------------------------------------------------
# analytic families

def test_clifford_energy_zero():
    rep = report("clifford-s2xs1", {})
    assert rep.willmore < 1e-8 and rep.max_rho_sq < 1e-8 and rep.max_S < 1e-8


@pytest.mark.parametrize("t", [1.0, 2.0, 5.0, 10.0, 100.0])
def test_flat_torus_energy(t):
    rep = report("flat-rt-r2xs1", {"t": t})
    # rho^2 = 1 / (2 t^2) on an area of 4 pi^2 t
    assert abs(rep.willmore - math.pi**2 / t) < 1e-8
    assert rep.richardson_delta < 1e-9
    assert_allclose(rep.area, 4 * math.pi**2 * t, rtol=1e-13)


@pytest.mark.parametrize("c", [1.0, 2.0, 4.0])
def test_geodesic_circle_product_energy(c):
    rep = report("circle-h2xs1", {"c": c})
    # (pi/2) x bending of the circle, which is 4 pi sqrt(c) at radius asinh(1)/sqrt(c)
    assert abs(rep.willmore - 2 * math.pi**2 * math.sqrt(c)) < 1e-6
    assert_allclose(rep.closed_form, 2 * math.pi**2 * math.sqrt(c), rtol=1e-14)


def test_geodesic_circle_product_c4_is_four_pi_squared():
    assert abs(report("circle-h2xs1", {"c": 4.0}).willmore - 4 * math.pi**2) < 1e-6


@pytest.mark.parametrize("lam", [0.05, 0.1, metrics.LAMBDA_MAX])
@pytest.mark.parametrize("branch", ["+", "-"])
def test_geodesic_r4_energy_zero(lam, branch):
    rep = report("geodesic-r4", {"lambda": lam, "mu": lam, "branch_lambda": branch,
                                 "branch_mu": branch})
    assert rep.willmore < 1e-8 and rep.max_S < 1e-8


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0, 2.0])
def test_hopf_berger_energy_matches_closed_form(t):
    rep = report("hopf-berger", {"t": t}, 32)
    assert_allclose(rep.willmore, 2 * math.pi**2 * t**3, rtol=1e-10)
    assert_allclose(rep.breakdown["Ktilde"], 2 * math.pi**2 * t**3, rtol=1e-10)


def test_closed_form_values():
    assert energy.closed_form("flat-rt-r2xs1", {"t": 4.0}) == math.pi**2 / 4
    assert energy.closed_form("clifford-s2xs1") == 0.0
    assert_allclose(energy.closed_form("circle-h2xs1", {"c": 2.0}),
                    2 * math.pi**2 * math.sqrt(2), rtol=1e-14)
    with pytest.raises(ParameterError):
        energy.closed_form("revolution-torus")


# ---------------------------------------------------------------------------
# consistency

FAMILIES = [
    ("flat-rt-r2xs1", {"t": 3.0}),
    ("circle-h2xs1", {"c": 2.0, "r": 0.7}),
    ("hopf-berger", {"t": 0.6}),
    ("geodesic-r4", {"lambda": 0.1, "mu": 0.05}),
    ("revolution-torus", {"ripple": 0.15, "tilt": 0.2}),
    ("revolution-torus", {"ambient": "sol3", "R": 0.6, "r": 0.2, "ripple": 0.1}),
]


@pytest.mark.parametrize("fam,params", FAMILIES)
def test_rho_form_equals_gauss_form(fam, params):
    rep = report(fam, params)
    assert rep.two_form_delta < 1e-8 * max(1.0, rep.willmore)


@pytest.mark.parametrize("fam,params", FAMILIES)
@pytest.mark.parametrize("scale", [0.5, 3.0])
def test_constant_metric_scaling_invariance(fam, params, scale):
    imm = grid.make_family(fam, params, (48, 48))
    chart = grid.family_chart(fam, params)
    w0 = energy.willmore(imm, chart).willmore
    w1 = energy.willmore(imm, chart.scaled(scale)).willmore
    assert abs(w1 - w0) < 1e-9 * max(1.0, w0)


@pytest.mark.parametrize("fam,params", [f for f in FAMILIES if f[0] != "geodesic-r4"])
def test_fast_path_matches_frame_path(fam, params):
    imm = grid.make_family(fam, params, (32, 32))
    chart = grid.family_chart(fam, params)
    fast = energy.rho_energy(imm.points, chart, imm.periods, imm.coord_periods)
    sd = shape.shape_data(imm, chart)
    slow = grid.quadrature(0.5 * sd.rho_sq, sd.area_element, imm)
    assert_allclose(fast, slow, rtol=1e-12, atol=1e-14)


def test_flat_torus_energy_decreases_in_t():
    ws = [report("flat-rt-r2xs1", {"t": t}, 16).willmore for t in (1.0, 1.5, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(ws, ws[1:]))


@settings(max_examples=25)
@given(st.floats(0.0, 0.3), st.floats(0.0, 1.5), st.floats(1.5, 3.0))
def test_energy_nonnegative(ripple, tilt, big):
    rep = report("revolution-torus", {"R": big, "r": 1.0, "ripple": ripple, "tilt": tilt}, 32)
    assert rep.willmore >= -1e-12


def test_round_torus_in_euclidean_space():
    # the sqrt(2) torus attains 2 pi^2 in Euclidean space
    rep = report("revolution-torus", {"R": math.sqrt(2), "r": 1.0}, 64)
    assert abs(rep.willmore - 2 * math.pi**2) < 1e-8


def test_report_flat_keys():
    flat = report("flat-rt-r2xs1", {"t": 1.0}, 16).flat()
    for key in ("willmore", "area", "breakdown.H2", "breakdown.K", "breakdown.Ktilde",
                "resolution", "richardson_delta", "closed_form", "abs_error"):
        assert key in flat


def test_odd_resolution_has_no_richardson_delta():
    assert report("flat-rt-r2xs1", {"t": 1.0}, 17).richardson_delta is None


# ---------------------------------------------------------------------------
# curves

@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_euclidean_circle_bending(r):
    s = np.arange(64) * TWO_PI / 64
    c = grid.ClosedCurve(np.stack([r * np.cos(s), r * np.sin(s)], axis=-1))
    bend, length = energy.bending_energy(c, metrics.catalog_lookup("e2"))
    assert_allclose(bend, TWO_PI / r, rtol=1e-12)
    assert_allclose(length, TWO_PI * r, rtol=1e-12)


@pytest.mark.parametrize("rho", [0.3, math.asinh(1.0), 1.5, 2.5])
def test_geodesic_circle_bending(rho):
    h2 = metrics.catalog_lookup("h2", {"c": 1.0})
    bend, length = energy.bending_energy(grid.geodesic_circle_curve(rho, 1.0, 128), h2)
    # k = coth rho and length 2 pi sinh rho
    assert_allclose(bend, TWO_PI * math.cosh(rho) ** 2 / math.sinh(rho), rtol=1e-10)
    assert_allclose(length, TWO_PI * math.sinh(rho), rtol=1e-12)


def test_geodesic_circle_bending_minimum_at_unit_sinh():
    rhos = np.linspace(0.3, 2.0, 1701)
    vals = [energy.geodesic_circle_bending(r) for r in rhos]
    assert_allclose(math.sinh(rhos[int(np.argmin(vals))]), 1.0, atol=2e-3)
    assert_allclose(energy.geodesic_circle_bending(math.asinh(1.0)), 4 * math.pi, rtol=1e-14)


@pytest.mark.parametrize("amp,k", [(0.0, 2), (0.1, 2), (0.2, 3), (0.05, 5)])
def test_curve_product_energy_is_half_pi_bending(amp, k):
    h2xs1 = metrics.catalog_lookup("h2xs1", {"c": 1.0})
    c = grid.perturbed_circle_curve(1.0, 1.0, 128, amp, k)
    rep = energy.curve_to_torus_energy(c, h2xs1)
    assert rep.extras["bending_delta"] < 1e-8


def test_curve_product_scaled_hyperbolic_factor():
    c = 2.0
    chart = metrics.catalog_lookup("h2xs1", {"c": c})
    curve = grid.geodesic_circle_curve(math.asinh(1.0) / math.sqrt(c), c, 128)
    rep = energy.curve_to_torus_energy(curve, chart)
    assert abs(rep.willmore - 2 * math.pi**2 * math.sqrt(c)) < 1e-8


def test_curve_product_needs_product_chart():
    with pytest.raises(ParameterError):
        energy.curve_to_torus_energy(grid.geodesic_circle_curve(1.0), metrics.catalog_lookup("e3"))
