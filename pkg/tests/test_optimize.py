import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from willmore_lab import energy, grid, metrics, optimize
from willmore_lab.errors import OptimizationError, ParameterError
from willmore_lab.optimize import DescentOptions, FourierBasis, ShapeParameters

H2 = metrics.catalog_lookup("h2", {"c": 1.0})
R_OPT = math.asinh(1.0)


# ---------------------------------------------------------------------------
# parametrisation

@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_curve_coefficients_roundtrip(seed):
    rng = np.random.default_rng(seed)
    basis = FourierBasis(64, 8)
    coeffs = rng.normal(size=(2, basis.size)) * 0.1
    pts = np.einsum("ik,dk->id", basis.matrix, coeffs)
    sp = ShapeParameters.from_curve(grid.ClosedCurve(pts), 8)
    assert np.max(np.abs(sp.fourier_coeffs - coeffs)) < 1e-12
    assert np.max(np.abs(sp.remainder)) < 1e-12
    assert np.max(np.abs(sp.grid_points() - pts)) < 1e-12


def test_torus_coefficients_roundtrip():
    imm = grid.make_family("revolution-torus", {"ripple": 0.2}, (24, 24))
    sp = ShapeParameters.from_torus(imm, (3, 3))
    assert np.max(np.abs(sp.grid_points() - imm.points)) < 1e-12
    again = ShapeParameters.from_torus(sp.to_torus(), (3, 3))
    assert np.max(np.abs(again.fourier_coeffs - sp.fourier_coeffs)) < 1e-12


def test_winding_coordinates_ride_on_linear_part():
    imm = grid.make_family("clifford-s2xs1", {}, (16, 16))
    sp = ShapeParameters.from_torus(imm, (2, 2))
    assert np.max(np.abs(sp.to_torus().points - imm.points)) < 1e-12
    # the v-angle winds once and is carried by the fixed linear part
    _, v = imm.parameters()
    assert_allclose(sp.linear[0, :, 2], v, atol=1e-14)


def test_cutoff_too_large():
    with pytest.raises(ParameterError):
        FourierBasis(16, 8).forward(np.zeros(16))


def test_preconditioner_decays_with_wavenumber():
    sp = ShapeParameters.from_curve(grid.geodesic_circle_curve(1.0, 1.0, 64), 8)
    w = sp.preconditioner()[0]
    assert w[0] == 1.0
    assert np.all(np.diff(w[1::2]) < 0)


# ---------------------------------------------------------------------------
# gradients and monotonicity

def test_gradient_assembly_matches_direct_differences(rng):
    sp = ShapeParameters.from_curve(grid.perturbed_circle_curve(1.0, 1.0, 64, 0.1, 3), 8)

    def energy_batch(cb):
        return energy.bending_arrays(sp.grid_points(cb), sp.periods[0], sp.coord_periods, H2)[0]

    h = 1e-6
    for _ in range(5):
        x = sp.fourier_coeffs + 0.02 * rng.normal(size=sp.fourier_coeffs.shape)
        g = optimize.numerical_gradient(energy_batch, x, h)
        direct = np.empty_like(x)
        for idx in np.ndindex(x.shape):
            e = np.zeros_like(x)
            e[idx] = h
            direct[idx] = (energy_batch((x + e)[None])[0] - energy_batch((x - e)[None])[0]) / (2 * h)
        scale = np.maximum(np.abs(direct), 1e-6)
        assert np.max(np.abs(g - direct) / scale) < 1e-4


def test_descend_on_quadratic():
    a = np.array([1.0, 4.0, 9.0])

    def f(batch):
        return 0.5 * np.sum(a * batch**2, axis=-1)

    x, tr = optimize.descend(f, lambda x: True, np.array([1.0, -1.0, 0.5]), DescentOptions())
    assert tr.converged and tr.criterion == "gradient-norm"
    assert np.max(np.abs(x)) < 1e-6
    assert np.all(np.diff(tr.energies) <= 0)


def test_descend_inadmissible_start():
    with pytest.raises(OptimizationError):
        optimize.descend(lambda b: np.zeros(len(b)), lambda x: False, np.zeros(2),
                         DescentOptions())


def test_descend_chart_margin_fatal():
    # energy pulls x towards 2 but the admissible set stops at 1: every step is rejected
    def f(batch):
        return np.sum((batch - 2.0) ** 2, axis=-1)

    with pytest.raises(OptimizationError, match="margin"):
        optimize.descend(f, lambda x: bool(np.all(x < 1.0)), np.array([1.0 - 1e-30]),
                         DescentOptions(max_halvings=60))


# ---------------------------------------------------------------------------
# elastica in the hyperbolic plane

def test_descent_from_larger_circle():
    tr = optimize.minimize_bending(H2, grid.geodesic_circle_curve(1.2, 1.0, 128))
    assert abs(tr.final_energy - 4 * math.pi) < 1e-4
    assert abs(optimize.hyperbolic_radius(tr.final_shape) - R_OPT) < 1e-3
    assert np.all(np.diff(tr.energies) <= 0)


def test_descent_from_ellipse_like_curve():
    tr = optimize.minimize_bending(H2, grid.perturbed_circle_curve(1.0, 1.0, 64, 0.1, 2),
                                   DescentOptions(max_iter=200))
    assert abs(tr.final_energy - 4 * math.pi) < 1e-3
    assert np.all(np.diff(tr.energies) <= 0)


def test_descent_from_optimum_is_immediate():
    tr = optimize.minimize_bending(H2, grid.geodesic_circle_curve(R_OPT, 1.0, 128))
    assert len(tr.iterates) - 1 <= 3
    assert abs(tr.final_energy - 4 * math.pi) < 1e-8


def test_descent_needs_enough_modes():
    with pytest.raises(ParameterError, match="m_max"):
        optimize.minimize_bending(H2, grid.geodesic_circle_curve(1.0), DescentOptions(m_max=4))


@pytest.mark.parametrize("angle", [0.7, 2.0])
def test_disk_rotation_invariance(angle):
    c = grid.perturbed_circle_curve(1.0, 1.0, 64, 0.1, 2)
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    opts = DescentOptions(max_iter=40)
    a = optimize.minimize_bending(H2, c, opts).final_energy
    b = optimize.minimize_bending(H2, grid.ClosedCurve(c.points @ rot.T), opts).final_energy
    assert abs(a - b) < 1e-6


def test_hyperbolic_radius_of_geodesic_circle():
    for r in (0.3, R_OPT, 2.0):
        assert_allclose(optimize.hyperbolic_radius(grid.geodesic_circle_curve(r, 1.0, 64)), r,
                        rtol=1e-9)


# ---------------------------------------------------------------------------
# tori

def _near_clifford(res=32):
    imm = grid.make_family("clifford-s2xs1", {}, (res, res))
    _, v = imm.parameters()
    pts = imm.points.copy()
    pts[..., :2] *= 1 + 0.05 * np.cos(v)[None, :, None]
    return grid.TorusImmersion(pts, imm.periods, imm.coord_periods)


@pytest.mark.slow
def test_near_clifford_converges_to_zero():
    s2xs1 = metrics.catalog_lookup("s2xs1")
    tr = optimize.minimize_willmore(s2xs1, _near_clifford())
    assert tr.final_energy < 1e-6
    assert np.all(np.diff(tr.energies) <= 0)


@pytest.mark.slow
def test_s1_rotation_invariance():
    s2xs1 = metrics.catalog_lookup("s2xs1")
    init = _near_clifford(16)
    shifted = init.points.copy()
    shifted[..., 2] = np.mod(shifted[..., 2] + 1.3, 2 * np.pi)
    opts = DescentOptions(max_iter=20, m_max=(1, 1))
    a = optimize.minimize_willmore(s2xs1, init, opts).final_energy
    b = optimize.minimize_willmore(
        s2xs1, grid.TorusImmersion(shifted, init.periods, init.coord_periods), opts).final_energy
    assert abs(a - b) < 1e-6


@pytest.mark.slow
def test_hyperbolic_product_descends_to_two_pi_squared():
    imm = grid.make_family("circle-h2xs1", {"c": 1.0, "r": 1.2}, (16, 16))
    tr = optimize.minimize_willmore(grid.family_chart("circle-h2xs1"), imm,
                                    DescentOptions(max_iter=500, m_max=(1, 1)))
    assert abs(tr.final_energy - 2 * math.pi**2) < 1e-3


@pytest.mark.slow
def test_flat_product_has_no_minimizer_short_run():
    imm = grid.make_family("flat-rt-r2xs1", {"t": 1.0}, (16, 16))
    tr = optimize.minimize_willmore(metrics.catalog_lookup("r2xs1"), imm,
                                    DescentOptions(max_iter=60, m_max=(1, 1)))
    e = tr.energies
    assert np.all(np.diff(e) <= 0) and e[-1] < e[0]
    assert optimize.mean_planar_radius(tr.final_shape) > 1.0
    assert not tr.converged


def test_trace_csv():
    tr = optimize.minimize_bending(H2, grid.geodesic_circle_curve(1.2, 1.0, 64),
                                   DescentOptions(max_iter=3))
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["iter", "energy", "gradnorm", "step"]
    assert len(rows) == 1 + len(tr.iterates)
    assert tr.criterion == "max-iterations" and not tr.converged


# ---------------------------------------------------------------------------
# scans

def test_flat_scan():
    ts = [1.0, 2.0, 5.0, 10.0, 100.0]
    rows = optimize.scan_family("flat-rt-r2xs1", ts)
    for t, row in zip(ts, rows):
        assert row["param"] == t and not row["error"]
        assert abs(row["W"] - math.pi**2 / t) < 1e-8
        assert row["abs_error"] < 1e-8


def test_berger_scan_uses_cubic_closed_form():
    rows = optimize.scan_family("hopf-berger", [0.25, 0.5, 1.0], resolution=(32, 32))
    for row in rows:
        assert_allclose(row["W"], 2 * math.pi**2 * row["param"] ** 3, rtol=1e-10)


def test_r4_scan():
    rows = optimize.scan_family("geodesic-r4", [0.05, 0.1, 0.17], resolution=(32, 32))
    assert all(r["W"] < 1e-8 and not r["error"] for r in rows)


def test_scan_records_failures_and_continues():
    rows = optimize.scan_family("geodesic-r4", [0.1, 0.3, 0.05], resolution=(16, 16))
    assert not rows[0]["error"] and not rows[2]["error"]
    assert "ParameterError" in rows[1]["error"] and rows[1]["W"] is None
    text = optimize.scan_csv(rows, "lambda")
    lines = text.strip().split("\n")
    assert lines[0] == "lambda,W,closed_form,abs_error,error" and len(lines) == 4


def test_thread_count(monkeypatch):
    monkeypatch.setenv("WILLMORE_LAB_THREADS", "3")
    assert optimize.thread_count() == 3
    monkeypatch.setenv("WILLMORE_LAB_THREADS", "0")
    assert optimize.thread_count() >= 1
    for bad in ("-1", "many"):
        monkeypatch.setenv("WILLMORE_LAB_THREADS", bad)
        with pytest.raises(ParameterError):
            optimize.thread_count()


def test_scan_is_thread_count_independent(monkeypatch):
    monkeypatch.setenv("WILLMORE_LAB_THREADS", "1")
    a = optimize.scan_family("flat-rt-r2xs1", [1.0, 3.0, 7.0], resolution=(16, 16))
    monkeypatch.setenv("WILLMORE_LAB_THREADS", "4")
    b = optimize.scan_family("flat-rt-r2xs1", [1.0, 3.0, 7.0], resolution=(16, 16))
    assert a == b
