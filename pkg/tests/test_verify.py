import csv
import io
import math

import pytest

from willmore_lab import grid, verify


@pytest.fixture(scope="module")
def suite64():
    return verify.verify_suite(64)


def by_case(rows, prefix):
    return [r for r in rows if r.case.startswith(prefix)]


def test_suite_rows_pass_except_non_round_berger(suite64):
    for r in suite64:
        if r.case.startswith("hopf-berger") and "t=1 " not in r.case:
            continue
        assert r.status == "PASS", r.line()


def test_suite_berger_rows_follow_cubic_law(suite64):
    # the row target is the quadratic law; the measured value is the cubic closed form
    for r in by_case(suite64, "hopf-berger"):
        t = float(r.case.split("t=")[1].split()[0])
        assert abs(r.measured - 2 * math.pi**2 * t**3) < 1e-8
        assert r.expected == pytest.approx(2 * math.pi**2 * t**2)
        assert r.status == ("PASS" if t == 1.0 else "FAIL")


def test_suite_covers_reference_cases(suite64):
    assert len(by_case(suite64, "flat-rt-r2xs1")) == 5
    assert len(by_case(suite64, "geodesic-r4")) == 12
    assert len(by_case(suite64, "circle-h2xs1")) == 4
    assert len(by_case(suite64, "clifford-s2xs1")) == 4


def test_mis_scaled_berger_is_caught():
    rows = verify.verify_suite(32, berger_scale=lambda t: t * t)
    for r in by_case(rows, "hopf-berger"):
        t = float(r.case.split("t=")[1].split()[0])
        # building the metric with t^2 gives 2 pi^2 t^6 through the cubic law
        assert abs(r.measured - 2 * math.pi**2 * t**6) < 1e-8
        if t != 1.0:
            assert r.status == "FAIL"


def test_low_resolution_gate():
    rows = verify.verify_suite(16)
    el = [r for r in rows if r.case == "clifford-s2xs1 EL max"][0]
    assert el.status == "INCONCLUSIVE" and "resolution" in el.note
    for r in rows:
        assert r.status != "FAIL" or r.case.startswith("hopf-berger"), r.line()


def test_gate_marks_unconverged_rows():
    row = verify._row("x", 1.0, 1.0, 1e-6, delta=1e-3)
    assert row.status == "INCONCLUSIVE" and "richardson_delta" in row.note
    assert verify._row("x", 1.0, 1.0, 1e-6, delta=1e-12).status == "PASS"
    assert verify._row("x", 1.0, 2.0, 1e-6, delta=1e-12).status == "FAIL"
    assert verify._bound_row("x", 2.0, 1.0, delta=0.0).status == "FAIL"


def test_format_and_csv(suite64):
    text = verify.format_suite(suite64)
    assert text.strip().split("\n")[-1].endswith("inconclusive")
    rows = list(csv.reader(io.StringIO(verify.suite_csv(suite64))))
    assert rows[0] == ["case", "status", "measured", "expected", "tol", "note"]
    assert len(rows) == 1 + len(suite64)


def test_verify_shape_generic():
    imm = grid.make_family("flat-rt-r2xs1", {"t": 1.0}, (32, 32))
    out = verify.verify_shape(imm, grid.family_chart("flat-rt-r2xs1"))
    assert out["verdict"] == "generic non-willmore"
    assert out["el_max_abs"] > 0.01


def test_verify_shape_four_manifold():
    p = {"lambda": 0.1, "mu": 0.1}
    imm = grid.make_family("geodesic-r4", p, (32, 32))
    out = verify.verify_shape(imm, grid.family_chart("geodesic-r4", p))
    assert out["verdict"] == "totally-geodesic willmore" and out["el_max_abs"] is None
