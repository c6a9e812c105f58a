"""Symbolic closed form for the Clifford Hopf torus in the Berger spheres.

Everything here is derived with sympy for a symbolic fiber scale ``t``,
without importing the package, and then compared against the numerics.
"""
import functools
import math

import pytest
import sympy as sp
from numpy.testing import assert_allclose

from willmore_lab import energy, grid


@functools.lru_cache(maxsize=None)
def hopf_torus_invariants():
    t = sp.symbols("t", positive=True)
    eta, x1, x2 = x = sp.symbols("eta xi1 xi2", real=True)
    round_metric = sp.diag(1, sp.cos(eta) ** 2, sp.sin(eta) ** 2)
    sigma = sp.Matrix([0, sp.cos(eta) ** 2, sp.sin(eta) ** 2])
    g = round_metric + (t**2 - 1) * sigma * sigma.T
    ginv = sp.simplify(g.inv())
    n = 3
    gam = [[[sp.simplify(sum(ginv[a, d] * (sp.diff(g[d, c], x[b]) + sp.diff(g[d, b], x[c])
                                           - sp.diff(g[b, c], x[d])) for d in range(n)) / 2)
             for c in range(n)] for b in range(n)] for a in range(n)]

    def riemann(a, b, c, d):
        up = [sp.diff(gam[e][d][b], x[c]) - sp.diff(gam[e][c][b], x[d])
              + sum(gam[e][c][f] * gam[f][d][b] - gam[e][d][f] * gam[f][c][b] for f in range(n))
              for e in range(n)]
        return sum(g[a, e] * up[e] for e in range(n))

    # torus x(u, v) = (pi/4, u, v): tangents d/dxi1, d/dxi2
    at = {eta: sp.pi / 4}
    gi = sp.Matrix(2, 2, lambda i, j: g[i + 1, j + 1]).subs(at)
    det = sp.simplify(gi.det())
    # d/deta is g-orthogonal to both tangents and has unit length
    assert sp.simplify(g[0, 1].subs(at)) == 0 and sp.simplify(g[0, 2].subs(at)) == 0
    assert sp.simplify(g[0, 0]) == 1
    # h_ij = g(nabla_i x_j, nu) = Gamma^eta_ij for constant coordinate tangents
    h = sp.Matrix(2, 2, lambda i, j: gam[0][i + 1][j + 1]).subs(at)
    H = sp.simplify((gi.inv() * h).trace() / 2)
    ktilde = sp.simplify(riemann(1, 2, 1, 2).subs(at) / det)
    area = sp.simplify(4 * sp.pi**2 * sp.sqrt(det))
    # the induced metric is constant, so K = 0 and W = integral of (H^2 + Ktilde)
    W = sp.simplify((H**2 + ktilde) * area)
    return t, {"H": H, "Ktilde": ktilde, "area": area, "W": W}


def test_symbolic_invariants():
    t, inv = hopf_torus_invariants()
    assert inv["H"] == 0
    assert sp.simplify(inv["Ktilde"] - t**2) == 0
    assert sp.simplify(inv["area"] - 2 * sp.pi**2 * t) == 0
    assert sp.simplify(inv["W"] - 2 * sp.pi**2 * t**3) == 0
    # the quadratic law only holds at the round metric
    assert sp.solve(sp.Eq(inv["W"], 2 * sp.pi**2 * t**2), t) == [1]


@pytest.mark.parametrize("tv", [0.25, 0.5, 0.8, 1.0, 1.7])
def test_numerics_match_symbolic_oracle(tv):
    t, inv = hopf_torus_invariants()
    imm = grid.make_family("hopf-berger", {"t": tv}, (32, 32))
    rep = energy.willmore(imm, grid.family_chart("hopf-berger", {"t": tv}))
    assert_allclose(rep.willmore, float(inv["W"].subs(t, tv)), rtol=1e-12)
    assert_allclose(rep.area, float(inv["area"].subs(t, tv)), rtol=1e-12)
    assert_allclose(rep.closed_form, 2 * math.pi**2 * tv**3, rtol=1e-15)
