"""Descent on truncated Fourier coefficients, and one-parameter family scans.

The shape variable is the band-limited part of each chart coordinate (after
removing any fixed winding of angle coordinates). Gradients are central
differences in coefficient space, evaluated as one batched energy call.
Steps use a Barzilai-Borwein length capped by ``max_step`` and are accepted
only under the Armijo condition, so accepted energies never increase.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import energy, grid
from .errors import ChartDomainError, OptimizationError, ParameterError, RegularityError
from .grid import ClosedCurve, TorusImmersion

PRECOND_POWER = 2.0


@dataclass
class DescentOptions:
    max_iter: int = 5000
    grad_tol: float = 1e-6
    fd_step: float = 1e-6
    max_step: float = 0.05
    armijo: float = 1e-4
    max_halvings: int = 60
    m_max: Optional[object] = None  # int for curves, (M_u, M_v) for tori


@dataclass(frozen=True)
class FourierBasis:
    """Real trigonometric basis ``1, cos s, sin s, ..., cos Ms, sin Ms`` on N nodes."""

    n: int
    m_max: int
    period: float = grid.TWO_PI

    @property
    def size(self):
        return 2 * self.m_max + 1

    @property
    def wavenumbers(self):
        return np.concatenate([[0], np.repeat(np.arange(1, self.m_max + 1), 2)])

    @property
    def matrix(self):
        s = np.arange(self.n) * grid.TWO_PI / self.n
        cols = [np.ones(self.n)]
        for k in range(1, self.m_max + 1):
            cols += [np.cos(k * s), np.sin(k * s)]
        return np.stack(cols, axis=-1)

    def forward(self, f, axis=0):
        if 2 * self.m_max >= self.n:
            raise ParameterError("Fourier cutoff too large for the grid")
        b = self.matrix
        w = np.full(self.size, 2.0 / self.n)
        w[0] = 1.0 / self.n
        f = np.moveaxis(np.asarray(f, dtype=float), axis, -1)
        return np.moveaxis((f @ b) * w, -1, axis)


@dataclass(frozen=True)
class ShapeParameters:
    """Truncated Fourier coefficients of a shape plus the fixed parts it rides on.

    ``coeffs`` has shape ``(dim, 2M+1)`` for curves and ``(dim, 2M_u+1, 2M_v+1)``
    for tori. ``linear`` is the winding part of angle coordinates and
    ``remainder`` the (fixed) part of the initial grid above the cutoff.
    """

    mode: str
    fourier_coeffs: np.ndarray
    bases: tuple
    linear: np.ndarray
    remainder: np.ndarray
    periods: tuple
    coord_periods: tuple
    bounds: Optional[dict] = None  # chart name and margin the grid must respect

    @classmethod
    def from_curve(cls, c: ClosedCurve, m_max=8):
        per, slopes = grid.split_winding(c.points, c.coord_periods, (c.period,))
        basis = FourierBasis(c.resolution, int(m_max), c.period)
        coeffs = basis.forward(per, axis=0).T
        s = np.arange(c.resolution) * c.period / c.resolution
        linear = s[:, None] * slopes[None, :, 0]
        remainder = per - basis.matrix @ coeffs.T
        return cls("curve-h2", coeffs, (basis,), linear, remainder, (c.period,),
                   tuple(c.coord_periods))

    @classmethod
    def from_torus(cls, imm: TorusImmersion, m_max=(2, 2)):
        if np.isscalar(m_max):
            m_max = (int(m_max), int(m_max))
        per, slopes = grid.split_winding(imm.points, imm.coord_periods, imm.periods)
        nu, nv = imm.resolution
        bu = FourierBasis(nu, int(m_max[0]), imm.periods[0])
        bv = FourierBasis(nv, int(m_max[1]), imm.periods[1])
        coeffs = bv.forward(bu.forward(per, axis=0), axis=1)  # (2Mu+1, 2Mv+1, n)
        coeffs = np.moveaxis(coeffs, -1, 0)
        u, v = imm.parameters()
        linear = u[:, None, None] * slopes[None, None, :, 0] + v[None, :, None] * slopes[None, None, :, 1]
        obj = cls("torus-generic", coeffs, (bu, bv), linear, np.zeros_like(per), imm.periods,
                  tuple(imm.coord_periods))
        remainder = per - obj._band(coeffs)
        return cls("torus-generic", coeffs, (bu, bv), linear, remainder, imm.periods,
                   tuple(imm.coord_periods))

    def _band(self, coeffs):
        if self.mode == "curve-h2":
            return np.einsum("ik,...dk->...id", self.bases[0].matrix, coeffs)
        bu, bv = self.bases[0].matrix, self.bases[1].matrix
        return np.einsum("ik,jl,...dkl->...ijd", bu, bv, coeffs)

    def grid_points(self, coeffs=None):
        """Grid(s) for one coefficient array or a leading batch of them."""
        coeffs = self.fourier_coeffs if coeffs is None else coeffs
        return self._band(coeffs) + self.linear + self.remainder

    def with_coeffs(self, coeffs):
        return replace(self, fourier_coeffs=coeffs)

    def preconditioner(self):
        """Diagonal weights ``(1 + |k|^2)^-2``, matching the k^4 stiffness of bending terms."""
        if self.mode == "curve-h2":
            k2 = self.bases[0].wavenumbers.astype(float) ** 2
        else:
            ku, kv = self.bases[0].wavenumbers, self.bases[1].wavenumbers
            k2 = (ku[:, None] ** 2 + kv[None, :] ** 2).astype(float)
        return np.broadcast_to((1.0 + k2) ** -PRECOND_POWER, self.fourier_coeffs.shape).copy()

    def with_bounds(self, chart):
        return replace(self, bounds={"chart": chart.name, "margin": chart.singular_margin})

    @property
    def size(self):
        return self.fourier_coeffs.size

    def to_curve(self, coeffs=None):
        return ClosedCurve(self.grid_points(coeffs), self.periods[0], self.coord_periods)

    def to_torus(self, coeffs=None, family_tag=None):
        return TorusImmersion(self.grid_points(coeffs), self.periods, self.coord_periods,
                              family_tag)


@dataclass
class OptimizationTrace:
    iterates: list = field(default_factory=list)  # (energy, gradnorm, step)
    final_shape: object = None
    converged: bool = False
    criterion: str = ""
    final_params: Optional[ShapeParameters] = None

    @property
    def energies(self):
        return np.array([it[0] for it in self.iterates])

    @property
    def final_energy(self):
        return self.iterates[-1][0]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "energy", "gradnorm", "step"])
        for i, (e, gn, st) in enumerate(self.iterates):
            w.writerow([i, format(e, ".17g"), format(gn, ".17g"), format(st, ".17g")])
        return buf.getvalue()


def numerical_gradient(energy_batch, x, step):
    """Central-difference gradient, all perturbations evaluated in one batch."""
    n = x.size
    eye = np.eye(n).reshape((n,) + x.shape) * step
    batch = np.concatenate([x[None] + eye, x[None] - eye], axis=0)
    vals = energy_batch(batch)
    return ((vals[:n] - vals[n:]) / (2.0 * step)).reshape(x.shape)


def descend(energy_batch, admissible, x0, opts: DescentOptions, precond=None):
    """Monotone gradient descent, optionally in a diagonally weighted metric.

    The search direction is ``-precond * grad``; convergence is judged on the
    plain Euclidean gradient norm.
    """
    x = np.array(x0, dtype=float)
    pw = np.ones_like(x) if precond is None else np.asarray(precond, dtype=float)
    if not admissible(x):
        raise OptimizationError("initial shape is not admissible (chart margin or regularity)")
    e = float(energy_batch(x[None])[0])
    trace = OptimizationTrace()
    g = numerical_gradient(energy_batch, x, opts.fd_step)
    gn = float(np.linalg.norm(g))
    trace.iterates.append((e, gn, 0.0))
    prev = None
    for _ in range(opts.max_iter):
        if gn < opts.grad_tol:
            trace.converged, trace.criterion = True, "gradient-norm"
            return x, trace
        d = pw * g
        dn = float(np.linalg.norm(d))
        slope = float(np.sum(d * g))
        if prev is None:
            alpha = opts.max_step / dn
        else:
            dx, dg = x - prev[0], g - prev[1]
            sy = float(np.sum(dx * dg))
            alpha = float(np.sum(dx * dx / pw)) / sy if sy > 0 else opts.max_step / dn
        alpha = min(alpha, opts.max_step / dn)
        halvings = 0
        while True:
            trial = x - alpha * d
            if admissible(trial):
                try:
                    et = float(energy_batch(trial[None])[0])
                except (RegularityError, ChartDomainError):
                    et = math.inf
                if et <= e - opts.armijo * alpha * slope:
                    break
                rejected_for_margin = False
            else:
                rejected_for_margin = True
            alpha *= 0.5
            halvings += 1
            if halvings > opts.max_halvings:
                if rejected_for_margin:
                    raise OptimizationError("shape keeps leaving the chart margin")
                trace.converged, trace.criterion = False, "line-search-stalled"
                return x, trace
        prev = (x, g)
        x, e = trial, et
        g = numerical_gradient(energy_batch, x, opts.fd_step)
        gn = float(np.linalg.norm(g))
        trace.iterates.append((e, gn, alpha))
    trace.converged = gn < opts.grad_tol
    trace.criterion = "gradient-norm" if trace.converged else "max-iterations"
    return x, trace


# ---------------------------------------------------------------------------
# curves

def minimize_bending(chart2d, init: ClosedCurve, opts: DescentOptions = None) -> OptimizationTrace:
    """Minimize the bending energy of a closed curve over its Fourier coefficients."""
    opts = opts or DescentOptions()
    m_max = 8 if opts.m_max is None else int(opts.m_max)
    if m_max < 8:
        raise ParameterError("curve descent needs m_max >= 8")
    if chart2d.dim != 2:
        raise ParameterError("bending descent needs a 2-dimensional chart")
    grid.curve_jet(init, chart2d)
    sp = ShapeParameters.from_curve(init, m_max).with_bounds(chart2d)

    def energy_batch(cb):
        pts = sp.grid_points(cb)
        return energy.bending_arrays(pts, sp.periods[0], sp.coord_periods, chart2d,
                                     check=False)[0]

    def admissible(c):
        pts = sp.grid_points(c)
        return bool(np.all(chart2d.chart_domain(pts)))

    x, trace = descend(energy_batch, admissible, sp.fourier_coeffs, opts, sp.preconditioner())
    trace.final_params = sp.with_coeffs(x)
    trace.final_shape = trace.final_params.to_curve()
    return trace


def hyperbolic_distance(p, q, c=1.0):
    """Distance in the Poincare disk of H^2(-c)."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    num = 2.0 * np.sum((p - q) ** 2, axis=-1)
    den = (1.0 - np.sum(p * p, axis=-1)) * (1.0 - np.sum(q * q, axis=-1))
    return np.arccosh(1.0 + num / den) / math.sqrt(c)


def hyperbolic_radius(c_: ClosedCurve, c=1.0, oversample=1024):
    """Half the hyperbolic diameter of a curve in the Poincare disk."""
    pts = grid.fourier_resample(c_.points, max(oversample, c_.resolution), axis=0)
    d = hyperbolic_distance(pts[:, None, :], pts[None, :, :], c)
    return 0.5 * float(np.max(d))


# ---------------------------------------------------------------------------
# tori

def minimize_willmore(chart, init: TorusImmersion, opts: DescentOptions = None) -> OptimizationTrace:
    """Minimize the Willmore energy of a torus over its truncated Fourier coefficients."""
    opts = opts or DescentOptions(max_iter=500)
    m_max = (2, 2) if opts.m_max is None else opts.m_max
    if init.dim != chart.dim:
        raise ParameterError("immersion dimension does not match the chart")
    chart.check_domain(init.points)
    grid.check_regularity(init, chart)
    sp = ShapeParameters.from_torus(init, m_max).with_bounds(chart)

    def energy_batch(cb):
        pts = sp.grid_points(cb)
        return energy.rho_energy(pts, chart, sp.periods, sp.coord_periods, check=False)

    def admissible(c):
        pts = sp.grid_points(c)
        return bool(np.all(chart.chart_domain(pts)))

    x, trace = descend(energy_batch, admissible, sp.fourier_coeffs, opts, sp.preconditioner())
    trace.final_params = sp.with_coeffs(x)
    trace.final_shape = trace.final_params.to_torus()
    return trace


def mean_planar_radius(imm: TorusImmersion):
    """Mean Euclidean distance of the first two chart coordinates from their centroid."""
    xy = imm.points[..., :2]
    ctr = xy.reshape(-1, 2).mean(axis=0)
    return float(np.mean(np.linalg.norm(xy - ctr, axis=-1)))


# ---------------------------------------------------------------------------
# scans

SCAN_PARAM = {
    "flat-rt-r2xs1": "t",
    "hopf-berger": "t",
    "circle-h2xs1": "r",
    "geodesic-r4": "lambda",
    "clifford-s2xs1": None,
}


def thread_count():
    """Worker count from ``WILLMORE_LAB_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("WILLMORE_LAB_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"WILLMORE_LAB_THREADS must be a non-negative integer, got {raw!r}") from None
    if n < 0:
        raise ParameterError(f"WILLMORE_LAB_THREADS must be a non-negative integer, got {raw!r}")
    return n if n > 0 else (os.cpu_count() or 1)


def scan_family(family, param_grid, base_params=None, resolution=(64, 64), param=None):
    """Evaluate W across a parameter grid; failures become rows with an error tag."""
    param = param or SCAN_PARAM.get(family)
    if param is None:
        raise ParameterError(f"family {family!r} has no scan parameter")
    base = dict(base_params or {})

    def one(value):
        p = dict(base)
        p[param] = float(value)
        if family == "geodesic-r4" and param == "lambda" and "mu" not in base:
            p["mu"] = float(value)
        row = {"param": float(value), "W": None, "closed_form": None, "abs_error": None,
               "error": ""}
        try:
            imm = grid.make_family(family, p, resolution)
            rep = energy.willmore(imm, grid.family_chart(family, p))
            row.update(W=rep.willmore, closed_form=rep.closed_form, abs_error=rep.abs_error)
        except (ParameterError, ChartDomainError, RegularityError, FloatingPointError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(pool.map(one, list(param_grid)))
    return rows


def scan_csv(rows, param_name="param"):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([param_name, "W", "closed_form", "abs_error", "error"])
    f = lambda x: "" if x is None else format(float(x), ".17g")  # noqa: E731
    for r in rows:
        w.writerow([f(r["param"]), f(r["W"]), f(r["closed_form"]), f(r["abs_error"]), r["error"]])
    return buf.getvalue()
