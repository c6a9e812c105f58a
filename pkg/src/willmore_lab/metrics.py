"""Ambient Riemannian manifolds, each realized as a single coordinate chart.

All chart callables are vectorized: a point array of shape ``(..., n)`` maps
to metric components of shape ``(..., n, n)`` and metric derivatives of shape
``(..., n, n, n)`` with ``dg[..., A, B, C] = d g_AB / d x^C``.

Curvature convention: ``R[..., A, B, C, D] = <d_A, R(d_C, d_D) d_B>``, so that
``R(u, v, u, v)`` is the sectional curvature of an orthonormal pair and the
unit round sphere has curvature +1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ChartDomainError, ParameterError

TWO_PI = 2.0 * np.pi
LAMBDA_MAX = 3.0 - 2.0 * math.sqrt(2.0)

# relative step for differencing analytic Christoffels into the Riemann tensor
RIEMANN_STEP = 1e-5
# steps used when a chart ships no analytic metric derivatives
FD_METRIC_STEP = 1e-5
FD_RIEMANN_STEP = 1e-4


@dataclass(frozen=True)
class MetricChart:
    """A coordinate chart of an ambient manifold.

    ``singular_distance`` measures (in chart terms) how far a point is from the
    chart's singular set; points closer than ``singular_margin`` are rejected.
    ``periods`` holds the period of each angle coordinate, ``None`` otherwise.
    ``scale`` multiplies the whole metric by ``scale**2`` (constant conformal
    change).
    """

    name: str
    dim: int
    coordinate_names: tuple
    metric: Callable
    dmetric: Optional[Callable] = None
    singular_distance: Optional[Callable] = None
    singular_margin: float = 0.0
    periods: tuple = ()
    params: dict = field(default_factory=dict)
    scale: float = 1.0

    def __post_init__(self):
        if not self.periods:
            object.__setattr__(self, "periods", (None,) * self.dim)

    def metric_at(self, p):
        p = np.asarray(p, dtype=float)
        return self.scale**2 * self.metric(p)

    def metric_derivatives(self, p):
        p = np.asarray(p, dtype=float)
        if self.dmetric is not None:
            return self.scale**2 * self.dmetric(p)
        return _central_difference(self.metric_at, p, FD_METRIC_STEP)

    def distance_to_singular(self, p):
        p = np.asarray(p, dtype=float)
        if self.singular_distance is None:
            return np.full(p.shape[:-1], np.inf)
        return self.singular_distance(p)

    def chart_domain(self, p):
        return self.distance_to_singular(p) > self.singular_margin

    def check_domain(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dim:
            raise ParameterError(
                f"{self.name}: points have {p.shape[-1]} coordinates, chart has {self.dim}")
        ok = self.chart_domain(p) & np.all(np.isfinite(p), axis=-1)
        if not np.all(ok):
            bad = np.argwhere(~ok)[0]
            raise ChartDomainError(
                f"{self.name}: point at index {tuple(int(i) for i in bad)} "
                f"is outside the chart domain (margin {self.singular_margin})")

    def scaled(self, factor):
        return replace(self, scale=self.scale * float(factor))

    @property
    def has_analytic_derivatives(self):
        return self.dmetric is not None


@dataclass(frozen=True)
class CurvatureData:
    christoffel: np.ndarray
    riemann: Optional[np.ndarray] = None


def _central_difference(fn, p, rel_step):
    """Stack d fn / d x^C along a new last axis."""
    n = p.shape[-1]
    out = []
    for c in range(n):
        h = rel_step * np.maximum(1.0, np.abs(p[..., c]))
        dp = np.zeros_like(p)
        dp[..., c] = h
        fp = fn(p + dp)
        fm = fn(p - dp)
        h = h.reshape(h.shape + (1,) * (fp.ndim - h.ndim))
        out.append((fp - fm) / (2.0 * h))
    return np.stack(out, axis=-1)


def christoffel_from_derivatives(g, dg):
    """Gamma^A_BC from metric components and their first derivatives."""
    ginv = np.linalg.inv(g)
    # lowered: Gamma_DBC = 1/2 (d_B g_DC + d_C g_DB - d_D g_BC)
    low = 0.5 * (np.swapaxes(dg, -1, -2) + dg - np.moveaxis(dg, -1, -3))
    n = g.shape[-1]
    out = ginv @ low.reshape(low.shape[:-2] + (n * n,))
    return out.reshape(low.shape)


def christoffels(chart: MetricChart, p, check=True):
    """Christoffel symbols ``Gamma[..., A, B, C]`` at the points ``p``."""
    p = np.asarray(p, dtype=float)
    if check:
        chart.check_domain(p)
    g = chart.metric_at(p)
    if np.any(np.linalg.det(g) <= 0):
        raise ChartDomainError(f"{chart.name}: metric not invertible at a sampled point")
    return christoffel_from_derivatives(g, chart.metric_derivatives(p))


def riemann_tensor(chart: MetricChart, p, check=True):
    """Fully lowered Riemann tensor at ``p``; also returns the Christoffels."""
    p = np.asarray(p, dtype=float)
    if check:
        chart.check_domain(p)
    gam = christoffels(chart, p, check=False)
    step = RIEMANN_STEP if chart.has_analytic_derivatives else FD_RIEMANN_STEP
    # dgam[..., A, B, C, E] = d_E Gamma^A_BC
    dgam = _central_difference(lambda q: christoffels(chart, q, check=False), p, step)
    # R^A_BCD = d_C Gamma^A_DB - d_D Gamma^A_CB + Gamma^A_CE Gamma^E_DB - Gamma^A_DE Gamma^E_CB
    t1 = np.einsum("...adbc->...abcd", dgam)
    up = t1 - np.swapaxes(t1, -1, -2)
    quad = np.einsum("...ace,...edb->...abcd", gam, gam)
    up = up + quad - np.swapaxes(quad, -1, -2)
    g = chart.metric_at(p)
    riem = np.einsum("...ae,...ebcd->...abcd", g, up)
    return CurvatureData(christoffel=gam, riemann=riem)


def sectional_curvature(chart: MetricChart, p, u, v, riemann=None):
    """Sectional curvature of the plane spanned by tangent vectors ``u, v``."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if riemann is None:
        riemann = riemann_tensor(chart, p).riemann
    g = chart.metric_at(p)
    uu = np.einsum("...a,...ab,...b->...", u, g, u)
    vv = np.einsum("...a,...ab,...b->...", v, g, v)
    uv = np.einsum("...a,...ab,...b->...", u, g, v)
    gram = uu * vv - uv**2
    if np.any(gram <= 1e-12 * np.maximum(uu * vv, 1e-300)):
        raise ParameterError("sectional curvature: tangent vectors are (nearly) parallel")
    num = np.einsum("...abcd,...a,...b,...c,...d->...", riemann, u, v, u, v)
    return num / gram


# ---------------------------------------------------------------------------
# building blocks

def _conformal_plane(phi, dphi):
    """2D block ``phi(x) (dx1^2 + dx2^2)``; ``dphi`` returns the gradient (..., 2)."""

    def metric(x):
        f = phi(x)
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = f
        out[..., 1, 1] = f
        return out

    def dmetric(x):
        df = dphi(x)
        out = np.zeros(x.shape[:-1] + (2, 2, 2))
        out[..., 0, 0, :] = df
        out[..., 1, 1, :] = df
        return out

    return metric, dmetric


def _flat(k):
    def metric(x):
        return np.broadcast_to(np.eye(k), x.shape[:-1] + (k, k)).copy()

    def dmetric(x):
        return np.zeros(x.shape[:-1] + (k, k, k))

    return metric, dmetric


def _product(blocks):
    """Block-diagonal product metric from ``[(size, metric, dmetric), ...]``."""
    n = sum(b[0] for b in blocks)

    def metric(x):
        out = np.zeros(x.shape[:-1] + (n, n))
        i = 0
        for k, m, _ in blocks:
            out[..., i:i + k, i:i + k] = m(x[..., i:i + k])
            i += k
        return out

    def dmetric(x):
        out = np.zeros(x.shape[:-1] + (n, n, n))
        i = 0
        for k, _, dm in blocks:
            out[..., i:i + k, i:i + k, i:i + k] = dm(x[..., i:i + k])
            i += k
        return out

    return metric, dmetric


def _sphere_factor():
    # stereographic projection from the south pole, unit sphere
    def phi(x):
        s = np.sum(x**2, axis=-1)
        return 4.0 / (1.0 + s) ** 2

    def dphi(x):
        s = np.sum(x**2, axis=-1)
        return (-16.0 / (1.0 + s) ** 3)[..., None] * x

    def dist(x):
        # spherical distance to the south pole (sent to infinity)
        return np.pi - 2.0 * np.arctan(np.sqrt(np.sum(x[..., :2] ** 2, axis=-1)))

    return _conformal_plane(phi, dphi), dist


def _hyperbolic_factor(c):
    # Poincare disk scaled to constant curvature -c
    def phi(x):
        s = np.sum(x**2, axis=-1)
        return 4.0 / (c * (1.0 - s) ** 2)

    def dphi(x):
        s = np.sum(x**2, axis=-1)
        return (16.0 / (c * (1.0 - s) ** 3))[..., None] * x

    def dist(x):
        return 1.0 - np.sqrt(np.sum(x[..., :2] ** 2, axis=-1))

    return _conformal_plane(phi, dphi), dist


def _exp_rational_factor(lam):
    """``exp(lam |x|^2) / (1 + |x|^2)^2``, the planar factor of the R^4 metric."""

    def phi(x):
        s = np.sum(x**2, axis=-1)
        return np.exp(lam * s) / (1.0 + s) ** 2

    def dphi(x):
        s = np.sum(x**2, axis=-1)
        return (phi(x) * (2.0 * lam - 4.0 / (1.0 + s)))[..., None] * x

    return _conformal_plane(phi, dphi)


def _berger(t):
    # Hopf coordinates (eta, xi1, xi2); sigma = cos^2 eta dxi1 + sin^2 eta dxi2
    a = t * t - 1.0

    def metric(x):
        eta = x[..., 0]
        c2, s2 = np.cos(eta) ** 2, np.sin(eta) ** 2
        sig = np.stack([np.zeros_like(eta), c2, s2], axis=-1)
        out = a * sig[..., :, None] * sig[..., None, :]
        out[..., 0, 0] += 1.0
        out[..., 1, 1] += c2
        out[..., 2, 2] += s2
        return out

    def dmetric(x):
        eta = x[..., 0]
        c2, s2 = np.cos(eta) ** 2, np.sin(eta) ** 2
        s2e = np.sin(2.0 * eta)
        sig = np.stack([np.zeros_like(eta), c2, s2], axis=-1)
        dsig = np.stack([np.zeros_like(eta), -s2e, s2e], axis=-1)
        out = np.zeros(x.shape[:-1] + (3, 3, 3))
        d = a * (dsig[..., :, None] * sig[..., None, :] + sig[..., :, None] * dsig[..., None, :])
        d[..., 1, 1] += -s2e
        d[..., 2, 2] += s2e
        out[..., 0] = d
        return out

    def dist(x):
        eta = x[..., 0]
        return np.minimum(eta, np.pi / 2 - eta)

    return metric, dmetric, dist


def _sol3():
    def metric(x):
        z = x[..., 2]
        out = np.zeros(x.shape[:-1] + (3, 3))
        out[..., 0, 0] = np.exp(2 * z)
        out[..., 1, 1] = np.exp(-2 * z)
        out[..., 2, 2] = 1.0
        return out

    def dmetric(x):
        z = x[..., 2]
        out = np.zeros(x.shape[:-1] + (3, 3, 3))
        out[..., 0, 0, 2] = 2 * np.exp(2 * z)
        out[..., 1, 1, 2] = -2 * np.exp(-2 * z)
        return out

    return metric, dmetric


# ---------------------------------------------------------------------------
# catalog

CATALOG_PARAMS = {
    "e3": {},
    "s2xs1": {},
    "r2xs1": {},
    "h2xs1": {"c": 1.0},
    "berger": {"t": 1.0},
    "r4-conformal": {"lambda": None, "mu": None},
    "sol3": {},
    # two-dimensional factors, used as ambient charts for closed curves
    "e2": {},
    "s2": {},
    "h2": {"c": 1.0},
}

DEFAULT_MARGIN = 1e-3


def validate_params(name, params=None):
    """Fill defaults and check ranges; returns the resolved parameter dict."""
    if name not in CATALOG_PARAMS:
        raise ParameterError(
            f"unknown manifold: {name!r} (known: {', '.join(sorted(CATALOG_PARAMS))})")
    params = dict(params or {})
    allowed = CATALOG_PARAMS[name]
    for key in params:
        if key not in allowed:
            raise ParameterError(f"{name}: unknown parameter {key!r}")
    out = {}
    for key, default in allowed.items():
        if key in params:
            out[key] = float(params[key])
        elif default is None:
            raise ParameterError(f"{name}: missing parameter {key!r}")
        else:
            out[key] = float(default)
    if "c" in out and not out["c"] > 0:
        raise ParameterError("c must satisfy c > 0")
    if "t" in out and not out["t"] > 0:
        raise ParameterError("t must satisfy t > 0")
    for key in ("lambda", "mu"):
        if key in out and not (0.0 < out[key] <= LAMBDA_MAX + 1e-15):
            raise ParameterError(
                f"{key} must satisfy 0 < {key} <= 3 - 2*sqrt(2) (~{LAMBDA_MAX:.5f}); got {out[key]}")
    return out


def catalog_lookup(name, params=None, margin=DEFAULT_MARGIN) -> MetricChart:
    """Build the chart of a catalog manifold."""
    params = validate_params(name, params)
    ang = TWO_PI
    if name == "e3":
        m, dm = _flat(3)
        return MetricChart(name, 3, ("x", "y", "z"), m, dm, params=params)
    if name == "e2":
        m, dm = _flat(2)
        return MetricChart(name, 2, ("x", "y"), m, dm, params=params)
    if name in ("s2", "s2xs1"):
        (m2, dm2), dist = _sphere_factor()
        if name == "s2":
            return MetricChart(name, 2, ("a", "b"), m2, dm2, dist, margin, params=params)
        m, dm = _product([(2, m2, dm2), (1, *_flat(1))])
        return MetricChart(name, 3, ("a", "b", "theta"), m, dm, dist, margin,
                           (None, None, ang), params)
    if name == "r2xs1":
        m, dm = _flat(3)
        return MetricChart(name, 3, ("x", "y", "theta"), m, dm, None, 0.0,
                           (None, None, ang), params)
    if name in ("h2", "h2xs1"):
        (m2, dm2), dist = _hyperbolic_factor(params["c"])
        if name == "h2":
            return MetricChart(name, 2, ("p1", "p2"), m2, dm2, dist, margin, params=params)
        m, dm = _product([(2, m2, dm2), (1, *_flat(1))])
        return MetricChart(name, 3, ("p1", "p2", "theta"), m, dm, dist, margin,
                           (None, None, ang), params)
    if name == "berger":
        m, dm, dist = _berger(params["t"])
        return MetricChart(name, 3, ("eta", "xi1", "xi2"), m, dm, dist, margin,
                           (None, ang, ang), params)
    if name == "r4-conformal":
        m, dm = _product([(2, *_exp_rational_factor(params["lambda"])),
                          (2, *_exp_rational_factor(params["mu"]))])
        return MetricChart(name, 4, ("x1", "x2", "x3", "x4"), m, dm, params=params)
    if name == "sol3":
        m, dm = _sol3()
        return MetricChart(name, 3, ("x", "y", "z"), m, dm, params=params)
    raise ParameterError(f"unknown manifold: {name!r}")  # pragma: no cover


def round_s3():
    """Round unit S^3 in Hopf coordinates, built independently of the Berger entry."""

    def metric(x):
        eta = x[..., 0]
        out = np.zeros(x.shape[:-1] + (3, 3))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = np.cos(eta) ** 2
        out[..., 2, 2] = np.sin(eta) ** 2
        return out

    def dist(x):
        return np.minimum(x[..., 0], np.pi / 2 - x[..., 0])

    return MetricChart("s3", 3, ("eta", "xi1", "xi2"), metric, None, dist,
                       DEFAULT_MARGIN, (None, TWO_PI, TWO_PI))


def hopf_fiber(p):
    """Unit (round-metric) tangent of the Hopf fiber through ``p`` in Hopf coordinates."""
    p = np.asarray(p, dtype=float)
    v = np.zeros_like(p)
    v[..., 1] = 1.0
    v[..., 2] = 1.0
    return v


def geodesic_radius(lam, branch="+"):
    """Euclidean radius of the closed geodesic circle of ``e^{lam r^2} |dx|^2/(1+r^2)^2``."""
    if not (0.0 < lam <= LAMBDA_MAX + 1e-15):
        raise ParameterError(
            f"lambda must satisfy 0 < lambda <= 3 - 2*sqrt(2) (~{LAMBDA_MAX:.5f}); got {lam}")
    disc = max(lam * lam - 6.0 * lam + 1.0, 0.0)
    sign = {"+": 1.0, "-": -1.0}.get(branch)
    if sign is None:
        raise ParameterError(f"root branch must be '+' or '-', got {branch!r}")
    return math.sqrt((1.0 - lam + sign * math.sqrt(disc)) / (2.0 * lam))
