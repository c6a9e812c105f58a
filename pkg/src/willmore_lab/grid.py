"""Periodic grids for immersed tori and closed curves.

Derivatives are taken spectrally. Angle coordinates of the ambient chart may
wind around the torus (e.g. ``theta = v``); the integer winding is detected
from the samples and its linear part is differentiated exactly, so only the
periodic remainder goes through the FFT.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import metrics
from .errors import ParameterError, RegularityError

TWO_PI = 2.0 * np.pi
MIN_RESOLUTION = 8
REGULARITY_TOL = 1e-10


@dataclass(frozen=True)
class TorusImmersion:
    points: np.ndarray  # (N_u, N_v, n) chart coordinates
    periods: tuple = (TWO_PI, TWO_PI)
    coord_periods: tuple = ()
    family_tag: Optional[dict] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 3:
            raise ParameterError("torus points must have shape (N_u, N_v, n)")
        object.__setattr__(self, "points", pts)
        if not self.coord_periods:
            object.__setattr__(self, "coord_periods", (None,) * pts.shape[-1])

    @property
    def resolution(self):
        return self.points.shape[:2]

    @property
    def dim(self):
        return self.points.shape[-1]

    def parameters(self):
        nu, nv = self.resolution
        pu, pv = self.periods
        return np.arange(nu) * pu / nu, np.arange(nv) * pv / nv


@dataclass(frozen=True)
class ClosedCurve:
    points: np.ndarray  # (N_s, dim)
    period: float = TWO_PI
    coord_periods: tuple = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ParameterError("curve points must have shape (N_s, dim)")
        object.__setattr__(self, "points", pts)
        if not self.coord_periods:
            object.__setattr__(self, "coord_periods", (None,) * pts.shape[-1])

    @property
    def resolution(self):
        return self.points.shape[0]

    def parameter(self):
        n = self.resolution
        return np.arange(n) * self.period / n


@dataclass(frozen=True)
class JetData:
    xu: np.ndarray
    xv: np.ndarray
    xuu: np.ndarray
    xuv: np.ndarray
    xvv: np.ndarray

    @property
    def first(self):
        return np.stack([self.xu, self.xv], axis=-2)

    @property
    def second(self):
        return np.stack([self.xuu, self.xuv, self.xvv], axis=-2)


@dataclass(frozen=True)
class CurveJet:
    first: np.ndarray
    second: np.ndarray
    speed: np.ndarray  # metric norm of the first derivative


# ---------------------------------------------------------------------------
# spectral primitives

def fourier_derivative(f, axis, order=1, period=TWO_PI):
    """Derivative of periodic samples along ``axis`` via the real FFT."""
    f = np.asarray(f, dtype=float)
    axis = axis % f.ndim
    n = f.shape[axis]
    k = TWO_PI / period * np.arange(n // 2 + 1)
    mult = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[-1] = 0.0
    shape = [1] * f.ndim
    shape[axis] = mult.size
    return np.fft.irfft(np.fft.rfft(f, axis=axis) * mult.reshape(shape), n=n, axis=axis)


def fourier_resample(f, n_new, axis):
    """Band-limited interpolation of periodic samples onto ``n_new`` nodes."""
    f = np.asarray(f, dtype=float)
    axis = axis % f.ndim
    n = f.shape[axis]
    if n_new == n:
        return f.copy()
    spec = np.fft.rfft(f, axis=axis)
    m = min(n, n_new) // 2
    shape = list(spec.shape)
    shape[axis] = n_new // 2 + 1
    out = np.zeros(shape, dtype=complex)
    sl = [slice(None)] * f.ndim
    sl[axis] = slice(0, m + 1)
    out[tuple(sl)] = spec[tuple(sl)]
    if min(n, n_new) % 2 == 0:
        nyq = [slice(None)] * f.ndim
        nyq[axis] = slice(m, m + 1)
        if n_new > n:
            # the old Nyquist mode splits evenly between +m and -m
            out[tuple(nyq)] *= 0.5
        else:
            # +m and -m alias onto the new Nyquist node
            out[tuple(nyq)] = 2.0 * out[tuple(nyq)].real
    return np.fft.irfft(out, n=n_new, axis=axis) * (n_new / n)


def split_winding(points, coord_periods, param_periods):
    """Split samples into (periodic remainder, slopes).

    ``points`` has shape ``(..., N_1, ..., N_k, n)`` with ``k = len(param_periods)``
    parameter axes. Returns ``(periodic, slopes)`` where ``slopes[..., c, j]`` is
    the constant derivative of the winding part of coordinate ``c`` along
    parameter axis ``j``.
    """
    points = np.asarray(points, dtype=float)
    k = len(param_periods)
    n = points.shape[-1]
    periodic = points.copy()
    slopes = np.zeros(points.shape[:-1 - k] + (n, k))
    axes = [points.ndim - 1 - k + j for j in range(k)]
    for c, pc in enumerate(coord_periods):
        if pc is None:
            continue
        vals = points[..., c]
        for j, ax in enumerate(axes):
            a = ax  # same axis index in vals (last axis dropped)
            d = np.diff(vals, axis=a, append=np.take(vals, [0], axis=a))
            d = (d + pc / 2) % pc - pc / 2
            total = np.sum(d, axis=a)
            # winding is constant across the other axes; reduce them
            other = tuple(range(vals.ndim - k, vals.ndim - 1))
            if other:
                total = np.mean(total, axis=other)
            w = np.round(total / pc)
            slopes[..., c, j] = w * pc / param_periods[j]
        grids = np.meshgrid(*[np.arange(points.shape[ax]) * param_periods[j] / points.shape[ax]
                              for j, ax in enumerate(axes)], indexing="ij")
        lin = sum(slopes[..., c, j][(...,) + (None,) * k] * grids[j] for j in range(k))
        rem = vals - lin
        for ax in axes:
            rem = np.unwrap(rem, axis=ax, period=pc)
        periodic[..., c] = rem
    return periodic, slopes


# ---------------------------------------------------------------------------
# jets

def torus_jet_arrays(points, periods, coord_periods):
    """Spectral jets of (a batch of) torus grids; returns xu, xv, xuu, xuv, xvv."""
    points = np.asarray(points, dtype=float)
    nu, nv = points.shape[-3], points.shape[-2]
    if min(nu, nv) < MIN_RESOLUTION:
        raise ParameterError(f"resolution must be at least {MIN_RESOLUTION} in each direction")
    per, slopes = split_winding(points, coord_periods, periods)
    pu, pv = periods
    xu = fourier_derivative(per, -3, 1, pu) + slopes[..., None, None, :, 0]
    xv = fourier_derivative(per, -2, 1, pv) + slopes[..., None, None, :, 1]
    xuu = fourier_derivative(per, -3, 2, pu)
    xvv = fourier_derivative(per, -2, 2, pv)
    xuv = fourier_derivative(fourier_derivative(per, -3, 1, pu), -2, 1, pv)
    return xu, xv, xuu, xuv, xvv


def spectral_jet(imm: TorusImmersion) -> JetData:
    """First and second parameter derivatives of a torus grid."""
    return JetData(*torus_jet_arrays(imm.points, imm.periods, imm.coord_periods))


def mixed_partial_other_order(imm: TorusImmersion):
    """``d_u (d_v x)``, for checking against ``JetData.xuv``."""
    per, _ = split_winding(imm.points, imm.coord_periods, imm.periods)
    pu, pv = imm.periods
    return fourier_derivative(fourier_derivative(per, 1, 1, pv), 0, 1, pu)


def curve_jet_arrays(points, period, coord_periods):
    points = np.asarray(points, dtype=float)
    if points.shape[-2] < MIN_RESOLUTION:
        raise ParameterError(f"curve resolution must be at least {MIN_RESOLUTION}")
    per, slopes = split_winding(points, coord_periods, (period,))
    d1 = fourier_derivative(per, -2, 1, period) + slopes[..., None, :, 0]
    d2 = fourier_derivative(per, -2, 2, period)
    return d1, d2


def curve_jet(c: ClosedCurve, chart2d=None) -> CurveJet:
    """Derivatives and metric speed of a closed curve (Euclidean if no chart)."""
    d1, d2 = curve_jet_arrays(c.points, c.period, c.coord_periods)
    if chart2d is None:
        speed = np.linalg.norm(d1, axis=-1)
    else:
        chart2d.check_domain(c.points)
        g = chart2d.metric_at(c.points)
        speed = np.sqrt(np.einsum("...a,...ab,...b->...", d1, g, d1))
    if np.any(speed <= REGULARITY_TOL):
        i = int(np.argmin(speed))
        raise RegularityError(f"curve has zero speed at node {i}")
    return CurveJet(d1, d2, speed)


# ---------------------------------------------------------------------------
# quadrature and regularity

def quadrature(field, area_element, imm: TorusImmersion):
    """Periodic trapezoid rule for the integral of ``field`` over the torus."""
    field = np.asarray(field, dtype=float)
    area_element = np.asarray(area_element, dtype=float)
    if field.shape != tuple(imm.resolution) or area_element.shape != tuple(imm.resolution):
        raise ParameterError(
            f"field/area shapes {field.shape}, {area_element.shape} do not match "
            f"resolution {tuple(imm.resolution)}")
    if not (np.all(np.isfinite(field)) and np.all(np.isfinite(area_element))):
        raise RegularityError("non-finite integrand")
    pu, pv = imm.periods
    return float(np.mean(field * area_element) * pu * pv)


def check_regularity(imm: TorusImmersion, chart, jet: JetData = None):
    """Raise ``RegularityError`` naming the first node with degenerate tangents."""
    jet = jet or spectral_jet(imm)
    g = chart.metric_at(imm.points)
    e = np.einsum("...a,...ab,...b->...", jet.xu, g, jet.xu)
    f = np.einsum("...a,...ab,...b->...", jet.xu, g, jet.xv)
    gg = np.einsum("...a,...ab,...b->...", jet.xv, g, jet.xv)
    det = e * gg - f * f
    bad = det <= REGULARITY_TOL
    if np.any(bad):
        i, j = (int(k) for k in np.argwhere(bad)[0])
        raise RegularityError(
            f"immersion is not regular at node (u-index {i}, v-index {j}): "
            f"Gram determinant {det[i, j]:.3e}")
    return det


# ---------------------------------------------------------------------------
# analytic families

FAMILY_CHART = {
    "clifford-s2xs1": "s2xs1",
    "flat-rt-r2xs1": "r2xs1",
    "circle-h2xs1": "h2xs1",
    "geodesic-r4": "r4-conformal",
    "hopf-berger": "berger",
    "curve-product": None,  # chart follows the curve's 2D factor
    "revolution-torus": None,  # e3 or sol3
}

FAMILY_PARAMS = {
    "clifford-s2xs1": {},
    "flat-rt-r2xs1": {"t": 1.0},
    "circle-h2xs1": {"c": 1.0, "r": None},
    "geodesic-r4": {"lambda": None, "mu": None, "branch_lambda": "+", "branch_mu": "+"},
    "hopf-berger": {"t": 1.0},
    "curve-product": {"curve": None, "factor": "h2", "c": 1.0},
    "revolution-torus": {"ambient": "e3", "R": 2.0, "r": 1.0, "center": (0.0, 0.0, 0.0),
                         "tilt": 0.0, "ripple": 0.0},
}

_PRODUCT_OF_FACTOR = {"h2": "h2xs1", "e2": "r2xs1", "s2": "s2xs1"}


def family_params(family, params=None):
    if family not in FAMILY_PARAMS:
        raise ParameterError(
            f"unknown family: {family!r} (known: {', '.join(sorted(FAMILY_PARAMS))})")
    params = dict(params or {})
    spec = FAMILY_PARAMS[family]
    for key in params:
        if key not in spec:
            raise ParameterError(f"{family}: unknown parameter {key!r}")
    out = {}
    for key, default in spec.items():
        if key in params:
            out[key] = params[key]
        elif default is None and not (family == "circle-h2xs1" and key == "r"):
            raise ParameterError(f"{family}: missing parameter {key!r}")
        else:
            out[key] = default
    if family == "circle-h2xs1" and out["r"] is None:
        out["r"] = math.asinh(1.0) / math.sqrt(float(out["c"]))
    return out


def family_chart(family, params=None):
    """The catalog chart a family lives in."""
    p = family_params(family, params)
    if family == "circle-h2xs1":
        return metrics.catalog_lookup("h2xs1", {"c": p["c"]})
    if family == "geodesic-r4":
        return metrics.catalog_lookup("r4-conformal", {"lambda": p["lambda"], "mu": p["mu"]})
    if family == "hopf-berger":
        return metrics.catalog_lookup("berger", {"t": p["t"]})
    if family == "curve-product":
        factor = p["factor"]
        if factor not in _PRODUCT_OF_FACTOR:
            raise ParameterError(f"curve-product: unsupported factor {factor!r}")
        cp = {"c": p["c"]} if factor == "h2" else {}
        return metrics.catalog_lookup(_PRODUCT_OF_FACTOR[factor], cp)
    if family == "revolution-torus":
        if p["ambient"] not in ("e3", "sol3"):
            raise ParameterError("revolution-torus: ambient must be 'e3' or 'sol3'")
        return metrics.catalog_lookup(p["ambient"])
    return metrics.catalog_lookup(FAMILY_CHART[family])


def geodesic_circle_disk_radius(r, c):
    """Euclidean Poincare-disk radius of a geodesic circle of radius ``r`` in H^2(-c)."""
    return math.tanh(math.sqrt(c) * r / 2.0)


def make_family(family, params=None, resolution=(64, 64), chart=None) -> TorusImmersion:
    """Sample a built-in analytic torus family in its catalog chart."""
    p = family_params(family, params)
    nu, nv = (int(resolution[0]), int(resolution[1]))
    if family == "curve-product":
        curve = p["curve"]
        if not isinstance(curve, ClosedCurve):
            raise ParameterError("curve-product needs a ClosedCurve under 'curve'")
        if curve.points.shape[-1] != 2:
            raise ParameterError("curve-product needs a planar (2D factor) curve")
        per, slopes = split_winding(curve.points, curve.coord_periods, (curve.period,))
        res = fourier_resample(per, nu, axis=0)
        s = np.arange(nu) * curve.period / nu
        res = res + s[:, None] * slopes[None, :, 0]
        periods = (curve.period, TWO_PI)
    else:
        periods = (TWO_PI, TWO_PI)
    if min(nu, nv) < MIN_RESOLUTION:
        raise ParameterError(f"resolution must be at least {MIN_RESOLUTION} in each direction")
    u = np.arange(nu) * periods[0] / nu
    v = np.arange(nv) * periods[1] / nv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    chart = chart or family_chart(family, p)

    if family == "clifford-s2xs1":
        pts = np.stack([np.cos(uu), np.sin(uu), vv], axis=-1)
    elif family == "flat-rt-r2xs1":
        t = float(p["t"])
        if not t > 0:
            raise ParameterError("t must satisfy t > 0")
        pts = np.stack([t * np.cos(uu), t * np.sin(uu), vv], axis=-1)
    elif family == "circle-h2xs1":
        c, r = float(p["c"]), float(p["r"])
        if not (c > 0 and r > 0):
            raise ParameterError("circle-h2xs1 needs c > 0 and r > 0")
        rho = geodesic_circle_disk_radius(r, c)
        pts = np.stack([rho * np.cos(uu), rho * np.sin(uu), vv], axis=-1)
    elif family == "geodesic-r4":
        rl = metrics.geodesic_radius(float(p["lambda"]), p["branch_lambda"])
        rm = metrics.geodesic_radius(float(p["mu"]), p["branch_mu"])
        pts = np.stack([rl * np.cos(uu), rl * np.sin(uu), rm * np.cos(vv), rm * np.sin(vv)],
                       axis=-1)
    elif family == "hopf-berger":
        pts = np.stack([np.full_like(uu, np.pi / 4), uu, vv], axis=-1)
    elif family == "curve-product":
        pts = np.concatenate([np.broadcast_to(res[:, None, :], (nu, nv, 2)), vv[..., None]],
                             axis=-1)
    elif family == "revolution-torus":
        big, small = float(p["R"]), float(p["r"])
        if not (big > small > 0):
            raise ParameterError("revolution-torus needs R > r > 0")
        ripple = float(p["ripple"])
        rad = small * (1.0 + ripple * np.cos(2 * uu) * np.sin(vv))
        x = (big + rad * np.cos(vv)) * np.cos(uu)
        y = (big + rad * np.cos(vv)) * np.sin(uu)
        z = rad * np.sin(vv)
        tilt = float(p["tilt"])
        ct, st = math.cos(tilt), math.sin(tilt)
        y, z = ct * y - st * z, st * y + ct * z
        cx, cy, cz = (float(a) for a in p["center"])
        pts = np.stack([x + cx, y + cy, z + cz], axis=-1)
    else:  # pragma: no cover
        raise ParameterError(f"unknown family: {family!r}")

    if pts.shape[-1] != chart.dim:
        raise ParameterError(f"family {family} does not live in chart {chart.name}")
    chart.check_domain(pts)
    tag = {"family": family, "params": {k: v for k, v in p.items() if k != "curve"}}
    return TorusImmersion(pts, periods, tuple(chart.periods), tag)


def geodesic_circle_curve(r, c=1.0, n=256, center=(0.0, 0.0)):
    """Geodesic circle of hyperbolic radius ``r`` in the Poincare disk of H^2(-c).

    ``center`` is the Euclidean disk position of the circle's Euclidean centre
    when nonzero; the default is the disk origin.
    """
    rho = geodesic_circle_disk_radius(r, c)
    s = np.arange(n) * TWO_PI / n
    pts = np.stack([center[0] + rho * np.cos(s), center[1] + rho * np.sin(s)], axis=-1)
    return ClosedCurve(pts, TWO_PI)


def perturbed_circle_curve(r, c=1.0, n=256, amp=0.0, harmonic=2):
    """Disk-centred geodesic circle with its Euclidean radius scaled by ``1 + amp cos(k s)``."""
    if not abs(amp) < 1.0:
        raise ParameterError("perturbation amplitude must satisfy |amp| < 1")
    base = geodesic_circle_curve(r, c, n)
    s = np.arange(n) * TWO_PI / n
    pts = base.points * (1.0 + amp * np.cos(int(harmonic) * s))[:, None]
    return ClosedCurve(pts, TWO_PI)


CURVE_FAMILIES = {
    "geodesic-circle": {"r": None, "c": 1.0, "nodes": 128},
    "perturbed-circle": {"r": None, "c": 1.0, "nodes": 128, "amp": 0.1, "harmonic": 2},
}


def make_curve(family, params=None):
    """Sample a built-in closed curve in the Poincare disk."""
    if family not in CURVE_FAMILIES:
        raise ParameterError(f"unknown curve family: {family!r}")
    params = dict(params or {})
    spec = CURVE_FAMILIES[family]
    for key in params:
        if key not in spec:
            raise ParameterError(f"{family}: unknown parameter {key!r}")
    p = {k: params.get(k, d) for k, d in spec.items()}
    c = float(p["c"])
    if not c > 0:
        raise ParameterError("c must satisfy c > 0")
    r = math.asinh(1.0) / math.sqrt(c) if p["r"] is None else float(p["r"])
    if not r > 0:
        raise ParameterError("r must satisfy r > 0")
    n = int(p["nodes"])
    if n < MIN_RESOLUTION:
        raise ParameterError(f"nodes must be at least {MIN_RESOLUTION}")
    if family == "geodesic-circle":
        return geodesic_circle_curve(r, c, n)
    return perturbed_circle_curve(r, c, n, float(p["amp"]), int(p["harmonic"]))


# ---------------------------------------------------------------------------
# plain-text grid format

def _fmt(x):
    return format(float(x), ".17g")


def format_torus(imm: TorusImmersion) -> str:
    nu, nv = imm.resolution
    lines = [f"torus {nu} {nv} {imm.dim} {_fmt(imm.periods[0])} {_fmt(imm.periods[1])}"]
    for row in imm.points.reshape(-1, imm.dim):
        lines.append(" ".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def format_curve(c: ClosedCurve) -> str:
    n, d = c.points.shape
    lines = [f"curve {n} {d} {_fmt(c.period)}"]
    for row in c.points:
        lines.append(" ".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def parse_grid(text, coord_periods=None):
    """Parse a torus or curve document; returns a ``TorusImmersion`` or ``ClosedCurve``."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParameterError("empty grid document")
    head = lines[0].split()
    try:
        if head[0] == "torus" and len(head) == 6:
            nu, nv, n = (int(x) for x in head[1:4])
            periods = (float(head[4]), float(head[5]))
            count, width = nu * nv, n
        elif head[0] == "curve" and len(head) == 4:
            ns, n = int(head[1]), int(head[2])
            period = float(head[3])
            count, width = ns, n
        else:
            raise ValueError
    except ValueError:
        raise ParameterError(f"bad grid header: {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != count:
        raise ParameterError(f"expected {count} data lines, found {len(body)}")
    data = np.empty((count, width))
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != width:
            raise ParameterError(f"data line {i + 2}: expected {width} values")
        try:
            data[i] = [float(x) for x in parts]
        except ValueError:
            raise ParameterError(f"data line {i + 2}: not a number") from None
    if coord_periods is not None and len(coord_periods) != width:
        raise ParameterError("coordinate periods do not match grid dimension")
    cp = tuple(coord_periods) if coord_periods is not None else ()
    if head[0] == "torus":
        return TorusImmersion(data.reshape(nu, nv, n), periods, cp)
    return ClosedCurve(data, period, cp)


def read_grid(path, coord_periods=None):
    with open(path) as fh:
        return parse_grid(fh.read(), coord_periods)
