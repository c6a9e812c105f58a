"""Extrinsic and intrinsic geometry of an immersed torus.

The heavy lifting happens in :func:`surface_arrays`, which works on plain
arrays with optional leading batch axes so the optimizer can evaluate many
perturbed grids at once. The public functions wrap it for single immersions.

Conventions: ``h[..., alpha, i, j] = g(nabla_i x_j, e_alpha)`` in the
orthonormal tangent frame ``(e1, e2)``; ``H[..., alpha] = (h11 + h22) / 2``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import metrics
from .errors import ParameterError, RegularityError
from .grid import REGULARITY_TOL, JetData, TorusImmersion, fourier_derivative, torus_jet_arrays

SEED_TOL = 1e-6
UMBILIC_TOL = 1e-8


@dataclass(frozen=True)
class FrameField:
    tangent: np.ndarray  # (..., 2, n)
    normal: np.ndarray  # (..., n-2, n)
    change_of_basis: np.ndarray  # (..., 2, 2): columns are e1, e2 in the (x_u, x_v) basis

    @property
    def full(self):
        return np.concatenate([self.tangent, self.normal], axis=-2)


@dataclass(frozen=True)
class ShapeData:
    u: np.ndarray
    v: np.ndarray
    first_form: np.ndarray  # (N_u, N_v, 2, 2) in the coordinate frame
    area_element: np.ndarray
    frames: FrameField
    second_form: np.ndarray  # (N_u, N_v, n-2, 2, 2) orthonormal frame
    mean_curvature: np.ndarray  # (N_u, N_v, n-2)
    S: np.ndarray
    rho_sq: np.ndarray
    gauss_intrinsic: np.ndarray
    ambient_sectional: np.ndarray

    @property
    def mean_curvature_sq(self):
        return np.sum(self.mean_curvature**2, axis=-1)

    @property
    def gauss_residual(self):
        h = self.second_form
        det = np.sum(h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] ** 2, axis=-1)
        return self.gauss_intrinsic - self.ambient_sectional - det


def _inner(g, a, b):
    return np.sum(a * (g @ b[..., None])[..., 0], axis=-1)


# ---------------------------------------------------------------------------
# frames

def frame_arrays(g, xu, xv):
    """Orthonormal adapted frames from tangents and the ambient metric at each node."""
    n = g.shape[-1]
    a = np.sqrt(_inner(g, xu, xu))
    e1 = xu / a[..., None]
    b = _inner(g, xv, e1)
    w = xv - b[..., None] * e1
    d = np.sqrt(_inner(g, w, w))
    if np.any(~(d > 0)) or np.any(~(a > 0)):
        raise RegularityError("degenerate tangent vectors")
    e2 = w / d[..., None]
    cob = np.zeros(a.shape + (2, 2))
    cob[..., 0, 0] = 1.0 / a
    cob[..., 0, 1] = -b / (a * d)
    cob[..., 1, 1] = 1.0 / d
    basis = [e1, e2]
    if n == 3:
        # metric cross product keeps the normal orientation continuous on the grid
        omega = np.cross(xu, xv)
        nu = np.linalg.solve(g, omega[..., None])[..., 0]
        nu = nu / np.sqrt(_inner(g, nu, nu))[..., None]
        normals = [nu]
    else:
        normals = _seed_normals(g, basis, n)
    return FrameField(np.stack(basis, axis=-2), np.stack(normals, axis=-2), cob)


def _seed_normals(g, basis, n):
    """Complete an orthonormal frame from coordinate axes, skipping near-parallel seeds."""
    shape = g.shape[:-2]
    normals = [np.zeros(shape + (n,)) for _ in range(n - 2)]
    count = np.zeros(shape, dtype=int)
    for axis in range(n):
        seed = np.zeros(shape + (n,))
        seed[..., axis] = 1.0
        w = seed.copy()
        for e in basis:
            w -= _inner(g, w, e)[..., None] * e
        # project out normals already accepted at each node
        for k in range(n - 2):
            mask = (count > k)[..., None]
            w -= np.where(mask, _inner(g, w, normals[k])[..., None] * normals[k], 0.0)
        norm = np.sqrt(np.maximum(_inner(g, w, w), 0.0))
        take = (norm > SEED_TOL) & (count < n - 2)
        unit = w / np.where(norm > 0, norm, 1.0)[..., None]
        for k in range(n - 2):
            slot = take & (count == k)
            normals[k] = np.where(slot[..., None], unit, normals[k])
        count = count + take
    if np.any(count < n - 2):
        raise RegularityError("normal frame completion failed: all seed axes degenerate")
    return normals


def build_frames(imm: TorusImmersion, jet: JetData, chart) -> FrameField:
    """Adapted orthonormal frames: e1 along x_u, e2 from x_v, then normals."""
    chart.check_domain(imm.points)
    return frame_arrays(chart.metric_at(imm.points), jet.xu, jet.xv)


# ---------------------------------------------------------------------------
# core

def covariant_hessian(gam, xu, xv, xuu, xuv, xvv):
    """Ambient covariant second derivatives ``x_ab + Gamma(x_a, x_b)``; shape (..., 2, 2, n)."""
    first = np.stack([xu, xv], axis=-2)
    second = np.stack([np.stack([xuu, xuv], axis=-2), np.stack([xuv, xvv], axis=-2)], axis=-3)
    # corr[i, j, a] = Gamma^a_bc x_i^b x_j^c
    t = gam @ np.swapaxes(first, -1, -2)[..., None, :, :]  # (..., a, b, j)
    corr = first[..., None, :, :] @ t  # (..., a, i, j)
    return second + np.moveaxis(corr, -3, -1)


def second_form_arrays(g, gam, jets, frames: FrameField):
    """Coordinate-frame and orthonormal-frame second fundamental forms."""
    xu, xv, xuu, xuv, xvv = jets
    hess = covariant_hessian(gam, xu, xv, xuu, xuv, xvv)
    gn = frames.normal @ g  # (..., k, n), g symmetric
    flat = hess.reshape(hess.shape[:-3] + (4, hess.shape[-1])) @ np.swapaxes(gn, -1, -2)
    h_coord = np.moveaxis(flat, -1, -2).reshape(gn.shape[:-1] + (2, 2))
    p = frames.change_of_basis[..., None, :, :]
    h = np.swapaxes(p, -1, -2) @ h_coord @ p
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    return h_coord, h


def frame_scalars(h):
    """S, |H|^2, rho^2 from orthonormal second fundamental forms (..., k, 2, 2)."""
    h11, h12, h22 = h[..., 0, 0], h[..., 0, 1], h[..., 1, 1]
    S = np.sum(h11**2 + 2 * h12**2 + h22**2, axis=-1)
    H = 0.5 * (h11 + h22)
    rho_sq = np.sum(0.5 * (h11 - h22) ** 2 + 2 * h12**2, axis=-1)
    return S, H, rho_sq


def induced_metric(g, xu, xv):
    e = _inner(g, xu, xu)
    f = _inner(g, xu, xv)
    gg = _inner(g, xv, xv)
    return e, f, gg


def brioschi(e, f, g, periods):
    """Gauss curvature of ``E du^2 + 2F du dv + G dv^2`` on a periodic grid."""
    pu, pv = periods

    def d(x, ax, order=1):
        return fourier_derivative(x, ax, order, pu if ax == -2 else pv)

    eu, ev = d(e, -2), d(e, -1)
    fu, fv = d(f, -2), d(f, -1)
    gu, gv = d(g, -2), d(g, -1)
    evv = d(e, -1, 2)
    guu = d(g, -2, 2)
    fuv = d(fu, -1)
    m1 = np.stack([
        np.stack([-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev], -1),
        np.stack([fv - 0.5 * gu, e, f], -1),
        np.stack([0.5 * gv, f, g], -1),
    ], -2)
    zero = np.zeros_like(e)
    m2 = np.stack([
        np.stack([zero, 0.5 * ev, 0.5 * gu], -1),
        np.stack([0.5 * ev, e, f], -1),
        np.stack([0.5 * gu, f, g], -1),
    ], -2)
    return (np.linalg.det(m1) - np.linalg.det(m2)) / (e * g - f * f) ** 2


def surface_arrays(points, chart, periods, coord_periods, intrinsic=True, ambient=True,
                   check=True):
    """All per-node geometry for (a batch of) torus grids, as a dict of arrays."""
    points = np.asarray(points, dtype=float)
    if check:
        chart.check_domain(points)
    jets = torus_jet_arrays(points, periods, coord_periods)
    xu, xv = jets[0], jets[1]
    g = chart.metric_at(points)
    e, f, gg = induced_metric(g, xu, xv)
    det = e * gg - f * f
    if np.any(~(det > REGULARITY_TOL)):
        idx = np.argwhere(~(det > REGULARITY_TOL))[0]
        raise RegularityError(
            f"immersion is not regular at node {tuple(int(i) for i in idx[-2:])}: "
            f"Gram determinant {det[tuple(idx)]:.3e}")
    frames = frame_arrays(g, xu, xv)
    if ambient:
        curv = metrics.riemann_tensor(chart, points, check=False)
        gam, riem = curv.christoffel, curv.riemann
    else:
        gam, riem = metrics.christoffels(chart, points, check=False), None
    h_coord, h = second_form_arrays(g, gam, jets, frames)
    S, H, rho_sq = frame_scalars(h)
    out = dict(jets=jets, g=g, gamma=gam, riemann=riem, E=e, F=f, G=gg,
               area_element=np.sqrt(det), frames=frames, h_coord=h_coord, h=h,
               S=S, H=H, rho_sq=rho_sq)
    if intrinsic:
        out["K"] = brioschi(e, f, gg, periods)
    if ambient:
        e1, e2 = frames.tangent[..., 0, :], frames.tangent[..., 1, :]
        out["Ktilde"] = np.einsum("...abcd,...a,...b,...c,...d->...", riem, e1, e2, e1, e2)
    return out


# ---------------------------------------------------------------------------
# public operations

def second_fundamental_form(imm: TorusImmersion, jet: JetData, frames: FrameField, chart):
    """Orthonormal-frame ``h[..., alpha, i, j]`` and mean curvature ``H[..., alpha]``."""
    g = chart.metric_at(imm.points)
    gam = metrics.christoffels(chart, imm.points)
    jets = (jet.xu, jet.xv, jet.xuu, jet.xuv, jet.xvv)
    _, h = second_form_arrays(g, gam, jets, frames)
    return h, 0.5 * (h[..., 0, 0] + h[..., 1, 1])


def gauss_curvature_intrinsic(imm: TorusImmersion, jet: JetData, chart):
    """Gauss curvature of the induced metric, independent of the second fundamental form."""
    e, f, g = induced_metric(chart.metric_at(imm.points), jet.xu, jet.xv)
    if np.any(e * g - f * f <= REGULARITY_TOL):
        raise RegularityError("degenerate induced metric")
    return brioschi(e, f, g, imm.periods)


def shape_data(imm: TorusImmersion, chart) -> ShapeData:
    if imm.dim != chart.dim:
        raise ParameterError(f"immersion has {imm.dim} coordinates, chart {chart.name} has {chart.dim}")
    arr = surface_arrays(imm.points, chart, imm.periods, imm.coord_periods)
    u, v = imm.parameters()
    return ShapeData(
        u=u, v=v,
        first_form=np.stack([np.stack([arr["E"], arr["F"]], -1),
                             np.stack([arr["F"], arr["G"]], -1)], -2),
        area_element=arr["area_element"],
        frames=arr["frames"],
        second_form=arr["h"],
        mean_curvature=arr["H"],
        S=arr["S"],
        rho_sq=arr["rho_sq"],
        gauss_intrinsic=arr["K"],
        ambient_sectional=arr["Ktilde"],
    )


def umbilicity_deficit(sd: ShapeData):
    """Per-node rho^2 and its maximum over the grid."""
    return sd.rho_sq, float(np.max(sd.rho_sq))


def gauss_equation_residual(sd: ShapeData):
    """Per-node ``K - Ktilde - sum det(h^alpha)`` and the max absolute value."""
    r = sd.gauss_residual
    return r, float(np.max(np.abs(r)))


def classify(sd: ShapeData, tol=UMBILIC_TOL):
    """'totally-geodesic', 'totally-umbilic' or 'generic' by grid maxima."""
    if float(np.max(sd.rho_sq)) < tol:
        return "totally-geodesic" if float(np.max(sd.S)) < tol else "totally-umbilic"
    return "generic"


def rotate_tangent_frame(h, angle):
    """Second fundamental forms re-expressed in the tangent frame rotated by ``angle``."""
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return np.einsum("ai,...ab,bj->...ij", rot, h, rot)


def shape_csv(sd: ShapeData) -> str:
    """One row per node: u, v, h11, h12, h22 per normal, H_norm, S, rho_sq, K, Ktilde, residual."""
    k = sd.second_form.shape[-3]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["u", "v"]
    for a in range(k):
        sfx = "" if k == 1 else f"_{a + 1}"
        head += [f"h11{sfx}", f"h12{sfx}", f"h22{sfx}"]
    head += ["H_norm", "S", "rho_sq", "K", "Ktilde", "gauss_residual"]
    w.writerow(head)
    hn = np.sqrt(sd.mean_curvature_sq)
    res = sd.gauss_residual
    fmt = lambda x: format(float(x), ".17g")  # noqa: E731
    for i, uu in enumerate(sd.u):
        for j, vv in enumerate(sd.v):
            row = [uu, vv]
            for a in range(k):
                hh = sd.second_form[i, j, a]
                row += [hh[0, 0], hh[0, 1], hh[1, 1]]
            row += [hn[i, j], sd.S[i, j], sd.rho_sq[i, j], sd.gauss_intrinsic[i, j],
                    sd.ambient_sectional[i, j], res[i, j]]
            w.writerow([fmt(x) for x in row])
    return buf.getvalue()
