"""Willmore Euler-Lagrange residual for surfaces in 3-manifolds.

With a single unit normal ``nu`` and ``h_ij = g(nabla_i x_j, nu)``, the
residual is the sum of the eight terms in ``TERM_NAMES``:

    h_ij,ij - lap H - 2 H^2 H + R(nu,e_i,nu,e_j) h_ij - H R(nu,e_i,nu,e_i)
    + R(e_i,e_k,e_j,e_k) h_ij + H h_ij h_ij - R(e_i,e_j,e_i,e_j) H

(repeated indices summed over the tangent frame). It equals the first
variation density of W: moving the surface by ``f nu`` changes W at rate
``integral of f * residual dM``. The two tangential curvature terms cancel
identically for surfaces; they are kept so the breakdown is complete.

Covariant derivatives are taken in (u, v) coordinates with the induced
Levi-Civita connection; all terms are frame scalars.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .grid import TorusImmersion, fourier_derivative
from .shape import surface_arrays

MIN_RESOLUTION = 32

TERM_NAMES = (
    "h_ij,ij",
    "-lap_H",
    "-2H^2H",
    "R_3i3j*h_ij",
    "-H*R_3i3i",
    "R_ikjk*h_ij",
    "H*h_ij*h_ij",
    "-R_ijij*H",
)


@dataclass(frozen=True)
class ELResidual:
    u: np.ndarray
    v: np.ndarray
    per_node: np.ndarray
    max_abs: float
    terms: dict  # name -> per-node array
    area_element: np.ndarray
    normal: np.ndarray  # unit normal used for the sign of h (chart coordinates)


def _derivs(f, periods):
    pu, pv = periods
    return fourier_derivative(f, -2, 1, pu), fourier_derivative(f, -1, 1, pv)


def el_residual(imm: TorusImmersion, chart) -> ELResidual:
    """Per-node Willmore residual and its term breakdown."""
    if chart.dim != 3 or imm.dim != 3:
        raise DimensionError("residual requires ambient dimension 3")
    if min(imm.resolution) < MIN_RESOLUTION:
        raise ParameterError(f"residual requires resolution >= {MIN_RESOLUTION} in each direction")
    arr = surface_arrays(imm.points, chart, imm.periods, imm.coord_periods)
    periods = imm.periods
    xu, xv = arr["jets"][0], arr["jets"][1]
    nu = arr["frames"].normal[..., 0, :]
    riem = arr["riemann"]
    tangents = np.stack([xu, xv], axis=-2)  # (..., 2, n)

    # induced metric and its inverse
    gi = np.stack([np.stack([arr["E"], arr["F"]], -1), np.stack([arr["F"], arr["G"]], -1)], -2)
    ginv = np.linalg.inv(gi)
    sq = arr["area_element"]
    hc = arr["h_coord"][..., 0, :, :]  # coordinate components w.r.t. nu

    # induced Christoffels Gamma^c_ab from spectral derivatives of the induced metric
    dgu = np.stack([fourier_derivative(gi[..., a, b], -2, 1, periods[0])
                    for a in range(2) for b in range(2)], -1).reshape(gi.shape)
    dgv = np.stack([fourier_derivative(gi[..., a, b], -1, 1, periods[1])
                    for a in range(2) for b in range(2)], -1).reshape(gi.shape)
    dg = np.stack([dgu, dgv], axis=-1)  # dg[..., a, b, c] = d_c g_ab
    low = 0.5 * (np.swapaxes(dg, -1, -2) + dg - np.moveaxis(dg, -1, -3))
    gam = np.einsum("...cd,...dab->...cab", ginv, low)

    # raised h and its double divergence
    T = np.einsum("...ac,...bd,...cd->...ab", ginv, ginv, hc)
    flux = sq[..., None, None] * T
    div_a = [sum(_derivs(flux[..., a, b], periods)[a] for a in range(2)) for b in range(2)]
    V = np.stack(div_a, -1) / sq[..., None] + np.einsum("...bac,...ac->...b", gam, T)
    sV = sq[..., None] * V
    div_div = (_derivs(sV[..., 0], periods)[0] + _derivs(sV[..., 1], periods)[1]) / sq

    H = 0.5 * np.einsum("...ab,...ab->...", ginv, hc)
    Hu, Hv = _derivs(H, periods)
    grad = np.stack([Hu, Hv], -1)
    flux_h = sq[..., None] * np.einsum("...ab,...b->...a", ginv, grad)
    lap_h = (_derivs(flux_h[..., 0], periods)[0] + _derivs(flux_h[..., 1], periods)[1]) / sq

    S = np.einsum("...ab,...ab->...", T, hc)
    # R(nu, x_a, nu, x_b) and sum_k R(x_a, e_k, x_b, e_k)
    rn = np.einsum("...ABCD,...A,...aB,...C,...bD->...ab", riem, nu, tangents, nu, tangents)
    rt = np.einsum("...ABCD,...aA,...cB,...bC,...dD,...cd->...ab",
                   riem, tangents, tangents, tangents, tangents, ginv)

    terms = {
        "h_ij,ij": div_div,
        "-lap_H": -lap_h,
        "-2H^2H": -2.0 * H**3,
        "R_3i3j*h_ij": np.einsum("...ab,...ab->...", T, rn),
        "-H*R_3i3i": -H * np.einsum("...ab,...ab->...", ginv, rn),
        "R_ikjk*h_ij": np.einsum("...ab,...ab->...", T, rt),
        "H*h_ij*h_ij": H * S,
        "-R_ijij*H": -H * np.einsum("...ab,...ab->...", ginv, rt),
    }
    total = sum(terms[name] for name in TERM_NAMES)
    u, v = imm.parameters()
    return ELResidual(u, v, total, float(np.max(np.abs(total))), terms, sq, nu)


def residual_csv(res: ELResidual) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u", "v", "residual", *TERM_NAMES])
    fmt = lambda x: format(float(x), ".17g")  # noqa: E731
    for i, uu in enumerate(res.u):
        for j, vv in enumerate(res.v):
            w.writerow([fmt(uu), fmt(vv), fmt(res.per_node[i, j]),
                        *(fmt(res.terms[k][i, j]) for k in TERM_NAMES)])
    return buf.getvalue()


def first_variation(res: ELResidual, f, periods):
    """Predicted rate of change of W when the surface moves by ``f * nu``."""
    pu, pv = periods
    return float(np.mean(res.per_node * f * res.area_element) * pu * pv)
