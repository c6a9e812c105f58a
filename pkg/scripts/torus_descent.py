"""Willmore descent for tori: attained minimum in S2xS1 and H2xS1, none in R2xS1."""
import argparse
import math

import numpy as np

from willmore_lab import grid, metrics, optimize
from willmore_lab.optimize import DescentOptions


def near_clifford(res):
    imm = grid.make_family("clifford-s2xs1", {}, (res, res))
    _, v = imm.parameters()
    pts = imm.points.copy()
    pts[..., :2] *= 1 + 0.05 * np.cos(v)[None, :, None]
    return grid.TorusImmersion(pts, imm.periods, imm.coord_periods)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-iter", type=int, default=500)
    args = ap.parse_args()
    runs = [
        ("s2xs1 near Clifford", metrics.catalog_lookup("s2xs1"), near_clifford(32), (2, 2), 0.0),
        ("h2xs1 circle r=1.2", metrics.catalog_lookup("h2xs1"),
         grid.make_family("circle-h2xs1", {"r": 1.2}, (16, 16)), (1, 1), 2 * math.pi**2),
        ("r2xs1 from x_1", metrics.catalog_lookup("r2xs1"),
         grid.make_family("flat-rt-r2xs1", {"t": 1.0}, (16, 16)), (1, 1), None),
    ]
    for name, chart, init, m, target in runs:
        tr = optimize.minimize_willmore(chart, init, DescentOptions(max_iter=args.max_iter, m_max=m))
        line = (f"{name:<22} iters={len(tr.iterates) - 1:<4} converged={tr.converged!s:<5} "
                f"W0={tr.energies[0]:.6f} W={tr.final_energy:.10f}")
        if target is not None:
            line += f" W-target={tr.final_energy - target:+.2e}"
        else:
            line += f" mean radius={optimize.mean_planar_radius(tr.final_shape):.3f}"
        print(line)


if __name__ == "__main__":
    main()
