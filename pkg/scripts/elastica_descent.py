"""Bending-energy descent in the hyperbolic plane from several starting curves."""
import argparse
import math

import numpy as np

from willmore_lab import grid, metrics, optimize
from willmore_lab.optimize import DescentOptions


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--nodes", type=int, default=64)
    ap.add_argument("--max-iter", type=int, default=5000)
    args = ap.parse_args()
    h2 = metrics.catalog_lookup("h2", {"c": args.c})
    r_opt = math.asinh(1.0) / math.sqrt(args.c)
    s = np.arange(args.nodes) * 2 * np.pi / args.nodes
    starts = {
        "circle r=1.2": grid.geodesic_circle_curve(1.2, args.c, args.nodes),
        "second harmonic 10%": grid.perturbed_circle_curve(r_opt, args.c, args.nodes, 0.1, 2),
        "third harmonic 20%": grid.perturbed_circle_curve(r_opt, args.c, args.nodes, 0.2, 3),
        "off-centre": grid.ClosedCurve(np.stack([0.15 + 0.35 * np.cos(s),
                                                 -0.1 + 0.35 * np.sin(s)], axis=-1)),
    }
    target = 4 * math.pi * math.sqrt(args.c)
    print(f"target bending 4 pi sqrt(c) = {target:.12f}, radius {r_opt:.12f}")
    for name, curve in starts.items():
        tr = optimize.minimize_bending(h2, curve, DescentOptions(max_iter=args.max_iter))
        rad = optimize.hyperbolic_radius(tr.final_shape, args.c)
        print(f"{name:<22} iters={len(tr.iterates) - 1:<5} {tr.criterion:<20} "
              f"bend-target={tr.final_energy - target:+.3e} radius-r*={rad - r_opt:+.3e}")


if __name__ == "__main__":
    main()
