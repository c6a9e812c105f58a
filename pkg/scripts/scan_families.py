"""Scan W across the one-parameter families and compare with their closed forms."""
import argparse
import os

from willmore_lab import optimize, report

SCANS = {
    "flat-rt-r2xs1": ("t", [1.0, 2.0, 5.0, 10.0, 100.0], {}),
    "hopf-berger": ("t", [0.25, 0.5, 0.75, 1.0, 1.5, 2.0], {}),
    "circle-h2xs1": ("r", [0.4, 0.6, 0.8, 0.881373587019543, 1.0, 1.2, 1.6], {"c": 1.0}),
    "geodesic-r4": ("lambda", [0.05, 0.1, 0.15, 0.17157287525381], {}),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/scans")
    ap.add_argument("--resolution", type=int, default=64)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for fam, (param, values, base) in SCANS.items():
        rows = optimize.scan_family(fam, values, base, (args.resolution, args.resolution), param)
        report.atomic_write(os.path.join(args.out, f"{fam}.csv"), optimize.scan_csv(rows, param))
        good = [r for r in rows if not r["error"]]
        report.atomic_write(os.path.join(args.out, f"{fam}.svg"),
                            report.line_plot_svg([r["param"] for r in good],
                                                 [r["W"] for r in good], param, "W", fam))
        print(fam)
        for r in rows:
            print(f"  {param}={r['param']:<10.6g} W={r['W']!s:<22} closed_form={r['closed_form']!s:<22} "
                  f"err={r['abs_error']!s} {r['error']}")


if __name__ == "__main__":
    main()
