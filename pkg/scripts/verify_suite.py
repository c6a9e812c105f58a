"""Run the reference suite, optionally with a mis-scaled Berger metric."""
import argparse
import sys

from willmore_lab import verify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolution", type=int, default=64)
    ap.add_argument("--misscale-berger", action="store_true", help="build g_t with t -> t^2")
    ap.add_argument("--with-optimizer", action="store_true")
    args = ap.parse_args()
    scale = (lambda t: t * t) if args.misscale_berger else None
    rows = verify.verify_suite(args.resolution, berger_scale=scale,
                               include_optimizer=args.with_optimizer)
    sys.stdout.write(verify.format_suite(rows))
    return 0 if all(r.status == "PASS" for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
