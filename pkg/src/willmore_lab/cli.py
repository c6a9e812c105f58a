"""``willmore-lab`` command-line entry point.

Exit codes: 0 success, 2 validation failure (bad config, parameters or
preconditions), 3 numerical failure (chart domain, regularity, descent).
``verify`` without a shape runs the reference suite and exits 1 when any
row is not PASS.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import energy, euler_lagrange, grid, metrics, optimize, report, shape, verify
from .errors import DimensionError, ParameterError, WillmoreLabError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class Outputs:
    """Collects artifacts and writes each one atomically, filtered by format."""

    def __init__(self, directory, formats):
        self.directory = directory
        self.formats = set(formats)
        self.written = []

    def put(self, name, text, kind=None):
        if kind is not None and kind not in self.formats:
            return
        path = os.path.join(self.directory, name)
        report.atomic_write(path, text)
        self.written.append(path)


# ---------------------------------------------------------------------------
# shape construction

def manifold_chart(cfg):
    if cfg.manifold is None:
        return None
    return metrics.catalog_lookup(cfg.manifold, cfg.manifold_params)


def build_torus(cfg):
    """(TorusImmersion, chart) for torus shapes described by the config."""
    if cfg.shape_family is not None:
        imm = grid.make_family(cfg.shape_family, cfg.shape_params, cfg.resolution)
        return imm, grid.family_chart(cfg.shape_family, cfg.shape_params)
    chart = manifold_chart(cfg)
    imm = grid.read_grid(cfg.shape_file, chart.periods)
    if not isinstance(imm, grid.TorusImmersion):
        raise ParameterError(f"{cfg.shape_file} holds a curve, not a torus")
    if imm.dim != chart.dim:
        raise ParameterError(f"shape has {imm.dim} coordinates, {chart.name} has {chart.dim}")
    chart.check_domain(imm.points)
    return imm, chart


def build_curve(cfg):
    """(ClosedCurve, 2D factor chart, ambient chart or None)."""
    name = cfg.manifold or "h2"
    c = float(cfg.manifold_params.get("c", cfg.shape_params.get("c", 1.0)))
    factor = {"h2": "h2", "h2xs1": "h2", "r2xs1": "e2", "e2": "e2", "s2xs1": "s2",
              "s2": "s2"}.get(name)
    if factor is None:
        raise ParameterError(f"curves need a 2D factor or M^2 x S^1 manifold, got {name}")
    chart2d = metrics.catalog_lookup(factor, {"c": c} if factor == "h2" else {})
    if cfg.shape_family is not None:
        curve = grid.make_curve(cfg.shape_family, cfg.shape_params)
    else:
        curve = grid.read_grid(cfg.shape_file, chart2d.periods)
        if not isinstance(curve, grid.ClosedCurve):
            raise ParameterError(f"{cfg.shape_file} holds a torus, not a curve")
    if curve.points.shape[-1] != 2:
        raise ParameterError("curves must have two coordinates")
    chart2d.check_domain(curve.points)
    ambient = metrics.catalog_lookup(name, cfg.manifold_params) if name.endswith("xs1") else None
    return curve, chart2d, ambient


# ---------------------------------------------------------------------------
# commands

def cmd_energy(cfg, out):
    if cfg.is_curve:
        curve, chart2d, ambient = build_curve(cfg)
        if ambient is not None:
            rep = energy.curve_to_torus_energy(curve, ambient)
            summary = rep.flat()
        else:
            bend, length = energy.bending_energy(curve, chart2d)
            summary = {"bending": bend, "length": length, "chart": chart2d.name,
                       "bending_minus_4pi": bend - 4 * math.pi}
        out.put("report.json", report.to_json(summary), "json")
        return EXIT_OK
    imm, chart = build_torus(cfg)
    rep = energy.willmore(imm, chart)
    sd = shape.shape_data(imm, chart)
    summary = rep.flat()
    summary.update(classification=shape.classify(sd),
                   gauss_residual_max=shape.gauss_equation_residual(sd)[1],
                   chart=chart.name)
    out.put("report.json", report.to_json(summary), "json")
    out.put("shape.csv", shape.shape_csv(sd), "csv")
    return EXIT_OK


def cmd_scan(cfg, out):
    fam = cfg.shape_family
    param = cfg.options.get("scan_param") or optimize.SCAN_PARAM.get(fam)
    if param is None:
        raise ParameterError(f"family {fam} has no default scan parameter; set scan_param")
    if param not in grid.FAMILY_PARAMS.get(fam, {}):
        raise ParameterError(f"{fam}: unknown scan parameter {param!r}")
    base = {k: v for k, v in cfg.shape_params.items() if k != param}
    rows = optimize.scan_family(fam, cfg.options["scan_values"], base, cfg.resolution, param)
    out.put("scan.csv", optimize.scan_csv(rows, param), "csv")
    failed = sum(1 for r in rows if r["error"])
    out.put("report.json", report.to_json({"family": fam, "param": param, "rows": rows,
                                           "failed_points": failed}), "json")
    good = [r for r in rows if not r["error"]]
    out.put("scan.svg", report.line_plot_svg([r["param"] for r in good], [r["W"] for r in good],
                                             param, "W", f"{fam}: W vs {param}"), "svg")
    return EXIT_OK


def _descent_options(cfg, curve):
    keys = ("max_iter", "grad_tol", "fd_step", "max_step")
    kw = {k: cfg.options[k] for k in keys if k in cfg.options}
    if "m_max" in cfg.options:
        m = int(cfg.options["m_max"])
        kw["m_max"] = m if curve else (m, m)
    if not curve and "max_iter" not in kw:
        kw["max_iter"] = 500
    return optimize.DescentOptions(**kw)


def cmd_minimize(cfg, out):
    if cfg.is_curve:
        curve, chart2d, _ = build_curve(cfg)
        if chart2d.name != "h2":
            raise ParameterError("curve descent runs in the hyperbolic plane (manifold h2)")
        trace = optimize.minimize_bending(chart2d, curve, _descent_options(cfg, True))
        extra = {"radius": optimize.hyperbolic_radius(trace.final_shape, chart2d.params["c"])}
        shape_text = grid.format_curve(trace.final_shape)
    else:
        imm, chart = build_torus(cfg)
        trace = optimize.minimize_willmore(chart, imm, _descent_options(cfg, False))
        extra = {"mean_planar_radius": optimize.mean_planar_radius(trace.final_shape)}
        shape_text = grid.format_torus(trace.final_shape)
    summary = {
        "converged": trace.converged,
        "criterion": trace.criterion,
        "iterations": len(trace.iterates) - 1,
        "initial_energy": trace.iterates[0][0],
        "final_energy": trace.final_energy,
        "final_gradnorm": trace.iterates[-1][1],
        **extra,
    }
    out.put("trace.csv", trace.to_csv(), "csv")
    out.put("final_shape.grid", shape_text)
    out.put("report.json", report.to_json(summary), "json")
    out.put("trace.svg", report.line_plot_svg(np.arange(len(trace.iterates)), trace.energies,
                                              "iteration", "energy", "descent trace"), "svg")
    return EXIT_OK


def cmd_residual(cfg, out):
    if cfg.is_curve:
        raise ParameterError("residual needs a torus shape")
    imm, chart = build_torus(cfg)
    if chart.dim != 3:
        raise DimensionError("residual requires ambient dimension 3")
    res = euler_lagrange.el_residual(imm, chart)
    summary = {"max_abs": res.max_abs, "chart": chart.name,
               "resolution": list(imm.resolution),
               "term_max_abs": {k: float(np.max(np.abs(v))) for k, v in res.terms.items()}}
    out.put("residual.csv", euler_lagrange.residual_csv(res), "csv")
    out.put("report.json", report.to_json(summary), "json")
    return EXIT_OK


def cmd_verify(cfg, out):
    if cfg is not None and (cfg.shape_family or cfg.shape_file):
        if cfg.is_curve:
            raise ParameterError("verify needs a torus shape")
        imm, chart = build_torus(cfg)
        summary = verify.verify_shape(imm, chart)
        out.put("report.json", report.to_json(summary), "json")
        print(f"verdict: {summary['verdict']}")
        return EXIT_OK
    res = cfg.resolution[0] if cfg is not None else 64
    rows = verify.verify_suite(res)
    sys.stdout.write(verify.format_suite(rows))
    out.put("verify.csv", verify.suite_csv(rows), "csv")
    out.put("report.json", report.to_json({"rows": [r.__dict__ for r in rows]}), "json")
    return EXIT_OK if all(r.status == "PASS" for r in rows) else 1


COMMANDS = {"energy": cmd_energy, "scan": cmd_scan, "minimize": cmd_minimize,
            "residual": cmd_residual, "verify": cmd_verify}


def run(cfg) -> int:
    """Execute a parsed configuration; returns the process exit status."""
    optimize.thread_count()  # validate the environment before any work
    out = Outputs(cfg.output, cfg.formats)
    return COMMANDS[cfg.command](cfg, out)


def build_parser():
    p = argparse.ArgumentParser(prog="willmore-lab",
                                description="Willmore energies of tori in model 3- and 4-manifolds.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key = value run configuration")
    p.add_argument("--out", help="output directory (overrides [run] output)")
    p.add_argument("--resolution", help="grid size NxM (overrides [run] resolution)")
    p.add_argument("--formats", help="comma list from csv,json,svg")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is None:
            if args.command != "verify":
                raise ParameterError(f"command {args.command} needs --config")
            cfg = cfgmod.RunConfig(command="verify")
        else:
            cfg = cfgmod.load_config(args.config, command=args.command)
        if args.out:
            cfg.output = args.out
        if args.resolution:
            cfg.resolution = cfgmod.parse_resolution(args.resolution)
            if cfg.shape_family is not None and not cfg.is_curve:
                grid.make_family(cfg.shape_family, cfg.shape_params, cfg.resolution)
        if args.formats:
            cfg.formats = cfgmod.parse_formats(args.formats)
        return run(cfg)
    except ParameterError as exc:
        print(f"willmore-lab: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (WillmoreLabError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"willmore-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"willmore-lab: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
