"""Run configuration: a strict ``key = value`` document with three sections.

Example::

    [run]
    command = energy
    resolution = 64x64
    [manifold]
    name = s2xs1
    [shape]
    family = clifford-s2xs1

Keys before the first section header may use the shorthands ``command``,
``manifold`` and ``shape``. Unknown keys are errors.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import grid, metrics
from .errors import ChartDomainError, ConfigError, ParameterError

COMMANDS = ("energy", "scan", "minimize", "residual", "verify")
FORMATS = ("csv", "json", "svg")

RUN_KEYS = {
    "command", "resolution", "output", "formats", "scan_param", "scan_values",
    "max_iter", "grad_tol", "fd_step", "max_step", "m_max",
}
STRING_PARAMS = {"branch_lambda", "branch_mu", "ambient", "factor"}


@dataclass
class RunConfig:
    command: str
    manifold: Optional[str] = None
    manifold_params: dict = field(default_factory=dict)
    shape_family: Optional[str] = None
    shape_params: dict = field(default_factory=dict)
    shape_file: Optional[str] = None
    resolution: tuple = (64, 64)
    output: str = "./out"
    formats: tuple = ("csv", "json")
    options: dict = field(default_factory=dict)

    @property
    def is_curve(self):
        if self.shape_family in grid.CURVE_FAMILIES:
            return True
        return bool(self.options.get("_file_kind") == "curve")


def parse_resolution(text):
    parts = str(text).lower().replace(" ", "").split("x")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise ParameterError(f"resolution must look like NxM, got {text!r}") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) < grid.MIN_RESOLUTION:
        raise ParameterError(f"resolution must be NxM with N, M >= {grid.MIN_RESOLUTION}")
    return vals


def parse_formats(text):
    items = tuple(x.strip() for x in str(text).split(",") if x.strip())
    bad = [x for x in items if x not in FORMATS]
    if bad or not items:
        raise ParameterError(f"formats must be a subset of {{csv, json, svg}}, got {text!r}")
    return items


def parse_values(text):
    """``a,b,c`` or ``start:stop:count`` (inclusive, evenly spaced)."""
    text = str(text).strip()
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(n))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"cannot parse value list {text!r}") from None


def _scalar(key, text):
    if key in STRING_PARAMS:
        return text
    if "," in text:
        try:
            return tuple(float(x) for x in text.split(","))
        except ValueError:
            raise ParameterError(f"{key}: expected numbers, got {text!r}") from None
    try:
        val = float(text)
    except ValueError:
        raise ParameterError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(val):
        raise ParameterError(f"{key}: value must be finite")
    return val


def _tokenize(text):
    """Yield (section, key, value, line) entries."""
    section = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in ("run", "manifold", "shape"):
                raise ConfigError(f"unknown section: {section}", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (x.strip() for x in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", lineno)
        if not value:
            raise ConfigError(f"missing value for key {key}", lineno)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key: {key}", lineno)
        seen.add((section, key))
        yield section, key, value, lineno


def parse_config(text, base_dir=None, command=None) -> RunConfig:
    """Parse and validate a configuration document.

    ``command``, when given, overrides (or supplies) the ``command`` key.
    """
    entries = list(_tokenize(text))
    run, man, shp = {}, {}, {}
    for section, key, value, ln in entries:
        if section is None:
            target = {"command": (run, "command"), "manifold": (man, "name"),
                      "shape": (shp, "family")}.get(key)
            if target is None:
                raise ConfigError(f"unknown key: {key}", ln)
            target[0][target[1]] = (value, ln)
        else:
            {"run": run, "manifold": man, "shape": shp}[section][key] = (value, ln)

    def wrap(fn, key, store):
        value, ln = store[key]
        try:
            return fn(value)
        except ParameterError as exc:
            raise ConfigError(str(exc), ln) from None

    for key, (_, ln) in run.items():
        if key not in RUN_KEYS:
            raise ConfigError(f"unknown key: {key}", ln)
    if command is None:
        if "command" not in run:
            raise ConfigError("missing key: command")
        command = run["command"][0]
    if command not in COMMANDS:
        raise ConfigError(f"unknown command: {command} (expected one of {', '.join(COMMANDS)})",
                          run.get("command", (None, None))[1])
    cfg = RunConfig(command=command)
    if "resolution" in run:
        cfg.resolution = wrap(parse_resolution, "resolution", run)
    if "output" in run:
        cfg.output = run["output"][0]
    if "formats" in run:
        cfg.formats = wrap(parse_formats, "formats", run)
    for key in ("max_iter", "m_max"):
        if key in run:
            cfg.options[key] = wrap(lambda x: int(float(x)), key, run)
    for key in ("grad_tol", "fd_step", "max_step"):
        if key in run:
            cfg.options[key] = wrap(lambda x: _scalar(key, x), key, run)
    if "scan_param" in run:
        cfg.options["scan_param"] = run["scan_param"][0]
    if "scan_values" in run:
        cfg.options["scan_values"] = wrap(parse_values, "scan_values", run)

    # manifold
    if man:
        if "name" not in man:
            raise ConfigError("[manifold] needs a name")
        name, ln = man["name"]
        if name not in metrics.CATALOG_PARAMS:
            raise ConfigError(f"unknown manifold: {name}", ln)
        allowed = metrics.CATALOG_PARAMS[name]
        params = {}
        for key, (value, kln) in man.items():
            if key == "name":
                continue
            if key not in allowed:
                raise ConfigError(f"unknown key: {key}", kln)
            params[key] = wrap(lambda x: _scalar(key, x), key, man)
        try:
            cfg.manifold_params = metrics.validate_params(name, params)
        except ParameterError as exc:
            lines = [man[k][1] for k in params] or [ln]
            bad = next((man[k][1] for k in params if str(exc).startswith(k + " ")), lines[0])
            raise ConfigError(str(exc), bad) from None
        cfg.manifold = name

    # shape
    if shp:
        if "file" in shp and "family" in shp:
            raise ConfigError("give either family or file in [shape], not both", shp["file"][1])
        if "file" in shp:
            path, ln = shp["file"]
            for key, (_, kln) in shp.items():
                if key != "file":
                    raise ConfigError(f"unknown key: {key}", kln)
            if base_dir is not None and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            if not os.path.exists(path):
                raise ConfigError(f"shape file not found: {path}", ln)
            cfg.shape_file = path
            with open(path) as fh:
                head = fh.readline().split()
            cfg.options["_file_kind"] = head[0] if head else ""
        elif "family" in shp:
            fam, ln = shp["family"]
            spec = grid.CURVE_FAMILIES.get(fam, grid.FAMILY_PARAMS.get(fam))
            if spec is None:
                raise ConfigError(f"unknown family: {fam}", ln)
            params = {}
            for key, (value, kln) in shp.items():
                if key == "family":
                    continue
                if key not in spec or key == "curve":
                    raise ConfigError(f"unknown key: {key}", kln)
                params[key] = wrap(lambda x: _scalar(key, x), key, shp)
            cfg.shape_family = fam
            cfg.shape_params = _merge_manifold(cfg, fam, params, spec, ln)
        else:
            raise ConfigError("[shape] needs family or file")

    _check_command(cfg)
    return cfg


def _merge_manifold(cfg, fam, params, spec, ln):
    """Copy shared parameters (c, t, lambda, mu) from the manifold and check consistency."""
    params = dict(params)
    for key, val in cfg.manifold_params.items():
        if key in spec:
            if key in params and float(params[key]) != float(val):
                raise ConfigError(f"{key} differs between [manifold] and [shape]", ln)
            params[key] = val
    try:
        if fam in grid.CURVE_FAMILIES:
            grid.make_curve(fam, params)
            if cfg.manifold not in (None, "h2", "h2xs1"):
                raise ParameterError(f"curve family {fam} lives in h2 or h2xs1")
        else:
            params = grid.family_params(fam, params)
            chart = grid.family_chart(fam, params)
            if cfg.manifold is not None and chart.name != cfg.manifold:
                raise ParameterError(f"family {fam} lives in {chart.name}, not {cfg.manifold}")
            # a coarse sample runs every family-specific check before any real work
            grid.make_family(fam, params, (grid.MIN_RESOLUTION, grid.MIN_RESOLUTION), chart)
    except (ParameterError, ChartDomainError) as exc:
        raise ConfigError(str(exc), ln) from None
    return params


def _check_command(cfg):
    if cfg.command in ("energy", "minimize", "residual") and not (cfg.shape_family or cfg.shape_file):
        raise ConfigError(f"command {cfg.command} needs a [shape]")
    if cfg.command == "verify":
        return
    if cfg.command == "scan" and not cfg.shape_family:
        raise ConfigError("command scan needs a [shape] family")
    if cfg.command == "scan" and "scan_values" not in cfg.options:
        raise ConfigError("command scan needs scan_values in [run]")
    if cfg.shape_file and cfg.manifold is None:
        raise ConfigError("a shape file needs a [manifold]")


def load_config(path, command=None) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        return parse_config(fh.read(), os.path.dirname(os.path.abspath(path)), command)
