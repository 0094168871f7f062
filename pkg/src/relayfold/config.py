"""TOML model configuration.

Example::

    model = "poly"
    fold_point = [0.0, 0.0]
    box = [-1.0, 1.0, -1.0, 1.0]      # offsets from fold_point

    [poly.L]
    f = [[0, 1, 1.0]]                 # [i, j, coeff] for coeff * x^i y^j
    g = [[0, 0, -1.0]]

    [poly.R]
    f = [[0, 1, 1.0]]
    g = [[0, 0, 1.0], [0, 1, 0.3]]

    [tolerances]
    rel_tol = 1e-10
"""

from __future__ import annotations

import math
import os
import sys
from typing import Any, Mapping, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, ModelError
from .integrator import DEFAULT_CONTROLS, ToleranceSet
from .model_core import (ABS_PARAM_NAMES, MASS_SPRING_DEFAULTS, ModelSpec, abs_model,
                         mass_spring, poly_model)

BUILTINS = ("mass_spring", "abs")
TOP_KEYS = {"model", "params", "poly", "fold_point", "box", "tolerances"}
TOLERANCE_KEYS = {"rel_tol", "abs_tol", "tol_event", "tol_transversal", "t_budget", "t_min",
                  "max_step"}


def _reals(value: Any, n: int, key: str) -> Tuple[float, ...]:
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"{key} must be a list of {n} numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{key} entries must be finite numbers, got {v!r}")
        out.append(float(v))
    return tuple(out)


def _box(value: Any) -> Tuple[float, float, float, float]:
    box = _reals(value, 4, "box")
    if not (box[0] < 0 < box[1] and box[2] < 0 < box[3]):
        raise ConfigError("box must contain the fold point strictly inside: "
                          "xmin < 0 < xmax, ymin < 0 < ymax (offsets from fold_point)")
    return box


def tolerances_from(table: Mapping[str, Any]) -> ToleranceSet:
    unknown = set(table) - TOLERANCE_KEYS
    if unknown:
        raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
    kw = {}
    for k, v in table.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"tolerance {k} must be a number")
        kw[k] = float(v)
    try:
        return DEFAULT_CONTROLS.with_(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _params(table: Any, allowed) -> dict:
    if not isinstance(table, dict):
        raise ConfigError("params must be a table")
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown params: {sorted(unknown)} (allowed: {sorted(allowed)})")
    out = {}
    for k, v in table.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"param {k} must be a finite number")
        out[k] = float(v)
    return out


def _poly_side(poly: Mapping[str, Any], side: str):
    tab = poly.get(side)
    if not isinstance(tab, dict):
        raise ConfigError(f"poly.{side} table missing")
    unknown = set(tab) - {"f", "g"}
    if unknown:
        raise ConfigError(f"unknown keys in poly.{side}: {sorted(unknown)}")
    out = []
    for comp in ("f", "g"):
        terms = tab.get(comp)
        if not isinstance(terms, list):
            raise ConfigError(f"poly.{side}.{comp} must be a list of [i, j, coeff]")
        out.append(terms)
    return out


def model_from_dict(cfg: Mapping[str, Any]) -> Tuple[ModelSpec, ToleranceSet]:
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kind = cfg.get("model")
    if kind not in ("mass_spring", "abs", "poly"):
        raise ConfigError(f"model must be one of mass_spring, abs, poly; got {kind!r}")
    controls = tolerances_from(cfg.get("tolerances", {}))
    kw = {}
    if "box" in cfg:
        kw["box"] = _box(cfg["box"])
    try:
        if kind == "mass_spring":
            if "poly" in cfg or "fold_point" in cfg:
                raise ConfigError("mass_spring takes only params, box and tolerances")
            model = mass_spring(**_params(cfg.get("params", {}), MASS_SPRING_DEFAULTS), **kw)
        elif kind == "abs":
            if "poly" in cfg or "fold_point" in cfg:
                raise ConfigError("abs takes only params, box and tolerances "
                                  "(its fold point follows from lambda0)")
            model = abs_model(**kw, **_params(cfg.get("params", {}), ABS_PARAM_NAMES))
        else:
            if "params" in cfg:
                raise ConfigError("poly models take no params")
            poly = cfg.get("poly")
            if not isinstance(poly, dict):
                raise ConfigError("poly model needs [poly.L] and [poly.R] tables")
            extra = set(poly) - {"L", "R"}
            if extra:
                raise ConfigError(f"unknown keys in poly: {sorted(extra)}")
            f_L, g_L = _poly_side(poly, "L")
            f_R, g_R = _poly_side(poly, "R")
            fold = _reals(cfg.get("fold_point", [0.0, 0.0]), 2, "fold_point")
            model = poly_model(f_L, g_L, f_R, g_R, fold, name="poly", **kw)
    except ConfigError:
        raise
    except (ModelError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model definition: {exc}") from None
    return model, controls


def load_config(path_or_name: str) -> Tuple[ModelSpec, ToleranceSet]:
    """Read a TOML file, or build a built-in model by name with default parameters."""
    if path_or_name in BUILTINS and not os.path.exists(path_or_name):
        return model_from_dict({"model": path_or_name})
    try:
        with open(path_or_name, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path_or_name}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path_or_name}: {exc}") from None
    return model_from_dict(cfg)
