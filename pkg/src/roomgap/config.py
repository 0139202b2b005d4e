"""Run configuration: TOML text in, validated :class:`RunConfig` out.

Grammar (every key optional except ``preset.alpha``, ``preset.r`` and, for the
band commands, ``eps_list``)::

    eps_list = ["1/4", "1/8", 0.0625]   # reciprocal integers, strictly decreasing

    [preset]
    alpha = 1          # number or "p/q" string
    r = 1
    L = 1
    room_width = 1
    room_height = 1
    R = "1/2"
    control = false    # true: plain strip, no protuberances

    [mesh]
    target_h = 0.03125
    grading = 1.2
    passage_cols = 4
    passage_aspect = 2.0

    [sweep]
    n_phi = 33
    k = 8
    lambda_max = 4.934802200544679   # default 2*(pi/(2L))^2

    [tolerances]
    eig_tol = 1e-8
    root_tol = 1e-12
    delta_frac = 0.1

    [output]
    directory = "."
    formats = ["csv", "json", "svg"]
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import tomli

from roomgap.errors import ConfigParseError, ConfigValidationError, GeometryViolation, RoomgapError
from roomgap.geometry import (
    ScalingPreset,
    WaveguideParams,
    as_fraction,
    asymptotic_preset,
    reciprocal_integer,
    validate_params,
)
from roomgap.mesh import MAX_PASSAGE_ASPECT, MeshSpec

FORMATS = ("csv", "json", "svg")

_SECTIONS: Dict[str, Dict[str, Any]] = {
    "preset": {"alpha": None, "r": None, "L": 1, "room_width": 1, "room_height": 1, "R": "1/2", "control": False},
    "mesh": {"target_h": 1 / 32, "grading": 1.2, "passage_cols": 4, "passage_aspect": 2.0},
    "sweep": {"n_phi": 33, "k": 8, "lambda_max": None},
    "tolerances": {"eig_tol": 1e-8, "root_tol": 1e-12, "delta_frac": 0.1},
    "output": {"directory": ".", "formats": list(FORMATS)},
}


@dataclass(frozen=True)
class RunConfig:
    preset: ScalingPreset
    R: Fraction
    control: bool
    eps_list: Tuple[Fraction, ...]
    mesh: MeshSpec
    n_phi: int
    k: int
    lambda_max: float
    eig_tol: float
    root_tol: float
    delta_frac: float
    directory: str
    formats: Tuple[str, ...]

    def params_at(self, eps) -> WaveguideParams:
        if self.control:
            return validate_params(WaveguideParams.plain_strip(eps, self.preset.L))
        return asymptotic_preset(self.preset, eps, R=self.R)


def _number(value, where: str, errors: List[str]) -> Optional[Fraction]:
    if isinstance(value, bool):
        errors.append(f"{where}: expected a number, got a boolean")
        return None
    try:
        return as_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError, OverflowError):
        errors.append(f"{where}: expected a number or 'p/q' string, got {value!r}")
        return None


def _typed(value, kind, where, errors):
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        errors.append(f"{where}: expected an integer, got {value!r}")
        return None
    if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        errors.append(f"{where}: expected a number, got {value!r}")
        return None
    return kind(value)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration.

    Raises ``ConfigParseError`` (with ``line``/``column`` details) for malformed
    TOML, duplicate keys included, and ``ConfigValidationError`` listing every
    offending field otherwise.
    """
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigParseError(str(exc), line=getattr(exc, "lineno", None), column=getattr(exc, "colno", None))

    errors: List[str] = []
    for key in raw:
        if key != "eps_list" and key not in _SECTIONS:
            errors.append(f"unknown key '{key}'")
    sec: Dict[str, Dict[str, Any]] = {}
    for name, defaults in _SECTIONS.items():
        given = raw.get(name, {})
        if not isinstance(given, dict):
            errors.append(f"'{name}' must be a table")
            given = {}
        for key in given:
            if key not in defaults:
                errors.append(f"unknown key '{name}.{key}'")
        sec[name] = {**defaults, **{k: v for k, v in given.items() if k in defaults}}

    pre = sec["preset"]
    for key in ("alpha", "r"):
        if pre[key] is None:
            errors.append(f"preset.{key}: required")
    nums = {key: _number(pre[key], f"preset.{key}", errors) if pre[key] is not None else None
            for key in ("alpha", "r", "L", "room_width", "room_height", "R")}
    for key, val in nums.items():
        if val is not None and val <= 0:
            errors.append(f"preset.{key}: must be positive")
    if not isinstance(pre["control"], bool):
        errors.append("preset.control: expected true or false")

    eps_list: List[Fraction] = []
    raw_eps = raw.get("eps_list", [])
    if not isinstance(raw_eps, list):
        errors.append("eps_list: expected an array")
        raw_eps = []
    for i, e in enumerate(raw_eps):
        val = _number(e, f"eps_list[{i}]", errors)
        if val is None:
            continue
        try:
            eps_list.append(Fraction(1, reciprocal_integer(val)))
        except RoomgapError as exc:
            errors.append(f"eps_list[{i}]: {exc}")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        errors.append("eps_list: must be strictly decreasing")

    m = sec["mesh"]
    target_h = _typed(m["target_h"], float, "mesh.target_h", errors)
    grading = _typed(m["grading"], float, "mesh.grading", errors)
    cols = _typed(m["passage_cols"], int, "mesh.passage_cols", errors)
    aspect = _typed(m["passage_aspect"], float, "mesh.passage_aspect", errors)
    if target_h is not None and not target_h > 0:
        errors.append("mesh.target_h: must be positive")
    if grading is not None and not grading >= 1:
        errors.append("mesh.grading: must be >= 1")
    if cols is not None and (cols < 2 or cols & (cols - 1)):
        errors.append("mesh.passage_cols: must be a power of two >= 2")
    if aspect is not None and not 0 < aspect <= MAX_PASSAGE_ASPECT:
        errors.append(f"mesh.passage_aspect: must lie in (0, {MAX_PASSAGE_ASPECT}]")

    sw = sec["sweep"]
    n_phi = _typed(sw["n_phi"], int, "sweep.n_phi", errors)
    k = _typed(sw["k"], int, "sweep.k", errors)
    if n_phi is not None and n_phi < 2:
        errors.append("sweep.n_phi: must be >= 2")
    if k is not None and k < 1:
        errors.append("sweep.k: must be >= 1")
    lam_max = None
    if sw["lambda_max"] is not None:
        lam_max = _typed(sw["lambda_max"], float, "sweep.lambda_max", errors)
        if lam_max is not None and not lam_max > 0:
            errors.append("sweep.lambda_max: must be positive")

    tol = sec["tolerances"]
    eig_tol = _typed(tol["eig_tol"], float, "tolerances.eig_tol", errors)
    root_tol = _typed(tol["root_tol"], float, "tolerances.root_tol", errors)
    delta_frac = _typed(tol["delta_frac"], float, "tolerances.delta_frac", errors)
    for name, val in (("eig_tol", eig_tol), ("root_tol", root_tol)):
        if val is not None and not val > 0:
            errors.append(f"tolerances.{name}: must be positive")
    if delta_frac is not None and not 0 < delta_frac < 0.5:
        errors.append("tolerances.delta_frac: must lie in (0, 0.5)")

    out = sec["output"]
    if not isinstance(out["directory"], str):
        errors.append("output.directory: expected a string")
    formats = out["formats"]
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        errors.append(f"output.formats: expected a subset of {list(FORMATS)}")
        formats = list(FORMATS)

    if errors:
        raise ConfigValidationError("; ".join(errors), fields=errors)

    preset = ScalingPreset(nums["alpha"], nums["r"], nums["L"], nums["room_width"], nums["room_height"])
    if lam_max is None:
        lam_max = 2.0 * (math.pi / (2.0 * float(nums["L"]))) ** 2
    cfg = RunConfig(
        preset=preset, R=nums["R"], control=pre["control"], eps_list=tuple(eps_list),
        mesh=MeshSpec(target_h, grading, cols, aspect), n_phi=n_phi, k=k, lambda_max=lam_max,
        eig_tol=eig_tol, root_tol=root_tol, delta_frac=delta_frac,
        directory=out["directory"], formats=tuple(formats),
    )
    for e in cfg.eps_list:
        try:
            cfg.params_at(e)
        except GeometryViolation as exc:
            errors.append(f"eps_list: eps=1/{e.denominator}: {exc}")
    if errors:
        raise ConfigValidationError("; ".join(errors), fields=errors)
    return cfg
