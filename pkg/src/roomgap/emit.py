"""Deterministic CSV, JSON and SVG writers."""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

SVG_W, SVG_H = 800, 600
# plot box inside the viewBox: phi in [0, 2pi] -> [X0, X1], lambda in [0, lam_max] -> [Y0, Y1]
X0, X1, Y0, Y1 = 70.0, 780.0, 550.0, 20.0


def fmt(x) -> str:
    """17 significant digits, empty for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def eps_tag(eps) -> str:
    """File-name fragment ``1-8`` for ``eps = 1/8``."""
    n = round(1 / Fraction(eps).limit_denominator(10**9))
    return f"1-{n}"


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def load_schema(name: str) -> dict:
    """A JSON schema shipped with the package, e.g. ``"limit_spectrum"``."""
    text = resources.files("roomgap").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _px(phi: float, lam: float, lam_max: float):
    x = X0 + (X1 - X0) * phi / (2 * math.pi)
    y = Y0 + (Y1 - Y0) * lam / lam_max
    return x, y


def band_svg(phi_grid: np.ndarray, eigenvalues: np.ndarray, lam_max: float, alpha: Optional[float] = None,
             beta: Optional[float] = None, title: str = "") -> str:
    """Band diagram: one marker per (phi, k) sample, clipped to the window.

    Horizontal axis is phi on [0, 2pi], vertical axis is lambda on [0, lam_max]
    (upwards); reference lines are drawn at alpha and beta when given.
    """
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_W} {SVG_H}" width="{SVG_W}" height="{SVG_H}">',
        f'<defs><clipPath id="plot"><rect x="{X0:g}" y="{Y1:g}" width="{X1 - X0:g}" '
        f'height="{Y0 - Y1:g}"/></clipPath></defs>',
        f'<rect x="{X0:g}" y="{Y1:g}" width="{X1 - X0:g}" height="{Y0 - Y1:g}" fill="none" stroke="black"/>',
        f'<text x="{(X0 + X1) / 2:g}" y="{SVG_H - 12}" text-anchor="middle" font-size="14">phi</text>',
        f'<text x="18" y="{(Y0 + Y1) / 2:g}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {(Y0 + Y1) / 2:g})">lambda</text>',
        f'<text x="{X0:g}" y="{Y0 + 18:g}" text-anchor="middle" font-size="12">0</text>',
        f'<text x="{X1:g}" y="{Y0 + 18:g}" text-anchor="middle" font-size="12">2pi</text>',
        f'<text x="{X0 - 6:g}" y="{Y0:g}" text-anchor="end" font-size="12">0</text>',
        f'<text x="{X0 - 6:g}" y="{Y1 + 4:g}" text-anchor="end" font-size="12">{lam_max:.4g}</text>',
    ]
    if title:
        out.append(f'<text x="{(X0 + X1) / 2:g}" y="14" text-anchor="middle" font-size="13">{title}</text>')
    for name, val in (("alpha", alpha), ("beta", beta)):
        if val is not None and 0 <= val <= lam_max:
            _, y = _px(0.0, val, lam_max)
            out.append(f'<line class="ref-{name}" x1="{X0:g}" y1="{y:.3f}" x2="{X1:g}" y2="{y:.3f}" '
                       f'stroke="red" stroke-dasharray="6 4"/>')
            out.append(f'<text x="{X1 + 4:g}" y="{y + 4:.3f}" font-size="12">{name}</text>')
    out.append('<g clip-path="url(#plot)" fill="navy">')
    for i, phi in enumerate(phi_grid):
        for lam in eigenvalues[i]:
            x, y = _px(float(phi), float(lam), lam_max)
            out.append(f'<circle class="sample" cx="{x:.3f}" cy="{y:.3f}" r="2.5"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
