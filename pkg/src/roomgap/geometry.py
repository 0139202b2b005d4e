"""Parameters and period-cell geometry of the perturbed strip.

The waveguide is the strip ``(-inf, inf) x (-L, 0)`` with one protuberance per
period ``eps``: a thin rectangular passage of width ``d`` and height ``h`` sitting
on the upper boundary, topped by a rectangular room of scale ``b``.  The weight
is ``rho_room`` inside rooms and 1 elsewhere.

Inequalities are checked in exact rational arithmetic on the inputs (floats are
converted with :class:`fractions.Fraction`, which is exact for binary floats).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import IntEnum
from fractions import Fraction
from typing import Optional, Tuple, Union

from roomgap.errors import GeometryViolation, PeriodNotReciprocalInteger

Number = Union[int, float, Fraction, str]
Rect = Tuple[float, float, float, float]  # (x0, x1, y0, y1)


class Region(IntEnum):
    STRIP = 0
    PASSAGE = 1
    ROOM = 2


def as_fraction(value: Number) -> Fraction:
    """Exact rational value of ``value``; strings such as ``"1/8"`` are accepted."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def reciprocal_integer(eps: Number) -> int:
    """Return ``n = 1/eps`` if it is a positive integer, else raise.

    Float inputs like ``1/3`` are accepted when ``1/eps`` is an integer up to
    rounding (relative 1e-12).
    """
    q = as_fraction(eps)
    if q <= 0:
        raise PeriodNotReciprocalInteger(f"eps={eps} must be positive", eps=eps)
    inv = 1 / q
    if inv.denominator == 1:
        return int(inv)
    n = round(inv)
    if n >= 1 and abs(float(inv) - n) <= 1e-12 * n:
        return int(n)
    raise PeriodNotReciprocalInteger(f"1/eps = {float(inv):.12g} is not a positive integer", eps=eps)


@dataclass(frozen=True)
class WaveguideParams:
    """Geometric and material data of one period.

    ``room_width`` and ``room_height`` describe the reference room
    ``(-w/2, w/2) x (0, H)``; the physical room is that rectangle scaled by ``b``.
    ``b = d = h = 0`` encodes the unperturbed strip (see :meth:`plain_strip`).
    """

    eps: Number
    L: Number
    b: Number
    d: Number
    h: Number
    rho_room: Number
    R: Number
    room_width: Number = 1
    room_height: Number = 1

    @classmethod
    def plain_strip(cls, eps: Number, L: Number) -> "WaveguideParams":
        return cls(eps=eps, L=L, b=0, d=0, h=0, rho_room=1, R=Fraction(1, 2))

    @property
    def has_protuberance(self) -> bool:
        return not (as_fraction(self.b) == 0 and as_fraction(self.d) == 0 and as_fraction(self.h) == 0)

    @property
    def room_area_unit(self) -> Fraction:
        return as_fraction(self.room_width) * as_fraction(self.room_height)

    @property
    def n_per_unit(self) -> int:
        """Number of periods in the unit interval, ``1/eps``."""
        return reciprocal_integer(self.eps)

    def alpha_quotient(self) -> Fraction:
        """``d*rho/(h*b^2*|B|)``; tends to alpha along a scaling family."""
        b = as_fraction(self.b)
        return as_fraction(self.d) * as_fraction(self.rho_room) / (
            as_fraction(self.h) * b * b * self.room_area_unit
        )

    def r_quotient(self) -> Fraction:
        """``b^2*|B|/(eps*rho)``; tends to r along a scaling family."""
        b = as_fraction(self.b)
        return b * b * self.room_area_unit / (as_fraction(self.eps) * as_fraction(self.rho_room))


@dataclass(frozen=True)
class ValidatedParams(WaveguideParams):
    """Parameters that passed :func:`validate_params`; all fields are Fractions."""


def validate_params(p: WaveguideParams) -> ValidatedParams:
    """Check every constraint on ``p`` and return an exact, validated copy."""
    if isinstance(p, ValidatedParams):
        return p
    n = reciprocal_integer(p.eps)
    vals = {f.name: as_fraction(getattr(p, f.name)) for f in fields(p)}
    vals["eps"] = Fraction(1, n)
    eps, L = vals["eps"], vals["L"]
    if L <= 0:
        raise GeometryViolation("strip width L must be positive", failed="L > 0")
    if vals["b"] == 0 and vals["d"] == 0 and vals["h"] == 0:
        return ValidatedParams(**vals)

    b, d, h, rho, R = vals["b"], vals["d"], vals["h"], vals["rho_room"], vals["R"]
    w, H = vals["room_width"], vals["room_height"]
    checks = [
        (0 < R < 1, "0 < R < 1"),
        (d > 0, "d > 0"),
        (h > 0, "h > 0"),
        (rho > 0, "rho_room > 0"),
        (b <= eps, "b <= eps"),
        (d <= R * b, "R^-1 d <= b"),
        (0 < w <= 1, "room inside (-1/2, 1/2): 0 < room_width <= 1"),
        (H > 0, "room_height > 0"),
        (R <= w, "room bottom edge contains (-R/2, R/2): R <= room_width"),
    ]
    for ok, name in checks:
        if not ok:
            raise GeometryViolation(f"geometry constraint violated: {name}", failed=name)
    return ValidatedParams(**vals)


@dataclass(frozen=True)
class CellGeometry:
    """One period cell ``(0, eps) x (-L, 0)`` plus its passage and room.

    Rectangles are ``(x0, x1, y0, y1)`` in double precision.  ``passage_rect`` and
    ``room_rect`` are ``None`` for the unperturbed strip.
    """

    params: ValidatedParams
    strip_rect: Rect
    passage_rect: Optional[Rect]
    room_rect: Optional[Rect]
    gamma_segment: Tuple[float, float]

    @property
    def width(self) -> float:
        return self.strip_rect[1]

    @property
    def mouth(self) -> Optional[Tuple[float, float]]:
        """x-interval where the passage meets the strip (and the room)."""
        if self.passage_rect is None:
            return None
        return self.passage_rect[0], self.passage_rect[1]

    def region_areas(self) -> dict:
        def area(r):
            return 0.0 if r is None else (r[1] - r[0]) * (r[3] - r[2])

        return {
            Region.STRIP: area(self.strip_rect),
            Region.PASSAGE: area(self.passage_rect),
            Region.ROOM: area(self.room_rect),
        }


def build_cell(p: WaveguideParams) -> CellGeometry:
    p = validate_params(p)
    eps, L = p.eps, p.L
    strip = (0.0, float(eps), -float(L), 0.0)
    if not p.has_protuberance:
        return CellGeometry(p, strip, None, None, (0.0, float(eps)))

    mid = eps / 2
    px0, px1 = mid - p.d / 2, mid + p.d / 2
    rw = p.b * p.room_width
    rx0, rx1 = mid - rw / 2, mid + rw / 2
    ry0, ry1 = p.h, p.h + p.b * p.room_height
    # gluing: passage top edge inside room bottom edge, exact
    if not (rx0 <= px0 and px1 <= rx1):
        raise GeometryViolation("passage top edge not contained in room bottom edge", failed="gluing")
    passage = (float(px0), float(px1), 0.0, float(p.h))
    room = (float(rx0), float(rx1), float(ry0), float(ry1))
    return CellGeometry(p, strip, passage, room, (0.0, float(eps)))


@dataclass(frozen=True)
class ScalingPreset:
    """Target limits ``alpha`` and ``r`` together with the strip width and room shape."""

    alpha: Number
    r: Number
    L: Number = 1
    room_width: Number = 1
    room_height: Number = 1

    def __post_init__(self):
        if as_fraction(self.alpha) <= 0 or as_fraction(self.r) <= 0:
            raise GeometryViolation("alpha and r must be positive", failed="alpha > 0, r > 0")

    @property
    def room_area_unit(self) -> Fraction:
        return as_fraction(self.room_width) * as_fraction(self.room_height)


def asymptotic_preset(s: ScalingPreset, eps: Number, R: Number = Fraction(1, 2)) -> ValidatedParams:
    """Parameters at ``eps`` whose alpha/r quotients equal ``s.alpha``/``s.r`` exactly.

    Uses ``b = h = eps``, ``rho = eps*|B|/r`` and ``d = alpha*r*eps^2``.
    """
    n = reciprocal_integer(eps)
    e = Fraction(1, n)
    alpha, r, R = as_fraction(s.alpha), as_fraction(s.r), as_fraction(R)
    area = s.room_area_unit
    b = h = e
    rho = e * area / r
    d = alpha * r * e * e
    if d > R * b:
        # alpha*r*eps^2 <= R*eps  <=>  eps <= R/(alpha*r); largest admissible 1/n
        n_min = math.ceil(alpha * r / R)
        raise GeometryViolation(
            f"preset needs eps <= R/(alpha*r) = {float(R / (alpha * r)):.6g}; "
            f"largest admissible eps is 1/{n_min}",
            failed="R^-1 d <= b",
            eps_threshold=R / (alpha * r),
            max_admissible_eps=Fraction(1, n_min),
        )
    return validate_params(
        WaveguideParams(
            eps=e, L=as_fraction(s.L), b=b, d=d, h=h, rho_room=rho, R=R,
            room_width=as_fraction(s.room_width), room_height=as_fraction(s.room_height),
        )
    )
