"""Exact rational kernel: points, directions, planes and the predicates built on them.

Every quantity is a ``fractions.Fraction`` (or a plain int, which mixes with it
exactly). Nothing in here ever rounds.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import List, Sequence, Tuple, Union

from core.errors import GeometryError

Rat = Fraction
Number = Union[int, Fraction]

INSIDE = "inside"
BOUNDARY = "boundary"
OUTSIDE = "outside"

_RAT_PATTERN = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rat(text: Union[str, int]) -> Fraction:
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"not a rational: {text!r}")
    match = _RAT_PATTERN.match(text)
    if not match:
        raise ValueError(f"not a rational: {text!r}")
    num = int(match.group(1))
    den = int(match.group(2)) if match.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator: {text!r}")
    return Fraction(num, den)


def format_rat(value: Number) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def sign(value: Number) -> int:
    if value > 0:
        return 1
    if value < 0:
        return -1
    return 0


@dataclass(frozen=True)
class Point3:
    x: Number
    y: Number
    z: Number

    @classmethod
    def of(cls, x: Union[Number, str], y: Union[Number, str], z: Union[Number, str]) -> "Point3":
        return cls(_as_rat(x), _as_rat(y), _as_rat(z))

    def __add__(self, other: "Point3") -> "Point3":
        return Point3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Point3") -> "Point3":
        return Point3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Point3":
        return Point3(-self.x, -self.y, -self.z)

    def scale(self, k: Number) -> "Point3":
        return Point3(self.x * k, self.y * k, self.z * k)

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0 and self.z == 0

    def to_list(self) -> List[str]:
        return [format_rat(self.x), format_rat(self.y), format_rat(self.z)]

    def __iter__(self):
        return iter((self.x, self.y, self.z))


ORIGIN = Point3(0, 0, 0)


def _as_rat(value: Union[Number, str]) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return parse_rat(value) if isinstance(value, str) else Fraction(value)


def dot(a, b) -> Number:
    return a.x * b.x + a.y * b.y + a.z * b.z


def cross(a, b) -> Point3:
    return Point3(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x)


def det3(a, b, c) -> Number:
    return dot(cross(a, b), c)


def lerp(a: Point3, b: Point3, t: Number) -> Point3:
    return Point3(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t)


def is_parallel(a, b) -> bool:
    return cross(a, b).is_zero()


@dataclass(frozen=True)
class Dir3:
    """A ray from the origin, stored as its primitive integer representative.

    Two directions compare equal exactly when their vectors are positively
    proportional, so Dir3 can be hashed and used as a point of the unit sphere.
    """

    x: int
    y: int
    z: int

    @classmethod
    def of(cls, vec) -> "Dir3":
        comps = [Fraction(vec.x), Fraction(vec.y), Fraction(vec.z)]
        if all(c == 0 for c in comps):
            raise GeometryError("zero vector has no direction")
        den = 1
        for c in comps:
            den = den * c.denominator // gcd(den, c.denominator)
        ints = [int(c * den) for c in comps]
        g = 0
        for value in ints:
            g = gcd(g, abs(value))
        return cls(ints[0] // g, ints[1] // g, ints[2] // g)

    @property
    def vector(self) -> Point3:
        return Point3(self.x, self.y, self.z)

    def __neg__(self) -> "Dir3":
        return Dir3(-self.x, -self.y, -self.z)

    def is_antipodal(self, other: "Dir3") -> bool:
        return is_parallel(self, other) and dot(self, other) < 0

    def to_list(self) -> List[str]:
        return [str(self.x), str(self.y), str(self.z)]


@dataclass(frozen=True)
class Plane:
    normal: Dir3
    offset: Fraction

    @classmethod
    def from_normal(cls, normal, point: Point3) -> "Plane":
        n = Dir3.of(normal)
        return cls(n, Fraction(dot(n, point)))

    @classmethod
    def through(cls, a: Point3, b: Point3, c: Point3) -> "Plane":
        return cls.from_normal(cross(b - a, c - a), a)

    def evaluate(self, p: Point3) -> Number:
        return dot(self.normal, p) - self.offset

    def contains(self, p: Point3) -> bool:
        return self.evaluate(p) == 0

    def same_as(self, other: "Plane") -> bool:
        if not is_parallel(self.normal, other.normal):
            return False
        # canonical normals are equal or opposite
        if self.normal == other.normal:
            return self.offset == other.offset
        return self.offset == -other.offset

    def is_parallel_to(self, other: "Plane") -> bool:
        return is_parallel(self.normal, other.normal)


def orient3d(a: Point3, b: Point3, c: Point3, d: Point3) -> int:
    return sign(det3(b - a, c - a, d - a))


def side_of_plane(pl: Plane, p: Point3) -> int:
    return sign(pl.evaluate(p))


def plane_hit_param(p: Point3, q: Point3, pl: Plane):
    """Parameter t with p + t(q - p) on the plane, or None when pq is parallel to it."""
    denom = dot(pl.normal, q - p)
    if denom == 0:
        return None
    return Fraction(pl.offset - dot(pl.normal, p)) / denom


# 2D work happens in the plane of a polygon after dropping its dominant axis.


def drop_axis(normal) -> int:
    comps = [abs(normal.x), abs(normal.y), abs(normal.z)]
    return comps.index(max(comps))


def to_2d(p, axis: int) -> Tuple[Number, Number]:
    if axis == 0:
        return (p.y, p.z)
    if axis == 1:
        return (p.z, p.x)
    return (p.x, p.y)


def orient2d(a: Sequence[Number], b: Sequence[Number], c: Sequence[Number]) -> int:
    return sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def on_segment_2d(p, a, b) -> bool:
    if orient2d(a, b, p) != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def classify_2d(point, loop: Sequence[Tuple[Number, Number]]) -> str:
    n = len(loop)
    for i in range(n):
        if on_segment_2d(point, loop[i], loop[(i + 1) % n]):
            return BOUNDARY
    inside = False
    px, py = point
    for i in range(n):
        ax, ay = loop[i]
        bx, by = loop[(i + 1) % n]
        if (ay > py) != (by > py):
            cross_x = ax + (py - ay) * Fraction(bx - ax) / (by - ay)
            if px < cross_x:
                inside = not inside
    return INSIDE if inside else OUTSIDE


def point_in_polygon_2d(poly, p: Point3) -> str:
    if not poly.plane.contains(p):
        raise GeometryError(f"point {p.to_list()} is not on the plane of polygon {poly.id}")
    axis = drop_axis(poly.plane.normal)
    return classify_2d(to_2d(p, axis), poly.loop_2d(axis))


def segment_crosses_polygon(p: Point3, q: Point3, poly) -> bool:
    sp = side_of_plane(poly.plane, p)
    sq = side_of_plane(poly.plane, q)
    if sp * sq != -1:
        return False
    t = plane_hit_param(p, q, poly.plane)
    return point_in_polygon_2d(poly, lerp(p, q, t)) != OUTSIDE


def segment_meet_params(p: Point3, q: Point3, c: Point3, d: Point3) -> List[Fraction]:
    """Parameters t in [0, 1] at which pq meets the closed segment cd.

    A collinear overlap is reported through the two ends of the shared piece.
    """
    r = q - p
    s = d - c
    cp = c - p
    if det3(r, s, cp) != 0:
        return []
    w = cross(r, s)
    ww = dot(w, w)
    if ww != 0:
        t = Fraction(dot(cross(cp, s), w)) / ww
        u = Fraction(dot(cross(cp, r), w)) / ww
        if 0 <= t <= 1 and 0 <= u <= 1:
            return [t]
        return []
    if not cross(cp, r).is_zero():
        return []
    rr = dot(r, r)
    if rr == 0:
        return []
    tc = Fraction(dot(cp, r)) / rr
    td = Fraction(dot(d - p, r)) / rr
    lo = max(min(tc, td), Fraction(0))
    hi = min(max(tc, td), Fraction(1))
    if lo > hi:
        return []
    return [lo] if lo == hi else [lo, hi]


def point_on_segment(x: Point3, a: Point3, b: Point3) -> bool:
    if not cross(b - a, x - a).is_zero():
        return False
    k = dot(x - a, b - a)
    return 0 <= k <= dot(b - a, b - a)


def segment_param(x: Point3, a: Point3, b: Point3) -> Fraction:
    ab = b - a
    return Fraction(dot(x - a, ab)) / dot(ab, ab)


def segments_touch_2d(a, b, c, d) -> bool:
    o1 = orient2d(a, b, c)
    o2 = orient2d(a, b, d)
    o3 = orient2d(c, d, a)
    o4 = orient2d(c, d, b)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    return (
        (o1 == 0 and on_segment_2d(c, a, b))
        or (o2 == 0 and on_segment_2d(d, a, b))
        or (o3 == 0 and on_segment_2d(a, c, d))
        or (o4 == 0 and on_segment_2d(b, c, d))
    )
