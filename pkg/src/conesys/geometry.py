"""Planar primitives: exact-aware vector ops, convex polygons, isometries.

Coordinates are `fractions.Fraction` or `float`; arithmetic helpers keep
Fractions exact whenever both operands are exact so that edge matching and
the angle-defect bookkeeping can be exact for rational input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DegeneratePolygonError

Coord = "Fraction | float"
Point = "tuple[Coord, Coord]"

QUARTER = math.pi / 2


def is_exact(v) -> bool:
    return isinstance(v, (Fraction, int))


def sub(p, q):
    return (p[0] - q[0], p[1] - q[1])


def cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1]


def norm(u) -> float:
    return math.hypot(float(u[0]), float(u[1]))


def as_float(p) -> tuple:
    return (float(p[0]), float(p[1]))


def signed_area(vertices: Sequence) -> "Fraction | float":
    """Shoelace signed area; exact if every coordinate is exact."""
    acc = 0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        acc = acc + (x0 * y1 - x1 * y0)
    return acc / 2 if isinstance(acc, (Fraction, float)) else Fraction(acc, 2)


def corner_angle(prev, v, nxt) -> tuple:
    """Interior angle at ``v`` as (quarter_turns, remainder_radians).

    Angles that are exactly pi/2 or pi (detected via exact zero cross or dot
    products) are returned with a zero float remainder so that defect sums
    over axis-aligned rational polygons carry no rounding error at all.
    """
    a = sub(prev, v)
    b = sub(nxt, v)
    c = cross(a, b)
    d = dot(a, b)
    if c == 0:
        if d < 0:
            return (2, 0.0)  # straight corner, angle pi
        raise DegeneratePolygonError("zero-angle corner")
    if d == 0:
        return (1, 0.0)  # right angle
    return (0, math.atan2(abs(float(c)), float(d)))


def angle_value(quarters: int, rem: float) -> float:
    return quarters * QUARTER + rem


def check_convex_ccw(vertices: Sequence) -> None:
    """Require a counterclockwise convex polygon with positive area.

    Straight (angle pi) corners are allowed; reflex corners and clockwise
    input are rejected.
    """
    n = len(vertices)
    if n < 3:
        raise DegeneratePolygonError(f"polygon with {n} vertices")
    area = signed_area(vertices)
    if not area > 0:
        raise DegeneratePolygonError(f"signed area {float(area)} (need ccw, positive)")
    for i in range(n):
        u = sub(vertices[(i + 1) % n], vertices[i])
        v = sub(vertices[(i + 2) % n], vertices[(i + 1) % n])
        if cross(u, v) < 0:
            raise DegeneratePolygonError(f"reflex corner at vertex {(i + 1) % n}")
        if u == (0, 0) or (float(u[0]) == 0.0 and float(u[1]) == 0.0):
            raise DegeneratePolygonError(f"repeated vertex {i}")


def polygon_diameter(arr: np.ndarray) -> float:
    d = 0.0
    n = len(arr)
    for i in range(n):
        for j in range(i + 1, n):
            d = max(d, float(np.hypot(*(arr[i] - arr[j]))))
    return d


def point_in_polygon(arr: np.ndarray, p, tol: float = 1e-12) -> bool:
    """Closed convex ccw polygon membership."""
    x, y = float(p[0]), float(p[1])
    n = len(arr)
    for i in range(n):
        ax, ay = arr[i]
        bx, by = arr[(i + 1) % n]
        if (bx - ax) * (y - ay) - (by - ay) * (x - ax) < -tol:
            return False
    return True


def point_polygon_distance(arr: np.ndarray, p) -> float:
    """Distance from a plane point to a closed convex polygon (0 if inside)."""
    if point_in_polygon(arr, p):
        return 0.0
    px, py = float(p[0]), float(p[1])
    best = math.inf
    n = len(arr)
    for i in range(n):
        ax, ay = arr[i]
        bx, by = arr[(i + 1) % n]
        vx, vy = bx - ax, by - ay
        L2 = vx * vx + vy * vy
        t = ((px - ax) * vx + (py - ay) * vy) / L2
        t = min(1.0, max(0.0, t))
        best = min(best, math.hypot(px - (ax + t * vx), py - (ay + t * vy)))
    return best


def fan_triangles(arr: np.ndarray) -> np.ndarray:
    """Fan triangulation (v0, vi, vi+1) as an (n-2, 3, 2) array."""
    n = len(arr)
    return np.stack([np.stack([arr[0], arr[i], arr[i + 1]]) for i in range(1, n - 1)])


@dataclass(frozen=True)
class Isometry:
    """Planar isometry x -> M x + t with M orthogonal (det = +-1)."""

    m00: float
    m01: float
    m10: float
    m11: float
    tx: float
    ty: float

    @staticmethod
    def identity() -> "Isometry":
        return Isometry(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)

    @property
    def det(self) -> float:
        return self.m00 * self.m11 - self.m01 * self.m10

    def apply(self, p) -> tuple:
        x, y = float(p[0]), float(p[1])
        return (self.m00 * x + self.m01 * y + self.tx, self.m10 * x + self.m11 * y + self.ty)

    def apply_vec(self, v) -> tuple:
        x, y = float(v[0]), float(v[1])
        return (self.m00 * x + self.m01 * y, self.m10 * x + self.m11 * y)

    def apply_arr(self, pts: np.ndarray) -> np.ndarray:
        m = np.array([[self.m00, self.m01], [self.m10, self.m11]])
        return pts @ m.T + np.array([self.tx, self.ty])

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other: (self*other)(x) = self(other(x))."""
        a, b, c, d = self.m00, self.m01, self.m10, self.m11
        e, f, g, h = other.m00, other.m01, other.m10, other.m11
        tx, ty = self.apply((other.tx, other.ty))
        return Isometry(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h, tx, ty)

    def inverse(self) -> "Isometry":
        # orthogonal: inverse of M is its transpose
        a, b, c, d = self.m00, self.m10, self.m01, self.m11
        tx = -(a * self.tx + b * self.ty)
        ty = -(c * self.tx + d * self.ty)
        return Isometry(a, b, c, d, tx, ty)

    def key(self, grid: float = 1e-9) -> tuple:
        return tuple(int(round(v / grid)) for v in
                     (self.m00, self.m01, self.m10, self.m11, self.tx, self.ty))


def direct_isometry(src_a, src_b, dst_a, dst_b) -> Isometry:
    """The unique orientation-preserving isometry with src_a->dst_a, src_b->dst_b."""
    ux, uy = float(src_b[0] - src_a[0]), float(src_b[1] - src_a[1])
    vx, vy = float(dst_b[0] - dst_a[0]), float(dst_b[1] - dst_a[1])
    L = math.hypot(ux, uy)
    cosw = (ux * vx + uy * vy) / (L * L)
    sinw = (ux * vy - uy * vx) / (L * L)
    ax, ay = float(src_a[0]), float(src_a[1])
    tx = float(dst_a[0]) - (cosw * ax - sinw * ay)
    ty = float(dst_a[1]) - (sinw * ax + cosw * ay)
    return Isometry(cosw, -sinw, sinw, cosw, tx, ty)


def flipped_isometry(src_a, src_b, dst_a, dst_b) -> Isometry:
    """The unique orientation-reversing isometry with src_a->dst_a, src_b->dst_b."""
    ux, uy = float(src_b[0] - src_a[0]), float(src_b[1] - src_a[1])
    vx, vy = float(dst_b[0] - dst_a[0]), float(dst_b[1] - dst_a[1])
    L = math.hypot(ux, uy)
    # M = R(angle v) * diag(1,-1) * R(-angle u), written out
    cu, su = ux / L, uy / L
    cv, sv = vx / L, vy / L
    m00 = cv * cu + sv * su
    m01 = cv * su - sv * cu
    m10 = sv * cu - cv * su
    m11 = sv * su + cv * cu
    ax, ay = float(src_a[0]), float(src_a[1])
    tx = float(dst_a[0]) - (m00 * ax + m01 * ay)
    ty = float(dst_a[1]) - (m10 * ax + m11 * ay)
    return Isometry(m00, m01, m10, m11, tx, ty)


def segments_cross(c, q, a, b) -> bool:
    """Closed test: does segment [c,q] meet segment [a,b]?"""
    def orient(p0, p1, p2):
        return (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])

    return (orient(c, q, a) * orient(c, q, b) <= 0.0
            and orient(a, b, c) * orient(a, b, q) <= 0.0)


def crossing_mask(c, Q: np.ndarray, a, b) -> np.ndarray:
    """Vectorized segments_cross(c, Q[i], a, b) over an (n, 2) array Q."""
    cx, cy = c
    ax, ay = a
    bx, by = b
    dx = Q[:, 0] - cx
    dy = Q[:, 1] - cy
    oa = dx * (ay - cy) - dy * (ax - cx)
    ob = dx * (by - cy) - dy * (bx - cx)
    ex, ey = bx - ax, by - ay
    oc = ex * (cy - ay) - ey * (cx - ax)
    oq = ex * (Q[:, 1] - ay) - ey * (Q[:, 0] - ax)
    return (oa * ob <= 0.0) & (oc * oq <= 0.0)
