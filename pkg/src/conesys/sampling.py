"""Seeded sampling of points and unit tangents.

All Monte Carlo in the package runs on numpy's PCG64 generator; reports
record the seed and the generator name so runs are bit-reproducible.
"""

from __future__ import annotations

import numpy as np

from . import geometry as geo
from .surface import ConeSurface, SurfacePoint, UnitTangent

RNG_NAME = "pcg64"


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def child_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(stream + 1)[stream])


def sample_points(surface: ConeSurface, n: int, rng: np.random.Generator):
    """Area-uniform points: polygon by area, then fan triangle by area, then
    uniform barycentric coordinates.  Returns (poly indices, local coords)."""
    n_poly = surface.polygon_count
    areas = np.array([abs(float(geo.signed_area(surface.description.polygons[p])))
                      for p in range(n_poly)])
    poly_idx = rng.choice(n_poly, size=n, p=areas / areas.sum()) if n_poly > 1 \
        else np.zeros(n, dtype=int)
    pts = np.empty((n, 2))
    for p in range(n_poly):
        sel = np.nonzero(poly_idx == p)[0]
        if len(sel) == 0:
            continue
        tris = geo.fan_triangles(surface.polygon(p))
        u = tris[:, 1] - tris[:, 0]
        v = tris[:, 2] - tris[:, 0]
        t_areas = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]) / 2
        ti = rng.choice(len(tris), size=len(sel), p=t_areas / t_areas.sum()) if len(tris) > 1 \
            else np.zeros(len(sel), dtype=int)
        u = rng.random(len(sel))
        v = rng.random(len(sel))
        flip = u + v > 1
        u[flip] = 1 - u[flip]
        v[flip] = 1 - v[flip]
        tri = tris[ti]
        pts[sel] = tri[:, 0] + u[:, None] * (tri[:, 1] - tri[:, 0]) + v[:, None] * (tri[:, 2] - tri[:, 0])
    return poly_idx, pts


def sample_unit_tangents(surface: ConeSurface, n: int, rng: np.random.Generator):
    """Liouville-uniform unit tangents: base by area, direction by angle.
    Returns (poly indices, coords (n,2), directions (n,2))."""
    poly_idx, pts = sample_points(surface, n, rng)
    ang = rng.random(n) * (2 * np.pi)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return poly_idx, pts, dirs


def tangent_at(surface: ConeSurface, poly: int, pt, direction) -> UnitTangent:
    from .surface import unit_tangent

    return unit_tangent(SurfacePoint(int(poly), (float(pt[0]), float(pt[1]))), direction)
