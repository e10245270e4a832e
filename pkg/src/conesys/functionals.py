"""Curvature-weighted disk functionals on cone surfaces.

Two moments of the curvature around a basepoint x at scale r:

* ball moment (metric balls): each cone point p with d(x, p) <= r contributes
  defect * (r - d)^2 / 2, using the true distance whether or not p is visible.
* flow moment (geodesic rays from x): only visible cone points contribute,
  each weighted by the fraction 2*pi / theta_p of its tangent circle swept by
  the rays through it.  The weight is forced by the smooth limit: mollifying
  the cone and integrating curvature along the geodesic flow spreads the
  defect over the full angle theta_p while rays from x only see a 2*pi wedge
  of directions at p.  With this normalization the surface average of the
  flow moment equals 2*pi*chi * pi*r^4 / 12 exactly, and the flow moment
  dominates the ball moment pointwise on nonpositively curved surfaces
  (shadowed cone points drop out entirely; visible ones shrink by 2*pi/theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    NotNonpositivelyCurvedError,
    PositiveCurvatureUnsupportedError,
    SamplingCapExceededError,
)
from .sampling import RNG_NAME, child_rng, rng_from_seed, sample_points
from .surface import ConeSurface, SurfacePoint
from .unfolding import (
    DEFAULT_NODE_BUDGET,
    cone_graph_distances,
    develop_vertex_fan,
    radius_guard,
    reach_cone_points,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MomentContribution:
    cone_point: int
    defect: float
    distance: float
    visible: bool
    weight: float  # 1 for ball moments, 2*pi/theta for flow moments


@dataclass(frozen=True)
class CurvatureMoment:
    """Value in length^2 * radians; nonpositive on nonpositively curved surfaces."""

    value: float
    radius: float
    basepoint: SurfacePoint
    contributions: tuple
    guaranteed: bool


@dataclass(frozen=True)
class BallAreaValue:
    value: float
    exact: bool  # equality holds (nonpositive curvature, radius certified)


@dataclass(frozen=True)
class FlowMomentAverage:
    mc_estimate: float
    exact_value: float
    stderr: float
    n_points: int
    seed: int
    rng: str


@dataclass(frozen=True)
class RichDiskReport:
    basepoint: SurfacePoint
    radius: float
    moment: float  # ball moment at the returned basepoint
    average_bound: float  # (2*pi*chi / area) * pi r^4 / 12
    sample_count: int
    seed: int
    rng: str

    @property
    def implied_ball_area(self) -> float:
        return math.pi * self.radius ** 2 - self.average_bound


def _fiber_weight(surface: ConeSurface, class_index: int) -> float:
    return TWO_PI / surface.vertex_classes[class_index].theta


def ball_curvature_moment(surface: ConeSurface, x: SurfacePoint, r: float,
                          allow_large_radius: bool = False,
                          budget: int = DEFAULT_NODE_BUDGET) -> CurvatureMoment:
    """Sum of defect * (r - d(x, p))^2 / 2 over cone points within distance r."""
    guaranteed = radius_guard(surface, r, allow_large_radius)
    contribs = []
    for e in reach_cone_points(surface, x, r, budget):
        contribs.append(MomentContribution(e.cone_point, e.defect, e.distance, e.visible, 1.0))
    value = math.fsum(c.defect * c.weight * (r - c.distance) ** 2 / 2 for c in contribs)
    return CurvatureMoment(value, r, x, tuple(contribs), guaranteed)


def flow_curvature_moment(surface: ConeSurface, x: SurfacePoint, r: float,
                          allow_large_radius: bool = False,
                          budget: int = DEFAULT_NODE_BUDGET) -> CurvatureMoment:
    """Tangent-fiber-normalized moment over visible cone points only."""
    if not surface.nonpositively_curved:
        raise NotNonpositivelyCurvedError("flow moment requires cone angles >= 2*pi")
    guaranteed = radius_guard(surface, r, allow_large_radius)
    contribs = []
    for e in reach_cone_points(surface, x, r, budget):
        if e.visible:
            w = _fiber_weight(surface, e.cone_point)
            contribs.append(MomentContribution(e.cone_point, e.defect, e.distance, True, w))
    value = math.fsum(c.defect * c.weight * (r - c.distance) ** 2 / 2 for c in contribs)
    return CurvatureMoment(value, r, x, tuple(contribs), guaranteed)


def ball_area_formula(surface: ConeSurface, x: SurfacePoint, r: float,
                      allow_large_radius: bool = False,
                      budget: int = DEFAULT_NODE_BUDGET) -> BallAreaValue:
    """pi r^2 minus the ball moment: the ball area on nonpositively curved
    surfaces (within half the systole), a lower bound otherwise."""
    m = ball_curvature_moment(surface, x, r, allow_large_radius, budget)
    return BallAreaValue(math.pi * r * r - m.value,
                         exact=surface.nonpositively_curved and m.guaranteed)


# -- batched evaluation ----------------------------------------------------------


def batch_moments(surface: ConeSurface, r: float, poly_idx: np.ndarray,
                  pts: np.ndarray, budget: int = DEFAULT_NODE_BUDGET):
    """(ball moment, flow moment) arrays for many basepoints at once.

    Visible distances are computed from each cone point's fan development,
    using the symmetry d_vis(x, p) = d_vis(p, x); true distances go through
    the cone-to-cone visibility graph.
    """
    n = len(pts)
    G = np.zeros(n)
    F = np.zeros(n)
    cones = [c.index for c in surface.cone_points]
    if not cones:
        return G, F
    graph = cone_graph_distances(surface, r, budget)
    dvis = {}
    for c in cones:
        fan = develop_vertex_fan(surface, c, r, budget)
        dvis[c] = fan.min_visible_distance(poly_idx, pts)
    for c in cones:
        d_true = dvis[c].copy()
        for c2 in cones:
            if c2 == c:
                continue
            g = graph[(c, c2)]
            if math.isfinite(g):
                np.minimum(d_true, g + dvis[c2], out=d_true)
        kappa = surface.vertex_classes[c].defect
        w = _fiber_weight(surface, c)
        slack_true = np.clip(r - d_true, 0.0, None)
        slack_vis = np.clip(r - dvis[c], 0.0, None)
        G += kappa * slack_true ** 2 / 2
        F += kappa * w * slack_vis ** 2 / 2
    return G, F


def flow_moment_average(surface: ConeSurface, r: float, n_points: int, seed: int,
                        allow_large_radius: bool = False,
                        budget: int = DEFAULT_NODE_BUDGET) -> FlowMomentAverage:
    """Monte Carlo surface integral of the flow moment against its closed form
    2*pi*chi * pi r^4 / 12."""
    if not surface.nonpositively_curved:
        raise NotNonpositivelyCurvedError("flow moment requires cone angles >= 2*pi")
    radius_guard(surface, r, allow_large_radius)
    rng = rng_from_seed(seed)
    poly_idx, pts = sample_points(surface, n_points, rng)
    _, F = batch_moments(surface, r, poly_idx, pts, budget)
    area = surface.area
    est = area * float(F.mean())
    stderr = area * float(F.std(ddof=1)) / math.sqrt(n_points)
    exact = TWO_PI * surface.euler_characteristic * math.pi * r ** 4 / 12.0
    return FlowMomentAverage(est, exact, stderr, n_points, seed, RNG_NAME)


def find_rich_disk(surface: ConeSurface, r: float, n_points: int, seed: int,
                   allow_large_radius: bool = False,
                   budget: int = DEFAULT_NODE_BUDGET,
                   max_doublings: int = 8) -> RichDiskReport:
    """Basepoint whose ball moment is at most the surface average bound
    (2*pi*chi / area) * pi r^4 / 12; sampling escalates until one is found."""
    if n_points < 100:
        raise ValueError(f"need at least 100 points, got {n_points}")
    if not surface.nonpositively_curved:
        raise NotNonpositivelyCurvedError("rich-disk search requires nonpositive curvature")
    radius_guard(surface, r, allow_large_radius)
    bound = (TWO_PI * surface.euler_characteristic / surface.area) * math.pi * r ** 4 / 12.0
    n = n_points
    total = 0
    for attempt in range(max_doublings + 1):
        rng = child_rng(seed, attempt)
        poly_idx, pts = sample_points(surface, n, rng)
        G, _ = batch_moments(surface, r, poly_idx, pts, budget)
        total += n
        i = int(np.argmin(G))
        if G[i] <= bound + 1e-12:
            x0 = SurfacePoint(int(poly_idx[i]), (float(pts[i, 0]), float(pts[i, 1])))
            return RichDiskReport(x0, r, float(G[i]), bound, total, seed, RNG_NAME)
        n *= 2
    raise SamplingCapExceededError(
        f"no basepoint below the average bound after {total} samples"
    )


# -- constant-curvature comparison models ------------------------------------------


def model_ball_area(k: float, r: float) -> float:
    """Disk area in the simply connected surface of constant curvature k <= 0."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    if k > 0:
        raise PositiveCurvatureUnsupportedError(f"curvature {k} > 0")
    if k == 0:
        return math.pi * r * r
    s = math.sqrt(-k)
    return TWO_PI * (math.cosh(s * r) - 1.0) / (-k)


def model_curvature_moment(k: float, r: float) -> float:
    """Closed form of the ball moment in constant curvature k <= 0; satisfies
    pi r^2 - moment = model_ball_area identically."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    if k > 0:
        raise PositiveCurvatureUnsupportedError(f"curvature {k} > 0")
    if k == 0:
        return 0.0
    s2 = -k
    return -TWO_PI * ((math.cosh(math.sqrt(s2) * r) - 1.0) / s2 - r * r / 2.0)
