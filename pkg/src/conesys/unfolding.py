"""Developments (unfoldings), geodesic tracing, distances, cone-point reach.

The development around a basepoint is a DAG of placed polygon copies.  Nodes
are deduplicated by (polygon, quantized isometry); every discovery of an
already-placed copy adds another parent link, so chain validity can be
decided as a disjunction over all incoming edge chains.  A straight segment
from the basepoint to a developed image is a genuine geodesic exactly when
it crosses the developed gluing edges of one such chain in order.

Descriptions in which two glued partner edges develop onto coincident
segments (zero-width slits) are outside this module's scope: such copies
would collide under the dedup key.  None of the built-in surfaces do this.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry as geo
from .errors import (
    BasepointOnConePointError,
    BudgetExceededError,
    RadiusTooLargeError,
)
from .surface import ConeSurface, SurfacePoint, UnitTangent, unit_tangent, walk_step

DEFAULT_NODE_BUDGET = 1_000_000
ISO_GRID = 1e-9


@dataclass
class DevNode:
    index: int
    poly: int
    iso: geo.Isometry  # polygon-local coords -> development plane
    links: list  # [(parent index, crossing segment ((ax,ay),(bx,by))), ...]
    wedge: Optional[tuple] = None  # roots of vertex fans: (u_lo, u_hi, probe)
    depth: int = 0
    is_root: bool = False
    corner: Optional[tuple] = None  # fan roots: (polygon, vertex) at the origin
    angle_start: float = 0.0  # fan roots: cumulative angle around the vertex
    angle_span: float = 0.0  # fan roots: this corner's angle


@dataclass
class Development:
    surface: ConeSurface
    center: tuple  # developed basepoint
    radius: float
    nodes: list
    root_kind: str  # "point" | "vertex"
    guaranteed: bool  # multiplicity-one guarantee (r below half the known systole)
    source: object  # SurfacePoint or vertex-class index
    key_index: dict = None  # (poly, iso key) -> node index, filled by _expand

    def nodes_for_polygon(self, p: int):
        return [n for n in self.nodes if n.poly == p]

    def developed_polygon(self, node_index: int) -> np.ndarray:
        node = self.nodes[node_index]
        if not hasattr(node, "_devpoly") or node._devpoly is None:
            node._devpoly = node.iso.apply_arr(self.surface.polygon(node.poly))
        return node._devpoly

    def neighbor(self, node_index: int, e: int):
        """Index of the placement across edge e of the node, or None if that
        copy was not built (it then lies outside the development radius)."""
        if not hasattr(self, "_nbr"):
            self._nbr = {}
        if (node_index, e) in self._nbr:
            return self._nbr[(node_index, e)]
        node = self.nodes[node_index]
        q, _j, _ = self.surface.pairing[(node.poly, e)]
        child_iso = node.iso.compose(self.surface.transitions[(node.poly, e)])
        idx = self.key_index.get((q, child_iso.key(ISO_GRID)))
        if idx == node_index:
            idx = None  # coincident-edge self gluing, unsupported geometry
        self._nbr[(node_index, e)] = idx
        return idx

    # -- chain validity ---------------------------------------------------------

    def valid_points(self, node_index: int, Q: np.ndarray) -> np.ndarray:
        """For plane points Q lying in this node's developed polygon: which of
        the straight segments basepoint->Q[i] are genuine geodesic segments.

        Walks each segment backwards through its unique entry edges; a
        segment is valid when the walk ends at a root copy with no further
        entry crossing.
        """
        out = np.zeros(len(Q), dtype=bool)
        c = self.center
        scale2 = (1.0 + self.surface.max_polygon_diameter) ** 2
        tol = 1e-12 * scale2
        work = [(node_index, np.arange(len(Q)))]
        while work:
            nd, sel = work.pop()
            if len(sel) == 0:
                continue
            node = self.nodes[nd]
            arr = self.developed_polygon(nd)
            n = len(arr)
            remaining = np.ones(len(sel), dtype=bool)
            for e in range(n):
                a = arr[e]
                b = arr[(e + 1) % n]
                oc = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                if oc >= -tol:
                    continue  # basepoint not strictly outside this edge
                Qs = Q[sel]
                dx = Qs[:, 0] - c[0]
                dy = Qs[:, 1] - c[1]
                oa = dx * (a[1] - c[1]) - dy * (a[0] - c[0])
                ob = dx * (b[1] - c[1]) - dy * (b[0] - c[0])
                oq = (b[0] - a[0]) * (Qs[:, 1] - a[1]) - (b[1] - a[1]) * (Qs[:, 0] - a[0])
                cm = (oa * ob <= 0.0) & (oq >= -tol) & remaining
                if not cm.any():
                    continue
                remaining &= ~cm
                pred = self.neighbor(nd, e)
                if pred is not None:
                    work.append((pred, sel[cm]))
            if node.is_root and remaining.any():
                out[sel[remaining]] = True
        return out

    def min_visible_distance(self, poly_idx: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Per sample (chart poly_idx[i], local coords pts[i]): length of the
        shortest valid straight segment from the basepoint, inf if none
        within the development radius."""
        out = np.full(len(pts), np.inf)
        cx, cy = self.center
        for node in self.nodes:
            sel = np.nonzero(poly_idx == node.poly)[0]
            if len(sel) == 0:
                continue
            Q = node.iso.apply_arr(pts[sel])
            d = np.hypot(Q[:, 0] - cx, Q[:, 1] - cy)
            cand = d <= self.radius + 1e-12
            if not cand.any():
                continue
            vm = self.valid_points(node.index, Q)
            ok = cand & vm
            if ok.any():
                idx = sel[ok]
                np.minimum.at(out, idx, d[ok])
        return out

    def check_multiplicity_one(self, n_samples: int, seed: int) -> int:
        """Sampled multiplicity check: every surface point at distance < radius
        must have exactly one valid developed image in the open ball.
        Returns the max multiplicity observed (should be <= 1)."""
        from .sampling import sample_points

        rng = np.random.default_rng(seed)
        poly_idx, pts = sample_points(self.surface, n_samples, rng)
        counts = np.zeros(len(pts), dtype=int)
        cx, cy = self.center
        for node in self.nodes:
            sel = np.nonzero(poly_idx == node.poly)[0]
            if len(sel) == 0:
                continue
            Q = node.iso.apply_arr(pts[sel])
            d = np.hypot(Q[:, 0] - cx, Q[:, 1] - cy)
            ok = (d < self.radius - 1e-9) & self.valid_points(node.index, Q)
            counts[sel[ok]] += 1
        return int(counts.max(initial=0))


def _half_systole(surface: ConeSurface) -> Optional[float]:
    hint = surface.systole_hint
    return None if hint is None else float(hint[0]) / 2.0


def radius_guard(surface: ConeSurface, r: float, allow_large: bool = False) -> bool:
    """Enforce r below half the known systole; returns the guarantee flag.

    Unknown systole: proceed unguaranteed.  Known and exceeded: raise unless
    the caller explicitly opts in (results then downgrade to bounds).
    """
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    half = _half_systole(surface)
    if half is None:
        return False
    if r < half:
        return True
    if allow_large:
        return False
    raise RadiusTooLargeError(
        f"radius {r} is not below half the systole ({2 * half} / 2); "
        "pass the explicit override to proceed"
    )


def develop_ball(surface: ConeSurface, x: SurfacePoint, r: float,
                 budget: int = DEFAULT_NODE_BUDGET) -> Development:
    """Breadth-first development of the metric ball of radius r around x."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    cls = surface.cone_class_near(x.chart, x.coords)
    if cls is not None:
        raise BasepointOnConePointError(
            f"basepoint {x} coincides with cone point class {cls.index}"
        )
    half = _half_systole(surface)
    guaranteed = half is not None and r < half and surface.nonpositively_curved
    center = (float(x.coords[0]), float(x.coords[1]))
    root = DevNode(0, x.chart, geo.Isometry.identity(), [], None, 0, is_root=True)
    dev = Development(surface, center, r, [root], "point", guaranteed, x)
    _expand(dev, budget)
    return dev


def develop_vertex_fan(surface: ConeSurface, class_index: int, r: float,
                       budget: int = DEFAULT_NODE_BUDGET) -> Development:
    """Development of the ball of radius r around a vertex class.

    Roots are the corner wedges in rotation order, each placed with the
    vertex at the origin; validity of a straight segment from the vertex
    additionally requires its direction to lie inside the root wedge.
    """
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    vclass = surface.vertex_classes[class_index]
    half = _half_systole(surface)
    guaranteed = half is not None and r < half and surface.nonpositively_curved
    dev = Development(surface, (0.0, 0.0), r, [], "vertex", guaranteed, class_index)

    sizes = [surface.edge_count(p) for p in range(surface.polygon_count)]
    start = vclass.corners[0]
    corner, exit_hi = start, True
    iso = None
    angle_acc = 0.0
    while True:
        p, v = corner
        arr = surface.polygon(p)
        n = len(arr)
        cpt = tuple(arr[v])
        nxt_pt = tuple(arr[(v + 1) % n])
        prv_pt = tuple(arr[(v - 1) % n])
        if iso is None:
            L = math.hypot(nxt_pt[0] - cpt[0], nxt_pt[1] - cpt[1])
            iso = geo.direct_isometry(cpt, nxt_pt, (0.0, 0.0), (L, 0.0))
        dev_c = iso.apply(cpt)
        if math.hypot(*dev_c) > 1e-7 * (1 + surface.max_polygon_diameter):
            raise RuntimeError("fan corner drifted from the origin")
        u_lo = iso.apply_vec((nxt_pt[0] - cpt[0], nxt_pt[1] - cpt[1]))
        u_hi = iso.apply_vec((prv_pt[0] - cpt[0], prv_pt[1] - cpt[1]))
        # interior probe: local angle bisector (or inward normal at straight corners)
        a = _unit((nxt_pt[0] - cpt[0], nxt_pt[1] - cpt[1]))
        b = _unit((prv_pt[0] - cpt[0], prv_pt[1] - cpt[1]))
        probe_local = (a[0] + b[0], a[1] + b[1])
        if math.hypot(*probe_local) < 1e-9:
            probe_local = (-a[1], a[0])  # straight corner: inward normal, polygon is ccw
        probe = iso.apply_vec(probe_local)
        poly_exact = surface.description.polygons[p]
        q, rem = geo.corner_angle(poly_exact[(v - 1) % n], poly_exact[v], poly_exact[(v + 1) % n])
        span = geo.angle_value(q, rem)
        node = DevNode(len(dev.nodes), p, iso, [], (u_lo, u_hi, probe), 0,
                       is_root=True, corner=(p, v), angle_start=angle_acc,
                       angle_span=span)
        dev.nodes.append(node)
        angle_acc += span
        edge, corner2, hi2 = walk_step(sizes, surface.pairing, corner, exit_hi)
        iso = iso.compose(surface.transitions[edge])
        corner, exit_hi = corner2, hi2
        if (corner, exit_hi) == (start, True):
            break
        if len(dev.nodes) > 4 * sum(sizes):
            raise RuntimeError("fan walk failed to close")
    _expand(dev, budget)
    return dev


def fan_angle(dev: Development, direction) -> float:
    """Angular coordinate of a plane direction around a vertex-fan source,
    in [0, theta): cumulative corner start plus the offset inside the wedge."""
    best = None
    for node in dev.nodes:
        if not node.is_root:
            continue
        u_lo, u_hi, probe = node.wedge
        s_lo = u_lo[0] * probe[1] - u_lo[1] * probe[0]
        s_hi = u_hi[0] * probe[1] - u_hi[1] * probe[0]
        c_lo = u_lo[0] * direction[1] - u_lo[1] * direction[0]
        c_hi = u_hi[0] * direction[1] - u_hi[1] * direction[0]
        violation = max(0.0, -c_lo * (1 if s_lo >= 0 else -1),
                        -c_hi * (1 if s_hi >= 0 else -1))
        if best is None or violation < best[0]:
            dlo = _unit(u_lo)
            d = _unit(direction)
            offset = math.atan2(abs(dlo[0] * d[1] - dlo[1] * d[0]), dlo[0] * d[0] + dlo[1] * d[1])
            offset = min(offset, node.angle_span)
            best = (violation, node.angle_start + offset)
        if violation == 0.0:
            break
    if best is None:
        raise ValueError("empty fan")
    return best[1]


def fan_root_for_corner(dev: Development, corner) -> DevNode:
    for node in dev.nodes:
        if node.is_root and node.corner == corner:
            return node
    raise KeyError(f"no fan root for corner {corner}")


def _unit(v):
    n = math.hypot(v[0], v[1])
    return (v[0] / n, v[1] / n)


def _expand(dev: Development, budget: int) -> None:
    surface = dev.surface
    c = dev.center
    key_index = {}
    for node in dev.nodes:
        key_index[(node.poly, node.iso.key(ISO_GRID))] = node.index
    dev.key_index = key_index
    frontier = list(range(len(dev.nodes)))
    edge_scale = 1e-9 * (1 + surface.max_polygon_diameter)
    while frontier:
        idx = frontier.pop(0)
        node = dev.nodes[idx]
        arr = node.iso.apply_arr(surface.polygon(node.poly))
        n = len(arr)
        for e in range(n):
            seg = (tuple(arr[e]), tuple(arr[(e + 1) % n]))
            # a geodesic from the basepoint enters the neighbouring copy
            # through this edge, so only edges meeting the open disk matter
            if _point_segment_distance(c, seg) >= dev.radius:
                continue
            q, j, _kind = surface.pairing[(node.poly, e)]
            child_iso = node.iso.compose(surface.transitions[(node.poly, e)])
            key = (q, child_iso.key(ISO_GRID))
            if key in key_index:
                child = dev.nodes[key_index[key]]
                if child.index == node.index:
                    continue  # coincident-edge self gluing, unsupported geometry
                if not any(p == node.index and _seg_close(s, seg, edge_scale)
                           for p, s in child.links):
                    child.links.append((node.index, seg))
                continue
            child_arr = child_iso.apply_arr(surface.polygon(q))
            # the partner edge must land on the crossed edge (reversed or not)
            back = (tuple(child_arr[j]), tuple(child_arr[(j + 1) % len(child_arr)]))
            if not (_seg_close((back[1], back[0]), seg, edge_scale)
                    or _seg_close(back, seg, edge_scale)):
                raise RuntimeError("development transition failed to match edges")
            child = DevNode(len(dev.nodes), q, child_iso, [(node.index, seg)],
                            None, node.depth + 1)
            dev.nodes.append(child)
            key_index[key] = child.index
            frontier.append(child.index)
            if len(dev.nodes) > budget:
                raise BudgetExceededError(
                    f"development exceeded {budget} nodes at radius {dev.radius}"
                )


def _point_segment_distance(p, seg) -> float:
    (ax, ay), (bx, by) = seg
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    if L2 == 0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * vx + (p[1] - ay) * vy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * vx), p[1] - (ay + t * vy))


def _seg_close(s1, s2, tol) -> bool:
    return (math.hypot(s1[0][0] - s2[0][0], s1[0][1] - s2[0][1]) <= tol
            and math.hypot(s1[1][0] - s2[1][0], s1[1][1] - s2[1][1]) <= tol)


# -- geodesic tracing -----------------------------------------------------------


@dataclass(frozen=True)
class ConePointHit:
    at: float  # arc length of the hit
    cone_class: int


@dataclass
class GeodesicTrace:
    points: list  # SurfacePoints visited (start, crossings, endpoint)
    length: float  # arc length actually traversed
    end: Optional[UnitTangent]  # set when the full length was traversed
    hit: Optional[ConePointHit]  # set when the ray ran into a cone point


def trace_geodesic(surface: ConeSurface, u: UnitTangent, length: float,
                   crossing_budget: int = 100_000) -> GeodesicTrace:
    """Straight-line continuation of u across gluings for the given length.

    Terminates with a ConePointHit if the ray meets a cone point; regular
    glued-up vertices (total angle 2*pi) are passed through.
    """
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    p = u.base.chart
    z = (float(u.base.coords[0]), float(u.base.coords[1]))
    w = u.direction
    remaining = length
    traversed = 0.0
    pts = [SurfacePoint(p, z)]
    eps = surface.eps_hit
    zero_steps = 0
    for _ in range(crossing_budget):
        arr = surface.polygon(p)
        t_exit, e_exit = _ray_exit(arr, z, w)
        if e_exit < 0 or t_exit >= remaining:
            endpoint = (z[0] + remaining * w[0], z[1] + remaining * w[1])
            pts.append(SurfacePoint(p, endpoint))
            return GeodesicTrace(pts, length, UnitTangent(SurfacePoint(p, endpoint), w), None)
        y = (z[0] + t_exit * w[0], z[1] + t_exit * w[1])
        n = len(arr)
        for v in (e_exit, (e_exit + 1) % n):
            if math.hypot(arr[v][0] - y[0], arr[v][1] - y[1]) <= eps:
                cls = surface.vertex_classes[surface.corner_class[(p, v)]]
                if cls.is_cone:
                    hit_at = traversed + t_exit
                    pts.append(SurfacePoint(p, y))
                    return GeodesicTrace(pts, hit_at, None, ConePointHit(hit_at, cls.index))
        q, j, _ = surface.pairing[(p, e_exit)]
        T = surface.transitions[(q, j)]  # maps p-local into q-local
        z = T.apply(y)
        w = _unit(T.apply_vec(w))
        p = q
        remaining -= t_exit
        traversed += t_exit
        pts.append(SurfacePoint(p, z))
        if t_exit <= eps:
            zero_steps += 1
            if zero_steps > 64:
                raise BudgetExceededError("ray stalled at a vertex fan")
        else:
            zero_steps = 0
    raise BudgetExceededError(f"ray exceeded {crossing_budget} edge crossings")


def _ray_exit(arr: np.ndarray, z, w):
    """Exit parameter and edge index for a ray inside a convex ccw polygon.

    Rays parallel to an edge within rounding (as when tracing along a glued
    boundary) must not register an immediate exit through it.  Collinear
    subdivided sides share a crossing time, so the exit edge is the one whose
    segment actually contains the crossing point.
    """
    crossings = []
    t_out = math.inf
    n = len(arr)
    for i in range(n):
        ax, ay = arr[i]
        bx, by = arr[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        sw = ex * w[1] - ey * w[0]
        if sw >= -1e-13 * (abs(ex) + abs(ey)):
            continue  # not leaving through this edge
        s0 = ex * (z[1] - ay) - ey * (z[0] - ax)
        t = s0 / (-sw)
        crossings.append((t, i))
        t_out = min(t_out, t)
    if not crossings:
        return (math.inf, -1)
    t_out = max(t_out, 0.0)
    y = (z[0] + t_out * w[0], z[1] + t_out * w[1])
    e_out = -1
    best_overshoot = math.inf
    for t, i in crossings:
        if t - t_out > 1e-9 * (1.0 + abs(t_out)):
            continue
        ax, ay = arr[i]
        bx, by = arr[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        L2 = ex * ex + ey * ey
        s_param = ((y[0] - ax) * ex + (y[1] - ay) * ey) / L2
        overshoot = max(-s_param, s_param - 1.0, 0.0)
        if overshoot < best_overshoot:
            best_overshoot = overshoot
            e_out = i
    return (t_out, e_out)


# -- cone point reach -----------------------------------------------------------


@dataclass(frozen=True)
class ConePointReach:
    cone_point: int  # vertex class index
    defect: float
    distance: float
    visible: bool


def _validated_cone_images(dev: Development, start_tangent_factory):
    """Valid straight segments from the development source to cone corners.

    Returns {class index: [(length, plane image), ...]} with duplicates
    (same image reached in overlapping charts) removed; every candidate is
    re-traced on the surface before being accepted.
    """
    surface = dev.surface
    cx, cy = dev.center
    scale = 1 + surface.max_polygon_diameter
    found: dict = {}
    seen = set()
    for node in dev.nodes:
        arr = node.iso.apply_arr(surface.polygon(node.poly))
        for v in range(len(arr)):
            cls_idx = surface.corner_class[(node.poly, v)]
            cls = surface.vertex_classes[cls_idx]
            if not cls.is_cone:
                continue
            q = (float(arr[v, 0]), float(arr[v, 1]))
            t = math.hypot(q[0] - cx, q[1] - cy)
            if not (surface.eps_hit < t <= dev.radius + 1e-12):
                continue
            key = (cls_idx, round(q[0] / 1e-9), round(q[1] / 1e-9))
            if key in seen:
                continue
            seen.add(key)
            direction = ((q[0] - cx) / t, (q[1] - cy) / t)
            tangent = start_tangent_factory(direction)
            if tangent is None:
                continue
            try:
                tr = trace_geodesic(surface, tangent, t + surface.eps_hit * 10 + 1e-12)
            except BudgetExceededError:
                continue
            if tr.hit is not None and tr.hit.cone_class == cls_idx \
                    and abs(tr.hit.at - t) <= 1e-7 * scale:
                found.setdefault(cls_idx, []).append((t, q))
    return found


def _point_tangent_factory(dev: Development):
    x = dev.source

    def factory(direction):
        return unit_tangent(x, direction)

    return factory


def _fan_tangent_factory(dev: Development):
    surface = dev.surface
    roots = [n for n in dev.nodes if n.is_root]

    def factory(direction):
        q = np.array([direction])
        for node in roots:
            u_lo, u_hi, probe = node.wedge
            s_lo = u_lo[0] * probe[1] - u_lo[1] * probe[0]
            s_hi = u_hi[0] * probe[1] - u_hi[1] * probe[0]
            c_lo = u_lo[0] * direction[1] - u_lo[1] * direction[0]
            c_hi = u_hi[0] * direction[1] - u_hi[1] * direction[0]
            if c_lo * s_lo >= -1e-15 and c_hi * s_hi >= -1e-15:
                inv = node.iso.inverse()
                arr = surface.polygon(node.poly)
                # which corner of this polygon sits at the origin
                dev_arr = node.iso.apply_arr(arr)
                v = int(np.argmin(np.hypot(dev_arr[:, 0], dev_arr[:, 1])))
                base = SurfacePoint(node.poly, (float(arr[v, 0]), float(arr[v, 1])))
                return unit_tangent(base, inv.apply_vec(direction))
        return None

    return factory


def reach_cone_points(surface: ConeSurface, x: SurfacePoint, r: float,
                      budget: int = DEFAULT_NODE_BUDGET):
    """Cone points within distance r of x, with true distances and visibility.

    Visible entries are realized by a straight developed segment; the rest
    get shortest-path distances through the cone-point visibility graph.
    """
    dev = develop_ball(surface, x, r, budget)
    vis = _validated_cone_images(dev, _point_tangent_factory(dev))
    cones = [c.index for c in surface.cone_points]
    if not cones:
        return []
    d_vis = {c: math.inf for c in cones}
    for c, items in vis.items():
        lengths = sorted(t for t, _ in items)
        if dev.guaranteed and len(lengths) > 1:
            raise RuntimeError(
                f"visibility uniqueness violated at cone class {c}: {lengths}"
            )
        d_vis[c] = lengths[0]
    graph = cone_graph_distances(surface, r, budget)
    out = []
    for c in cones:
        d_true = d_vis[c]
        for c2 in cones:
            d_true = min(d_true, d_vis[c2] + graph[(c2, c)])
        if d_true <= r + 1e-12:
            cls = surface.vertex_classes[c]
            out.append(ConePointReach(c, cls.defect, d_true,
                                      visible=d_vis[c] <= d_true + 1e-9))
    return out


def cone_visible_lengths(surface: ConeSurface, r: float,
                         budget: int = DEFAULT_NODE_BUDGET) -> dict:
    """Directed visible straight distances between cone classes, cached."""
    cache = surface._cache.setdefault("cone_vis", {})
    best = None
    for rr in cache:
        if rr >= r and (best is None or rr < best):
            best = rr
    if best is not None:
        return cache[best]
    cones = [c.index for c in surface.cone_points]
    table: dict = {}
    for c in cones:
        fan = develop_vertex_fan(surface, c, r, budget)
        vis = _validated_cone_images(fan, _fan_tangent_factory(fan))
        for c2, items in vis.items():
            for t, _ in items:
                key = (c, c2)
                if key not in table or t < table[key]:
                    table[key] = t
    cache[r] = table
    return table


def cone_graph_distances(surface: ConeSurface, r: float,
                         budget: int = DEFAULT_NODE_BUDGET) -> dict:
    """All-pairs shortest paths between cone classes along visible segments
    (path lengths capped at the build radius are reported as inf)."""
    cones = [c.index for c in surface.cone_points]
    table = cone_visible_lengths(surface, r, budget)
    dist = {(a, b): (0.0 if a == b else math.inf) for a in cones for b in cones}
    for (a, b), t in table.items():
        if t < dist[(a, b)]:
            dist[(a, b)] = t
            dist[(b, a)] = min(dist[(b, a)], t)
    for k in cones:
        for i in cones:
            for j in cones:
                alt = dist[(i, k)] + dist[(k, j)]
                if alt < dist[(i, j)]:
                    dist[(i, j)] = alt
    return dist


# -- distance ---------------------------------------------------------------------


def distance(surface: ConeSurface, x: SurfacePoint, y: SurfacePoint, cutoff: float,
             budget: int = DEFAULT_NODE_BUDGET) -> float:
    """Geodesic distance between x and y, or inf when above the cutoff.

    Exact on nonpositively curved surfaces; an upper bound when some cone
    has positive defect (shortest paths then might cut corners this search
    does not model).
    """
    if cutoff <= 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")
    if surface.same_point(x, y):
        return 0.0
    dev = develop_ball(surface, x, cutoff, budget)
    scale = 1 + surface.max_polygon_diameter
    best = math.inf
    cx, cy = dev.center
    for node in dev.nodes:
        if node.poly != y.chart:
            continue
        q = node.iso.apply(y.coords)
        t = math.hypot(q[0] - cx, q[1] - cy)
        if not (1e-15 < t <= cutoff + 1e-12) or t >= best:
            continue
        direction = ((q[0] - cx) / t, (q[1] - cy) / t)
        try:
            tr = trace_geodesic(surface, unit_tangent(x, direction), t)
        except BudgetExceededError:
            continue
        if tr.hit is None and surface.same_point(tr.points[-1], y, tol=1e-7):
            best = t
    if surface.cone_points:
        rx = {e.cone_point: e.distance for e in reach_cone_points(surface, x, cutoff, budget)}
        ry = {e.cone_point: e.distance for e in reach_cone_points(surface, y, cutoff, budget)}
        for c, dxc in rx.items():
            if c in ry:
                best = min(best, dxc + ry[c])
    return best if best <= cutoff + 1e-12 else math.inf
