import math

import numpy as np
import pytest

from conesys import SurfacePoint, unit_tangent
from conesys.errors import BasepointOnConePointError
from conesys.sampling import rng_from_seed, sample_points, sample_unit_tangents
from conesys.unfolding import (
    develop_ball,
    develop_vertex_fan,
    distance,
    reach_cone_points,
    trace_geodesic,
)

from conftest import cone_offset_point


# -- developments -----------------------------------------------------------------


@pytest.mark.parametrize("center", [(0.5, 0.5), (0.9, 0.9), (0.05, 0.5), (0.99, 0.01)])
def test_torus_development_matches_translate_count(torus_square, center):
    x = torus_square.point(0, *center)
    dev = develop_ball(torus_square, x, 0.4)
    # oracle: integer translates of the unit square meeting the open disk
    expected = 0
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            dx = min(abs(center[0] - i - t) for t in (0, 1)) if not (i <= center[0] <= i + 1) else 0
            dy = min(abs(center[1] - j - t) for t in (0, 1)) if not (j <= center[1] <= j + 1) else 0
            if math.hypot(dx, dy) < 0.4:
                expected += 1
    assert len(dev.nodes) == expected
    assert len(dev.nodes) <= 9


def test_zero_radius_rejected(torus_square):
    with pytest.raises(ValueError):
        develop_ball(torus_square, torus_square.point(0, 0.5, 0.5), 0.0)


def test_basepoint_on_cone_rejected(staircase2):
    with pytest.raises(BasepointOnConePointError):
        develop_ball(staircase2, SurfacePoint(0, (0.0, 0.0)), 0.3)


def test_multiplicity_one(staircase2):
    x = cone_offset_point(staircase2, 0.3, 0.9)
    dev = develop_ball(staircase2, x, 0.45)
    assert dev.guaranteed
    assert dev.check_multiplicity_one(10_000, seed=5) <= 1


def test_development_edges_match(staircase2):
    x = cone_offset_point(staircase2, 0.3, 4.0)
    dev = develop_ball(staircase2, x, 0.45)
    scale = 1 + staircase2.max_polygon_diameter
    for node in dev.nodes:
        for parent, seg in node.links:
            # the crossed edge develops identically from both sides
            assert math.hypot(seg[0][0] - seg[1][0], seg[0][1] - seg[1][1]) > 0
            parr = dev.developed_polygon(parent)
            d = min(
                math.hypot(parr[k][0] - seg[0][0], parr[k][1] - seg[0][1])
                for k in range(len(parr))
            )
            assert d < 1e-9 * scale


# -- tracing ----------------------------------------------------------------------


def test_trace_torus_wrap(torus_square):
    u = unit_tangent(torus_square.point(0, 0.5, 0.5), (1, 0))
    tr = trace_geodesic(torus_square, u, 2.5)
    assert tr.hit is None
    end = tr.points[-1]
    assert torus_square.same_point(end, torus_square.point(0, 0.0, 0.5), tol=1e-9)


def test_trace_hits_cone(staircase2):
    x = cone_offset_point(staircase2, 0.3, 1.3)
    reach = reach_cone_points(staircase2, x, 0.45)
    assert len(reach) == 1
    # aim straight at the cone point
    dev = develop_ball(staircase2, x, 0.45)
    arr = dev.developed_polygon(0)
    corner = min(range(len(arr)), key=lambda v: math.hypot(arr[v][0] - x.coords[0] + 0,
                                                           arr[v][1] - x.coords[1]))
    direction = (arr[corner][0] - x.coords[0], arr[corner][1] - x.coords[1])
    tr = trace_geodesic(staircase2, unit_tangent(x, direction), 1.0)
    assert tr.hit is not None
    assert tr.hit.at == pytest.approx(0.3, abs=1e-9)


def test_trace_semigroup(torus_square, staircase2):
    for surface, base, d in [
        (torus_square, (0.3, 0.2), (0.6, 0.8)),
        (staircase2, (1.3, 0.41), (-0.33, 0.8)),
    ]:
        u = unit_tangent(surface.point(0, *base), d)
        t1 = trace_geodesic(surface, u, 1.0)
        t2 = trace_geodesic(surface, t1.end, 1.0)
        tf = trace_geodesic(surface, u, 2.0)
        assert surface.same_point(t2.points[-1], tf.points[-1], tol=1e-9)


def test_trace_requires_positive_length(torus_square):
    with pytest.raises(ValueError):
        trace_geodesic(torus_square, unit_tangent(torus_square.point(0, 0.5, 0.5), (1, 0)), 0.0)


# -- reach ------------------------------------------------------------------------


def test_reach_flat_torus_empty(torus_square):
    assert reach_cone_points(torus_square, torus_square.point(0, 0.3, 0.4), 0.45) == []


def test_reach_staircase_visible(staircase2):
    x = cone_offset_point(staircase2, 0.3, 0.7)
    reach = reach_cone_points(staircase2, x, 0.45)
    assert len(reach) == 1
    entry = reach[0]
    assert entry.defect == pytest.approx(-4 * math.pi, abs=1e-12)
    assert entry.distance == pytest.approx(0.3, abs=1e-9)
    assert entry.visible


def test_reach_cutoff(staircase2):
    x = cone_offset_point(staircase2, 0.3, 0.7)
    assert reach_cone_points(staircase2, x, 0.25) == []


def test_reach_shadow(decagon):
    # points behind the near cone point see the far one only through it
    rng = rng_from_seed(8)
    poly_idx, pts = sample_points(decagon, 400, rng)
    shadowed = 0
    for i in range(len(pts)):
        x = SurfacePoint(int(poly_idx[i]), (float(pts[i, 0]), float(pts[i, 1])))
        try:
            reach = reach_cone_points(decagon, x, 0.44)
        except BasepointOnConePointError:
            continue
        for e in reach:
            if not e.visible:
                shadowed += 1
                # the shadowed distance routes through the other cone point
                other = [r for r in reach if r.cone_point != e.cone_point]
                assert other and other[0].distance + 0.25 == pytest.approx(
                    e.distance, abs=1e-9)
    assert shadowed > 0


# -- distances ---------------------------------------------------------------------


def test_distance_torus_wrap(torus_square):
    d = distance(torus_square, torus_square.point(0, 0.1, 0.1),
                 torus_square.point(0, 0.9, 0.1), 1.0)
    assert d == pytest.approx(0.2, abs=1e-9)


def test_distance_identity(staircase2):
    x = staircase2.point(0, 1.2, 0.7)
    assert distance(staircase2, x, x, 1.0) == 0.0


def test_distance_unreachable(torus_square):
    d = distance(torus_square, torus_square.point(0, 0.1, 0.1),
                 torus_square.point(0, 0.6, 0.6), 0.2)
    assert d == math.inf


def test_distance_through_cone(staircase2):
    # both points near the cone, radially separated by more than pi:
    # the geodesic passes through the cone point
    x = cone_offset_point(staircase2, 0.35, 0.5)
    y = cone_offset_point(staircase2, 0.3, 0.5 + 1.2 * math.pi)
    d = distance(staircase2, x, y, 1.5)
    assert d == pytest.approx(0.65, abs=1e-9)
    # under a half-turn separation the chord is shorter and wins
    y2 = cone_offset_point(staircase2, 0.3, 0.5 + 0.8 * math.pi)
    chord = math.sqrt(0.35 ** 2 + 0.3 ** 2
                      - 2 * 0.35 * 0.3 * math.cos(0.8 * math.pi))
    d2 = distance(staircase2, x, y2, 1.5)
    assert d2 == pytest.approx(chord, abs=1e-9)
    assert d2 < 0.65


def test_distance_symmetry_and_triangle(staircase2):
    rng = rng_from_seed(12)
    poly_idx, pts = sample_points(staircase2, 9, rng)
    points = [SurfacePoint(int(poly_idx[i]), (float(pts[i, 0]), float(pts[i, 1])))
              for i in range(9)]
    cutoff = 4.0
    for i in range(0, 9, 3):
        a, b, c = points[i], points[i + 1], points[i + 2]
        dab = distance(staircase2, a, b, cutoff)
        dba = distance(staircase2, b, a, cutoff)
        assert abs(dab - dba) < 1e-9
        dac = distance(staircase2, a, c, cutoff)
        dbc = distance(staircase2, b, c, cutoff)
        assert dac <= dab + dbc + 1e-9


def test_distance_against_dense_graph_oracle(staircase2):
    pytest.importorskip("scipy")
    pairs = _oracle_pairs(staircase2)
    approx = _dense_graph_distances(staircase2, pairs)
    for (x, y), upper in zip(pairs, approx):
        d = distance(staircase2, x, y, 4.0)
        assert d <= upper + 1e-9
        assert upper <= d * 1.01  # the graph path is within 1% of geodesic


def _oracle_pairs(surface):
    rng = rng_from_seed(23)
    # keep points away from the boundary so source links stay intra-chart
    pts = []
    while len(pts) < 8:
        x = rng.uniform(0.25, 2.75)
        y = rng.uniform(0.25, 0.75)
        pts.append(surface.point(0, x, y))
    return [(pts[i], pts[i + 1]) for i in range(0, 8, 2)]


def _dense_graph_distances(surface, pairs):
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra
    from scipy.spatial import cKDTree

    h = 0.02
    R = 0.2
    xs = np.arange(0.0, 3.0 + h / 2, h)
    ys = np.arange(0.0, 1.0 + h / 2, h)
    grid = np.array([(x, y) for x in xs for y in ys])
    extra = np.array([list(p.coords) for pair in pairs for p in pair])
    nodes = np.vstack([grid, extra])
    tree = cKDTree(nodes)
    rows, cols, vals = [], [], []
    pairs_idx = tree.query_pairs(R, output_type="ndarray")
    diffs = nodes[pairs_idx[:, 0]] - nodes[pairs_idx[:, 1]]
    rows.extend(pairs_idx[:, 0])
    cols.extend(pairs_idx[:, 1])
    vals.extend(np.hypot(diffs[:, 0], diffs[:, 1]))
    # wraparound links: map nodes across each gluing and connect through it
    for g in surface.description.gluings:
        (p, e) = g.a
        iso = surface.transitions[g.a]  # partner-local -> local across edge a
        a0, a1 = surface.edge_segment(p, e)
        mapped = iso.apply_arr(nodes)
        near = tree.query_ball_point(mapped, R)
        for i, nbrs in enumerate(near):
            mi = mapped[i]
            for jj in nbrs:
                v = nodes[jj]
                # the straight unfolded link must pass through the glued edge
                if _crosses(mi, v, a0, a1):
                    rows.append(i)
                    cols.append(jj)
                    vals.append(math.hypot(mi[0] - v[0], mi[1] - v[1]))
    n = len(nodes)
    m = coo_matrix((vals, (rows, cols)), shape=(n, n))
    sources = [n - 8 + 2 * k for k in range(4)]
    dist = dijkstra(m, directed=False, indices=sources)
    return [dist[k, n - 8 + 2 * k + 1] for k in range(4)]


def _crosses(p, q, a, b):
    def orient(u, v, w):
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])

    return (orient(p, q, a) * orient(p, q, b) <= 0
            and orient(a, b, p) * orient(a, b, q) <= 0)


# -- visibility uniqueness and fan sanity --------------------------------------------


def test_visibility_unique_on_sampled_points(staircase2):
    rng = rng_from_seed(31)
    poly_idx, pts = sample_points(staircase2, 60, rng)
    for i in range(len(pts)):
        x = SurfacePoint(int(poly_idx[i]), (float(pts[i, 0]), float(pts[i, 1])))
        try:
            reach_cone_points(staircase2, x, 0.45)  # raises if uniqueness fails
        except BasepointOnConePointError:
            pass


def test_fan_covers_full_angle(staircase2, decagon):
    for surface in (staircase2, decagon):
        for cls in surface.cone_points:
            fan = develop_vertex_fan(surface, cls.index, 0.3)
            roots = [nd for nd in fan.nodes if nd.is_root]
            total = sum(nd.angle_span for nd in roots)
            assert total == pytest.approx(cls.theta, abs=1e-9)


# -- Liouville flow invariance --------------------------------------------------------


def test_flow_preserves_uniform_law(staircase2):
    scipy_stats = pytest.importorskip("scipy.stats")
    n = 100_000
    t = 0.3
    rng = rng_from_seed(2024)
    poly_idx, pts, dirs = sample_unit_tangents(staircase2, n, rng)
    moved = np.empty_like(pts)
    hits = 0
    for i in range(n):
        u = unit_tangent(SurfacePoint(int(poly_idx[i]), (float(pts[i, 0]), float(pts[i, 1]))),
                         (float(dirs[i, 0]), float(dirs[i, 1])))
        tr = trace_geodesic(staircase2, u, t)
        if tr.hit is not None:
            hits += 1
            moved[i] = pts[i]  # keep the start; cone hits have measure zero
        else:
            moved[i] = tr.points[-1].coords
    assert hits < 10
    _, fresh = sample_points(staircase2, n, rng_from_seed(777))
    bins_x = np.linspace(0, 3, 13)
    bins_y = np.linspace(0, 1, 5)
    h1, _, _ = np.histogram2d(moved[:, 0], moved[:, 1], bins=(bins_x, bins_y))
    h2, _, _ = np.histogram2d(fresh[:, 0], fresh[:, 1], bins=(bins_x, bins_y))
    a = h1.ravel()
    b = h2.ravel()
    stat = float(np.sum((a - b) ** 2 / np.where(a + b > 0, a + b, 1)))
    dof = (a > 0).sum() - 1
    threshold = scipy_stats.chi2.ppf(1 - 1e-3, dof)
    assert stat < threshold
