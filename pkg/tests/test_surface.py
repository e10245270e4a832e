import math
from fractions import Fraction

import numpy as np
import pytest

from conesys import (
    Gluing,
    SurfaceDescription,
    build_surface,
    description_from_json,
    description_to_json,
    make_flat_torus,
    make_square_klein_bottle,
    make_staircase_surface,
)
from conesys.errors import (
    DegenerateLatticeError,
    DegeneratePolygonError,
    DisconnectedError,
    InvalidGenusError,
    SurfaceFormatError,
    UnmatchedEdgeError,
)
from conesys.surface import scale_description


def test_square_torus(torus_square):
    s = torus_square
    assert s.euler_characteristic == 0
    assert s.area == 1.0
    assert s.area_exact == Fraction(1)
    assert not s.cone_points
    assert s.gauss_bonnet_residual == 0.0
    assert s.orientable
    assert s.systole_hint[0] == pytest.approx(1.0)


def test_klein_bottle(klein):
    assert klein.euler_characteristic == 0
    assert not klein.cone_points
    assert not klein.orientable
    assert klein.gauss_bonnet_residual == 0.0
    assert klein.nonpositively_curved


def test_klein_rectangle():
    k = make_square_klein_bottle(1, 2)
    assert k.area == 2.0
    assert k.euler_characteristic == 0


@pytest.mark.parametrize("g", [2, 3, 4])
def test_staircase(g):
    s = make_staircase_surface(g)
    assert s.euler_characteristic == 2 - 2 * g
    assert s.area == 2 * g - 1
    cones = s.cone_points
    assert len(cones) == 1
    assert cones[0].theta == pytest.approx(2 * math.pi * (2 * g - 1), abs=1e-12)
    assert cones[0].defect == pytest.approx(-4 * math.pi * (g - 1), abs=1e-12)
    assert s.gauss_bonnet_residual == 0.0
    assert s.orientable and s.nonpositively_curved


def test_staircase_cone_angle_oracle():
    # independent check: one corner class, and the polygon's interior angles
    # summed directly from coordinates give 2*pi*(2g - 1)
    g = 2
    s = make_staircase_surface(g)
    assert len(s.vertex_classes) == 1
    arr = s.polygon(0)
    n = len(arr)
    total = 0.0
    for v in range(n):
        a = arr[(v - 1) % n] - arr[v]
        b = arr[(v + 1) % n] - arr[v]
        cross = a[0] * b[1] - a[1] * b[0]
        total += math.atan2(abs(float(cross)), float(np.dot(a, b)))
    assert total == pytest.approx(2 * math.pi * (2 * g - 1), abs=1e-12)
    assert s.vertex_classes[0].theta == pytest.approx(total, abs=1e-12)


def test_staircase_invalid_genus():
    with pytest.raises(InvalidGenusError):
        make_staircase_surface(1)


def test_hex_torus(torus_hex):
    assert torus_hex.euler_characteristic == 0
    assert torus_hex.area == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
    assert torus_hex.systole_hint[0] == pytest.approx(1.0, abs=1e-9)
    assert abs(torus_hex.gauss_bonnet_residual) < 1e-9


def test_torus_argument_order():
    a = make_flat_torus((1, 0), (0.5, math.sqrt(3) / 2))
    b = make_flat_torus((0.5, math.sqrt(3) / 2), (1, 0))
    assert a.area == pytest.approx(b.area, abs=1e-12)
    assert a.systole_hint[0] == pytest.approx(b.systole_hint[0], abs=1e-12)


def test_torus_scaling():
    s = make_flat_torus((2, 0), (0, 2))
    assert s.area == 4.0
    assert s.systole_hint[0] == pytest.approx(2.0)


def test_degenerate_lattice():
    with pytest.raises(DegenerateLatticeError):
        make_flat_torus((1, 1), (2, 2))


def test_gluing_involution(staircase2, klein):
    rng = np.random.default_rng(0)
    for surface in (staircase2, klein):
        for (p, e), (q, j, _) in surface.pairing.items():
            fwd = surface.transitions[(q, j)]  # p-local -> q-local
            back = surface.transitions[(p, e)]
            a, b = surface.edge_segment(p, e)
            for t in rng.random(3):
                pt = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
                rt = back.apply(fwd.apply(pt))
                assert math.hypot(rt[0] - pt[0], rt[1] - pt[1]) < 1e-12


def test_area_retriangulation_invariance():
    # unit square torus vs the same torus cut into two triangles
    one = make_flat_torus((1, 0), (0, 1))
    tris = SurfaceDescription.make(
        [[(0, 0), (1, 0), (1, 1)], [(0, 0), (1, 1), (0, 1)]],
        [
            Gluing((0, 2), (1, 0), "translation"),  # shared diagonal
            Gluing((0, 0), (1, 1), "translation"),  # bottom <-> top
            Gluing((0, 1), (1, 2), "translation"),  # right <-> left
        ],
    )
    two = build_surface(tris)
    assert two.area == pytest.approx(one.area, abs=1e-12)
    assert two.euler_characteristic == 0
    assert not two.cone_points


def test_unmatched_edge_errors():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    with pytest.raises(UnmatchedEdgeError):
        build_surface(SurfaceDescription.make([sq], [Gluing((0, 0), (0, 2), "translation")]))
    rect = [(0, 0), (2, 0), (2, 1), (0, 1)]
    with pytest.raises(UnmatchedEdgeError):
        build_surface(SurfaceDescription.make(
            [rect],
            [Gluing((0, 0), (0, 1), "translation"),
             Gluing((0, 2), (0, 3), "translation")]))


def test_disconnected():
    sq1 = [(0, 0), (1, 0), (1, 1), (0, 1)]
    sq2 = [(5, 0), (6, 0), (6, 1), (5, 1)]
    desc = SurfaceDescription.make(
        [sq1, sq2],
        [Gluing((0, 0), (0, 2), "translation"), Gluing((0, 1), (0, 3), "translation"),
         Gluing((1, 0), (1, 2), "translation"), Gluing((1, 1), (1, 3), "translation")])
    with pytest.raises(DisconnectedError):
        build_surface(desc)


def test_degenerate_polygons():
    with pytest.raises(DegeneratePolygonError):
        build_surface(SurfaceDescription.make(
            [[(0, 0), (0, 1), (1, 0)]],  # clockwise
            [Gluing((0, 0), (0, 1), "translation"), Gluing((0, 2), (0, 2), "translation")]))
    with pytest.raises(DegeneratePolygonError):
        build_surface(SurfaceDescription.make(
            [[(0, 0), (1, 0), (2, 0)]], []))  # zero area


def test_json_round_trip(staircase2):
    text = description_to_json(staircase2.description)
    desc = description_from_json(text)
    rebuilt = build_surface(desc)
    assert rebuilt.euler_characteristic == staircase2.euler_characteristic
    assert rebuilt.area == staircase2.area
    assert rebuilt.area_exact == staircase2.area_exact


def test_json_rejects_unknown_keys():
    with pytest.raises(SurfaceFormatError):
        description_from_json('{"polygons": [], "gluings": [], "extra": 1}')
    with pytest.raises(SurfaceFormatError):
        description_from_json(
            '{"polygons": [[[0,0],[1,0],[1,1],[0,1]]],'
            ' "gluings": [{"a":[0,0],"b":[0,2],"map":"translation","x":1}]}')
    with pytest.raises(SurfaceFormatError):
        description_from_json('{"polygons": []}')


def test_json_rationals():
    desc = description_from_json(
        '{"polygons": [[["0","0"],["1",0],["1","1"],[0,"1"]]],'
        ' "gluings": [{"a":[0,0],"b":[0,2],"map":"translation"},'
        '             {"a":[0,1],"b":[0,3],"map":"translation"}]}')
    s = build_surface(desc)
    assert s.area_exact == Fraction(1)
    with pytest.raises(SurfaceFormatError):
        description_from_json('{"polygons": [[["1/0","0"]]], "gluings": []}')


def test_json_rejects_bad_map():
    with pytest.raises(SurfaceFormatError):
        description_from_json(
            '{"polygons": [[[0,0],[1,0],[1,1],[0,1]]],'
            ' "gluings": [{"a":[0,0],"b":[0,2],"map":"rotation"}]}')


def test_scale_description(staircase2):
    scaled = build_surface(scale_description(staircase2.description, Fraction(5, 2)))
    assert scaled.area == pytest.approx(staircase2.area * 6.25, abs=1e-12)
    assert scaled.euler_characteristic == staircase2.euler_characteristic
    assert scaled.cone_points[0].theta == pytest.approx(
        staircase2.cone_points[0].theta, abs=1e-12)


def test_same_point_across_gluing(torus_square):
    s = torus_square
    a = s.point(0, 0.0, 0.3)
    b = s.point(0, 1.0, 0.3)
    assert s.same_point(a, b)
    assert not s.same_point(a, s.point(0, 0.5, 0.3))


def test_point_outside_rejected(torus_square):
    with pytest.raises(ValueError):
        torus_square.point(0, 1.5, 0.5)


def test_unit_tangent_normalization(torus_square):
    from conesys import UnitTangent, unit_tangent

    base = torus_square.point(0, 0.5, 0.5)
    t = unit_tangent(base, (3, 4))
    assert math.hypot(*t.direction) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        UnitTangent(base, (0.5, 0.5))
