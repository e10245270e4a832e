"""conesys: systolic-geometry checks on piecewise-flat cone surfaces."""

from .surface import (
    ConeSurface,
    Gluing,
    SurfaceDescription,
    SurfacePoint,
    UnitTangent,
    build_surface,
    builtin_surface,
    description_from_json,
    description_to_json,
    load_surface,
    make_flat_torus,
    make_square_klein_bottle,
    make_staircase_surface,
    make_two_cone_decagon,
    unit_tangent,
)

__all__ = [
    "ConeSurface",
    "Gluing",
    "SurfaceDescription",
    "SurfacePoint",
    "UnitTangent",
    "build_surface",
    "builtin_surface",
    "description_from_json",
    "description_to_json",
    "load_surface",
    "make_flat_torus",
    "make_square_klein_bottle",
    "make_staircase_surface",
    "make_two_cone_decagon",
    "unit_tangent",
]

__version__ = "0.1.0"
