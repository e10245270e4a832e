"""Command-line front end.

Exit codes: 0 success / all checks pass, 2 input or validation error,
3 verification failure.  Output is deterministic for a fixed command line
and seed; wall-clock timings go only to the optional manifest file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

from . import bounds as bounds_mod
from .ballarea import ball_area_mc
from .errors import ConesysError
from .functionals import (
    ball_area_formula,
    batch_moments,
    find_rich_disk,
    flow_moment_average,
)
from .sampling import RNG_NAME, rng_from_seed, sample_points
from .surface import (
    BUILTIN_NAMES,
    ConeSurface,
    SurfacePoint,
    builtin_surface,
    load_surface,
)
from .systole import enumerate_systole, torus_systole
from .unfolding import develop_vertex_fan, radius_guard


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _surface_from_args(args) -> ConeSurface:
    if getattr(args, "file", None):
        return load_surface(args.file)
    if getattr(args, "builtin", None):
        return builtin_surface(args.builtin, genus=args.genus)
    raise ConesysError("no surface given: pass --builtin or --file")


def _surface_label(args) -> str:
    if getattr(args, "file", None):
        return f"file:{args.file}"
    if args.builtin == "staircase":
        return f"staircase genus={args.genus}"
    return args.builtin


def _parse_point(surface: ConeSurface, spec: str) -> SurfacePoint:
    parts = spec.split(":")
    if parts[0] == "cone-offset":
        if len(parts) != 3:
            raise ConesysError(f"bad point spec {spec!r}")
        dist, angle = float(parts[1]), float(parts[2])
        return point_at_cone_offset(surface, dist, angle)
    if len(parts) != 3:
        raise ConesysError(f"bad point spec {spec!r}")
    chart, x, y = int(parts[0]), float(parts[1]), float(parts[2])
    try:
        return surface.point(chart, x, y)
    except ValueError as e:
        raise ConesysError(str(e)) from None


def point_at_cone_offset(surface: ConeSurface, dist: float, angle: float) -> SurfacePoint:
    """Point at the given distance from the first cone point, placed along
    the given angular coordinate of its vertex fan."""
    cones = surface.cone_points
    if not cones:
        raise ConesysError("surface has no cone points")
    cls = cones[0]
    fan = develop_vertex_fan(surface, cls.index, max(dist * 1.5, 1e-6))
    angle = angle % cls.theta
    for node in fan.nodes:
        if not node.is_root:
            continue
        if node.angle_start - 1e-12 <= angle <= node.angle_start + node.angle_span + 1e-12:
            q = (dist * math.cos(angle), dist * math.sin(angle))
            local = node.iso.inverse().apply(q)
            try:
                return surface.point(node.poly, *local)
            except ValueError:
                raise ConesysError(
                    f"offset {dist} leaves the corner chart; use a smaller distance"
                ) from None
    raise ConesysError(f"no fan chart contains angle {angle}")


# -- commands -------------------------------------------------------------------


def cmd_validate(args, out) -> int:
    surface = _surface_from_args(args)
    out.write(f"surface: {_surface_label(args)}\n")
    out.write(f"polygons: {surface.polygon_count}\n")
    out.write(f"chi: {surface.euler_characteristic}\n")
    out.write(f"area: {_fmt(surface.area)}\n")
    out.write(f"orientable: {str(surface.orientable).lower()}\n")
    out.write(f"nonpositively-curved: {str(surface.nonpositively_curved).lower()}\n")
    for c in surface.cone_points:
        out.write(f"cone-point {c.index}: angle={_fmt(c.theta)} defect={_fmt(c.defect)}\n")
    out.write(f"total-defect-residual: {_fmt(surface.gauss_bonnet_residual)}\n")
    if surface.systole_hint:
        out.write(f"systole-hint: {_fmt(surface.systole_hint[0])} ({surface.systole_hint[1]})\n")
    ok = abs(surface.gauss_bonnet_residual) < 1e-9
    out.write(f"result: {'PASS' if ok else 'FAIL'}\n")
    return 0 if ok else 2


def cmd_verify(args, out) -> int:
    surface = _surface_from_args(args)
    r = args.r
    n = args.n
    seed = args.seed
    radius_guard(surface, r, allow_large=args.force)
    out.write(f"surface: {_surface_label(args)} (area={_fmt(surface.area)}, "
              f"chi={surface.euler_characteristic})\n")
    out.write(f"radius: {_fmt(r)}  samples: {n}  seed: {seed}  rng: {RNG_NAME}\n")
    results = {}

    chk = flow_moment_average(surface, r, n, seed, allow_large_radius=args.force)
    z = 0.0 if chk.stderr == 0 else abs(chk.mc_estimate - chk.exact_value) / chk.stderr
    ok1 = z <= args.tol_sigma or abs(chk.mc_estimate - chk.exact_value) < 1e-12
    results["flow-average"] = ok1
    out.write(f"check flow-average     estimate={_fmt(chk.mc_estimate)} "
              f"exact={_fmt(chk.exact_value)} stderr={_fmt(chk.stderr)} "
              f"z={_fmt(z)} {'PASS' if ok1 else 'FAIL'}\n")

    rng = rng_from_seed(seed + 1)
    pi_, pts = sample_points(surface, 1000, rng)
    G, F = batch_moments(surface, r, pi_, pts)
    deficit = float((F - G).min())
    ok2 = deficit >= -args.tol_exact
    results["moment-inequality"] = ok2
    out.write(f"check moment-inequality points=1000 min(F-G)={_fmt(deficit)} "
              f"{'PASS' if ok2 else 'FAIL'}\n")

    rng = rng_from_seed(seed + 2)
    pi_, pts = sample_points(surface, 5, rng)
    worst = 0.0
    for i in range(5):
        x = SurfacePoint(int(pi_[i]), (float(pts[i, 0]), float(pts[i, 1])))
        est = ball_area_mc(surface, x, r, max(args.n, 1000), seed + 10 + i,
                           allow_large_radius=args.force)
        formula = ball_area_formula(surface, x, r, allow_large_radius=args.force)
        if est.stderr > 0:
            worst = max(worst, abs(est.value - formula.value) / est.stderr)
    ok3 = worst <= args.tol_sigma
    results["ball-area"] = ok3
    out.write(f"check ball-area        points=5 worst-z={_fmt(worst)} "
              f"{'PASS' if ok3 else 'FAIL'}\n")

    rich = find_rich_disk(surface, r, max(128, n // 100), seed + 3,
                          allow_large_radius=args.force)
    formula = ball_area_formula(surface, rich.basepoint, r, allow_large_radius=args.force)
    ok4 = (rich.moment <= rich.average_bound + 1e-12
           and rich.implied_ball_area <= formula.value + 1e-9)
    results["rich-disk"] = ok4
    out.write(f"check rich-disk        moment={_fmt(rich.moment)} "
              f"bound={_fmt(rich.average_bound)} implied-area={_fmt(rich.implied_ball_area)} "
              f"{'PASS' if ok4 else 'FAIL'}\n")

    passed = sum(results.values())
    out.write(f"result: {'PASS' if passed == 4 else 'FAIL'} ({passed}/4)\n")
    _write_manifest(args, {"checks": {k: bool(v) for k, v in results.items()}})
    return 0 if passed == 4 else 3


def cmd_ball_growth(args, out) -> int:
    surface = _surface_from_args(args)
    radius_guard(surface, args.r_max, allow_large=args.force)
    x = _parse_point(surface, args.point)
    lines = ["r,formulaArea,mcArea,mcStderr,guaranteedBallArea"]
    chi = surface.euler_characteristic
    for k in range(1, args.steps + 1):
        r = args.r_max * k / args.steps
        formula = ball_area_formula(surface, x, r, allow_large_radius=args.force)
        est = ball_area_mc(surface, x, r, args.n, args.seed + k,
                           allow_large_radius=args.force)
        bound = bounds_mod.guaranteed_ball_area(chi, surface.area, r)
        lines.append(f"{r:.9g},{formula.value:.9g},{est.value:.9g},"
                     f"{est.stderr:.9g},{bound:.9g}")
    text = "\n".join(lines) + "\n"
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        out.write(f"wrote {args.csv}\n")
    else:
        out.write(text)
    _write_manifest(args, {"rows": args.steps})
    return 0


def cmd_systole(args, out) -> int:
    surface = _surface_from_args(args)
    if not surface.cone_points and surface.orientable:
        # flat torus: exact lattice reduction applies
        desc = surface.description.polygons[0]
        v1 = (float(desc[1][0]) - float(desc[0][0]), float(desc[1][1]) - float(desc[0][1]))
        v2 = (float(desc[3][0]) - float(desc[0][0]), float(desc[3][1]) - float(desc[0][1]))
        rep = torus_systole(v1, v2)
    else:
        rep = enumerate_systole(surface, args.cutoff)
    out.write(f"surface: {_surface_label(args)}\n")
    out.write(f"systole: {_fmt(rep.value)}\n")
    out.write(f"status: {rep.status}\n")
    if rep.cutoff is not None:
        out.write(f"cutoff: {_fmt(rep.cutoff)}\n")
    out.write(f"enumeration-count: {rep.enumeration_count}\n")
    if rep.witness is not None:
        out.write(f"witness: {rep.witness.kind}")
        if rep.witness.vector is not None:
            out.write(f" vector=({_fmt(rep.witness.vector[0])},{_fmt(rep.witness.vector[1])})")
        out.write("\n")
    _write_manifest(args, {"systole": rep.value, "status": rep.status})
    return 0


def cmd_table(args, out) -> int:
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(bounds_mod.table_csv())
        out.write(f"wrote {args.csv}\n")
    else:
        out.write(bounds_mod.table_text())
    return 0


def cmd_bounds(args, out) -> int:
    if args.genus is not None:
        chi = 2 - 2 * args.genus
    elif args.chi is not None:
        chi = args.chi
    else:
        raise ConesysError("pass --chi or --genus")
    rep = bounds_mod.bounds_report(chi, args.area, args.systole)
    out.write(f"chi: {chi}\n")
    out.write(f"systolic-area-lower-bound: {_fmt(rep.sqrt_bound)}\n")
    if rep.sigma is not None:
        out.write(f"sigma: {_fmt(rep.sigma)}\n")
        out.write(f"loewner: {str(rep.loewner).lower()}\n")
    if args.genus is not None and args.genus >= 2 and rep.sigma is not None:
        c, verdict = bounds_mod.loewner_disk_criterion(args.genus, rep.sigma)
        out.write(f"loewner-disk-constant: {_fmt(c)}\n")
        out.write(f"loewner-disk-guaranteed: {str(verdict).lower()}\n")
    return 0


def _write_manifest(args, outcome: dict) -> None:
    path = getattr(args, "manifest", None)
    if not path:
        return
    doc = {
        "command": args.command,
        "surface": _surface_label(args) if hasattr(args, "builtin") else None,
        "seed": getattr(args, "seed", None),
        "n": getattr(args, "n", None),
        "r": getattr(args, "r", None) or getattr(args, "r_max", None),
        "tolerances": {
            "sigma": getattr(args, "tol_sigma", None),
            "exact": getattr(args, "tol_exact", None),
        },
        "rng": RNG_NAME,
        "wall_clock_s": time.monotonic() - args._t0,
        "outcome": outcome,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _add_surface_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--builtin", choices=BUILTIN_NAMES)
    p.add_argument("--file")
    p.add_argument("--genus", type=int, default=2)
    p.add_argument("--manifest")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conesys",
                                 description="systolic checks on flat cone surfaces")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="build a surface and report its invariants")
    _add_surface_args(p)

    p = sub.add_parser("verify", help="run the four curvature/area checks")
    _add_surface_args(p)
    p.add_argument("--r", type=float, default=0.4)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--force", action="store_true",
                   help="allow radii at or beyond half the systole")
    p.add_argument("--tol-sigma", type=float, default=3.0)
    p.add_argument("--tol-exact", type=float, default=1e-9)

    p = sub.add_parser("ball-growth", help="CSV of ball area against radius")
    _add_surface_args(p)
    p.add_argument("--point", required=True,
                   help="CHART:X:Y or cone-offset:DIST:ANGLE")
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=9)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--force", action="store_true")
    p.add_argument("--csv")

    p = sub.add_parser("systole", help="systole with certification status")
    _add_surface_args(p)
    p.add_argument("--cutoff", type=float, default=None)

    p = sub.add_parser("table", help="reference table of systolic constants")
    p.add_argument("--csv")

    p = sub.add_parser("bounds", help="closed-form bounds for given topology")
    p.add_argument("--chi", type=int)
    p.add_argument("--genus", type=int)
    p.add_argument("--area", type=float)
    p.add_argument("--systole", type=float)

    return ap


COMMANDS = {
    "validate": cmd_validate,
    "verify": cmd_verify,
    "ball-growth": cmd_ball_growth,
    "systole": cmd_systole,
    "table": cmd_table,
    "bounds": cmd_bounds,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    args._t0 = time.monotonic()
    try:
        return COMMANDS[args.command](args, out)
    except ConesysError as e:
        sys.stderr.write(f"ERROR code={e.code} msg={e}\n")
        return 2
    except (ValueError, OSError) as e:
        sys.stderr.write(f"ERROR code=InvalidInput msg={e}\n")
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
