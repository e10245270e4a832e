"""Systoles: exact on flat tori, enumeration with certification elsewhere.

Closed geodesics on a nonpositively curved cone surface either avoid cone
points (then they cross polygon edges and close up under a developed
holonomy with an invariant line: a translation or a glide reflection) or
are concatenations of saddle connections turning by at least pi on both
sides at every cone point.  The enumeration covers both families up to a
length cutoff:

* straight family: breadth-first search over edge-crossing chains, pruned by
  the distance between the initial edge and the current chart and by the
  angular interval of directions that can still cross every chain edge; a
  chain contributes when it re-crosses its initial directed edge and the
  holonomy admits an axis segment through the chain (checked by interval
  arithmetic on the start edge, then re-traced on the surface).
* cone family: saddle connections enumerated from vertex fans, then loop
  search over junction-angle-feasible concatenations.

On such surfaces no closed geodesic is null-homotopic (a contractible one
would lift to a closed local geodesic in a CAT(0) plane), so the shortest
find below the cutoff is the systole whenever the systole is below the
cutoff at all.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry as geo
from .errors import BudgetExceededError, DegenerateLatticeError, NotNonpositivelyCurvedError
from .surface import ConeSurface, SurfacePoint, UnitTangent, unit_tangent
from .unfolding import (
    DEFAULT_NODE_BUDGET,
    develop_vertex_fan,
    fan_angle,
    fan_root_for_corner,
    trace_geodesic,
    _fan_tangent_factory,
    _validated_cone_images,
)

ANGLE_TOL = 1e-9


@dataclass(frozen=True)
class ConeLoopSegment:
    start: UnitTangent
    length: float
    end_class: int


@dataclass(frozen=True)
class SystoleWitness:
    kind: str  # "lattice" | "straight" | "cone-loop"
    length: float
    vector: Optional[tuple] = None  # holonomy translation part
    start: Optional[UnitTangent] = None  # straight witnesses: retrace start
    word: tuple = ()  # crossing word or saddle sequence
    segments: tuple = ()  # cone loops: ConeLoopSegments in order


@dataclass(frozen=True)
class SystoleReport:
    value: float
    status: str  # "exact" | "certified-below-cutoff" | "hint-only"
    cutoff: Optional[float]
    witness: Optional[SystoleWitness]
    enumeration_count: int


def torus_systole(v1, v2) -> SystoleReport:
    """Shortest nonzero vector of Z v1 + Z v2 by Lagrange reduction."""
    u = np.array([float(v1[0]), float(v1[1])])
    w = np.array([float(v2[0]), float(v2[1])])
    if abs(u[0] * w[1] - u[1] * w[0]) < 1e-15 * max(1.0, float(u @ u), float(w @ w)):
        raise DegenerateLatticeError(f"vectors {v1}, {v2} are dependent")
    for _ in range(512):
        if u @ u > w @ w:
            u, w = w, u
        mu = round(float(w @ u) / float(u @ u))
        w2 = w - mu * u
        if w2 @ w2 >= w @ w - 1e-15:
            break
        w = w2
    best = u if u @ u <= w @ w else w
    value = float(np.hypot(*best))
    witness = SystoleWitness(kind="lattice", length=value, vector=(float(best[0]), float(best[1])))
    return SystoleReport(value, "exact", None, witness, enumeration_count=1)


def default_cutoff(surface: ConeSurface) -> float:
    """Twice the shortest glued edge: a cheap loop-length scale."""
    shortest = math.inf
    for p in range(surface.polygon_count):
        arr = surface.polygon(p)
        n = len(arr)
        for e in range(n):
            a, b = arr[e], arr[(e + 1) % n]
            shortest = min(shortest, math.hypot(b[0] - a[0], b[1] - a[1]))
    return 2.0 * shortest


def enumerate_systole(surface: ConeSurface, cutoff: Optional[float] = None,
                      budget: int = 500_000) -> SystoleReport:
    """Shortest closed geodesic of length at most the cutoff.

    Status is certified-below-cutoff when the bounded enumeration completed
    and found a loop; hint-only when nothing closed up within the cutoff.
    """
    if not surface.nonpositively_curved:
        raise NotNonpositivelyCurvedError("systole enumeration requires cone angles >= 2*pi")
    if cutoff is None:
        cutoff = default_cutoff(surface)
    if cutoff <= 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")

    candidates: list = []
    count = 0
    seen_words = set()

    for cand in _straight_candidates(surface, cutoff, budget):
        word_key = _canonical_word(cand.word)
        if word_key in seen_words:
            continue
        seen_words.add(word_key)
        count += 1
        candidates.append(cand)
    for cand in _cone_loop_candidates(surface, cutoff, budget):
        word_key = ("cone",) + _canonical_word(cand.word)
        if word_key in seen_words:
            continue
        seen_words.add(word_key)
        count += 1
        candidates.append(cand)

    if not candidates:
        hint = surface.systole_hint
        value = float(hint[0]) if hint else math.inf
        return SystoleReport(value, "hint-only", cutoff, None, count)
    best = min(candidates, key=lambda c: c.length)
    return SystoleReport(best.length, "certified-below-cutoff", cutoff, best, count)


def _canonical_word(word: tuple) -> tuple:
    if not word:
        return word
    variants = []
    for w in (word, tuple(reversed(word))):
        for k in range(len(w)):
            variants.append(w[k:] + w[:k])
    return min(variants)


# -- straight closed geodesics --------------------------------------------------


@dataclass
class _Chain:
    poly: int
    iso: geo.Isometry
    entered: int  # edge index the chain entered through
    word: tuple  # directed crossings ((poly, edge), ...)
    segs: tuple  # developed crossing segments after the initial edge
    lo: float
    hi: float
    cum_gap: float = 0.0  # sum of consecutive seg-to-seg gaps: length lower bound


def _hull_interval(E0, S):
    """Angular interval (width <= pi, arbitrary branch) of directions from
    points of E0 to points of S; None when degenerate or wider than a half
    turn (then the pair gives no usable constraint)."""
    angles = []
    for X in S:
        for Y in E0:
            vx, vy = X[0] - Y[0], X[1] - Y[1]
            if math.hypot(vx, vy) < 1e-12:
                continue  # shared endpoint carries no direction information
            a = math.atan2(vy, vx)
            if angles:
                # normalize near the first angle so tight hulls stay tight
                a -= 2 * math.pi * round((a - angles[0]) / (2 * math.pi))
            angles.append(a)
    if not angles:
        return None
    lo, hi = min(angles), max(angles)
    if hi - lo > math.pi:
        return None  # wrapped hull, no constraint
    return (lo, hi)


def _intersect_mod(lo, hi, h_lo, h_hi):
    """Intersect [lo, hi] with [h_lo, h_hi] + 2*pi*k over integer shifts."""
    best = (1.0, 0.0)
    for k in (-1.0, 0.0, 1.0):
        a = max(lo, h_lo + 2 * math.pi * k)
        b = min(hi, h_hi + 2 * math.pi * k)
        if b - a > best[1] - best[0]:
            best = (a, b)
    return best


def _seg_seg_distance(s1, s2) -> float:
    def pt_seg(p, a, b):
        vx, vy = b[0] - a[0], b[1] - a[1]
        L2 = vx * vx + vy * vy
        if L2 == 0:
            return math.hypot(p[0] - a[0], p[1] - a[1])
        t = ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / L2
        t = min(1.0, max(0.0, t))
        return math.hypot(p[0] - a[0] - t * vx, p[1] - a[1] - t * vy)

    if geo.segments_cross(s1[0], s1[1], s2[0], s2[1]):
        return 0.0
    return min(pt_seg(s1[0], *s2), pt_seg(s1[1], *s2),
               pt_seg(s2[0], *s1), pt_seg(s2[1], *s1))


def _straight_candidates(surface: ConeSurface, cutoff: float, budget: int):
    out = []
    explored = 0
    for g in surface.description.gluings:
        for crossing in (g.a, g.b):
            q0, j0 = crossing
            p, e0, _ = surface.pairing[crossing]
            arr = surface.polygon(p)
            n = len(arr)
            E0 = (tuple(arr[e0]), tuple(arr[(e0 + 1) % n]))
            evec = (E0[1][0] - E0[0][0], E0[1][1] - E0[0][1])
            phi0 = math.atan2(evec[1], evec[0])
            base = _Chain(p, geo.Isometry.identity(), e0, (crossing,), (),
                          phi0, phi0 + math.pi)
            queue = deque([base])
            while queue:
                chain = queue.popleft()
                explored += 1
                if explored > budget:
                    raise BudgetExceededError(
                        f"straight-chain search exceeded {budget} states")
                arrc = chain.iso.apply_arr(surface.polygon(chain.poly))
                nc = len(arrc)
                prev_seg = chain.segs[-1] if chain.segs else E0
                for f in range(nc):
                    if f == chain.entered:
                        continue
                    S = (tuple(arrc[f]), tuple(arrc[(f + 1) % nc]))
                    # any ordered crossing segment is at least as long as the
                    # cumulative gap between consecutive crossed edges
                    cum = chain.cum_gap + _seg_seg_distance(prev_seg, S)
                    if cum > cutoff + 1e-9:
                        continue
                    if _seg_seg_distance(E0, S) > cutoff + 1e-9:
                        continue
                    lo, hi = chain.lo, chain.hi
                    # the closing direction lies in the hull of directions from
                    # every earlier crossed edge to S (crossings are ordered)
                    for anchor in (E0,) + chain.segs:
                        iv = _hull_interval(anchor, S)
                        if iv is not None:
                            lo, hi = _intersect_mod(lo, hi, iv[0], iv[1])
                            if hi - lo < ANGLE_TOL:
                                break
                    directed = (chain.poly, f)
                    if directed == (q0, j0) and lo <= hi + ANGLE_TOL:
                        cand = _solve_closure(surface, p, e0, E0, chain.segs + (S,),
                                              chain.iso.compose(surface.transitions[directed]),
                                              chain.word + (directed,), cutoff)
                        if cand is not None:
                            out.append(cand)
                    # pinched direction interval: only corner-grazing geodesics
                    # remain, realized elsewhere at equal length
                    if hi - lo < ANGLE_TOL:
                        continue
                    queue.append(_Chain(
                        surface.pairing[directed][0],
                        chain.iso.compose(surface.transitions[directed]),
                        surface.pairing[directed][1],
                        chain.word + (directed,),
                        chain.segs + (S,),
                        lo, hi, cum,
                    ))
    return out


def _solve_closure(surface, start_poly, start_edge, E0, segs, holonomy, word, cutoff):
    """Closed geodesic through the chain, if the holonomy admits one."""
    det = holonomy.det
    A, B = E0
    if det > 0:
        # rotation part must be the identity
        if abs(holonomy.m00 - 1) > 1e-9 or abs(holonomy.m01) > 1e-9:
            return None
        t = (holonomy.tx, holonomy.ty)
        T = math.hypot(*t)
        if not (1e-9 < T <= cutoff + 1e-9):
            return None
        interval = _axis_interval(A, B, t, T, segs[:-1])
        if interval is None:
            return None
        s_lo, s_hi = interval
        u = (t[0] / T, t[1] / T)
        for s in (0.5 * (s_lo + s_hi), s_lo + 0.25 * (s_hi - s_lo),
                  s_lo + 0.75 * (s_hi - s_lo), s_lo, s_hi):
            z = (A[0] + s * (B[0] - A[0]), A[1] + s * (B[1] - A[1]))
            w = _retrace_closed(surface, start_poly, z, u, T)
            if w is not None:
                return SystoleWitness("straight", T, t, w, word)
        return None
    # glide reflection: axis direction is the mirror eigenvector
    m00, m01, m10, m11 = holonomy.m00, holonomy.m01, holonomy.m10, holonomy.m11
    phi2 = math.atan2(m10, m00)  # matrix is [[cos f, sin f], [sin f, -cos f]]
    v = (math.cos(phi2 / 2), math.sin(phi2 / 2))
    nvec = (-v[1], v[0])
    t = (holonomy.tx, holonomy.ty)
    t_par = t[0] * v[0] + t[1] * v[1]
    T = abs(t_par)
    if not (1e-9 < T <= cutoff + 1e-9):
        return None
    # glide axis: points z with z . n = (t . n) / 2
    c_ax = (t[0] * nvec[0] + t[1] * nvec[1]) / 2.0
    den = (B[0] - A[0]) * nvec[0] + (B[1] - A[1]) * nvec[1]
    num = c_ax - (A[0] * nvec[0] + A[1] * nvec[1])
    if abs(den) < 1e-15:
        return None
    s = num / den
    if not (-1e-9 <= s <= 1 + 1e-9):
        return None
    z = (A[0] + s * (B[0] - A[0]), A[1] + s * (B[1] - A[1]))
    u = (v[0] if t_par > 0 else -v[0], v[1] if t_par > 0 else -v[1])
    w = _retrace_closed(surface, start_poly, z, u, T)
    if w is None:
        return None
    return SystoleWitness("straight", T, (u[0] * T, u[1] * T), w, word)


def _axis_interval(A, B, t, T, segs):
    """Feasible start parameters on E0 for a translation-closure segment:
    z(s) must sit in every backward-shadow parallelogram of the chain edges,
    with crossing parameters in increasing order."""
    s_lo, s_hi = 0.0, 1.0
    u = (t[0] / T, t[1] / T)
    taus = []
    for P, Q in segs:
        corners = [P, Q, (Q[0] - t[0], Q[1] - t[1]), (P[0] - t[0], P[1] - t[1])]
        if geo.signed_area(corners) < 0:
            corners.reverse()
        for k in range(4):
            a = corners[k]
            b = corners[(k + 1) % 4]
            ex, ey = b[0] - a[0], b[1] - a[1]
            if abs(ex) + abs(ey) < 1e-15:
                continue
            # inside: cross(edge, z - a) >= 0; z(s) linear in s
            c0 = ex * (A[1] - a[1]) - ey * (A[0] - a[0])
            c1 = ex * (B[1] - A[1]) - ey * (B[0] - A[0])
            s_lo, s_hi = _clip_halfline(s_lo, s_hi, c0, c1)
            if s_lo > s_hi:
                return None
        den = u[0] * (Q[1] - P[1]) - u[1] * (Q[0] - P[0])
        if abs(den) > 1e-12:
            # crossing parameter tau(s) = (cross(P - z, Q - P)) / den, affine in s
            pz0 = (P[0] - A[0]) * (Q[1] - P[1]) - (P[1] - A[1]) * (Q[0] - P[0])
            pz1 = -((B[0] - A[0]) * (Q[1] - P[1]) - (B[1] - A[1]) * (Q[0] - P[0]))
            taus.append((pz0 / den, pz1 / den))
    for i in range(1, len(taus)):
        d0 = taus[i][0] - taus[i - 1][0]
        d1 = taus[i][1] - taus[i - 1][1]
        s_lo, s_hi = _clip_halfline(s_lo, s_hi, d0 + 1e-12, d1)
        if s_lo > s_hi:
            return None
    return (s_lo, s_hi)


def _clip_halfline(s_lo, s_hi, c0, c1):
    """Intersect [s_lo, s_hi] with {s : c0 + s*c1 >= 0}."""
    if abs(c1) < 1e-15:
        if c0 < -1e-12:
            return (1.0, 0.0)
        return (s_lo, s_hi)
    root = -c0 / c1
    if c1 > 0:
        return (max(s_lo, root), s_hi)
    return (s_lo, min(s_hi, root))


def _retrace_closed(surface, poly, z, u, T) -> Optional[UnitTangent]:
    """Validate a closed-geodesic candidate by tracing it on the surface."""
    # nudge the start off the edge to avoid boundary ambiguity
    eps = 1e-7 * (1 + surface.max_polygon_diameter)
    z_in = (z[0] + eps * u[0], z[1] + eps * u[1])
    if not geo.point_in_polygon(surface.polygon(poly), z_in, tol=1e-12):
        return None
    try:
        start = unit_tangent(SurfacePoint(poly, z_in), u)
        tr = trace_geodesic(surface, start, T)
    except (BudgetExceededError, ValueError):
        return None
    if tr.hit is not None or tr.end is None:
        return None
    if not surface.same_point(tr.points[-1], start.base, tol=1e-6):
        return None
    du = math.hypot(tr.end.direction[0] - u[0], tr.end.direction[1] - u[1])
    if du > 1e-6:
        return None
    return start


# -- geodesic loops through cone points -------------------------------------------


@dataclass(frozen=True)
class _Saddle:
    idx: int
    start: int  # cone class
    end: int
    length: float
    out_angle: float  # fan coordinate at the start cone
    rev_angle: float  # fan coordinate of the reversed direction at the end cone
    tangent: UnitTangent  # leaves the start cone along the connection


def saddle_connections(surface: ConeSurface, cutoff: float,
                       budget: int = DEFAULT_NODE_BUDGET):
    """Directed straight cone-to-cone segments of length at most the cutoff."""
    cones = [c.index for c in surface.cone_points]
    fans = {c: develop_vertex_fan(surface, c, cutoff, budget) for c in cones}
    out = []
    for c in cones:
        fan = fans[c]
        factory = _fan_tangent_factory(fan)
        images = _validated_cone_images(fan, factory)
        for c2, items in images.items():
            for t, qpt in items:
                direction = (qpt[0] / t, qpt[1] / t)
                tangent = factory(direction)
                if tangent is None:
                    continue
                tr = trace_geodesic(surface, tangent, t + surface.eps_hit * 10 + 1e-12)
                if tr.hit is None or tr.hit.cone_class != c2:
                    continue
                p_f = tr.points[-1].chart
                arr = surface.polygon(p_f)
                endpt = tr.points[-1].coords
                v_f = int(np.argmin(np.hypot(arr[:, 0] - endpt[0], arr[:, 1] - endpt[1])))
                prev = tr.points[-2].coords
                w = (endpt[0] - prev[0], endpt[1] - prev[1])
                nw = math.hypot(*w)
                if nw < 1e-15:
                    continue
                rev_local = (-w[0] / nw, -w[1] / nw)
                fan2 = fans[c2]
                root2 = fan_root_for_corner(fan2, (p_f, v_f))
                rev_dir = root2.iso.apply_vec(rev_local)
                rev = fan_angle(fan2, rev_dir)
                out.append(_Saddle(len(out), c, c2, t,
                                   fan_angle(fan, direction), rev, tangent))
    return out


def _junction_ok(theta: float, arrival_rev: float, departure: float) -> bool:
    g1 = (departure - arrival_rev) % theta
    g2 = theta - g1
    return min(g1, g2) >= math.pi - ANGLE_TOL


def _cone_loop_candidates(surface: ConeSurface, cutoff: float, budget: int):
    cones = {c.index: c for c in surface.cone_points}
    if not cones:
        return []
    saddles = saddle_connections(surface, cutoff, budget)
    by_start: dict = {}
    for s in saddles:
        by_start.setdefault(s.start, []).append(s)
    min_len = min((s.length for s in saddles), default=math.inf)
    out = []
    seen = set()
    for s0 in saddles:
        stack = [(s0.end, s0.rev_angle, s0.length, (s0.idx,))]
        while stack:
            cur, arr_angle, L, path = stack.pop()
            theta = cones[cur].theta
            if cur == s0.start and _junction_ok(theta, arr_angle, s0.out_angle):
                key = _canonical_word(path)
                if key not in seen:
                    seen.add(key)
                    segs = tuple(
                        ConeLoopSegment(saddles[i].tangent, saddles[i].length,
                                        saddles[i].end)
                        for i in path
                    )
                    out.append(SystoleWitness("cone-loop", L, None, None, path, segs))
            for s in by_start.get(cur, ()):
                if L + s.length > cutoff + 1e-9:
                    continue
                if L + s.length + min_len > cutoff + 1e-9 and not (
                        s.end == s0.start):
                    continue
                if _junction_ok(theta, arr_angle, s.out_angle):
                    stack.append((s.end, s.rev_angle, L + s.length, path + (s.idx,)))
    return out


def validate_witness(surface: ConeSurface, report: SystoleReport, tol: float = 1e-9) -> bool:
    """Retrace the witness on the surface and confirm closure and length."""
    w = report.witness
    if w is None:
        return False
    if w.kind == "lattice":
        return abs(math.hypot(*w.vector) - report.value) <= tol
    if w.kind == "straight":
        tr = trace_geodesic(surface, w.start, w.length)
        if tr.hit is not None or tr.end is None:
            return False
        if not surface.same_point(tr.points[-1], w.start.base, tol=1e-6):
            return False
        d = math.hypot(tr.end.direction[0] - w.start.direction[0],
                       tr.end.direction[1] - w.start.direction[1])
        return d <= 1e-6 and abs(w.length - report.value) <= tol
    # cone loop: each segment must hit its cone point at the right length
    total = 0.0
    for seg in w.segments:
        tr = trace_geodesic(surface, seg.start, seg.length + surface.eps_hit * 10 + 1e-12)
        if tr.hit is None or tr.hit.cone_class != seg.end_class:
            return False
        if abs(tr.hit.at - seg.length) > 1e-6 * (1 + surface.max_polygon_diameter):
            return False
        total += seg.length
    return abs(total - report.value) <= 1e-9 * max(1.0, total)
