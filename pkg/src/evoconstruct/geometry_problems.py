"""Evaluators over point sets and rigid poses.

Kissing-shortfall penalty, needle union areas and overlap scores via the
exact slice method, spherical designs through the addition-theorem error,
Coulomb energy and best-separation scores, packing in a dilate, circle
packing by radius sum, smallest-triangle scores and max/min distance ratio.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .payloads import (DiskSet, KakeyaOffsets, PlanePoints, PoseSet,
                       SpherePoints, as_fraction)
from .scoring import Infeasible, UnsupportedInstance


# --- sphere ingestion --------------------------------------------------------

def normalize_points(pts: SpherePoints, radius: float = 1.0) -> SpherePoints:
    """Scale every point onto the radius sphere (float view).

    Iterates the division until it reaches a floating-point fixed point, so
    projecting twice is bitwise identical to projecting once.
    """
    out = []
    for p in pts.float_points():
        v = list(p)
        for _ in range(4):
            norm = math.sqrt(sum(c * c for c in v))
            if norm == 0.0:
                raise Infeasible("cannot normalize the zero vector")
            if norm == radius:
                break
            scaled = [c * (radius / norm) for c in v]
            if scaled == v:
                break
            v = scaled
        out.append(tuple(v))
    return SpherePoints(d=pts.d, points=tuple(out))


def eval_kissing(pts: SpherePoints) -> float:
    """Sum of pairwise shortfalls max(0, 2 - |c_i - c_j|) at radius 2."""
    cfg = normalize_points(pts, radius=2.0)
    pts_arr = np.asarray(cfg.points)
    n = len(pts_arr)
    if n < 2:
        return 0.0
    diff = pts_arr[:, None, :] - pts_arr[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    iu = np.triu_indices(n, k=1)
    short = np.maximum(0.0, 2.0 - dist[iu])
    return float(short.sum())


def eval_thomson(pts: SpherePoints) -> float:
    """Coulomb energy sum 1/|z_i - z_j| on the unit sphere in R^3."""
    if pts.d != 3:
        raise UnsupportedInstance("Coulomb energy evaluator expects points in R^3")
    cfg = normalize_points(pts)
    if cfg.n < 2:
        raise Infeasible("need at least two points")
    arr = np.asarray(cfg.points)
    diff = arr[:, None, :] - arr[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    iu = np.triu_indices(cfg.n, k=1)
    dmin = dist[iu].min()
    if dmin <= 1e-12:
        raise Infeasible("coincident points", min_distance=float(dmin))
    return float((1.0 / dist[iu]).sum())


def eval_tammes(pts: SpherePoints) -> float:
    """Minimum pairwise distance on the unit sphere in R^3."""
    if pts.d != 3:
        raise UnsupportedInstance("best-separation evaluator expects points in R^3")
    cfg = normalize_points(pts)
    if cfg.n < 2:
        raise Infeasible("need at least two points")
    arr = np.asarray(cfg.points)
    diff = arr[:, None, :] - arr[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    iu = np.triu_indices(cfg.n, k=1)
    return float(dist[iu].min())


# --- needle shapes via the slice method --------------------------------------

def _slice_lines(off: KakeyaOffsets, exact: bool):
    """Left/right slice endpoints of each shape as affine functions of height.

    Shape j (1-based) covers [x_j + y*j/n, x_j + 1/n + y*(j-1)/n] for the
    triangle family and [x_j + y*j/n, x_j + 1/n + y*j/n] for parallelograms.
    Returns (const, slope) pairs for lefts and rights.
    """
    n = off.n
    one = Fraction(1) if exact else 1.0
    xs = [as_fraction(v) if exact else float(v) for v in off.x]
    lefts, rights = [], []
    for i, x in enumerate(xs):
        j = i + 1
        lefts.append((x, j * one / n))
        if off.shape == "triangle":
            rights.append((x + one / n, (j - 1) * one / n))
        else:
            rights.append((x + one / n, j * one / n))
    return lefts, rights


def _line_at(line, y):
    return line[0] + line[1] * y


def _crossing_events(lines, exact: bool):
    """Heights in (0, 1) where any two endpoint lines cross."""
    zero = Fraction(0) if exact else 0.0
    one = zero + 1
    events = {zero, one} if exact else set()
    if not exact:
        events = {0.0, 1.0}
    m = len(lines)
    for i in range(m):
        c1, s1 = lines[i]
        for j in range(i + 1, m):
            c2, s2 = lines[j]
            if s1 == s2:
                continue
            y = (c2 - c1) / (s1 - s2)
            if zero < y < one:
                events.add(y)
    ys = sorted(events)
    if not exact:
        merged = [ys[0]]
        for y in ys[1:]:
            if y - merged[-1] > 1e-14:
                merged.append(y)
        ys = merged
    return ys


def _union_length(lefts, rights, y):
    intervals = sorted((_line_at(l, y), _line_at(r, y)) for l, r in zip(lefts, rights))
    total = (intervals[0][0] - intervals[0][0])
    cur_lo, cur_hi = intervals[0]
    for lo, hi in intervals[1:]:
        if lo <= cur_hi:
            if hi > cur_hi:
                cur_hi = hi
        else:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
    total += cur_hi - cur_lo
    return total


def kakeya_union_area(off: KakeyaOffsets, exact: bool = False):
    """Area of the union of the needle shapes, exact via slice integration.

    The union measure at height y is piecewise linear between endpoint
    crossings, so trapezoids over the event strips integrate it exactly.
    """
    lefts, rights = _slice_lines(off, exact)
    ys = _crossing_events(lefts + rights, exact)
    area = None
    prev_y = ys[0]
    prev_len = _union_length(lefts, rights, prev_y)
    area = prev_len - prev_len
    for y in ys[1:]:
        cur = _union_length(lefts, rights, y)
        area += (prev_len + cur) * (y - prev_y) / 2
        prev_y, prev_len = y, cur
    return area


def _pair_intersection_area(li, ri, lj, rj, exact: bool):
    lines = [li, ri, lj, rj]
    ys = _crossing_events(lines, exact)

    def length(y):
        lo = max(_line_at(li, y), _line_at(lj, y))
        hi = min(_line_at(ri, y), _line_at(rj, y))
        diff = hi - lo
        zero = diff - diff
        return diff if diff > zero else zero

    area = None
    prev_y = ys[0]
    prev_len = length(prev_y)
    area = prev_len - prev_len
    for y in ys[1:]:
        cur = length(y)
        area += (prev_len + cur) * (y - prev_y) / 2
        prev_y, prev_len = y, cur
    return area


def kakeya_intersection_total(off: KakeyaOffsets, exact: bool = False):
    """Sum over all ordered pairs (i, j) of |shape_i intersect shape_j|."""
    lefts, rights = _slice_lines(off, exact)
    n = off.n
    total = None
    diag = kakeya_total_shape_area(off, exact)
    total = diag
    for i in range(n):
        for j in range(i + 1, n):
            a = _pair_intersection_area(lefts[i], rights[i], lefts[j], rights[j], exact)
            total += 2 * a
    return total


def kakeya_total_shape_area(off: KakeyaOffsets, exact: bool = False):
    one = Fraction(1) if exact else 1.0
    if off.shape == "triangle":
        return off.n * (one / (2 * off.n))
    return off.n * (one / off.n)


def kakeya_s_score(off: KakeyaOffsets, exact: bool = False) -> float:
    """Total shape area over sqrt(total pairwise intersection) * sqrt(union)."""
    union = kakeya_union_area(off, exact)
    if float(union) <= 0.0:
        raise Infeasible("degenerate zero union")
    inter = kakeya_intersection_total(off, exact)
    num = kakeya_total_shape_area(off, exact)
    return float(num) / math.sqrt(float(inter) * float(union))


def baseline_keich(k: int, shape: str = "triangle") -> KakeyaOffsets:
    """Bit-weighted offsets for n = 2^k shapes.

    Index i = 0..n-1 with i/n = sum_j eps_j 2^-j gives
    x_i = sum_j ((1-j)/k) * eps_j * 2^-j.
    """
    if k < 1:
        raise UnsupportedInstance("need k >= 1")
    n = 1 << k
    xs = []
    for i in range(n):
        x = Fraction(0)
        for j in range(1, k + 1):
            eps = (i >> (k - j)) & 1
            if eps:
                x += Fraction(1 - j, k) * Fraction(1, 1 << j)
        xs.append(x)
    return KakeyaOffsets(n=n, x=tuple(xs), shape=shape)


# --- spherical designs --------------------------------------------------------

def _design_multiplicity(d: int, k: int) -> int:
    return math.comb(d + k, k) - (math.comb(d + k - 2, k - 2) if k >= 2 else 0)


def eval_spherical_design(pts: SpherePoints, t: int) -> float:
    """Addition-theorem design error for sphere dimension d = ambient - 1.

    Error = sum_{i,j} sum_{k=1..t} mult(d,k) * C_k(dot_ij) / C_k(1) with the
    Gegenbauer family for d = 2 and the Chebyshev family (mult 2) for d = 1;
    zero exactly on a t-design.
    """
    d = pts.d - 1
    if d not in (1, 2):
        raise UnsupportedInstance("supported sphere dimensions are 1 and 2")
    if t < 1:
        raise UnsupportedInstance("need polynomial degree t >= 1")
    cfg = normalize_points(pts)
    arr = np.asarray(cfg.points)
    gram = arr @ arr.T
    err = 0.0
    if d == 1:
        prev = np.ones_like(gram)
        cur = gram.copy()
        for k in range(1, t + 1):
            err += 2.0 * float(cur.sum())
            prev, cur = cur, 2.0 * gram * cur - prev
    else:
        prev = np.ones_like(gram)     # P_0
        cur = gram.copy()             # P_1
        for k in range(1, t + 1):
            err += _design_multiplicity(2, k) * float(cur.sum())
            nxt = ((2 * k + 1) * gram * cur - k * prev) / (k + 1)
            prev, cur = cur, nxt
    return err


# --- packing in a dilate ------------------------------------------------------

_HEX_NORMALS = [(math.cos(a), math.sin(a))
                for a in (math.pi / 6, math.pi / 2, 5 * math.pi / 6)]


def _pose_vertices(shape: str, pose) -> list[tuple[float, ...]]:
    if shape in ("hexagon", "square"):
        cx, cy, theta = pose
        c, s = math.cos(theta), math.sin(theta)
        if shape == "hexagon":
            base = [(math.cos(a), math.sin(a))
                    for a in (k * math.pi / 3 for k in range(6))]
        else:
            base = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
        return [(cx + c * x - s * y, cy + s * x + c * y) for x, y in base]
    cx, cy, cz, ax, ay, az = pose
    rot = _rotation_matrix(ax, ay, az)
    out = []
    for sx in (-0.5, 0.5):
        for sy in (-0.5, 0.5):
            for sz in (-0.5, 0.5):
                v = rot @ np.array([sx, sy, sz])
                out.append((cx + v[0], cy + v[1], cz + v[2]))
    return out


def _rotation_matrix(ax: float, ay: float, az: float) -> np.ndarray:
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rz @ ry @ rx


def clip_polygon_halfplane(poly, a, b, c):
    """Keep the part of a convex polygon with a*x + b*y <= c."""
    out = []
    m = len(poly)
    for i in range(m):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % m]
        pin = a * px + b * py <= c
        qin = a * qx + b * qy <= c
        if pin:
            out.append((px, py))
        if pin != qin:
            denom = a * (qx - px) + b * (qy - py)
            if denom != 0:
                tpar = (c - a * px - b * py) / denom
                out.append((px + tpar * (qx - px), py + tpar * (qy - py)))
    return out


def convex_intersection_area(p, q) -> float:
    """Area of the intersection of two convex polygons (vertices in order)."""
    poly = list(p)
    m = len(q)
    area_q = _polygon_area(q)
    orient = 1.0 if area_q >= 0 else -1.0
    for i in range(m):
        x1, y1 = q[i]
        x2, y2 = q[(i + 1) % m]
        # inward half-plane for edge (x1,y1)->(x2,y2)
        a = orient * (y2 - y1)
        b = orient * (x1 - x2)
        c = a * x1 + b * y1
        poly = clip_polygon_halfplane(poly, a, b, c)
        if not poly:
            return 0.0
    return abs(_polygon_area(poly))


def _polygon_area(poly) -> float:
    acc = 0.0
    m = len(poly)
    for i in range(m):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % m]
        acc += x1 * y2 - x2 * y1
    return 0.5 * acc


def _cube_section(planes, z: float):
    """Cross-section polygon of a convex polyhedron (given by half-spaces) at height z."""
    big = 64.0
    poly = [(-big, -big), (big, -big), (big, big), (-big, big)]
    for (a, b, cc, dd) in planes:
        # a*x + b*y + cc*z <= dd  ->  a*x + b*y <= dd - cc*z
        poly = clip_polygon_halfplane(poly, a, b, dd - cc * z)
        if not poly:
            return []
    return poly


def _cube_planes(pose) -> list[tuple[float, float, float, float]]:
    cx, cy, cz, ax, ay, az = pose
    rot = _rotation_matrix(ax, ay, az)
    center = np.array([cx, cy, cz])
    planes = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            normal = sign * rot[:, axis]
            d = float(normal @ center) + 0.5
            planes.append((float(normal[0]), float(normal[1]), float(normal[2]), d))
    return planes


def _cube_overlap_volume(pose_a, pose_b) -> float:
    pa, pb = _cube_planes(pose_a), _cube_planes(pose_b)
    za = [v[2] for v in _pose_vertices("cube", pose_a)]
    zb = [v[2] for v in _pose_vertices("cube", pose_b)]
    lo, hi = max(min(za), min(zb)), min(max(za), max(zb))
    if hi <= lo:
        return 0.0
    breaks = sorted({z for z in za + zb if lo <= z <= hi} | {lo, hi})

    def section_area(z):
        poly = _cube_section(pa + pb, z)
        return abs(_polygon_area(poly)) if poly else 0.0

    vol = 0.0
    nsub = 4
    for z0, z1 in zip(breaks, breaks[1:]):
        # composite Simpson per strip
        h = (z1 - z0) / nsub
        if h == 0:
            continue
        acc = section_area(z0) + section_area(z1)
        for i in range(1, nsub):
            acc += (4.0 if i % 2 else 2.0) * section_area(z0 + i * h)
        vol += acc * h / 3.0
    return vol


def pack_overlap_penalty(ps: PoseSet) -> float:
    """Total pairwise overlap measure between posed shapes."""
    n = len(ps.poses)
    total = 0.0
    if ps.shape == "cube":
        for i in range(n):
            for j in range(i + 1, n):
                total += _cube_overlap_volume(ps.poses[i], ps.poses[j])
        return total
    polys = [_pose_vertices(ps.shape, p) for p in ps.poses]
    for i in range(n):
        for j in range(i + 1, n):
            total += convex_intersection_area(polys[i], polys[j])
    return total


def _hex_feasible(verts, s: float) -> bool:
    """Can a fixed-orientation hexagon of side s be translated to cover the vertices?

    The hexagon is the intersection of three slabs with normals 60 degrees
    apart; the middle normal is the sum of the outer two, which yields the
    compatibility constraint below.
    """
    half = s * math.sqrt(3.0) / 2.0
    bounds = []
    for nx, ny in _HEX_NORMALS:
        vals = [nx * x + ny * y for x, y in verts]
        lo, hi = max(vals) - half, min(vals) + half
        if lo > hi:
            return False
        bounds.append((lo, hi))
    (a1, b1), (a2, b2), (a3, b3) = bounds
    return a1 + a3 <= b2 and a2 <= b1 + b3


def containment_scale(ps: PoseSet, iters: int = 60, tol: float = 1e-9) -> float:
    """Smallest dilate side (binary search, fixed outer orientation) covering all poses."""
    verts = [v for pose in ps.poses for v in _pose_vertices(ps.shape, pose)]
    if ps.shape in ("square", "cube"):
        dims = len(verts[0])
        extents = [max(v[i] for v in verts) - min(v[i] for v in verts) for i in range(dims)]
        feasible = lambda s: all(e <= s for e in extents)
        hi_guess = max(extents) + 1.0
    else:
        feasible = lambda s: _hex_feasible(verts, s)
        hi_guess = 2.0 * max(max(abs(x), abs(y)) for x, y in verts) + 2.0
    lo, hi = 0.0, hi_guess
    while not feasible(hi):
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return hi


def eval_pack_dilate(ps: PoseSet) -> tuple[float, float]:
    """(scale, penalty): dilate side via binary search plus total overlap measure."""
    for pose in ps.poses:
        if any(not math.isfinite(v) for v in pose):
            raise Infeasible("non-finite pose")
    penalty = pack_overlap_penalty(ps)
    scale = containment_scale(ps)
    return scale, penalty


def eval_pack_circles_sum(ds: DiskSet) -> float:
    """Sum of radii of disjoint open disks inside the unit square."""
    tol = 1e-12
    for idx, (x, y, r) in enumerate(ds.disks):
        if x < r - tol or x > 1 - r + tol or y < r - tol or y > 1 - r + tol:
            raise Infeasible("disk outside the unit square", disk=idx)
    n = len(ds.disks)
    for i in range(n):
        xi, yi, ri = ds.disks[i]
        for j in range(i + 1, n):
            xj, yj, rj = ds.disks[j]
            if math.hypot(xi - xj, yi - yj) < ri + rj - tol:
                raise Infeasible("overlapping disks", pair=(i, j))
    return sum(r for _, _, r in ds.disks)


# --- point configurations in the plane ---------------------------------------

_EQ_TRI_SIDE = 2.0 / 3.0 ** 0.25     # side of the unit-area equilateral triangle
_EQ_TRI = ((0.0, 0.0), (_EQ_TRI_SIDE, 0.0), (_EQ_TRI_SIDE / 2.0, _EQ_TRI_SIDE * math.sqrt(3.0) / 2.0))


def _closest_point_in_triangle(p, tri):
    (ax, ay), (bx, by), (cx, cy) = tri
    px, py = p
    # barycentric clamp, standard closest-point-on-triangle
    abx, aby = bx - ax, by - ay
    acx, acy = cx - ax, cy - ay
    apx, apy = px - ax, py - ay
    d1 = abx * apx + aby * apy
    d2 = acx * apx + acy * apy
    if d1 <= 0 and d2 <= 0:
        return (ax, ay)
    bpx, bpy = px - bx, py - by
    d3 = abx * bpx + aby * bpy
    d4 = acx * bpx + acy * bpy
    if d3 >= 0 and d4 <= d3:
        return (bx, by)
    vc = d1 * d4 - d3 * d2
    if vc <= 0 <= d1 and d3 <= 0:
        t = d1 / (d1 - d3)
        return (ax + t * abx, ay + t * aby)
    cpx, cpy = px - cx, py - cy
    d5 = abx * cpx + aby * cpy
    d6 = acx * cpx + acy * cpy
    if d6 >= 0 and d5 <= d6:
        return (cx, cy)
    vb = d5 * d2 - d1 * d6
    if vb <= 0 <= d2 and d6 <= 0:
        t = d2 / (d2 - d6)
        return (ax + t * acx, ay + t * acy)
    va = d3 * d6 - d5 * d4
    if va <= 0 and d4 - d3 >= 0 and d5 - d6 >= 0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return (bx + t * (cx - bx), by + t * (cy - by))
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return (ax + abx * v + acx * w, ay + aby * v + acy * w)


def project_into_frame(pp: PlanePoints) -> PlanePoints:
    if pp.frame == "free":
        return pp
    out = []
    for p in pp.points:
        if pp.frame == "unit_square":
            out.append((min(1.0, max(0.0, p[0])), min(1.0, max(0.0, p[1]))))
        else:
            out.append(_closest_point_in_triangle(p, _EQ_TRI))
    return PlanePoints(points=tuple(out), frame=pp.frame)


def convex_hull(points):
    """Monotone chain; returns hull vertices in counter-clockwise order."""
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) > 1 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) > 1 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _triangle_area(a, b, c) -> float:
    return abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2.0


def eval_heilbronn(pp: PlanePoints, variant: str) -> float:
    """Smallest triangle area over the frame area (box) or hull area (hull)."""
    pts = pp.points
    if len(pts) < 3:
        raise Infeasible("need at least three points")
    if any(len(p) != 2 for p in pts):
        raise UnsupportedInstance("triangle scores are planar")
    projected = project_into_frame(pp).points
    n = len(projected)
    best = None
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                area = _triangle_area(projected[i], projected[j], projected[k])
                if best is None or area < best:
                    best = area
    if variant == "box":
        return best  # both supported frames have unit area
    if variant == "hull":
        hull = convex_hull(projected)
        if len(hull) < 3:
            raise Infeasible("degenerate convex hull")
        hull_area = abs(_polygon_area(hull))
        if hull_area == 0.0:
            raise Infeasible("degenerate convex hull")
        return best / hull_area
    raise ValueError(f"unknown variant {variant!r}")


def eval_maxmin_ratio(pp: PlanePoints) -> float:
    """Max pairwise distance divided by min pairwise distance."""
    pts = pp.points
    if len(pts) < 2:
        raise Infeasible("need at least two points")
    arr = np.asarray(pts)
    diff = arr[:, None, :] - arr[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    iu = np.triu_indices(len(pts), k=1)
    dmin = float(dist[iu].min())
    if dmin <= 0.0:
        raise Infeasible("coincident points")
    return float(dist[iu].max()) / dmin
