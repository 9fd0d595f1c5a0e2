"""High-precision re-evaluation of constructions into score enclosures.

Discrete and piecewise-linear evaluators re-run in exact rational
arithmetic; geometric evaluators re-run in outward-rounded interval
arithmetic at a configurable precision. Scores that mix exact counts with
transcendental functions (logs, square roots) take the interval path on top
of exact intermediate quantities.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext, ROUND_CEILING, ROUND_FLOOR
from fractions import Fraction

from mpmath import iv

from . import analysis_problems as ap
from . import combinatorics_problems as cp
from . import geometry_problems as gp
from . import numbertheory_problems as nt
from .payloads import as_fraction, canonical_json, payload_to_json
from .registry import get_problem
from .scoring import Infeasible, UnsupportedInstance


@dataclass(frozen=True)
class ScoreInterval:
    """Certified enclosure [lo, hi] of a raw score at a stated precision."""

    lo: Fraction
    hi: Fraction
    precision_bits: int
    method: str                      # "exact_rational" | "interval"

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("invalid enclosure: lo > hi")
        if self.method == "exact_rational" and self.lo != self.hi:
            raise ValueError("exact enclosures must be degenerate")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, value) -> bool:
        v = as_fraction(value)
        return self.lo <= v <= self.hi


def _decimal_str(fr: Fraction, rounding: str, digits: int = 45) -> str:
    with localcontext() as ctx:
        ctx.prec = digits
        ctx.rounding = rounding
        return str(Decimal(fr.numerator) / Decimal(fr.denominator))


def construction_hash(construction) -> str:
    payload = canonical_json(payload_to_json(construction))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def certificate_json(problem_id: str, construction, si: ScoreInterval) -> dict:
    return {"problem": problem_id,
            "score_lo": _decimal_str(si.lo, ROUND_FLOOR),
            "score_hi": _decimal_str(si.hi, ROUND_CEILING),
            "bits": si.precision_bits,
            "method": si.method,
            "construction_hash": construction_hash(construction)}


# --- interval helpers -----------------------------------------------------------

def _raw_to_fraction(raw) -> Fraction:
    sign, man, exp, _ = raw
    if man == 0:
        if exp == 0:
            return Fraction(0)
        raise OverflowError("non-finite interval endpoint")
    f = Fraction(int(man)) * Fraction(2) ** int(exp)
    return -f if sign else f


def iv_bounds(x) -> tuple[Fraction, Fraction]:
    lo, hi = x._mpi_
    return _raw_to_fraction(lo), _raw_to_fraction(hi)


def ivnum(x):
    fr = as_fraction(x)
    if fr.denominator == 1:
        return iv.mpf(fr.numerator)
    return iv.mpf(fr.numerator) / iv.mpf(fr.denominator)


def float_down(fr: Fraction) -> float:
    f = float(fr)
    return f if as_fraction(f) <= fr else math.nextafter(f, -math.inf)


def float_up(fr: Fraction) -> float:
    f = float(fr)
    return f if as_fraction(f) >= fr else math.nextafter(f, math.inf)


def _max0(x):
    """max(0, x) endpoint-wise for an interval (outward at float granularity)."""
    flo, fhi = iv_bounds(x)
    lo, hi = max(Fraction(0), flo), max(Fraction(0), fhi)
    return iv.mpf([float_down(lo), float_up(hi)])


def _interval_result(x, bits: int) -> ScoreInterval:
    lo, hi = iv_bounds(x)
    return ScoreInterval(lo=lo, hi=hi, precision_bits=bits, method="interval")


def _exact_result(value, bits: int) -> ScoreInterval:
    fr = as_fraction(value)
    return ScoreInterval(lo=fr, hi=fr, precision_bits=bits, method="exact_rational")


def _iv_norm(vec):
    return iv.sqrt(sum(c * c for c in vec))


def _iv_dist(p, q):
    return iv.sqrt(sum((a - b) * (a - b) for a, b in zip(p, q)))


def _iv_log(n: int):
    return iv.log(iv.mpf(n))


# --- per-problem certified evaluators ---------------------------------------------

def _certify_kissing(payload, instance, bits):
    pts = []
    for p in payload.points:
        vec = [ivnum(c) for c in p]
        norm = _iv_norm(vec)
        if not (norm > 0):
            raise Infeasible("cannot certify a zero vector")
        pts.append([c * 2 / norm for c in vec])
    total = iv.mpf(0)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            total += _max0(iv.mpf(2) - _iv_dist(pts[i], pts[j]))
    return _interval_result(total, bits)


def _normalized_iv_points(payload):
    pts = []
    for p in payload.points:
        vec = [ivnum(c) for c in p]
        norm = _iv_norm(vec)
        if not (norm > 0):
            raise Infeasible("cannot certify a zero vector")
        pts.append([c / norm for c in vec])
    return pts


def _certify_thomson(payload, instance, bits):
    pts = _normalized_iv_points(payload)
    total = iv.mpf(0)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = _iv_dist(pts[i], pts[j])
            if not (d > 1e-12):
                raise Infeasible("coincident points (cannot certify)")
            total += 1 / d
    return _interval_result(total, bits)


def _certify_tammes(payload, instance, bits):
    pts = _normalized_iv_points(payload)
    best = None
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = iv_bounds(_iv_dist(pts[i], pts[j]))
            best = d if best is None else (min(best[0], d[0]), min(best[1], d[1]))
    return ScoreInterval(lo=best[0], hi=best[1], precision_bits=bits, method="interval")


def _certify_design(payload, instance, bits):
    t = int(instance.get("t", 3))
    d = payload.d - 1
    if d not in (1, 2):
        raise UnsupportedInstance("supported sphere dimensions are 1 and 2")
    pts = _normalized_iv_points(payload)
    n = len(pts)
    dots = [[sum(a * b for a, b in zip(pts[i], pts[j])) for j in range(n)] for i in range(n)]
    total = iv.mpf(0)
    prev = [[iv.mpf(1)] * n for _ in range(n)]
    cur = [[dots[i][j] for j in range(n)] for i in range(n)]
    for k in range(1, t + 1):
        mult = 2 if d == 1 else (2 * k + 1)
        total += iv.mpf(mult) * sum(cur[i][j] for i in range(n) for j in range(n))
        nxt = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if d == 1:
                    nxt[i][j] = 2 * dots[i][j] * cur[i][j] - prev[i][j]
                else:
                    nxt[i][j] = ((2 * k + 1) * dots[i][j] * cur[i][j] - k * prev[i][j]) / (k + 1)
        prev, cur = cur, nxt
    return _interval_result(total, bits)


def _certify_maxmin(payload, instance, bits):
    pts = [[ivnum(c) for c in p] for p in payload.points]
    lo_min = hi_min = lo_max = hi_max = None
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            dlo, dhi = iv_bounds(_iv_dist(pts[i], pts[j]))
            if lo_min is None:
                lo_min, hi_min, lo_max, hi_max = dlo, dhi, dlo, dhi
            else:
                lo_min, hi_min = min(lo_min, dlo), min(hi_min, dhi)
                lo_max, hi_max = max(lo_max, dlo), max(hi_max, dhi)
    if lo_min <= 0:
        raise Infeasible("cannot certify distinctness of the points")
    return ScoreInterval(lo=lo_max / hi_min, hi=hi_max / lo_min,
                         precision_bits=bits, method="interval")


def _certify_heilbronn(variant):
    def run(payload, instance, bits):
        from .geometry_problems import project_into_frame
        if instance.get("frame", "free") == "unit_area_equilateral_triangle":
            # projection branches are chosen in floats; certify the projected points
            payload = project_into_frame(payload)
            pts = [[ivnum(c) for c in p] for p in payload.points]
        else:
            pts = [[ivnum(c) for c in p] for p in payload.points]
            if instance.get("frame") == "unit_square":
                clamped = []
                for x, y in pts:
                    clamped.append([_clamp01(x), _clamp01(y)])
                pts = clamped
        n = len(pts)
        lo_min = hi_min = None
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    area = _iv_triangle_area(pts[i], pts[j], pts[k])
                    alo, ahi = iv_bounds(area)
                    if lo_min is None:
                        lo_min, hi_min = alo, ahi
                    else:
                        lo_min, hi_min = min(lo_min, alo), min(hi_min, ahi)
        if variant == "box":
            return ScoreInterval(lo=max(Fraction(0), lo_min), hi=hi_min,
                                 precision_bits=bits, method="interval")
        hull = gp.convex_hull([(float(a) if not isinstance(a, Fraction) else float(a),
                                float(b) if not isinstance(b, Fraction) else float(b))
                               for a, b in payload.points])
        if len(hull) < 3:
            raise Infeasible("degenerate convex hull")
        hx = [[ivnum(c) for c in p] for p in hull]
        acc = iv.mpf(0)
        for i in range(len(hx)):
            x1, y1 = hx[i]
            x2, y2 = hx[(i + 1) % len(hx)]
            acc += x1 * y2 - x2 * y1
        hull_area = abs(acc) / 2
        hlo, hhi = iv_bounds(hull_area)
        if hlo <= 0:
            raise Infeasible("cannot certify the hull area")
        return ScoreInterval(lo=max(Fraction(0), lo_min) / hhi, hi=hi_min / hlo,
                             precision_bits=bits, method="interval")
    return run


def _clamp01(x):
    lo, hi = iv_bounds(x)
    lo = min(max(lo, Fraction(0)), Fraction(1))
    hi = min(max(hi, Fraction(0)), Fraction(1))
    return ivnum(lo) if lo == hi else iv.mpf([float(lo), float(hi)])


def _iv_triangle_area(a, b, c):
    return abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2


def _certify_uncertainty(payload, instance, bits):
    raw = ap.eval_uncertainty_sign_change(payload)    # locates the crossing in floats
    r = math.sqrt(raw)
    poly = _exact_eigen_poly(payload)
    tail = 1 if poly[-1] > 0 else -1

    def iv_value(x: float):
        xx = ivnum(x)
        u = 2 * iv.pi * xx * xx
        acc = iv.mpf(0)
        for c in reversed(poly):
            acc = acc * u + ivnum(c)
        return acc * tail

    width = 1e-11
    for _ in range(40):
        lo_val = iv_value(r - width)
        hi_val = iv_value(r + width)
        if (lo_val < 0 or lo_val > 0) and (hi_val < 0 or hi_val > 0) \
                and bool(lo_val < 0) != bool(hi_val < 0):
            a, b = r - width, r + width
            sq = ivnum(a) ** 2
            sq2 = ivnum(b) ** 2
            lo, _ = iv_bounds(sq)
            _, hi = iv_bounds(sq2)
            return ScoreInterval(lo=lo, hi=hi, precision_bits=bits, method="interval")
        width *= 4
    raise Infeasible("could not certify the sign change bracket")


def _exact_eigen_poly(payload):
    basis = ap._hermite_eigenpoly_coeffs(len(payload.coeffs))
    deg = max(len(b) for b in basis)
    out = [Fraction(0)] * deg
    for coeff, polyb in zip(payload.coeffs, basis):
        fc = as_fraction(coeff)
        for i, v in enumerate(polyb):
            out[i] += fc * v
    while out and out[-1] == 0:
        out.pop()
    if not out:
        raise Infeasible("zero test function")
    return out


def _certify_pack_circles(payload, instance, bits):
    tol = Fraction(1, 10 ** 12)
    disks = [(as_fraction(x), as_fraction(y), as_fraction(r)) for x, y, r in payload.disks]
    for idx, (x, y, r) in enumerate(disks):
        if x < r - tol or x > 1 - r + tol or y < r - tol or y > 1 - r + tol:
            raise Infeasible("disk outside the unit square", disk=idx)
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            xi, yi, ri = disks[i]
            xj, yj, rj = disks[j]
            gap2 = (xi - xj) ** 2 + (yi - yj) ** 2
            need = ri + rj - tol
            if need > 0 and gap2 < need * need:
                raise Infeasible("overlapping disks", pair=(i, j))
    return _exact_result(sum(d[2] for d in disks), bits)


def _certify_pack_dilate(payload, instance, bits):
    scale_lo, scale_hi = _certified_containment_scale(payload)
    pen_lo, pen_hi = _certified_overlap_penalty(payload)
    # the float evaluator's bisection reports the feasible endpoint, up to its
    # 1e-9 stopping tolerance above the true minimal scale
    tol = Fraction(1, 10 ** 9)
    return ScoreInterval(lo=scale_lo + pen_lo, hi=scale_hi + tol + pen_hi,
                         precision_bits=bits, method="interval")


def _pose_vertices_iv(shape, pose):
    if shape in ("hexagon", "square"):
        cx, cy, theta = (ivnum(v) for v in pose)
        c, s = iv.cos(theta), iv.sin(theta)
        if shape == "hexagon":
            base = []
            for k in range(6):
                ang = iv.pi * k / 3
                base.append((iv.cos(ang), iv.sin(ang)))
        else:
            h = ivnum(Fraction(1, 2))
            base = [(-h, -h), (h, -h), (h, h), (-h, h)]
        return [(cx + c * x - s * y, cy + s * x + c * y) for x, y in base]
    raise UnsupportedInstance("certified containment covers planar shapes")


def _certified_containment_scale(payload):
    if payload.shape == "cube":
        verts = [v for pose in payload.poses for v in gp._pose_vertices("cube", pose)]
        extents = []
        for axis in range(3):
            vals = [ivnum(v[axis]) for v in verts]
            extents.append(_iv_list_max(vals) - _iv_list_min(vals))
        smax = _iv_list_max(extents)
        return iv_bounds(smax)
    verts = [v for pose in payload.poses for v in _pose_vertices_iv(payload.shape, pose)]
    if payload.shape == "square":
        xs = [v[0] for v in verts]
        ys = [v[1] for v in verts]
        smax = _iv_list_max([_iv_list_max(xs) - _iv_list_min(xs),
                             _iv_list_max(ys) - _iv_list_min(ys)])
        return iv_bounds(smax)
    # hexagon: slab widths along the three edge normals plus compatibility terms
    root3 = iv.sqrt(iv.mpf(3))
    normals = []
    for k in (1, 3, 5):
        ang = iv.pi * k / 6
        normals.append((iv.cos(ang), iv.sin(ang)))
    big_m, small_m = [], []
    for nx, ny in normals:
        vals = [nx * x + ny * y for x, y in verts]
        big_m.append(_iv_list_max(vals))
        small_m.append(_iv_list_min(vals))
    candidates = [(big_m[k] - small_m[k]) / root3 for k in range(3)]
    candidates.append(2 * (big_m[0] + big_m[2] - small_m[1]) / (3 * root3))
    candidates.append(2 * (big_m[1] - small_m[0] - small_m[2]) / (3 * root3))
    return iv_bounds(_iv_list_max(candidates))


def _iv_list_max(vals):
    lo = max(iv_bounds(v)[0] for v in vals)
    hi = max(iv_bounds(v)[1] for v in vals)
    return iv.mpf([float_down(lo), float_up(hi)])


def _iv_list_min(vals):
    lo = min(iv_bounds(v)[0] for v in vals)
    hi = min(iv_bounds(v)[1] for v in vals)
    return iv.mpf([float_down(lo), float_up(hi)])


def _certified_overlap_penalty(payload):
    """Pairwise overlap enclosure: exact zero for certified-separated pairs,
    a padded float area for penetrating pairs."""
    n = len(payload.poses)
    lo_total, hi_total = Fraction(0), Fraction(0)
    if payload.shape == "cube":
        for i in range(n):
            for j in range(i + 1, n):
                vol = gp._cube_overlap_volume(payload.poses[i], payload.poses[j])
                if vol > 0:
                    pad = Fraction(1, 10 ** 6)  # slice-quadrature error model
                    v = as_fraction(vol)
                    lo_total += max(Fraction(0), v - v * pad * 10 ** 3 - pad)
                    hi_total += v + v * pad * 10 ** 3 + pad
        return lo_total, hi_total
    polys = [_pose_vertices_iv(payload.shape, p) for p in payload.poses]
    float_polys = [gp._pose_vertices(payload.shape, p) for p in payload.poses]
    for i in range(n):
        for j in range(i + 1, n):
            if _certified_separated(polys[i], polys[j]):
                continue
            area = gp.convex_intersection_area(float_polys[i], float_polys[j])
            pad = Fraction(1, 10 ** 10)
            a = as_fraction(area)
            lo_total += max(Fraction(0), a - a / 10 ** 9 - pad)
            hi_total += a + a / 10 ** 9 + pad
    return lo_total, hi_total


def _certified_separated(poly_a, poly_b) -> bool:
    """Separating-axis test in certified interval arithmetic (touching counts)."""
    for poly, other in ((poly_a, poly_b), (poly_b, poly_a)):
        m = len(poly)
        for i in range(m):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % m]
            nx, ny = y2 - y1, x1 - x2
            own = [nx * x + ny * y for x, y in poly]
            oth = [nx * x + ny * y for x, y in other]
            own_hi = max(iv_bounds(v)[1] for v in own)
            own_lo = min(iv_bounds(v)[0] for v in own)
            oth_lo = min(iv_bounds(v)[0] for v in oth)
            oth_hi = max(iv_bounds(v)[1] for v in oth)
            if oth_lo >= own_hi or oth_hi <= own_lo:
                return True
    return False


# --- log-based exact-count scores ---------------------------------------------------

def _certify_sumdiff(which: int):
    def run(payload, instance, bits):
        elems = payload.elems
        if len(elems) < 2:
            raise Infeasible("need at least two elements")
        sums = {x + y for x in elems for y in elems}
        diffs = {x - y for x in elems for y in elems}
        na, ns, nd = len(elems), len(sums), len(diffs)
        if nd <= na:
            raise Infeasible("degenerate difference set")
        if which == 0:
            val = (_iv_log(ns) - _iv_log(na)) / (_iv_log(nd) - _iv_log(na))
        else:
            val = _iv_log(nd) / _iv_log(ns)
        return _interval_result(val, bits)
    return run


def _certify_gyarmati(payload, instance, bits):
    elems = payload.elems
    if 0 not in elems or any(e < 0 for e in elems) or max(elems) < 1:
        raise Infeasible("need non-negative integers containing zero")
    sums = {x + y for x in elems for y in elems}
    diffs = {x - y for x in elems for y in elems}
    top = max(elems)
    if len(diffs) > 2 * top + 1:
        raise Infeasible("difference set too large")
    val = 1 + (_iv_log(len(diffs)) - _iv_log(len(sums))) / _iv_log(2 * top + 1)
    return _interval_result(val, bits)


def _certify_fs_residue(payload, instance, bits):
    k = int(instance.get("k", 2))
    nt.eval_fs_residue(payload, k)   # feasibility gate (exact integer checks)
    val = 1 - iv.mpf(1) / k + _iv_log(len(payload.elems)) / (k * _iv_log(payload.m))
    return _interval_result(val, bits)


def _certify_entropy(payload, instance, bits):
    slopes = [nt.parse_slope(s) for s in instance.get("slopes", ["0", "1", "inf"])]
    target = nt.parse_slope(instance.get("target", "-1"))
    if target in slopes:
        raise UnsupportedInstance("target slope must not belong to the slope family")

    def h_bits(slope):
        groups: dict[Fraction, Fraction] = {}
        for (x, y), pr in zip(payload.support, payload.probs):
            fp = as_fraction(pr)
            if fp == 0:
                continue
            key = (as_fraction(y) if slope == nt.INFINITY_SLOPE
                   else as_fraction(x) + slope * as_fraction(y))
            groups[key] = groups.get(key, Fraction(0)) + fp
        acc = iv.mpf(0)
        log2 = iv.log(iv.mpf(2))
        for p in groups.values():
            pv = ivnum(p)
            acc -= pv * iv.log(pv) / log2
        return acc

    denom_vals = [h_bits(s) for s in slopes]
    denom = denom_vals[0]
    for v in denom_vals[1:]:
        lo = max(iv_bounds(denom)[0], iv_bounds(v)[0])
        hi = max(iv_bounds(denom)[1], iv_bounds(v)[1])
        denom = iv.mpf([float_down(lo), float_up(hi)])
    if not (denom > 0):
        raise Infeasible("cannot certify a positive denominator entropy")
    return _interval_result(h_bits(target) / denom, bits)


# --- exact rational re-evaluations ----------------------------------------------------

def _exact_block_stacking(payload) -> Fraction:
    positions = [as_fraction(v) for v in payload.positions]
    tol = Fraction(1, 10 ** 9)
    n = len(positions)
    if n == 0:
        return Fraction(0)
    if n == 1:
        if positions[0] - Fraction(1, 2) >= -tol:
            return Fraction(-1)
        return positions[0]
    if sum(p - Fraction(1, 2) for p in positions) / n >= -tol:
        return Fraction(-1)
    upper_sum = positions[-1] - Fraction(1, 2)
    upper_count = 1
    for i in range(n - 2, -1, -1):
        avg = upper_sum / upper_count
        if not (positions[i] - 1 - tol <= avg <= positions[i] + tol):
            return Fraction(-1)
        upper_sum += positions[i] - Fraction(1, 2)
        upper_count += 1
    return positions[-1]


def _exact_ring_loading(payload) -> Fraction:
    n = len(payload.u)
    if n > 18:
        raise UnsupportedInstance("exact enumeration supported for n <= 18")
    u = [as_fraction(v) for v in payload.u]
    v = [as_fraction(w) for w in payload.v]
    best = None
    for mask in range(1 << n):
        z = [(-u[i] if (mask >> i) & 1 else v[i]) for i in range(n)]
        total = sum(z)
        prefix = Fraction(0)
        worst = Fraction(0)
        for val in z:
            prefix += val
            worst = max(worst, abs(2 * prefix - total))
        if best is None or worst < best:
            best = worst
    return best


def _exact_edp(payload, instance) -> Fraction:
    bound = int(instance.get("bound", 1))
    val = cp.eval_edp_prefix(payload, bound)
    # recompute the fractional part exactly from integer counts
    L = int(val)
    if L == len(payload.a):
        return Fraction(L)
    nxt = L + 1
    divisors = [d for d in range(1, nxt + 1) if nxt % d == 0]
    ok = sum(1 for d in divisors
             if abs(sum(payload.a[i - 1] for i in range(d, nxt + 1, d))) <= bound)
    return Fraction(L) + Fraction(ok, len(divisors))


def _certify_kakeya_s(payload, instance, bits):
    union = gp.kakeya_union_area(payload, exact=True)
    if union <= 0:
        raise Infeasible("degenerate zero union")
    inter = gp.kakeya_intersection_total(payload, exact=True)
    num = gp.kakeya_total_shape_area(payload, exact=True)
    denom = iv.sqrt(ivnum(inter)) * iv.sqrt(ivnum(union))
    return _interval_result(ivnum(num) / denom, bits)


_EXACT_DISPATCH = {
    "autocorr_c1": lambda p, inst, b: _exact_result(ap.eval_autocorrelation(p, "c1_max_nonneg", exact=True), b),
    "autocorr_c3": lambda p, inst, b: _exact_result(ap.eval_autocorrelation(p, "c3_max_signed", exact=True), b),
    "autocorr_c6": lambda p, inst, b: _exact_result(ap.eval_autocorrelation(p, "c6_min_corr", exact=True), b),
    "autoconv_ratio": lambda p, inst, b: _exact_result(ap.eval_autoconv_norm_ratio(p, exact=True), b),
    "min_overlap": lambda p, inst, b: _exact_result(ap.eval_min_overlap(p, exact=True), b),
    "hl_maximal": lambda p, inst, b: _exact_result(ap.eval_hl_maximal(p, exact=True), b),
    "kakeya_area": lambda p, inst, b: _exact_result(gp.kakeya_union_area(p, exact=True), b),
    "imo_tiling": lambda p, inst, b: _exact_result(Fraction(int(cp.eval_imo_tiling(p))), b),
    "isosceles_free": lambda p, inst, b: _exact_result(
        Fraction(len(p.cells) - 10 * cp.isosceles_violations(p)), b),
    "turan_blowup": lambda p, inst, b: _exact_result(cp.eval_turan_blowup(p, exact=True), b),
    "block_stacking": lambda p, inst, b: _exact_result(_exact_block_stacking(p), b),
    "golay_merit": lambda p, inst, b: _exact_result(cp.golay_merit_exact(p), b),
    "ff_kakeya": lambda p, inst, b: _exact_result(
        (_require_kakeya(p), Fraction(len(p.points), p.p ** p.d))[1], b),
    "difference_basis": lambda p, inst, b: _exact_result(
        (nt.eval_difference_basis(p), Fraction(len(p.elems) ** 2, p.n))[1], b),
    "ring_loading": lambda p, inst, b: _exact_result(_exact_ring_loading(p), b),
    "edp_prefix": lambda p, inst, b: _exact_result(_exact_edp(p, inst), b),
}

_INTERVAL_DISPATCH = {
    "kissing": _certify_kissing,
    "thomson": _certify_thomson,
    "tammes": _certify_tammes,
    "spherical_design": _certify_design,
    "maxmin_ratio": _certify_maxmin,
    "heilbronn_box": _certify_heilbronn("box"),
    "heilbronn_hull": _certify_heilbronn("hull"),
    "uncertainty": _certify_uncertainty,
    "pack_dilate": _certify_pack_dilate,
    "pack_circles_sum": _certify_pack_circles,
    "kakeya_s": _certify_kakeya_s,
    "sumdiff_42": _certify_sumdiff(0),
    "sumdiff_43": _certify_sumdiff(1),
    "gyarmati": _certify_gyarmati,
    "fs_residue": _certify_fs_residue,
    "entropy_kakeya": _certify_entropy,
}


def _require_kakeya(p):
    if not nt.is_kakeya(p):
        raise Infeasible("set does not contain a line in every direction")
    return True


def certify(problem_id: str, construction, precision_bits: int = 256) -> ScoreInterval:
    """Certified enclosure of the raw score of a construction.

    Exact-rational problems return degenerate intervals; everything else uses
    outward-rounded interval arithmetic at `precision_bits`.
    """
    if not (64 <= precision_bits <= 4096):
        raise UnsupportedInstance("precision_bits must lie in [64, 4096]")
    problem = get_problem(problem_id)
    instance = problem.merged_instance(_instance_from_payload(problem_id, construction))
    old_prec = iv.prec
    iv.prec = precision_bits
    try:
        if problem_id in _EXACT_DISPATCH:
            return _EXACT_DISPATCH[problem_id](construction, instance, precision_bits)
        if problem_id in _INTERVAL_DISPATCH:
            return _INTERVAL_DISPATCH[problem_id](construction, instance, precision_bits)
        raise UnsupportedInstance(f"no certified evaluator for {problem_id!r}")
    finally:
        iv.prec = old_prec


def certify_with_instance(problem_id: str, construction, instance: dict,
                          precision_bits: int = 256) -> ScoreInterval:
    """Variant taking explicit instance parameters (degree t, power k, slopes...)."""
    if not (64 <= precision_bits <= 4096):
        raise UnsupportedInstance("precision_bits must lie in [64, 4096]")
    problem = get_problem(problem_id)
    merged = problem.merged_instance(instance)
    old_prec = iv.prec
    iv.prec = precision_bits
    try:
        if problem_id in _EXACT_DISPATCH:
            return _EXACT_DISPATCH[problem_id](construction, merged, precision_bits)
        if problem_id in _INTERVAL_DISPATCH:
            return _INTERVAL_DISPATCH[problem_id](construction, merged, precision_bits)
        raise UnsupportedInstance(f"no certified evaluator for {problem_id!r}")
    finally:
        iv.prec = old_prec


def _instance_from_payload(problem_id: str, construction) -> dict:
    # fill instance hints that live on the payload itself
    if hasattr(construction, "n") and isinstance(getattr(construction, "n"), int):
        return {"n": construction.n}
    return {}
