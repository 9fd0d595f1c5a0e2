"""Evaluators over residue systems and prime fields.

Difference bases with the projective-plane perfect-difference-set generator,
line-covering set verification over prime fields with the explicit
three-dimensional quadratic-residue construction, power-free residue sets,
and the entropy ratio of planar projections.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np

from .payloads import DiffBasis, FFSet, JointPMF, ResidueSet, as_fraction, _is_prime
from .scoring import Infeasible, UnsupportedInstance


# --- difference bases ---------------------------------------------------------

def eval_difference_basis(b: DiffBasis) -> float:
    """|B|^2 / n, feasible only when differences of B cover 1..n."""
    elems = b.elems
    diffs = {x - y for x in elems for y in elems if x > y}
    for v in range(1, b.n + 1):
        if v not in diffs:
            raise Infeasible("difference coverage gap", first_uncovered=v)
    return len(elems) ** 2 / b.n


def oracle_difference_basis(n: int) -> tuple[int, tuple[int, ...]]:
    """Smallest difference basis for 1..n, searched over subsets of [0, n].

    The pair realizing the difference n is translated to {0, n}; remaining
    elements are searched inside the interval, which realizes the known
    minimum sizes at this scale.
    """
    if n > 20:
        raise UnsupportedInstance("exhaustive basis search supported for n <= 20")
    if n == 1:
        return 2, (0, 1)
    target = set(range(1, n + 1))

    def covers(elems: tuple[int, ...]) -> bool:
        got = set()
        for x, y in combinations(elems, 2):
            got.add(y - x)
        return target <= got

    interior = list(range(1, n))
    for m in range(2, n + 2):
        for extra in combinations(interior, m - 2):
            cand = (0,) + extra + (n,)
            if covers(cand):
                return m, cand
    raise AssertionError("unreachable: the full interval is always a basis")


# --- perfect difference sets ----------------------------------------------------

def _find_irreducible_cubic(p: int) -> tuple[int, int, int]:
    """Coefficients (a, b, c) with x^3 + a x^2 + b x + c irreducible over F_p."""
    for a in range(p):
        for bb in range(p):
            for c in range(1, p):
                if all((x * x * x + a * x * x + bb * x + c) % p != 0 for x in range(p)):
                    return a, bb, c
    raise AssertionError("no irreducible cubic found; p is not prime")


def _cubic_mul(u, v, mod_coeffs, p):
    """Multiply two cubic-field elements (degree <= 2 polynomial triples)."""
    a, b, c = mod_coeffs
    # schoolbook product, degree up to 4
    prod = [0] * 5
    for i, ui in enumerate(u):
        if ui:
            for j, vj in enumerate(v):
                prod[i + j] = (prod[i + j] + ui * vj) % p
    # reduce x^4 and x^3 using x^3 = -(a x^2 + b x + c)
    for deg in (4, 3):
        coef = prod[deg]
        if coef:
            prod[deg] = 0
            prod[deg - 1] = (prod[deg - 1] - coef * a) % p
            prod[deg - 2] = (prod[deg - 2] - coef * b) % p
            prod[deg - 3] = (prod[deg - 3] - coef * c) % p
    return (prod[0], prod[1], prod[2])


def _prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def singer_difference_set(p: int) -> ResidueSet:
    """Perfect difference set of size p+1 modulo p^2 + p + 1.

    Indexes the projective plane over the cubic extension of F_p by discrete
    logarithms of a multiplicative generator; the residues of exponents whose
    field element lies in a fixed 2-dimensional subspace form the set.
    """
    if not _is_prime(p):
        raise UnsupportedInstance(f"{p} is not prime")
    if p > 101:
        raise UnsupportedInstance("generator search supported for p <= 101")
    mod_coeffs = _find_irreducible_cubic(p)
    order = p ** 3 - 1
    m = p * p + p + 1
    factors = _prime_factors(order)

    def element_order_ok(g):
        for q in factors:
            e = order // q
            acc = (1, 0, 0)
            base = g
            ee = e
            while ee:
                if ee & 1:
                    acc = _cubic_mul(acc, base, mod_coeffs, p)
                base = _cubic_mul(base, base, mod_coeffs, p)
                ee >>= 1
            if acc == (1, 0, 0):
                return False
        return True

    gen = None
    for c0 in range(p):
        for c1 in range(p):
            for c2 in range(p):
                cand = (c0, c1, c2)
                if cand in ((0, 0, 0), (1, 0, 0)):
                    continue
                if element_order_ok(cand):
                    gen = cand
                    break
            if gen:
                break
        if gen:
            break
    assert gen is not None
    elems = []
    acc = (1, 0, 0)
    for i in range(order):
        if acc[2] == 0:  # member of the subspace spanned by 1 and x
            elems.append(i % m)
        acc = _cubic_mul(acc, gen, mod_coeffs, p)
    elems = sorted(set(elems))
    assert len(elems) == p + 1
    return ResidueSet(m=m, elems=tuple(elems))


def is_perfect_difference_set(rs: ResidueSet) -> bool:
    """Every nonzero residue arises exactly once as a difference."""
    seen: dict[int, int] = {}
    for a in rs.elems:
        for b in rs.elems:
            if a != b:
                d = (a - b) % rs.m
                seen[d] = seen.get(d, 0) + 1
    return len(seen) == rs.m - 1 and all(v == 1 for v in seen.values())


# --- line-covering sets over prime fields ----------------------------------------

def _check_scale(ff: FFSet):
    if ff.p ** ff.d > 10 ** 6:
        raise UnsupportedInstance("field size p^d must not exceed 10^6")


def _encode(points, p: int, d: int) -> np.ndarray:
    mask = np.zeros(p ** d, dtype=bool)
    for pt in points:
        idx = 0
        for c in pt:
            idx = idx * p + c
        mask[idx] = True
    return mask


def _directions(p: int, d: int):
    """One representative per projective direction: first nonzero coordinate 1."""
    dirs = []
    for lead in range(d):
        tail = d - lead - 1
        for rest in range(p ** tail):
            vec = [0] * lead + [1]
            r = rest
            for _ in range(tail):
                vec.append(r % p)
                r //= p
            dirs.append(tuple(vec))
    return dirs


def _transversal(p: int, d: int, lead: int) -> np.ndarray:
    """All points with coordinate `lead` equal to zero (one per line)."""
    coords = []
    for axis in range(d):
        if axis == lead:
            coords.append(np.zeros(1, dtype=np.int64))
        else:
            coords.append(np.arange(p, dtype=np.int64))
    grid = np.meshgrid(*coords, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def is_kakeya(ff: FFSet) -> bool:
    """Does the set contain a full line in every projective direction?"""
    _check_scale(ff)
    p, d = ff.p, ff.d
    mask = _encode(ff.points, p, d)
    weights = np.array([p ** (d - 1 - i) for i in range(d)], dtype=np.int64)
    for vec in _directions(p, d):
        lead = next(i for i, c in enumerate(vec) if c)
        bases = _transversal(p, d, lead)
        ok = np.ones(len(bases), dtype=bool)
        v = np.array(vec, dtype=np.int64)
        for t in range(p):
            pts = (bases + t * v) % p
            ok &= mask[pts @ weights]
            if not ok.any():
                return False
        if not ok.any():
            return False
    return True


def is_nikodym(ff: FFSet) -> bool:
    """Is every point on some line whose other points all lie in the set?"""
    _check_scale(ff)
    p, d = ff.p, ff.d
    mask = _encode(ff.points, p, d)
    weights = np.array([p ** (d - 1 - i) for i in range(d)], dtype=np.int64)
    covered = np.zeros(p ** d, dtype=bool)
    all_pts_axes = [np.arange(p, dtype=np.int64)] * d
    grid = np.meshgrid(*all_pts_axes, indexing="ij")
    all_pts = np.stack([g.ravel() for g in grid], axis=1)
    for vec in _directions(p, d):
        v = np.array(vec, dtype=np.int64)
        line_ids = None
        miss_count = np.zeros(p ** d, dtype=np.int64)  # per line id, later reduced
        # walk each line once via its transversal
        lead = next(i for i, c in enumerate(vec) if c)
        bases = _transversal(p, d, lead)
        pts_per_line = []
        inside = np.zeros(len(bases), dtype=np.int64)
        member_idx = []
        for t in range(p):
            pts = (bases + t * v) % p
            idx = pts @ weights
            member_idx.append(idx)
            inside += mask[idx]
        misses = p - inside
        for t in range(p):
            idx = member_idx[t]
            on_full = misses == 0
            covered[idx[on_full]] = True
            one_missing = misses == 1
            if one_missing.any():
                sel = idx[one_missing]
                covered[sel[~mask[sel]]] = True
        if covered.all():
            return True
    return bool(covered.all())


def baseline_ff_kakeya_d3(p: int) -> FFSet:
    """Quadratic-residue line-covering set in dimension 3 for primes p = 1 mod 4.

    Emits {(x, (q1+q2)/2 - x^2 - g, (q1-q2)/2)} over residues q1, q2 plus the
    two boundary families; the size works out to p^3/4 + 7 p^2/8 - 1/8.
    """
    if not _is_prime(p) or p % 4 != 1:
        raise UnsupportedInstance("construction needs a prime p = 1 mod 4")
    squares = {(x * x) % p for x in range(p)}  # includes 0
    inv2 = pow(2, p - 2, p)
    g = (p - 1) // 4
    pts = set()
    for x in range(p):
        x2g = (x * x + g) % p
        for q1 in squares:
            for q2 in squares:
                y = ((q1 + q2) * inv2 - x2g) % p
                z = ((q1 - q2) * inv2) % p
                pts.add((x, y, z))
    for y in range(p):
        for z in range(p):
            if (y + z * z) % p in squares:
                pts.add((0, y, z))
        pts.add((0, y, 0))
    return FFSet(p=p, d=3, points=frozenset(pts))


def ff_kakeya_d3_size_formula(p: int) -> int:
    return (2 * p ** 3 + 7 * p ** 2 - 1) // 8


def eval_ff_kakeya_size(ff: FFSet) -> float:
    """Normalized size |K| / p^d of a verified line-covering set."""
    if not is_kakeya(ff):
        raise Infeasible("set does not contain a line in every direction")
    return len(ff.points) / ff.p ** ff.d


# --- power-free residue sets ------------------------------------------------------

def _square_free(m: int) -> bool:
    f = 2
    while f * f <= m:
        if m % (f * f) == 0:
            return False
        f += 1
    return True


def eval_fs_residue(a: ResidueSet, k: int) -> float:
    """Exponent bound 1 - 1/k + log|A| / (k log m) for k-th-power-free difference sets."""
    if k < 2:
        raise UnsupportedInstance("need power exponent k >= 2")
    m = a.m
    if not _square_free(m):
        raise UnsupportedInstance(f"modulus {m} is not square-free")
    powers = {pow(x, k, m) for x in range(m)} - {0}
    for x in a.elems:
        for y in a.elems:
            if x != y and (x - y) % m in powers:
                raise Infeasible("difference is a nonzero k-th power", pair=(y, x))
    return 1.0 - 1.0 / k + math.log(len(a.elems)) / (k * math.log(m))


# --- entropy ratio of planar projections -------------------------------------------

INFINITY_SLOPE = "inf"


def parse_slope(s) -> Fraction | str:
    if s in (INFINITY_SLOPE, "oo", None):
        return INFINITY_SLOPE
    if isinstance(s, str):
        return Fraction(s)
    return as_fraction(s)


def projection_entropy_bits(pmf: JointPMF, slope) -> float:
    """Shannon entropy (bits) of x + slope*y (or y at the infinite slope)."""
    groups: dict[Fraction, Fraction] = {}
    for (x, y), pr in zip(pmf.support, pmf.probs):
        fx, fy, fp = as_fraction(x), as_fraction(y), as_fraction(pr)
        if fp == 0:
            continue
        key = fy if slope == INFINITY_SLOPE else fx + slope * fy
        groups[key] = groups.get(key, Fraction(0)) + fp
    return -sum(float(p) * math.log2(float(p)) for p in groups.values() if p > 0)


def eval_entropy_kakeya(pmf: JointPMF, slopes, target) -> float:
    """H(target projection) / max over the slope family of H(projection)."""
    fam = [parse_slope(s) for s in slopes]
    tgt = parse_slope(target)
    if tgt in fam:
        raise UnsupportedInstance("target slope must not belong to the slope family")
    denom = max(projection_entropy_bits(pmf, s) for s in fam)
    if denom <= 0:
        raise Infeasible("degenerate distribution: every family projection is deterministic")
    return projection_entropy_bits(pmf, tgt) / denom
