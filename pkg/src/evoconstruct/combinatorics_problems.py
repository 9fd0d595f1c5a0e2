"""Discrete evaluators and small exhaustive oracles.

Sign-pattern discrepancy prefixes, ring-loading discrepancy, sumset and
difference-set exponents, isosceles-free grids, row/column tiling scores,
stacked-block displacement with its verbatim tolerance semantics, weighted
hypergraph blowup density, and flatness/merit scores of sign polynomials.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import permutations

import numpy as np

from .payloads import (GridSubset, IntSet, RingInstance, SignSeq, Stack,
                       Tiling, WeightedHypergraph, as_fraction)
from .scoring import Infeasible, UnsupportedInstance

FLOAT_TOLERANCE = 1e-9


# --- sign-pattern discrepancy --------------------------------------------------

def _first_violation(a: np.ndarray, bound: int) -> int | None:
    """Smallest position where some homogeneous progression sum exceeds bound."""
    n = len(a)
    worst = None
    for d in range(1, n + 1):
        sums = np.cumsum(a[d - 1::d])
        bad = np.nonzero(np.abs(sums) > bound)[0]
        if len(bad):
            pos = (bad[0] + 1) * d
            if worst is None or pos < worst:
                worst = pos
    return worst


def eval_edp_prefix(s: SignSeq, bound: int) -> float:
    """Length of the longest in-bound prefix plus fractional credit.

    The integer part L is the longest prefix whose homogeneous progression
    sums all stay within the bound; the fraction is the share of progressions
    ending at position L+1 that still satisfy it (0 when L = len(s)).
    """
    if bound < 0:
        raise UnsupportedInstance("bound must be non-negative")
    a = np.asarray(s.a)
    viol = _first_violation(a, bound)
    if viol is None:
        return float(len(a))
    L = viol - 1
    nxt = L + 1
    divisors = [d for d in range(1, nxt + 1) if nxt % d == 0]
    ok = 0
    for d in divisors:
        total = int(a[d - 1:nxt:d].sum())
        if abs(total) <= bound:
            ok += 1
    return L + ok / len(divisors)


def oracle_edp_longest(bound: int = 1) -> int:
    """Exhaustive longest sign pattern with discrepancy at most `bound`.

    Only bound <= 1 is tractable here; the known answer for bound 1 is 11.
    """
    if bound > 1:
        raise UnsupportedInstance("exhaustive search supported for bound <= 1 only")
    if bound < 0:
        raise UnsupportedInstance("bound must be non-negative")
    best = 0

    def extend(seq: list[int]):
        nonlocal best
        n = len(seq)
        for d in range(1, n + 1):
            if n % d == 0:
                total = sum(seq[i - 1] for i in range(d, n + 1, d))
                if abs(total) > bound:
                    return
        best = max(best, n)
        if n >= 16:
            return
        for v in (1, -1):
            seq.append(v)
            extend(seq)
            seq.pop()

    extend([])
    return best


# --- ring loading ---------------------------------------------------------------

def eval_ring_loading(inst: RingInstance) -> float:
    """min over z_k in {v_k, -u_k} of max_k |sum_{i<=k} z_i - sum_{i>k} z_i|."""
    n = len(inst.u)
    if n > 24:
        raise UnsupportedInstance("exhaustive assignment search supported for n <= 24")
    u = np.asarray([float(v) for v in inst.u])
    v = np.asarray([float(w) for w in inst.v])
    best = math.inf
    chunk_bits = min(n, 16)
    high_bits = n - chunk_bits
    base = np.arange(1 << chunk_bits, dtype=np.int64)
    low_masks = ((base[:, None] >> np.arange(chunk_bits)[None, :]) & 1).astype(bool)
    for high in range(1 << high_bits):
        choice = np.empty((len(base), n))
        for b in range(high_bits):
            col = bool((high >> b) & 1)
            choice[:, chunk_bits + b] = v[chunk_bits + b] if not col else -u[chunk_bits + b]
        choice[:, :chunk_bits] = np.where(low_masks, -u[:chunk_bits], v[:chunk_bits])
        prefixes = np.cumsum(choice, axis=1)
        totals = prefixes[:, -1:]
        vals = np.abs(2.0 * prefixes - totals).max(axis=1)
        m = float(vals.min())
        if m < best:
            best = m
    return best


# --- sumsets and difference sets -------------------------------------------------

def eval_sumdiff(a: IntSet) -> tuple[float, float]:
    """(log(|A+A|/|A|) / log(|A-A|/|A|),  log|A-A| / log|A+A|)."""
    elems = a.elems
    if len(elems) < 2:
        raise Infeasible("need at least two elements")
    sums = {x + y for x in elems for y in elems}
    diffs = {x - y for x in elems for y in elems}
    na, ns, nd = len(elems), len(sums), len(diffs)
    if nd <= na:
        raise Infeasible("degenerate difference set", size=nd)
    ratio_sum_over_diff = math.log(ns / na) / math.log(nd / na)
    ratio_diff_over_sum = math.log(nd) / math.log(ns)
    return ratio_sum_over_diff, ratio_diff_over_sum


def eval_gyarmati(u: IntSet) -> float:
    """1 + log(|U-U|/|U+U|) / log(2 max U + 1) for 0 in U, |U-U| <= 2 max U + 1."""
    elems = u.elems
    if 0 not in elems:
        raise Infeasible("set must contain zero")
    if any(e < 0 for e in elems):
        raise Infeasible("set must consist of non-negative integers")
    top = max(elems)
    if top < 1:
        raise Infeasible("max element must be at least 1")
    sums = {x + y for x in elems for y in elems}
    diffs = {x - y for x in elems for y in elems}
    if len(diffs) > 2 * top + 1:
        raise Infeasible("difference set too large", size=len(diffs), limit=2 * top + 1)
    return 1.0 + math.log(len(diffs) / len(sums)) / math.log(2 * top + 1)


# --- isosceles-free grid subsets --------------------------------------------------

def isosceles_violations(g: GridSubset) -> int:
    """Apex-pair count of equal squared distances (flat triangles included)."""
    cells = g.cells
    total = 0
    for i, b in enumerate(cells):
        counts: dict[int, int] = {}
        for j, a in enumerate(cells):
            if i == j:
                continue
            d = (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2
            counts[d] = counts.get(d, 0) + 1
        total += sum(c * (c - 1) // 2 for c in counts.values())
    return total


def eval_isosceles_free(g: GridSubset) -> float:
    """|cells| - 10 * violation count; valid iff the count is zero."""
    return len(g.cells) - 10.0 * isosceles_violations(g)


# --- row/column tiling -------------------------------------------------------------

def eval_imo_tiling(t: Tiling) -> float:
    """Tile count plus per-row/column deviation from exactly one uncovered square."""
    n = t.n
    cover = np.zeros((n, n), dtype=np.int32)
    for r1, r2, c1, c2 in t.tiles:
        cover[r1 - 1:r2, c1 - 1:c2] += 1
    if (cover > 1).any():
        raise Infeasible("overlapping tiles")
    uncovered_rows = (cover == 0).sum(axis=1)
    uncovered_cols = (cover == 0).sum(axis=0)
    penalty = float(np.abs(1 - uncovered_rows).sum() + np.abs(1 - uncovered_cols).sum())
    return len(t.tiles) + penalty


def imo_formula(n: int) -> int:
    return math.ceil(n + 2 * math.sqrt(n) - 3)


@lru_cache(maxsize=None)
def _min_rectangle_partition(cells: frozenset, bound: int) -> int:
    """Fewest axis-aligned rectangles exactly covering `cells` (branch and bound)."""
    if not cells:
        return 0
    if bound <= 0:
        return 10 ** 9
    first = min(cells)
    r0, c0 = first
    best = 10 ** 9
    max_r = r0
    while (max_r + 1, c0) in cells:
        max_r += 1
    for r2 in range(max_r, r0 - 1, -1):
        c2 = c0
        while all((r, c2 + 1) in cells for r in range(r0, r2 + 1)):
            c2 += 1
        for cc in range(c2, c0 - 1, -1):
            rect = {(r, c) for r in range(r0, r2 + 1) for c in range(c0, cc + 1)}
            rest = _min_rectangle_partition(frozenset(cells - rect), min(bound, best) - 1)
            if 1 + rest < best:
                best = 1 + rest
    return best


def oracle_imo_min_tiles(n: int) -> int:
    """Exhaustive minimum tile count over all uncovered-permutation choices, n <= 4."""
    if n > 4:
        raise UnsupportedInstance("exhaustive tiling search supported for n <= 4 only")
    if n < 1:
        raise UnsupportedInstance("need n >= 1")
    full = {(r, c) for r in range(1, n + 1) for c in range(1, n + 1)}
    best = 10 ** 9
    for perm in permutations(range(1, n + 1)):
        uncovered = {(r, perm[r - 1]) for r in range(1, n + 1)}
        cells = frozenset(full - uncovered)
        best = min(best, _min_rectangle_partition(cells, best))
    return best


# --- stacked blocks -----------------------------------------------------------------

def eval_block_stacking(s: Stack) -> float:
    """Verbatim stability-score semantics: -1 on violation, else top displacement."""
    positions = list(s.positions)
    n = len(positions)
    if n == 0:
        return 0.0
    if n == 1:
        if positions[0] - 0.5 >= 0.0 - FLOAT_TOLERANCE:
            return -1.0
        return positions[0]
    sum_all = 0.0
    sum_all_avg = 0.0
    for k in range(n):
        sum_all += positions[k] - 0.5
        sum_all_avg = sum_all / n
    if sum_all_avg >= 0.0 - FLOAT_TOLERANCE:
        return -1.0
    upper_sum = positions[n - 1] - 0.5
    upper_count = 1.0
    for i in range(n - 2, -1, -1):
        upper_sum_avg = upper_sum / upper_count
        lb = positions[i] - 1.0
        ub = positions[i]
        if not (lb - FLOAT_TOLERANCE <= upper_sum_avg <= ub + FLOAT_TOLERANCE):
            return -1.0
        upper_sum += positions[i] - 0.5
        upper_count += 1.0
    return positions[-1]


def baseline_harmonic_stack(n: int) -> Stack:
    """positions[k] = (H_n - H_{n-k-1})/2 - 2*tolerance, safely inside every constraint."""
    if n < 1:
        raise UnsupportedInstance("need n >= 1")
    harmonic = [0.0] * (n + 1)
    for j in range(1, n + 1):
        harmonic[j] = harmonic[j - 1] + 1.0 / j
    return Stack(positions=tuple(0.5 * (harmonic[n] - harmonic[n - k - 1]) - 2 * FLOAT_TOLERANCE
                                 for k in range(n)))


# --- weighted hypergraph blowup density ----------------------------------------------

def _covered(triple: tuple[int, int, int], edges: frozenset) -> bool:
    """A triple is covered by a matching edge or by a loop on two of its vertices."""
    if triple in edges:
        return True
    support = set(triple)
    for e in edges:
        if e[0] == e[1] or e[1] == e[2]:
            loop_pair = {e[0], e[2]} if e[0] == e[1] else {e[0], e[1]}
            if loop_pair <= support:
                return True
    return False


def _has_forbidden_clique(nv: int, edges: frozenset) -> bool:
    """Reject any 4-multiset of vertex classes whose blowup forms a complete 4-set.

    Distinct 4-subsets use the covering rule (loops cover every triple on
    their pair); repeated-class patterns need their loop triples verbatim,
    since the blowup only realizes an edge whose class multiset is present.
    """
    edge_set = set(edges)
    verts = range(nv)
    # pattern (a, a, b, b)
    for a in verts:
        for b in verts:
            if a != b and (min(a, b), min(a, b), max(a, b)) in edge_set:
                lo, hi = min(a, b), max(a, b)
                if (lo, lo, hi) in edge_set and (lo, hi, hi) in edge_set:
                    return True
    # pattern (a, a, b, c), b != c
    for a in verts:
        partners = [e for e in edge_set
                    if (e[0] == e[1] == a and e[2] != a) or (e[1] == e[2] == a and e[0] != a)]
        others = sorted({e[0] if e[0] != a else e[2] for e in partners})
        for i, b in enumerate(others):
            for c in others[i + 1:]:
                if tuple(sorted((a, b, c))) in edge_set:
                    return True
    # distinct 4-subsets with the covering relaxation
    from itertools import combinations
    for quad in combinations(verts, 4):
        triples = list(combinations(quad, 3))
        if all(_covered(t, edges) for t in triples):
            return True
    return False


def eval_turan_blowup(h: WeightedHypergraph, exact: bool = False):
    """Blowup edge density sum(6 w_a w_b w_c) + sum(3 w_a^2 w_b), clique-free only."""
    if _has_forbidden_clique(len(h.weights), frozenset(h.edges)):
        raise Infeasible("blowup contains a complete 4-vertex pattern")
    w = [as_fraction(v) for v in h.weights] if exact else [float(v) for v in h.weights]
    total = w[0] * 0
    for a, b, c in h.edges:
        if a == b:
            total += 3 * w[a] * w[a] * w[c]
        elif b == c:
            total += 3 * w[b] * w[b] * w[a]
        else:
            total += 6 * w[a] * w[b] * w[c]
    return total


# --- sign polynomials -----------------------------------------------------------------

GOLAY_MESH = 1 << 13


def golay_autocorrelations(s: SignSeq) -> list[int]:
    """Aperiodic autocorrelations c_k = sum_j a_j a_{j+k}, k = 1..n."""
    a = s.a
    n = len(a) - 1
    return [sum(a[j] * a[j + k] for j in range(n + 1 - k)) for k in range(1, n + 1)]


def eval_golay(s: SignSeq, target: str) -> float:
    """Flatness extremes over the unit-circle mesh, or the exact merit factor."""
    a = np.asarray(s.a, dtype=float)
    n = len(s.a) - 1
    if n < 1:
        raise Infeasible("need a polynomial of degree at least 1")
    if target == "merit":
        acf = golay_autocorrelations(s)
        denom = 2 * sum(c * c for c in acf)
        if denom == 0:
            raise Infeasible("zero sidelobe energy (degenerate)")
        return (n + 1) ** 2 / denom
    vals = np.abs(np.fft.fft(a, GOLAY_MESH)) / math.sqrt(n + 1)
    if target == "flat_min":
        return float(vals.min())
    if target == "flat_max":
        return float(vals.max())
    raise ValueError(f"unknown golay target {target!r}")


def golay_merit_exact(s: SignSeq) -> Fraction:
    acf = golay_autocorrelations(s)
    denom = 2 * sum(c * c for c in acf)
    if denom == 0:
        raise Infeasible("zero sidelobe energy (degenerate)")
    n = len(s.a) - 1
    return Fraction((n + 1) ** 2, denom)
