"""Construction payloads and their JSON wire format.

Every candidate scored by an evaluator is one of the payload classes below.
Numeric fields accept plain JSON numbers or exact rationals written as
``[num, den]`` pairs; rationals survive a serialize/parse round trip
unchanged, which is what the exact-arithmetic certification path relies on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

Number = int | float | Fraction


def decode_number(value: Any) -> Number:
    """Parse a JSON scalar or a [num, den] rational pair."""
    if isinstance(value, bool):
        raise PayloadError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value):
        if value[1] == 0:
            raise PayloadError("rational with zero denominator")
        return Fraction(value[0], value[1])
    raise PayloadError(f"expected a number or [num, den] pair, got {value!r}")


def encode_number(value: Number) -> Any:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return int(value)
        return [value.numerator, value.denominator]
    return value


def as_fraction(value: Number) -> Fraction:
    """Exact rational view of a stored number (floats are exact binary rationals)."""
    return value if isinstance(value, Fraction) else Fraction(value)


class PayloadError(ValueError):
    """Malformed or out-of-contract construction payload."""


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function on an equal-width partition of (a, b)."""

    n: int
    heights: tuple[Number, ...]
    domain: tuple[Number, Number]
    nonneg: bool = True
    kind = "step"

    def __post_init__(self):
        if self.n != len(self.heights):
            raise PayloadError("step: n must equal len(heights)")
        a, b = self.domain
        if not b > a:                     # int/float/Fraction compare exactly
            raise PayloadError("step: domain must satisfy b > a")
        if self.nonneg and any(h < 0 for h in self.heights):
            raise PayloadError("step: nonneg function with a negative height")

    @property
    def width(self) -> Fraction:
        a, b = self.domain
        return (as_fraction(b) - as_fraction(a)) / self.n


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear function; extrema occur at nodes by construction."""

    node_x: tuple[Number, ...]
    node_y: tuple[Number, ...]

    def __post_init__(self):
        if len(self.node_x) != len(self.node_y) or len(self.node_x) < 2:
            raise PayloadError("piecewise linear needs matching node lists of length >= 2")


@dataclass(frozen=True)
class HLInstance:
    """Interval-union candidate: strictly increasing centers y and radii k > 0."""

    y: tuple[Number, ...]
    k: tuple[Number, ...]
    kind = "hl"

    def __post_init__(self):
        if len(self.y) != len(self.k) or not self.y:
            raise PayloadError("hl: y and k must be nonempty and equal length")
        if any(b <= a for a, b in zip(self.y, self.y[1:])):
            raise PayloadError("hl: y must be strictly increasing")
        if any(v <= 0 for v in self.k):
            raise PayloadError("hl: k must be positive")


@dataclass(frozen=True)
class EigenCombo:
    """Coefficients of a self-dual Gaussian-weighted polynomial test function."""

    coeffs: tuple[Number, ...]
    scan_limit: Number = 20.0
    scan_points: int = 200_000
    kind = "eigen"

    def __post_init__(self):
        if not self.coeffs or all(float(c) == 0.0 for c in self.coeffs):
            raise PayloadError("eigen: coefficients must not all be zero")
        if float(self.scan_limit) <= 0 or self.scan_points < 2:
            raise PayloadError("eigen: bad scan parameters")


@dataclass(frozen=True)
class SpherePoints:
    """Vectors in R^d, normalized onto the sphere on ingestion by evaluators.

    Coordinates may be exact rationals; the certification path reads them
    exactly, the search path works on the float view.
    """

    d: int
    points: tuple[tuple[Number, ...], ...]
    kind = "sphere_points"

    def __post_init__(self):
        # d = 1 is admitted for the touching-spheres penalty (centers +-2 on a line)
        if self.d < 1:
            raise PayloadError("sphere_points: ambient dimension must be >= 1")
        if not self.points:
            raise PayloadError("sphere_points: need at least one point")
        if any(len(p) != self.d for p in self.points):
            raise PayloadError("sphere_points: point dimension mismatch")

    @property
    def n(self) -> int:
        return len(self.points)

    def float_points(self) -> tuple[tuple[float, ...], ...]:
        return tuple(tuple(float(c) for c in p) for p in self.points)


@dataclass(frozen=True)
class KakeyaOffsets:
    """Horizontal offsets of n unit-slope needle shapes."""

    n: int
    x: tuple[Number, ...]
    shape: str = "triangle"
    kind = "kakeya_offsets"

    def __post_init__(self):
        if self.n != len(self.x) or self.n < 1:
            raise PayloadError("kakeya_offsets: need n >= 1 offsets")
        if self.shape not in ("triangle", "parallelogram"):
            raise PayloadError(f"kakeya_offsets: unknown shape {self.shape!r}")
        if any(not _finite(v) for v in self.x):
            raise PayloadError("kakeya_offsets: offsets must be finite")


@dataclass(frozen=True)
class PoseSet:
    """Rigid poses (center, angle(s)) of identical convex shapes."""

    shape: str
    poses: tuple[tuple[float, ...], ...]
    kind = "poses"

    def __post_init__(self):
        if self.shape not in ("hexagon", "square", "cube"):
            raise PayloadError(f"poses: unknown shape {self.shape!r}")
        if not self.poses:
            raise PayloadError("poses: need at least one pose")
        want = 3 if self.shape in ("hexagon", "square") else 6
        if any(len(p) != want for p in self.poses):
            raise PayloadError(f"poses: each {self.shape} pose needs {want} numbers")


@dataclass(frozen=True)
class DiskSet:
    """Open disks (x, y, r) with r > 0."""

    disks: tuple[tuple[float, float, float], ...]
    kind = "disks"

    def __post_init__(self):
        if not self.disks:
            raise PayloadError("disks: need at least one disk")
        if any(d[2] <= 0 for d in self.disks):
            raise PayloadError("disks: radii must be positive")


@dataclass(frozen=True)
class PlanePoints:
    """Point set in R^d with an optional containing frame."""

    points: tuple[tuple[float, ...], ...]
    frame: str = "free"
    kind = "plane_points"

    def __post_init__(self):
        if not self.points:
            raise PayloadError("plane_points: need at least one point")
        if self.frame not in ("unit_square", "unit_area_equilateral_triangle", "free"):
            raise PayloadError(f"plane_points: unknown frame {self.frame!r}")
        dims = {len(p) for p in self.points}
        if len(dims) != 1:
            raise PayloadError("plane_points: mixed point dimensions")


@dataclass(frozen=True)
class SignSeq:
    a: tuple[int, ...]
    kind = "signs"

    def __post_init__(self):
        if not self.a or any(v not in (-1, 1) for v in self.a):
            raise PayloadError("signs: entries must be +-1")


@dataclass(frozen=True)
class RingInstance:
    """Demand pairs u_i, v_i >= 0 with u_i + v_i <= 1."""

    u: tuple[Number, ...]
    v: tuple[Number, ...]
    kind = "ring"

    def __post_init__(self):
        if len(self.u) != len(self.v) or not self.u:
            raise PayloadError("ring: u and v must be nonempty and equal length")
        for a, b in zip(self.u, self.v):
            if a < 0 or b < 0 or a + b > 1:
                raise PayloadError("ring: need u, v >= 0 and u + v <= 1")


@dataclass(frozen=True)
class IntSet:
    elems: tuple[int, ...]
    kind = "intset"

    def __post_init__(self):
        if list(self.elems) != sorted(set(self.elems)):
            raise PayloadError("intset: elements must be sorted and distinct")
        if not self.elems:
            raise PayloadError("intset: must be nonempty")


@dataclass(frozen=True)
class GridSubset:
    n: int
    cells: tuple[tuple[int, int], ...]
    kind = "grid_cells"

    def __post_init__(self):
        if len(set(self.cells)) != len(self.cells):
            raise PayloadError("grid_cells: duplicate cells")
        for i, j in self.cells:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise PayloadError("grid_cells: cell out of bounds")


@dataclass(frozen=True)
class Tiling:
    """Axis-aligned integer rectangles [r1..r2] x [c1..c2] on an n x n grid."""

    n: int
    tiles: tuple[tuple[int, int, int, int], ...]
    kind = "tiling"

    def __post_init__(self):
        for r1, r2, c1, c2 in self.tiles:
            if not (1 <= r1 <= r2 <= self.n and 1 <= c1 <= c2 <= self.n):
                raise PayloadError("tiling: tile out of bounds or inverted")


@dataclass(frozen=True)
class Stack:
    positions: tuple[float, ...]
    kind = "stack"

    def __post_init__(self):
        if any(not _finite(v) for v in self.positions):
            raise PayloadError("stack: positions must be finite")


@dataclass(frozen=True)
class WeightedHypergraph:
    """Vertex weights summing to 1 plus 3-multiset edges with at most one repeat."""

    weights: tuple[Number, ...]
    edges: tuple[tuple[int, int, int], ...]
    kind = "whyper"

    def __post_init__(self):
        if not self.weights or any(w < 0 for w in self.weights):
            raise PayloadError("whyper: weights must be non-negative")
        if abs(float(sum(as_fraction(w) for w in self.weights)) - 1.0) > 1e-12:
            raise PayloadError("whyper: weights must sum to 1")
        nv = len(self.weights)
        for e in self.edges:
            se = tuple(sorted(e))
            if se != e:
                raise PayloadError("whyper: edges must be sorted multisets")
            if se[0] == se[1] == se[2]:
                raise PayloadError("whyper: triple-repeat edges are not allowed")
            if any(v < 0 or v >= nv for v in se):
                raise PayloadError("whyper: edge vertex out of range")
        if len(set(self.edges)) != len(self.edges):
            raise PayloadError("whyper: duplicate edges")


@dataclass(frozen=True)
class ResidueSet:
    m: int
    elems: tuple[int, ...]
    kind = "residue_set"

    def __post_init__(self):
        if self.m < 2:
            raise PayloadError("residue_set: modulus must be >= 2")
        if list(self.elems) != sorted(set(self.elems)):
            raise PayloadError("residue_set: elements must be sorted and distinct")
        if any(not (0 <= e < self.m) for e in self.elems):
            raise PayloadError("residue_set: element out of range")


@dataclass(frozen=True)
class FFSet:
    """Point set in the d-dimensional vector space over a prime field."""

    p: int
    d: int
    points: frozenset[tuple[int, ...]]
    kind = "ff_set"

    def __post_init__(self):
        if self.d < 1:
            raise PayloadError("ff_set: dimension must be >= 1")
        if not _is_prime(self.p):
            raise PayloadError(f"ff_set: {self.p} is not prime")
        for pt in self.points:
            if len(pt) != self.d or any(not (0 <= c < self.p) for c in pt):
                raise PayloadError("ff_set: point out of range")


@dataclass(frozen=True)
class JointPMF:
    """Finite joint distribution of a planar random pair, exact rational support."""

    support: tuple[tuple[Number, Number], ...]
    probs: tuple[Number, ...]
    kind = "joint_pmf"

    def __post_init__(self):
        if len(self.support) != len(self.probs) or not self.support:
            raise PayloadError("joint_pmf: support/probs mismatch")
        if len({(as_fraction(x), as_fraction(y)) for x, y in self.support}) != len(self.support):
            raise PayloadError("joint_pmf: support points must be distinct")
        if any(p < 0 for p in self.probs):
            raise PayloadError("joint_pmf: negative probability")
        if abs(float(sum(as_fraction(p) for p in self.probs)) - 1.0) > 1e-12:
            raise PayloadError("joint_pmf: probabilities must sum to 1")


@dataclass(frozen=True)
class DiffBasis:
    elems: tuple[int, ...]
    n: int
    kind = "diff_basis"

    def __post_init__(self):
        if list(self.elems) != sorted(set(self.elems)):
            raise PayloadError("diff_basis: elements must be sorted and distinct")
        if self.n < 1:
            raise PayloadError("diff_basis: target endpoint must be >= 1")


PAYLOAD_CLASSES = {
    cls.kind: cls
    for cls in (
        StepFunction, HLInstance, EigenCombo, SpherePoints, KakeyaOffsets,
        PoseSet, DiskSet, PlanePoints, SignSeq, RingInstance, IntSet,
        GridSubset, Tiling, Stack, WeightedHypergraph, ResidueSet, FFSet,
        JointPMF, DiffBasis,
    )
}

Construction = (
    StepFunction | HLInstance | EigenCombo | SpherePoints | KakeyaOffsets
    | PoseSet | DiskSet | PlanePoints | SignSeq | RingInstance | IntSet
    | GridSubset | Tiling | Stack | WeightedHypergraph | ResidueSet | FFSet
    | JointPMF | DiffBasis
)


def _finite(v: Number) -> bool:
    try:
        return abs(float(v)) < float("inf") and float(v) == float(v)
    except (OverflowError, ValueError):
        return False


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def _nums(values) -> tuple:
    return tuple(decode_number(v) for v in values)


def payload_to_json(payload: Construction) -> dict:
    """Serialize a payload to its tagged JSON object."""
    k = payload.kind
    if k == "step":
        a, b = payload.domain
        return {"kind": k, "n": payload.n, "heights": [encode_number(h) for h in payload.heights],
                "domain": [encode_number(a), encode_number(b)], "nonneg": payload.nonneg}
    if k == "hl":
        return {"kind": k, "y": [encode_number(v) for v in payload.y],
                "k": [encode_number(v) for v in payload.k]}
    if k == "eigen":
        return {"kind": k, "coeffs": [encode_number(c) for c in payload.coeffs],
                "scan_limit": encode_number(payload.scan_limit), "scan_points": payload.scan_points}
    if k == "sphere_points":
        return {"kind": k, "d": payload.d,
                "points": [[encode_number(c) for c in p] for p in payload.points]}
    if k == "kakeya_offsets":
        return {"kind": k, "n": payload.n, "x": [encode_number(v) for v in payload.x],
                "shape": payload.shape}
    if k == "poses":
        return {"kind": k, "shape": payload.shape, "poses": [list(p) for p in payload.poses]}
    if k == "disks":
        return {"kind": k, "disks": [list(d) for d in payload.disks]}
    if k == "plane_points":
        return {"kind": k, "points": [list(p) for p in payload.points], "frame": payload.frame}
    if k == "signs":
        return {"kind": k, "a": list(payload.a)}
    if k == "ring":
        return {"kind": k, "u": [encode_number(v) for v in payload.u],
                "v": [encode_number(v) for v in payload.v]}
    if k == "intset":
        return {"kind": k, "elems": list(payload.elems)}
    if k == "grid_cells":
        return {"kind": k, "n": payload.n, "cells": [list(c) for c in payload.cells]}
    if k == "tiling":
        return {"kind": k, "n": payload.n, "tiles": [list(t) for t in payload.tiles]}
    if k == "stack":
        return {"kind": k, "positions": list(payload.positions)}
    if k == "whyper":
        return {"kind": k, "weights": [encode_number(w) for w in payload.weights],
                "edges": [list(e) for e in payload.edges]}
    if k == "residue_set":
        return {"kind": k, "m": payload.m, "elems": list(payload.elems)}
    if k == "ff_set":
        return {"kind": k, "p": payload.p, "d": payload.d,
                "points": sorted(list(pt) for pt in payload.points)}
    if k == "joint_pmf":
        return {"kind": k,
                "support": [[encode_number(x), encode_number(y)] for x, y in payload.support],
                "probs": [encode_number(p) for p in payload.probs]}
    if k == "diff_basis":
        return {"kind": k, "elems": list(payload.elems), "n": payload.n}
    raise PayloadError(f"unknown payload kind {k!r}")


def payload_from_json(obj: dict) -> Construction:
    """Parse a tagged JSON object back into a payload."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise PayloadError("construction JSON must be an object with a 'kind' tag")
    k = obj["kind"]
    try:
        if k == "step":
            a, b = obj["domain"]
            return StepFunction(n=int(obj["n"]), heights=_nums(obj["heights"]),
                                domain=(decode_number(a), decode_number(b)),
                                nonneg=bool(obj.get("nonneg", True)))
        if k == "hl":
            return HLInstance(y=_nums(obj["y"]), k=_nums(obj["k"]))
        if k == "eigen":
            return EigenCombo(coeffs=_nums(obj["coeffs"]),
                              scan_limit=decode_number(obj.get("scan_limit", 20.0)),
                              scan_points=int(obj.get("scan_points", 200_000)))
        if k == "sphere_points":
            return SpherePoints(d=int(obj["d"]),
                                points=tuple(tuple(decode_number(c) for c in p)
                                             for p in obj["points"]))
        if k == "kakeya_offsets":
            return KakeyaOffsets(n=int(obj["n"]), x=_nums(obj["x"]),
                                 shape=obj.get("shape", "triangle"))
        if k == "poses":
            return PoseSet(shape=obj["shape"],
                           poses=tuple(tuple(float(c) for c in p) for p in obj["poses"]))
        if k == "disks":
            return DiskSet(disks=tuple((float(x), float(y), float(r)) for x, y, r in obj["disks"]))
        if k == "plane_points":
            return PlanePoints(points=tuple(tuple(float(c) for c in p) for p in obj["points"]),
                               frame=obj.get("frame", "free"))
        if k == "signs":
            return SignSeq(a=tuple(int(v) for v in obj["a"]))
        if k == "ring":
            return RingInstance(u=_nums(obj["u"]), v=_nums(obj["v"]))
        if k == "intset":
            return IntSet(elems=tuple(int(v) for v in obj["elems"]))
        if k == "grid_cells":
            return GridSubset(n=int(obj["n"]),
                              cells=tuple((int(i), int(j)) for i, j in obj["cells"]))
        if k == "tiling":
            return Tiling(n=int(obj["n"]),
                          tiles=tuple(tuple(int(v) for v in t) for t in obj["tiles"]))
        if k == "stack":
            return Stack(positions=tuple(float(v) for v in obj["positions"]))
        if k == "whyper":
            return WeightedHypergraph(weights=_nums(obj["weights"]),
                                      edges=tuple(tuple(int(v) for v in e) for e in obj["edges"]))
        if k == "residue_set":
            return ResidueSet(m=int(obj["m"]), elems=tuple(int(v) for v in obj["elems"]))
        if k == "ff_set":
            return FFSet(p=int(obj["p"]), d=int(obj["d"]),
                         points=frozenset(tuple(int(c) for c in pt) for pt in obj["points"]))
        if k == "joint_pmf":
            return JointPMF(support=tuple((decode_number(x), decode_number(y))
                                          for x, y in obj["support"]),
                            probs=_nums(obj["probs"]))
        if k == "diff_basis":
            return DiffBasis(elems=tuple(int(v) for v in obj["elems"]), n=int(obj["n"]))
    except PayloadError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise PayloadError(f"malformed {k!r} payload: {exc}") from exc
    raise PayloadError(f"unknown payload kind {k!r}")


def canonical_json(obj: Any) -> str:
    """Sorted keys, no insignificant whitespace, shortest round-trip floats."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def payload_key(payload: Construction) -> str:
    """Stable identity string used for hashing, niching and multiset comparisons."""
    return canonical_json(payload_to_json(payload))
