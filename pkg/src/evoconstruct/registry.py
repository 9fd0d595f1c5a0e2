"""Problem registry: evaluators, representations, kernels and baselines.

Each entry binds one scored problem to its payload kind, score orientation,
random initializer, mutation kernels (names shared across representations:
gauss_all, nudge_one, swap_or_flip, insert_element, delete_element,
block_translate, simplex_reweight) and optional baseline builders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Callable

import numpy as np

from . import analysis_problems as ap
from . import combinatorics_problems as cp
from . import geometry_problems as gp
from . import numbertheory_problems as nt
from .payloads import (Construction, DiffBasis, DiskSet, EigenCombo, FFSet,
                       GridSubset, HLInstance, IntSet, JointPMF, KakeyaOffsets,
                       PlanePoints, PoseSet, ResidueSet, RingInstance, SignSeq,
                       SpherePoints, Stack, StepFunction, Tiling,
                       WeightedHypergraph)
from .scoring import EvaluationReport, timed_report

QUARTER = Fraction(1, 4)


class UnknownProblem(KeyError):
    pass


@dataclass
class ProblemSpec:
    name: str
    payload_kind: str
    orientation: str                      # "max" or "min"
    doc: str
    evaluate: Callable[[Construction, dict], float]
    random_init: Callable[[dict, np.random.Generator], Construction]
    kernels: dict[str, Callable] = field(default_factory=dict)
    default_instance: dict = field(default_factory=dict)
    vector_codec: tuple | None = None     # (to_vector, from_vector, natural scale)
    baseline: Callable[[dict], Construction] | None = None
    infeasibility_floor: float = 0.0

    def merged_instance(self, instance: dict | None) -> dict:
        merged = dict(self.default_instance)
        merged.update(instance or {})
        return merged

    def evaluate_report(self, payload: Construction, instance: dict) -> EvaluationReport:
        return timed_report(self.orientation, self.evaluate, payload, instance)


REGISTRY: dict[str, ProblemSpec] = {}


def register(spec: ProblemSpec) -> ProblemSpec:
    REGISTRY[spec.name] = spec
    return spec


def get_problem(name: str) -> ProblemSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownProblem(f"unknown problem {name!r}") from None


def problem_names() -> list[str]:
    return sorted(REGISTRY)


def _vector_kernels(codec):
    to_vec, from_vec, scale = codec

    def gauss_all(payload, instance, rng, step_scale):
        vec = np.asarray(to_vec(payload), dtype=float)
        vec = vec + rng.normal(0.0, step_scale * scale, len(vec))
        return from_vec(vec, instance)

    def nudge_one(payload, instance, rng, step_scale):
        vec = np.asarray(to_vec(payload), dtype=float)
        i = int(rng.integers(len(vec)))
        vec[i] += rng.normal(0.0, step_scale * scale)
        return from_vec(vec, instance)

    return {"gauss_all": gauss_all, "nudge_one": nudge_one}


# --- step-function problems ----------------------------------------------------

def _step_codec(domain, nonneg, repair=None, scale=0.25):
    def to_vec(p: StepFunction):
        return [float(h) for h in p.heights]

    def from_vec(vec, instance):
        h = np.asarray(vec, dtype=float)
        if nonneg:
            h = np.maximum(h, 0.0)
        if repair is not None:
            h = repair(h)
        return StepFunction(n=len(h), heights=tuple(float(v) for v in h),
                            domain=domain, nonneg=nonneg)

    return (to_vec, from_vec, scale)


def _overlap_repair(h: np.ndarray) -> np.ndarray:
    """Project heights into [0,1] with integral (width 2/n per part) equal to 1."""
    n = len(h)
    width = 2.0 / n
    h = np.clip(h, 0.0, 1.0)
    for _ in range(100):
        total = h.sum() * width
        if abs(total - 1.0) <= 1e-13:
            return h
        if total <= 0:
            h = np.full(n, 0.5)
            continue
        h = np.clip(h * (1.0 / total), 0.0, 1.0)
    # final exact fix on one unsaturated coordinate
    total = h.sum() * width
    residual = (1.0 - total) / width
    for i in range(n):
        fixed = h[i] + residual
        if 0.0 <= fixed <= 1.0:
            h[i] = fixed
            break
    return h


def _register_step_problem(name, orientation, doc, variant=None, domain=(-QUARTER, QUARTER),
                           nonneg=True, default_n=40, repair=None, evaluate=None):
    codec = _step_codec(domain, nonneg, repair=repair)

    def init(instance, rng):
        n = int(instance.get("n", default_n))
        if nonneg:
            h = rng.uniform(0.2, 1.0, n)
        else:
            h = rng.uniform(-1.0, 1.0, n)
        if repair is not None:
            h = repair(h)
        return StepFunction(n=n, heights=tuple(float(v) for v in h),
                            domain=domain, nonneg=nonneg)

    register(ProblemSpec(
        name=name, payload_kind="step", orientation=orientation, doc=doc,
        evaluate=evaluate, random_init=init, kernels=_vector_kernels(codec),
        default_instance={"n": default_n}, vector_codec=codec))


_register_step_problem(
    "autocorr_c1", "min",
    "Minimize max of the self-convolution over squared integral, non-negative steps on (-1/4, 1/4).",
    evaluate=lambda p, inst: ap.eval_autocorrelation(p, "c1_max_nonneg"))
_register_step_problem(
    "autocorr_c3", "min",
    "Signed variant: minimize max |self-convolution| over squared integral.",
    nonneg=False,
    evaluate=lambda p, inst: ap.eval_autocorrelation(p, "c3_max_signed"))
_register_step_problem(
    "autoconv_ratio", "max",
    "Maximize ||f*f||_2^2 / (||f*f||_1 ||f*f||_inf) over non-negative steps.",
    evaluate=lambda p, inst: ap.eval_autoconv_norm_ratio(p))
_register_step_problem(
    "autocorr_c6", "max",
    "Maximize min_{0<=t<=1} autocorrelation over ||f||_1^2.",
    domain=(0, 1), default_n=30,
    evaluate=lambda p, inst: ap.eval_autocorrelation(p, "c6_min_corr"))
_register_step_problem(
    "min_overlap", "min",
    "Minimize the peak cross-correlation of f against 1-f on (-1, 1), integral pinned to 1.",
    domain=(-1, 1), default_n=50, repair=_overlap_repair,
    evaluate=lambda p, inst: ap.eval_min_overlap(p))


# --- interval-union maximal-function problem -------------------------------------

def _hl_from_vec(vec, instance):
    n = len(vec) // 2
    y = sorted(vec[:n])
    for i in range(1, n):
        if y[i] <= y[i - 1] + 1e-9:
            y[i] = y[i - 1] + 1e-9
    k = [max(1e-9, v) for v in vec[n:]]
    return HLInstance(y=tuple(float(v) for v in y), k=tuple(float(v) for v in k))


_HL_CODEC = (lambda p: [float(v) for v in p.y] + [float(v) for v in p.k],
             _hl_from_vec, 1.0)


def _hl_init(instance, rng):
    n = int(instance.get("n", 20))
    gaps = rng.uniform(1.0, 4.0, n)
    y = np.cumsum(gaps)
    k = rng.uniform(0.5, 1.5, n)
    return HLInstance(y=tuple(map(float, y)), k=tuple(map(float, k)))


def hl_block_family(params: dict) -> HLInstance:
    """The unit-radius family y_i = 3i whose ratio is 3/2 - 1/(2n), exactly."""
    n = int(params["n"])
    return HLInstance(y=tuple(3 * (i + 1) for i in range(n)), k=(1,) * n)


register(ProblemSpec(
    name="hl_maximal", payload_kind="hl", orientation="max",
    doc="Maximize |union of centered intervals| / (2 sum of radii).",
    evaluate=lambda p, inst: ap.eval_hl_maximal(p),
    random_init=_hl_init, kernels=_vector_kernels(_HL_CODEC),
    default_instance={"n": 20}, vector_codec=_HL_CODEC,
    baseline=hl_block_family))


# --- sign-change bound -------------------------------------------------------------

_EIGEN_CODEC = (lambda p: [float(c) for c in p.coeffs],
                lambda vec, inst: EigenCombo(coeffs=tuple(float(v) for v in vec)),
                0.05)

register(ProblemSpec(
    name="uncertainty", payload_kind="eigen", orientation="min",
    doc="Minimize the squared largest sign change of a self-dual Gaussian-weighted polynomial.",
    evaluate=lambda p, inst: ap.eval_uncertainty_sign_change(p),
    random_init=lambda inst, rng: EigenCombo(
        coeffs=tuple(map(float, rng.normal(0.0, 0.3, int(inst.get("m", 3)))))),
    kernels=_vector_kernels(_EIGEN_CODEC),
    default_instance={"m": 3}, vector_codec=_EIGEN_CODEC))


# --- sphere-point problems -----------------------------------------------------------

def _sphere_codec(scale=0.3):
    def to_vec(p: SpherePoints):
        return [float(c) for q in p.points for c in q]

    def from_vec(vec, instance):
        d = int(instance.get("d", 3))
        pts = [tuple(float(c) for c in vec[i:i + d]) for i in range(0, len(vec), d)]
        return SpherePoints(d=d, points=tuple(pts))

    return (to_vec, from_vec, scale)


def _sphere_init(instance, rng):
    d = int(instance.get("d", 3))
    n = int(instance["n"])
    pts = rng.normal(0.0, 1.0, (n, d))
    return gp.normalize_points(SpherePoints(d=d, points=tuple(map(tuple, pts))))


def _require_count(payload, instance, attr="n"):
    want = instance.get("n")
    if want is not None and payload.n != int(want):
        from .scoring import Infeasible
        raise Infeasible(f"instance expects {want} points, payload has {payload.n}")


def _eval_thomson(p, inst):
    _require_count(p, inst)
    return gp.eval_thomson(p)


def _eval_tammes(p, inst):
    _require_count(p, inst)
    return gp.eval_tammes(p)


def _eval_kissing(p, inst):
    d = inst.get("d")
    if d is not None and p.d != int(d):
        from .scoring import Infeasible
        raise Infeasible(f"instance expects dimension {d}")
    _require_count(p, inst)
    return gp.eval_kissing(p)


def _eval_design(p, inst):
    _require_count(p, inst)
    return gp.eval_spherical_design(p, int(inst.get("t", 3)))


def _sqrt_fraction(n: int, digits: int = 40) -> Fraction:
    scale = 10 ** digits
    return Fraction(isqrt(n * scale * scale), scale)


def kissing_lattice_baseline(params: dict) -> SpherePoints:
    """Touching-sphere center configurations for dimensions 1..4.

    Coordinates are exact or 40-digit rational surds so a certified
    re-evaluation collapses the penalty enclosure to ~0.
    """
    d = int(params["d"])
    if d == 1:
        pts = [(2,), (-2,)]
    elif d == 2:
        s3 = _sqrt_fraction(3)
        pts = [(2, 0), (1, s3), (-1, s3), (-2, 0), (-1, -s3), (1, -s3)]
    elif d == 3:
        phi = (1 + _sqrt_fraction(5)) / 2
        pts = []
        for a in (1, -1):
            for b in (phi, -phi):
                pts += [(0, a, b), (a, b, 0), (b, 0, a)]
    elif d == 4:
        pts = []
        for i in range(4):
            for j in range(i + 1, 4):
                for si in (1, -1):
                    for sj in (1, -1):
                        v = [0, 0, 0, 0]
                        v[i], v[j] = si, sj
                        pts.append(tuple(v))
    else:
        from .scoring import UnsupportedInstance
        raise UnsupportedInstance("builtin configurations cover dimensions 1..4")
    return SpherePoints(d=d, points=tuple(pts))


def design_orbit_baseline(params: dict) -> SpherePoints:
    """Octahedron (ambient 3) or the regular (t+1)-gon (ambient 2)."""
    d = int(params.get("d", 3))
    if d == 3:
        return SpherePoints(d=3, points=((1, 0, 0), (-1, 0, 0), (0, 1, 0),
                                         (0, -1, 0), (0, 0, 1), (0, 0, -1)))
    t = int(params.get("t", 3))
    m = t + 1
    pts = [(math.cos(2 * math.pi * j / m), math.sin(2 * math.pi * j / m)) for j in range(m)]
    return SpherePoints(d=2, points=tuple(pts))


_S3 = _sphere_codec()
register(ProblemSpec(
    name="thomson", payload_kind="sphere_points", orientation="min",
    doc="Minimize the Coulomb energy of n points on the unit sphere.",
    evaluate=_eval_thomson, random_init=_sphere_init, kernels=_vector_kernels(_S3),
    default_instance={"n": 5, "d": 3}, vector_codec=_S3))
register(ProblemSpec(
    name="tammes", payload_kind="sphere_points", orientation="max",
    doc="Maximize the minimum pairwise distance of n points on the unit sphere.",
    evaluate=_eval_tammes, random_init=_sphere_init, kernels=_vector_kernels(_S3),
    default_instance={"n": 12, "d": 3}, vector_codec=_S3))
register(ProblemSpec(
    name="kissing", payload_kind="sphere_points", orientation="min",
    doc="Minimize the pairwise shortfall penalty of touching-sphere centers at radius 2.",
    evaluate=_eval_kissing, random_init=_sphere_init, kernels=_vector_kernels(_S3),
    default_instance={"n": 12, "d": 3}, vector_codec=_S3,
    baseline=kissing_lattice_baseline))
register(ProblemSpec(
    name="spherical_design", payload_kind="sphere_points", orientation="min",
    doc="Minimize the addition-theorem design error at degree t.",
    evaluate=_eval_design, random_init=_sphere_init, kernels=_vector_kernels(_S3),
    default_instance={"n": 6, "d": 3, "t": 3}, vector_codec=_S3,
    baseline=design_orbit_baseline))


# --- needle offsets -------------------------------------------------------------------

def _kakeya_codec():
    def to_vec(p: KakeyaOffsets):
        return [float(v) for v in p.x]

    def from_vec(vec, instance):
        return KakeyaOffsets(n=len(vec), x=tuple(float(v) for v in vec),
                             shape=instance.get("shape", "triangle"))

    return (to_vec, from_vec, 0.1)


def _kakeya_init(instance, rng):
    n = int(instance.get("n", 16))
    return KakeyaOffsets(n=n, x=tuple(map(float, rng.normal(0.0, 0.3, n))),
                         shape=instance.get("shape", "triangle"))


def _keich_baseline(params: dict) -> KakeyaOffsets:
    if "k" in params:
        k = int(params["k"])
    else:
        n = int(params["n"])
        k = max(1, n.bit_length() - 1)
        if 1 << k != n:
            from .scoring import UnsupportedInstance
            raise UnsupportedInstance("bit-weighted baseline needs n = 2^k")
    return gp.baseline_keich(k, shape=params.get("shape", "triangle"))


_KK = _kakeya_codec()


def _eval_kakeya_area(p, inst):
    return float(gp.kakeya_union_area(p))


register(ProblemSpec(
    name="kakeya_area", payload_kind="kakeya_offsets", orientation="min",
    doc="Minimize the union area of the needle shapes.",
    evaluate=_eval_kakeya_area, random_init=_kakeya_init, kernels=_vector_kernels(_KK),
    default_instance={"n": 16, "shape": "triangle"}, vector_codec=_KK,
    baseline=_keich_baseline))
register(ProblemSpec(
    name="kakeya_s", payload_kind="kakeya_offsets", orientation="max",
    doc="Maximize total shape area over sqrt(pairwise overlap) * sqrt(union area).",
    evaluate=lambda p, inst: gp.kakeya_s_score(p), random_init=_kakeya_init,
    kernels=_vector_kernels(_KK),
    default_instance={"n": 16, "shape": "triangle"}, vector_codec=_KK,
    baseline=_keich_baseline))


# --- packings ---------------------------------------------------------------------------

def _pose_codec():
    def to_vec(p: PoseSet):
        return [c for pose in p.poses for c in pose]

    def from_vec(vec, instance):
        shape = instance.get("shape", "hexagon")
        stride = 3 if shape in ("hexagon", "square") else 6
        poses = [tuple(float(c) for c in vec[i:i + stride])
                 for i in range(0, len(vec), stride)]
        return PoseSet(shape=shape, poses=tuple(poses))

    return (to_vec, from_vec, 0.2)


def _pose_init(instance, rng):
    shape = instance.get("shape", "hexagon")
    n = int(instance.get("n", 11))
    side = math.ceil(math.sqrt(n))
    spacing = 2.2
    poses = []
    for idx in range(n):
        r, c = divmod(idx, side)
        if shape in ("hexagon", "square"):
            poses.append((c * spacing + rng.normal(0, 0.05),
                          r * spacing + rng.normal(0, 0.05),
                          float(rng.uniform(0, math.pi))))
        else:
            poses.append((c * spacing, r * spacing, (idx // (side * side)) * spacing,
                          0.0, 0.0, 0.0))
    return PoseSet(shape=shape, poses=tuple(poses))


def _block_translate(payload, instance, rng, step_scale):
    poses = list(payload.poses)
    i = int(rng.integers(len(poses)))
    pose = list(poses[i])
    dims = 2 if payload.shape in ("hexagon", "square") else 3
    for a in range(dims):
        pose[a] += rng.normal(0.0, 0.2 * step_scale)
    if rng.random() < 0.5:
        ang = int(rng.integers(dims, len(pose)))
        pose[ang] += rng.normal(0.0, 0.3 * step_scale)
    poses[i] = tuple(pose)
    return PoseSet(shape=payload.shape, poses=tuple(poses))


_POSE = _pose_codec()


def _eval_pack_dilate(p, inst):
    if inst.get("shape") and p.shape != inst["shape"]:
        from .scoring import Infeasible
        raise Infeasible(f"instance expects shape {inst['shape']}")
    if inst.get("n") and len(p.poses) != int(inst["n"]):
        from .scoring import Infeasible
        raise Infeasible(f"instance expects {inst['n']} poses")
    scale, penalty = gp.eval_pack_dilate(p)
    return scale + penalty


register(ProblemSpec(
    name="pack_dilate", payload_kind="poses", orientation="min",
    doc="Minimize dilate side plus overlap penalty for n congruent copies in a scaled copy.",
    evaluate=_eval_pack_dilate, random_init=_pose_init,
    kernels={**_vector_kernels(_POSE), "block_translate": _block_translate},
    default_instance={"shape": "hexagon", "n": 11}, vector_codec=_POSE))


def _disk_codec():
    def to_vec(p: DiskSet):
        return [c for d in p.disks for c in d]

    def from_vec(vec, instance):
        disks = []
        for i in range(0, len(vec), 3):
            x, y, r = vec[i:i + 3]
            r = min(max(1e-6, r), 0.5)
            disks.append((min(max(x, r), 1 - r), min(max(y, r), 1 - r), r))
        return DiskSet(disks=tuple(disks))

    return (to_vec, from_vec, 0.05)


def _disk_init(instance, rng):
    n = int(instance.get("n", 21))
    side = math.ceil(math.sqrt(n))
    r = 0.9 / (2 * side)
    disks = []
    for idx in range(n):
        row, col = divmod(idx, side)
        disks.append(((col + 0.5) / side, (row + 0.5) / side, r))
    return DiskSet(disks=tuple(disks))


_DISK = _disk_codec()
register(ProblemSpec(
    name="pack_circles_sum", payload_kind="disks", orientation="max",
    doc="Maximize the sum of radii of disjoint disks in the unit square.",
    evaluate=lambda p, inst: gp.eval_pack_circles_sum(p), random_init=_disk_init,
    kernels=_vector_kernels(_DISK),
    default_instance={"n": 21}, vector_codec=_DISK))


# --- plane point problems ------------------------------------------------------------------

def _plane_codec(frame_key="frame", scale=0.1):
    def to_vec(p: PlanePoints):
        return [c for q in p.points for c in q]

    def from_vec(vec, instance):
        d = int(instance.get("d", 2))
        pts = [tuple(float(c) for c in vec[i:i + d]) for i in range(0, len(vec), d)]
        return PlanePoints(points=tuple(pts), frame=instance.get(frame_key, "free"))

    return (to_vec, from_vec, scale)


def _plane_init(instance, rng):
    d = int(instance.get("d", 2))
    n = int(instance.get("n", 8))
    pts = rng.uniform(0.0, 1.0, (n, d))
    return PlanePoints(points=tuple(map(tuple, pts)), frame=instance.get("frame", "free"))


_PLANE = _plane_codec()


def _eval_heilbronn(variant):
    def ev(p, inst):
        if inst.get("n") and len(p.points) != int(inst["n"]):
            from .scoring import Infeasible
            raise Infeasible(f"instance expects {inst['n']} points")
        return gp.eval_heilbronn(p, variant)
    return ev


register(ProblemSpec(
    name="heilbronn_box", payload_kind="plane_points", orientation="max",
    doc="Maximize the smallest triangle area of n points in a unit-area frame.",
    evaluate=_eval_heilbronn("box"), random_init=_plane_init,
    kernels=_vector_kernels(_PLANE),
    default_instance={"n": 11, "frame": "unit_square", "d": 2}, vector_codec=_PLANE))
register(ProblemSpec(
    name="heilbronn_hull", payload_kind="plane_points", orientation="max",
    doc="Maximize the smallest triangle area relative to the convex hull area.",
    evaluate=_eval_heilbronn("hull"), random_init=_plane_init,
    kernels=_vector_kernels(_PLANE),
    default_instance={"n": 13, "frame": "free", "d": 2}, vector_codec=_PLANE))


def _eval_maxmin(p, inst):
    if inst.get("n") and len(p.points) != int(inst["n"]):
        from .scoring import Infeasible
        raise Infeasible(f"instance expects {inst['n']} points")
    return gp.eval_maxmin_ratio(p)


register(ProblemSpec(
    name="maxmin_ratio", payload_kind="plane_points", orientation="min",
    doc="Minimize max pairwise distance over min pairwise distance.",
    evaluate=_eval_maxmin, random_init=_plane_init, kernels=_vector_kernels(_PLANE),
    default_instance={"n": 4, "d": 2, "frame": "free"}, vector_codec=_PLANE))


# --- sign sequences --------------------------------------------------------------------------

def _signs_init(instance, rng):
    length = int(instance.get("length", instance.get("n", 32) + 1))
    return SignSeq(a=tuple(int(v) for v in rng.choice((-1, 1), length)))


def _flip_kernel(payload, instance, rng, step_scale):
    a = list(payload.a)
    flips = max(1, int(abs(rng.normal(0.0, step_scale * 2.0))))
    for _ in range(flips):
        i = int(rng.integers(len(a)))
        a[i] = -a[i]
    return SignSeq(a=tuple(a))


register(ProblemSpec(
    name="edp_prefix", payload_kind="signs", orientation="max",
    doc="Maximize the longest low-discrepancy prefix plus fractional credit.",
    evaluate=lambda p, inst: cp.eval_edp_prefix(p, int(inst.get("bound", 1))),
    random_init=_signs_init, kernels={"swap_or_flip": _flip_kernel},
    default_instance={"length": 50, "bound": 1}))


def _golay_init(instance, rng):
    n = int(instance.get("n", 32))
    return SignSeq(a=tuple(int(v) for v in rng.choice((-1, 1), n + 1)))


for _gname, _gorient, _gtarget in (("golay_flat_min", "max", "flat_min"),
                                   ("golay_flat_max", "min", "flat_max"),
                                   ("golay_merit", "max", "merit")):
    register(ProblemSpec(
        name=_gname, payload_kind="signs", orientation=_gorient,
        doc=f"{_gtarget} score of a +-1 coefficient polynomial on the unit circle.",
        evaluate=(lambda tgt: lambda p, inst: cp.eval_golay(p, tgt))(_gtarget),
        random_init=_golay_init, kernels={"swap_or_flip": _flip_kernel},
        default_instance={"n": 32 if "flat" in _gname else 12}))


# --- ring loading ------------------------------------------------------------------------------

def _ring_from_vec(vec, instance):
    n = len(vec) // 2
    u = np.clip(np.asarray(vec[:n], dtype=float), 0.0, 1.0)
    v = np.clip(np.asarray(vec[n:], dtype=float), 0.0, 1.0)
    total = u + v
    over = total > 1.0
    u[over] /= total[over]
    v[over] /= total[over]
    return RingInstance(u=tuple(map(float, u)), v=tuple(map(float, v)))


_RING_CODEC = (lambda p: [float(x) for x in p.u] + [float(x) for x in p.v],
               _ring_from_vec, 0.1)


def _ring_init(instance, rng):
    n = int(instance.get("n", 12))
    u = rng.uniform(0.0, 1.0, n)
    v = rng.uniform(0.0, 1.0 - u)
    return RingInstance(u=tuple(map(float, u)), v=tuple(map(float, v)))


register(ProblemSpec(
    name="ring_loading", payload_kind="ring", orientation="max",
    doc="Maximize the unavoidable split-routing discrepancy over all rounding choices.",
    evaluate=lambda p, inst: cp.eval_ring_loading(p), random_init=_ring_init,
    kernels=_vector_kernels(_RING_CODEC),
    default_instance={"n": 12}, vector_codec=_RING_CODEC))


# --- integer sets ---------------------------------------------------------------------------------

def _intset_kernels(lo_key="lo", hi_key="hi", keep_zero=False, nonneg=False, min_size=2):
    def bounds(instance):
        lo = int(instance.get(lo_key, -500))
        hi = int(instance.get(hi_key, 500))
        if nonneg:
            lo = max(lo, 0)
        return lo, hi

    def move(payload, instance, rng, step_scale):
        lo, hi = bounds(instance)
        elems = set(payload.elems)
        movable = [e for e in elems if not (keep_zero and e == 0)]
        if not movable:
            return payload
        old = movable[int(rng.integers(len(movable)))]
        elems.discard(old)
        spread = max(1, int(step_scale * 20))
        new = int(old + rng.integers(-spread, spread + 1))
        new = min(max(new, lo), hi)
        elems.add(new)
        if keep_zero:
            elems.add(0)
        return IntSet(elems=tuple(sorted(elems)))

    def insert(payload, instance, rng, step_scale):
        lo, hi = bounds(instance)
        elems = set(payload.elems)
        for _ in range(8):
            cand = int(rng.integers(lo, hi + 1))
            if cand not in elems:
                elems.add(cand)
                break
        return IntSet(elems=tuple(sorted(elems)))

    def delete(payload, instance, rng, step_scale):
        elems = set(payload.elems)
        removable = [e for e in elems if not (keep_zero and e == 0)]
        if len(elems) <= min_size or not removable:
            return payload
        elems.discard(removable[int(rng.integers(len(removable)))])
        return IntSet(elems=tuple(sorted(elems)))

    return {"swap_or_flip": move, "insert_element": insert, "delete_element": delete}


def _intset_init(instance, rng):
    lo = int(instance.get("lo", -500))
    hi = int(instance.get("hi", 500))
    size = int(instance.get("size", 17))
    elems = set()
    while len(elems) < size:
        elems.add(int(rng.integers(lo, hi + 1)))
    return IntSet(elems=tuple(sorted(elems)))


register(ProblemSpec(
    name="sumdiff_42", payload_kind="intset", orientation="max",
    doc="Maximize log(|A+A|/|A|) / log(|A-A|/|A|) over finite integer sets.",
    evaluate=lambda p, inst: cp.eval_sumdiff(p)[0], random_init=_intset_init,
    kernels=_intset_kernels(), default_instance={"size": 17, "lo": -500, "hi": 500}))
register(ProblemSpec(
    name="sumdiff_43", payload_kind="intset", orientation="max",
    doc="Maximize log|A-A| / log|A+A| over finite integer sets.",
    evaluate=lambda p, inst: cp.eval_sumdiff(p)[1], random_init=_intset_init,
    kernels=_intset_kernels(), default_instance={"size": 17, "lo": -500, "hi": 500}))


def _gyarmati_init(instance, rng):
    hi = int(instance.get("hi", 100))
    size = int(instance.get("size", 7))
    elems = {0}
    while len(elems) < size:
        elems.add(int(rng.integers(1, hi + 1)))
    return IntSet(elems=tuple(sorted(elems)))


register(ProblemSpec(
    name="gyarmati", payload_kind="intset", orientation="max",
    doc="Maximize 1 + log(|U-U|/|U+U|)/log(2 max U + 1) over sets of non-negative integers with 0.",
    evaluate=lambda p, inst: cp.eval_gyarmati(p), random_init=_gyarmati_init,
    kernels=_intset_kernels(keep_zero=True, nonneg=True),
    default_instance={"size": 7, "lo": 0, "hi": 100}))


# --- grid subsets ------------------------------------------------------------------------------------

def _grid_kernels():
    def insert(payload, instance, rng, step_scale):
        n = payload.n
        cells = set(payload.cells)
        for _ in range(8):
            cand = (int(rng.integers(1, n + 1)), int(rng.integers(1, n + 1)))
            if cand not in cells:
                cells.add(cand)
                break
        return GridSubset(n=n, cells=tuple(sorted(cells)))

    def delete(payload, instance, rng, step_scale):
        cells = list(payload.cells)
        if len(cells) <= 1:
            return payload
        cells.pop(int(rng.integers(len(cells))))
        return GridSubset(n=payload.n, cells=tuple(sorted(cells)))

    def move(payload, instance, rng, step_scale):
        n = payload.n
        cells = set(payload.cells)
        if not cells:
            return payload
        old = list(cells)[int(rng.integers(len(cells)))]
        cells.discard(old)
        ni = min(max(old[0] + int(rng.integers(-2, 3)), 1), n)
        nj = min(max(old[1] + int(rng.integers(-2, 3)), 1), n)
        cells.add((ni, nj))
        return GridSubset(n=n, cells=tuple(sorted(cells)))

    return {"insert_element": insert, "delete_element": delete, "swap_or_flip": move}


register(ProblemSpec(
    name="isosceles_free", payload_kind="grid_cells", orientation="max",
    doc="Maximize cell count minus ten per equal-leg apex pair (flat triangles count).",
    evaluate=lambda p, inst: cp.eval_isosceles_free(p),
    random_init=lambda inst, rng: GridSubset(
        n=int(inst.get("n", 8)),
        cells=tuple(sorted({(int(rng.integers(1, int(inst.get("n", 8)) + 1)),
                             int(rng.integers(1, int(inst.get("n", 8)) + 1)))
                            for _ in range(int(inst.get("n", 8)))}))),
    kernels=_grid_kernels(), default_instance={"n": 8}))


# --- tilings -------------------------------------------------------------------------------------------

def _tiling_kernels():
    def insert(payload, instance, rng, step_scale):
        n = payload.n
        r1 = int(rng.integers(1, n + 1))
        c1 = int(rng.integers(1, n + 1))
        r2 = min(n, r1 + int(rng.integers(0, max(2, n // 2))))
        c2 = min(n, c1 + int(rng.integers(0, max(2, n // 2))))
        return Tiling(n=n, tiles=payload.tiles + ((r1, r2, c1, c2),))

    def delete(payload, instance, rng, step_scale):
        if not payload.tiles:
            return payload
        tiles = list(payload.tiles)
        tiles.pop(int(rng.integers(len(tiles))))
        return Tiling(n=payload.n, tiles=tuple(tiles))

    def adjust(payload, instance, rng, step_scale):
        if not payload.tiles:
            return payload
        tiles = list(payload.tiles)
        i = int(rng.integers(len(tiles)))
        r1, r2, c1, c2 = tiles[i]
        which = int(rng.integers(4))
        delta = 1 if rng.random() < 0.5 else -1
        r1, r2, c1, c2 = (r1 + delta * (which == 0), r2 + delta * (which == 1),
                          c1 + delta * (which == 2), c2 + delta * (which == 3))
        n = payload.n
        if 1 <= r1 <= r2 <= n and 1 <= c1 <= c2 <= n:
            tiles[i] = (r1, r2, c1, c2)
        return Tiling(n=payload.n, tiles=tuple(tiles))

    return {"insert_element": insert, "delete_element": delete, "block_translate": adjust}


register(ProblemSpec(
    name="imo_tiling", payload_kind="tiling", orientation="min",
    doc="Minimize tile count plus per-row/column uncovered-square deviation.",
    evaluate=lambda p, inst: cp.eval_imo_tiling(p),
    random_init=lambda inst, rng: Tiling(n=int(inst.get("n", 4)), tiles=()),
    kernels=_tiling_kernels(), default_instance={"n": 4}))


# --- stacked blocks --------------------------------------------------------------------------------------

_STACK_CODEC = (lambda p: list(p.positions),
                lambda vec, inst: Stack(positions=tuple(float(v) for v in vec)),
                0.05)

def _stack_init(instance, rng):
    # linear ramps up to a top displacement c < 1 satisfy every stability
    # constraint, so they make reliable feasible starting points
    n = int(instance.get("n", 10))
    c = float(rng.uniform(0.2, 0.9))
    ramp = c * (np.arange(1, n + 1) / n) + rng.normal(0.0, 0.01, n)
    return Stack(positions=tuple(map(float, ramp)))


register(ProblemSpec(
    name="block_stacking", payload_kind="stack", orientation="max",
    doc="Maximize the top-block displacement subject to the stability score semantics.",
    evaluate=lambda p, inst: cp.eval_block_stacking(p),
    random_init=_stack_init,
    kernels=_vector_kernels(_STACK_CODEC),
    default_instance={"n": 10}, vector_codec=_STACK_CODEC,
    baseline=lambda params: cp.baseline_harmonic_stack(int(params["n"]))))


# --- weighted hypergraphs ----------------------------------------------------------------------------------

def _whyper_kernels():
    def reweight(payload, instance, rng, step_scale):
        w = np.asarray([float(x) for x in payload.weights])
        w = np.maximum(0.0, w + rng.normal(0.0, 0.1 * step_scale, len(w)))
        if w.sum() <= 0:
            w = np.ones(len(w))
        w /= w.sum()
        return WeightedHypergraph(weights=tuple(map(float, w)), edges=payload.edges)

    def _all_edges(nv):
        out = []
        for a in range(nv):
            for b in range(a, nv):
                for c in range(b, nv):
                    if not (a == b == c):
                        out.append((a, b, c))
        return out

    def insert(payload, instance, rng, step_scale):
        nv = len(payload.weights)
        candidates = [e for e in _all_edges(nv) if e not in set(payload.edges)]
        if not candidates:
            return payload
        e = candidates[int(rng.integers(len(candidates)))]
        return WeightedHypergraph(weights=payload.weights,
                                  edges=tuple(sorted(payload.edges + (e,))))

    def delete(payload, instance, rng, step_scale):
        if not payload.edges:
            return payload
        edges = list(payload.edges)
        edges.pop(int(rng.integers(len(edges))))
        return WeightedHypergraph(weights=payload.weights, edges=tuple(edges))

    return {"simplex_reweight": reweight, "insert_element": insert,
            "delete_element": delete}


register(ProblemSpec(
    name="turan_blowup", payload_kind="whyper", orientation="max",
    doc="Maximize the blowup edge density of a clique-free weighted 3-graph with loops.",
    evaluate=lambda p, inst: float(cp.eval_turan_blowup(p)),
    random_init=lambda inst, rng: _whyper_init(inst, rng),
    kernels=_whyper_kernels(), default_instance={"n": 4}))


def _whyper_init(instance, rng):
    nv = int(instance.get("n", 4))
    w = rng.uniform(0.1, 1.0, nv)
    w /= w.sum()
    edges = []
    for a in range(nv):
        for b in range(a, nv):
            for c in range(b, nv):
                if not (a == b == c) and rng.random() < 0.25:
                    edges.append((a, b, c))
    return WeightedHypergraph(weights=tuple(map(float, w)), edges=tuple(sorted(set(edges))))


# --- difference bases ------------------------------------------------------------------------------------------

def _diff_basis_kernels():
    def move(payload, instance, rng, step_scale):
        n = payload.n
        elems = set(payload.elems)
        old = list(elems)[int(rng.integers(len(elems)))]
        elems.discard(old)
        elems.add(min(max(old + int(rng.integers(-5, 6)), 0), n))
        return DiffBasis(elems=tuple(sorted(elems)), n=n)

    def insert(payload, instance, rng, step_scale):
        elems = set(payload.elems)
        elems.add(int(rng.integers(0, payload.n + 1)))
        return DiffBasis(elems=tuple(sorted(elems)), n=payload.n)

    def delete(payload, instance, rng, step_scale):
        elems = list(payload.elems)
        if len(elems) <= 2:
            return payload
        elems.pop(int(rng.integers(len(elems))))
        return DiffBasis(elems=tuple(sorted(elems)), n=payload.n)

    return {"swap_or_flip": move, "insert_element": insert, "delete_element": delete}


register(ProblemSpec(
    name="difference_basis", payload_kind="diff_basis", orientation="min",
    doc="Minimize |B|^2 / n over difference bases covering 1..n.",
    evaluate=lambda p, inst: nt.eval_difference_basis(p),
    random_init=lambda inst, rng: _diff_basis_init(inst, rng),
    kernels=_diff_basis_kernels(), default_instance={"n": 50}))


def _diff_basis_init(instance, rng):
    n = int(instance.get("n", 50))
    size = max(3, int(math.sqrt(3 * n)))
    elems = {0, n}
    while len(elems) < size:
        elems.add(int(rng.integers(0, n + 1)))
    return DiffBasis(elems=tuple(sorted(elems)), n=n)


# --- prime-field line-covering sets ------------------------------------------------------------------------------

def _ff_kernels():
    def insert(payload, instance, rng, step_scale):
        pts = set(payload.points)
        cand = tuple(int(v) for v in rng.integers(0, payload.p, payload.d))
        pts.add(cand)
        return FFSet(p=payload.p, d=payload.d, points=frozenset(pts))

    def delete(payload, instance, rng, step_scale):
        pts = list(payload.points)
        if len(pts) <= 1:
            return payload
        pts_set = set(pts)
        pts_set.discard(pts[int(rng.integers(len(pts)))])
        return FFSet(p=payload.p, d=payload.d, points=frozenset(pts_set))

    return {"insert_element": insert, "delete_element": delete}


def _ff_init(instance, rng):
    p = int(instance.get("p", 5))
    d = int(instance.get("d", 3))
    if d == 3 and p % 4 == 1:
        return nt.baseline_ff_kakeya_d3(p)
    all_pts = [tuple(pt) for pt in np.stack(np.meshgrid(
        *[np.arange(p)] * d, indexing="ij"), axis=-1).reshape(-1, d)]
    return FFSet(p=p, d=d, points=frozenset(map(tuple, all_pts)))


register(ProblemSpec(
    name="ff_kakeya", payload_kind="ff_set", orientation="min",
    doc="Minimize the normalized size of a set containing a line in every direction.",
    evaluate=lambda p, inst: nt.eval_ff_kakeya_size(p), random_init=_ff_init,
    kernels=_ff_kernels(), default_instance={"p": 5, "d": 3},
    baseline=lambda params: nt.baseline_ff_kakeya_d3(int(params["p"]))))


# --- power-free residue sets ---------------------------------------------------------------------------------------

def _residue_kernels():
    def insert(payload, instance, rng, step_scale):
        elems = set(payload.elems)
        elems.add(int(rng.integers(0, payload.m)))
        return ResidueSet(m=payload.m, elems=tuple(sorted(elems)))

    def delete(payload, instance, rng, step_scale):
        elems = list(payload.elems)
        if len(elems) <= 1:
            return payload
        elems.pop(int(rng.integers(len(elems))))
        return ResidueSet(m=payload.m, elems=tuple(sorted(elems)))

    def move(payload, instance, rng, step_scale):
        elems = set(payload.elems)
        old = list(elems)[int(rng.integers(len(elems)))]
        elems.discard(old)
        elems.add((old + int(rng.integers(-10, 11))) % payload.m)
        return ResidueSet(m=payload.m, elems=tuple(sorted(elems)))

    return {"insert_element": insert, "delete_element": delete, "swap_or_flip": move}


register(ProblemSpec(
    name="fs_residue", payload_kind="residue_set", orientation="max",
    doc="Maximize the density exponent of a k-th-power-free difference set of residues.",
    evaluate=lambda p, inst: nt.eval_fs_residue(p, int(inst.get("k", 2))),
    random_init=lambda inst, rng: ResidueSet(m=int(inst.get("m", 205)), elems=(0,)),
    kernels=_residue_kernels(), default_instance={"m": 205, "k": 2},
    baseline=lambda params: nt.singer_difference_set(int(params["p"]))))


# --- entropy ratio ---------------------------------------------------------------------------------------------------

def _pmf_kernels():
    def reweight(payload, instance, rng, step_scale):
        w = np.asarray([float(x) for x in payload.probs])
        w = np.maximum(0.0, w + rng.normal(0.0, 0.05 * step_scale, len(w)))
        if w.sum() <= 0:
            w = np.ones(len(w))
        w /= w.sum()
        return JointPMF(support=payload.support, probs=tuple(map(float, w)))

    def move(payload, instance, rng, step_scale):
        grid = int(instance.get("grid", 4))
        support = list(payload.support)
        i = int(rng.integers(len(support)))
        x, y = support[i]
        cand = (int(float(x)) + int(rng.integers(-1, 2)), int(float(y)) + int(rng.integers(-1, 2)))
        cand = (max(-grid, min(grid, cand[0])), max(-grid, min(grid, cand[1])))
        if all((float(sx), float(sy)) != (float(cand[0]), float(cand[1])) for sx, sy in support):
            support[i] = cand
        return JointPMF(support=tuple(support), probs=payload.probs)

    return {"simplex_reweight": reweight, "block_translate": move}


def _pmf_init(instance, rng):
    grid = int(instance.get("grid", 4))
    size = int(instance.get("support_size", 9))
    pts = set()
    while len(pts) < size:
        pts.add((int(rng.integers(-grid, grid + 1)), int(rng.integers(-grid, grid + 1))))
    probs = rng.uniform(0.1, 1.0, size)
    probs /= probs.sum()
    return JointPMF(support=tuple(sorted(pts)), probs=tuple(map(float, probs)))


register(ProblemSpec(
    name="entropy_kakeya", payload_kind="joint_pmf", orientation="max",
    doc="Maximize target-projection entropy over the worst family-projection entropy.",
    evaluate=lambda p, inst: nt.eval_entropy_kakeya(
        p, inst.get("slopes", ["0", "1", "inf"]), inst.get("target", "-1")),
    random_init=_pmf_init, kernels=_pmf_kernels(),
    default_instance={"slopes": ["0", "1", "inf"], "target": "-1",
                      "grid": 4, "support_size": 9}))


# --- baseline and oracle directories ----------------------------------------------------------------------------------

BASELINES: dict[str, Callable[[dict], Construction]] = {
    "hl_maximal": hl_block_family,
    "block_stacking": lambda params: cp.baseline_harmonic_stack(int(params["n"])),
    "ff_kakeya": lambda params: nt.baseline_ff_kakeya_d3(int(params["p"])),
    "kakeya_area": _keich_baseline,
    "kakeya_s": _keich_baseline,
    "kissing": kissing_lattice_baseline,
    "spherical_design": design_orbit_baseline,
    "singer_difference_set": lambda params: nt.singer_difference_set(int(params["p"])),
}

ORACLES: dict[str, Callable[[dict], object]] = {
    "edp_prefix": lambda params: cp.oracle_edp_longest(int(params.get("bound", params.get("D", 1)))),
    "imo_tiling": lambda params: cp.oracle_imo_min_tiles(int(params["n"])),
    "difference_basis": lambda params: nt.oracle_difference_basis(int(params["n"])),
}
