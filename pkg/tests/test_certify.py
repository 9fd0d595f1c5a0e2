import math
from fractions import Fraction
from math import isqrt

import numpy as np
import pytest

from evoconstruct.certify import (ScoreInterval, certificate_json, certify,
                                  certify_with_instance, construction_hash)
from evoconstruct.payloads import (DiskSet, EigenCombo, HLInstance, IntSet,
                                   KakeyaOffsets, PlanePoints, PoseSet,
                                   RingInstance, SignSeq, SpherePoints, Stack,
                                   StepFunction, Tiling, WeightedHypergraph,
                                   as_fraction)
from evoconstruct.registry import (get_problem, hl_block_family,
                                   kissing_lattice_baseline)
from evoconstruct.scoring import UnsupportedInstance


def sqrt_frac(n, digits=40):
    s = 10 ** digits
    return Fraction(isqrt(n * s * s), s)


def assert_encloses_float(problem_id, payload, instance=None):
    problem = get_problem(problem_id)
    inst = problem.merged_instance(instance or {})
    report = problem.evaluate_report(payload, inst)
    assert report.feasible
    si = certify_with_instance(problem_id, payload, inst, 256)
    val = as_fraction(report.raw_score)
    slack = Fraction(1, 10 ** 9)
    assert si.lo - slack <= val <= si.hi + slack, (problem_id, float(si.lo), report.raw_score, float(si.hi))
    return si


class TestExactPaths:
    def test_blowup_reference_value(self):
        h = WeightedHypergraph(weights=(Fraction(1, 3),) * 3,
                               edges=((0, 0, 1), (0, 1, 2), (1, 1, 2), (0, 2, 2)))
        si = certify("turan_blowup", h)
        assert si.method == "exact_rational"
        assert si.lo == si.hi == Fraction(5, 9)

    def test_interval_union_family(self):
        si = certify("hl_maximal", hl_block_family({"n": 100}))
        assert si.lo == Fraction(299, 200)

    def test_merit_factor(self):
        barker = SignSeq(a=(1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1))
        assert certify("golay_merit", barker).lo == Fraction(169, 12)

    def test_precision_range_enforced(self):
        with pytest.raises(UnsupportedInstance):
            certify("golay_merit", SignSeq(a=(1, 1)), precision_bits=32)


class TestKissingCertificates:
    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_builtin_configurations_below_threshold(self, d):
        cfg = kissing_lattice_baseline({"d": d})
        si = certify("kissing", cfg, 256)
        assert si.hi < Fraction(1, 10 ** 20)

    def test_enclosure_collapses_at_high_precision(self):
        cfg = kissing_lattice_baseline({"d": 2})
        si = certify("kissing", cfg, 256)
        assert si.width < Fraction(1, 10 ** 30)


class TestIntervalPaths:
    def test_thomson_reference_width(self):
        h = sqrt_frac(3) / 2
        bipyr = SpherePoints(d=3, points=((0, 0, 1), (0, 0, -1), (1, 0, 0),
                                          (Fraction(-1, 2), h, 0), (Fraction(-1, 2), -h, 0)))
        si = certify("thomson", bipyr, 128)
        assert si.width < Fraction(1, 10 ** 20)
        mid = (si.lo + si.hi) / 2
        assert abs(float(mid) - 6.474691495) < 1e-8

    def test_design_threshold(self):
        octa = SpherePoints(d=3, points=((1, 0, 0), (-1, 0, 0), (0, 1, 0),
                                         (0, -1, 0), (0, 0, 1), (0, 0, -1)))
        si = certify_with_instance("spherical_design", octa, {"t": 3, "n": 6, "d": 3})
        assert si.hi < Fraction(1, 10 ** 8)

    def test_width_contraction_with_precision(self):
        h = sqrt_frac(3) / 2
        tri = SpherePoints(d=3, points=((1, 0, 0), (Fraction(-1, 2), h, 0),
                                        (Fraction(-1, 2), -h, 0)))
        widths = [certify("tammes", tri, bits).width for bits in (64, 128, 256, 512)]
        assert all(b <= a for a, b in zip(widths, widths[1:]))

    def test_certificate_json_fields(self):
        cfg = kissing_lattice_baseline({"d": 1})
        si = certify("kissing", cfg, 256)
        cert = certificate_json("kissing", cfg, si)
        assert set(cert) == {"problem", "score_lo", "score_hi", "bits", "method",
                             "construction_hash"}
        assert float(cert["score_lo"]) <= float(cert["score_hi"])
        assert cert["construction_hash"] == construction_hash(cfg)
        assert len(cert["construction_hash"]) == 16


class TestEnclosureSoundness:
    """Per-problem samples: the float score sits inside the padded enclosure."""

    def test_step_family(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(1, 12))
            f = StepFunction(n=n, heights=tuple(rng.uniform(0, 1, n)),
                             domain=(Fraction(-1, 4), Fraction(1, 4)))
            if sum(float(x) for x in f.heights) == 0:
                continue
            assert_encloses_float("autocorr_c1", f)
            assert_encloses_float("autoconv_ratio", f)

    def test_interval_union(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            n = int(rng.integers(1, 8))
            inst = HLInstance(y=tuple(np.cumsum(rng.uniform(0.2, 3, n))),
                              k=tuple(rng.uniform(0.1, 2, n)))
            assert_encloses_float("hl_maximal", inst)

    def test_geometry_family(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            pts = SpherePoints(d=3, points=tuple(map(tuple, rng.normal(size=(5, 3)))))
            assert_encloses_float("thomson", pts, {"n": 5})
            assert_encloses_float("tammes", pts, {"n": 5})
            assert_encloses_float("kissing", pts, {"n": 5, "d": 3})
        for _ in range(10):
            pp = PlanePoints(points=tuple(map(tuple, rng.uniform(0, 1, (5, 2)))),
                             frame="unit_square")
            assert_encloses_float("heilbronn_box", pp, {"n": 5, "frame": "unit_square"})
            free = PlanePoints(points=pp.points, frame="free")
            assert_encloses_float("maxmin_ratio", free, {"n": 5, "d": 2})

    def test_needle_and_discrete_family(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(1, 6))
            off = KakeyaOffsets(n=n, x=tuple(rng.normal(0, 0.4, n)))
            assert_encloses_float("kakeya_area", off)
            assert_encloses_float("kakeya_s", off)
        for _ in range(10):
            elems = sorted({int(v) for v in rng.integers(-40, 40, 8)})
            if len(elems) < 3:
                continue
            assert_encloses_float("sumdiff_42", IntSet(elems=tuple(elems)))

    def test_pose_and_disk_family(self):
        rng = np.random.default_rng(4)
        for _ in range(8):
            poses = tuple((float(rng.uniform(0, 4)), float(rng.uniform(0, 4)),
                           float(rng.uniform(0, math.pi))) for _ in range(3))
            ps = PoseSet(shape="hexagon", poses=poses)
            assert_encloses_float("pack_dilate", ps, {"shape": "hexagon", "n": 3})
        grid = DiskSet(disks=((0.25, 0.25, 0.2), (0.75, 0.75, 0.2)))
        assert_encloses_float("pack_circles_sum", grid)

    def test_stack_ring_and_edp(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(1, 8))
            ramp = 0.5 * np.arange(1, n + 1) / n
            assert_encloses_float("block_stacking", Stack(positions=tuple(map(float, ramp))))
            u = rng.uniform(0, 1, n)
            v = rng.uniform(0, 1 - u)
            assert_encloses_float("ring_loading", RingInstance(u=tuple(u), v=tuple(v)))
            signs = SignSeq(a=tuple(int(x) for x in rng.choice((-1, 1), 20)))
            assert_encloses_float("edp_prefix", signs, {"bound": 1})

    def test_uncertainty_bracket(self):
        c = EigenCombo(coeffs=(0.32925, -0.01159, -8.9216e-5))
        si = assert_encloses_float("uncertainty", c)
        assert si.width < Fraction(1, 10 ** 6)
