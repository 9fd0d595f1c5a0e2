import math
from fractions import Fraction

import numpy as np
import pytest

from evoconstruct import geometry_problems as gp
from evoconstruct.payloads import (DiskSet, KakeyaOffsets, PlanePoints,
                                   PoseSet, SpherePoints)
from evoconstruct.registry import design_orbit_baseline, kissing_lattice_baseline
from evoconstruct.scoring import Infeasible

SQ3 = math.sqrt(3.0)


def random_rotation(rng):
    m = rng.normal(size=(3, 3))
    q, _ = np.linalg.qr(m)
    return q


class TestSphereIngestion:
    def test_normalization_idempotent_bitwise(self):
        rng = np.random.default_rng(0)
        pts = SpherePoints(d=3, points=tuple(map(tuple, rng.normal(size=(6, 3)))))
        once = gp.normalize_points(pts)
        twice = gp.normalize_points(once)
        assert once.points == twice.points

    def test_zero_vector_rejected(self):
        with pytest.raises(Infeasible):
            gp.normalize_points(SpherePoints(d=2, points=((0.0, 0.0),)))


class TestKissing:
    def test_builtin_configurations_have_zero_penalty(self):
        for d, n in ((1, 2), (2, 6), (3, 12), (4, 24)):
            cfg = kissing_lattice_baseline({"d": d})
            assert cfg.n == n
            assert gp.eval_kissing(cfg) <= 1e-13

    def test_coincident_pair(self):
        cfg = SpherePoints(d=2, points=((2.0, 0.0), (2.0, 0.0)))
        assert gp.eval_kissing(cfg) == pytest.approx(2.0)

    def test_single_point_scores_zero(self):
        assert gp.eval_kissing(SpherePoints(d=3, points=((1.0, 0, 0),))) == 0.0

    def test_rotation_invariance(self):
        rng = np.random.default_rng(1)
        cfg = kissing_lattice_baseline({"d": 3})
        base = np.asarray(cfg.float_points())
        rot = base @ random_rotation(rng).T
        rotated = SpherePoints(d=3, points=tuple(map(tuple, rot)))
        assert gp.eval_kissing(rotated) == pytest.approx(gp.eval_kissing(cfg), abs=1e-12)


class TestNeedleShapes:
    def test_single_triangle_area(self):
        off = KakeyaOffsets(n=1, x=(0,), shape="triangle")
        assert gp.kakeya_union_area(off, exact=True) == Fraction(1, 2)

    def test_single_parallelogram_area(self):
        off = KakeyaOffsets(n=1, x=(0,), shape="parallelogram")
        assert gp.kakeya_union_area(off, exact=True) == 1

    def test_bit_weighted_offsets_small(self):
        assert gp.baseline_keich(1).x == (Fraction(0), Fraction(0))
        assert gp.baseline_keich(2).x == (Fraction(0), Fraction(-1, 8),
                                          Fraction(0), Fraction(-1, 8))

    def test_baseline_beats_zero_offsets(self):
        n = 16
        keich = gp.baseline_keich(4)
        zero = KakeyaOffsets(n=n, x=(0,) * n, shape="triangle")
        assert gp.kakeya_union_area(keich) < gp.kakeya_union_area(zero)

    def test_baseline_areas_decrease(self):
        areas = [float(gp.kakeya_union_area(gp.baseline_keich(k))) for k in range(2, 8)]
        assert all(b < a for a, b in zip(areas, areas[1:]))

    def test_union_between_max_shape_and_total(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(1, 9))
            off = KakeyaOffsets(n=n, x=tuple(rng.normal(0, 0.4, n)), shape="triangle")
            area = gp.kakeya_union_area(off)
            assert 1 / (2 * n) - 1e-12 <= area <= 0.5 + 1e-12

    def test_total_triangle_area_exact_half(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            n = int(rng.integers(1, 7))
            off = KakeyaOffsets(
                n=n, x=tuple(Fraction(int(rng.integers(-8, 8)), 16) for _ in range(n)))
            assert gp.kakeya_total_shape_area(off, exact=True) == Fraction(1, 2)

    def test_s_score_single_shape_is_one(self):
        assert gp.kakeya_s_score(KakeyaOffsets(n=1, x=(0.37,))) == pytest.approx(1.0)

    def test_s_score_cauchy_schwarz_bound(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = int(rng.integers(1, 8))
            shape = "triangle" if rng.random() < 0.5 else "parallelogram"
            off = KakeyaOffsets(n=n, x=tuple(rng.normal(0, 0.5, n)), shape=shape)
            assert gp.kakeya_s_score(off) <= 1 + 1e-12

    def test_union_area_matches_monte_carlo(self):
        rng = np.random.default_rng(5)
        for _ in range(3):
            n = int(rng.integers(2, 6))
            off = KakeyaOffsets(n=n, x=tuple(rng.normal(0, 0.3, n)), shape="triangle")
            area = float(gp.kakeya_union_area(off))
            lefts, rights = gp._slice_lines(off, exact=False)
            xs_lo = min(c for c, s in lefts + rights) - 1.0
            xs_hi = max(c + s for c, s in lefts + rights) + 1.0
            m = 1_000_000
            px = rng.uniform(xs_lo, xs_hi, m)
            py = rng.uniform(0.0, 1.0, m)
            inside = np.zeros(m, dtype=bool)
            for (lc, ls), (rc, rs) in zip(lefts, rights):
                inside |= (px >= lc + ls * py) & (px <= rc + rs * py)
            est = inside.mean() * (xs_hi - xs_lo)
            sigma = (xs_hi - xs_lo) * math.sqrt(max(inside.mean() * (1 - inside.mean()), 1e-12) / m)
            assert abs(est - area) <= 3 * sigma + 1e-9


class TestSphericalDesigns:
    def test_single_point_degree_one(self):
        assert gp.eval_spherical_design(
            SpherePoints(d=3, points=((1.0, 0, 0),)), 1) == pytest.approx(3.0)

    def test_octahedron_is_three_design(self):
        octa = design_orbit_baseline({"d": 3})
        assert abs(gp.eval_spherical_design(octa, 3)) < 1e-10

    def test_octahedron_against_monomial_oracle(self):
        # brute-force check: point averages of all monomials of degree <= 3
        # match the sphere averages (odd ones vanish; x^2 averages to 1/3)
        pts = np.asarray(design_orbit_baseline({"d": 3}).float_points())
        for ex, ey, ez in [(a, b, c) for a in range(4) for b in range(4) for c in range(4)
                           if 0 < a + b + c <= 3]:
            avg = np.mean(pts[:, 0] ** ex * pts[:, 1] ** ey * pts[:, 2] ** ez)
            if ex % 2 or ey % 2 or ez % 2:
                expected = 0.0
            elif (ex, ey, ez) in ((2, 0, 0), (0, 2, 0), (0, 0, 2)):
                expected = 1.0 / 3.0
            else:
                expected = None
            if expected is not None:
                assert avg == pytest.approx(expected, abs=1e-12)

    def test_regular_polygons_are_circle_designs(self):
        for t in range(1, 11):
            gon = design_orbit_baseline({"d": 2, "t": t})
            assert abs(gp.eval_spherical_design(gon, t)) < 1e-10

    def test_unsupported_dimension(self):
        pts = SpherePoints(d=5, points=((1.0, 0, 0, 0, 0),))
        with pytest.raises(Exception):
            gp.eval_spherical_design(pts, 2)


class TestEnergyScores:
    def test_antipodal_pair_energy(self):
        pts = SpherePoints(d=3, points=((0, 0, 1.0), (0, 0, -1.0)))
        assert gp.eval_thomson(pts) == pytest.approx(0.5)

    def test_bipyramid_matches_reference(self):
        pts = SpherePoints(d=3, points=((0, 0, 1), (0, 0, -1), (1, 0, 0),
                                        (-0.5, SQ3 / 2, 0), (-0.5, -SQ3 / 2, 0)))
        assert gp.eval_thomson(pts) == pytest.approx(6.474691495, abs=1e-9)

    def test_coincident_infeasible(self):
        with pytest.raises(Infeasible):
            gp.eval_thomson(SpherePoints(d=3, points=((0, 0, 1.0), (0, 0, 1.0))))

    def test_tammes_antipodal(self):
        assert gp.eval_tammes(SpherePoints(d=3, points=((0, 0, 1.0), (0, 0, -1.0)))) == 2.0

    def test_tammes_triangle_and_tetrahedron(self):
        tri = SpherePoints(d=3, points=((1, 0, 0), (-0.5, SQ3 / 2, 0), (-0.5, -SQ3 / 2, 0)))
        assert gp.eval_tammes(tri) == pytest.approx(SQ3, abs=1e-12)
        tet = SpherePoints(d=3, points=((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)))
        assert gp.eval_tammes(tet) == pytest.approx(math.sqrt(8 / 3), abs=1e-12)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(7)
        pts = gp.normalize_points(
            SpherePoints(d=3, points=tuple(map(tuple, rng.normal(size=(6, 3))))))
        rot = np.asarray(pts.float_points()) @ random_rotation(rng).T
        rpts = SpherePoints(d=3, points=tuple(map(tuple, rot)))
        assert gp.eval_thomson(rpts) == pytest.approx(gp.eval_thomson(pts), abs=1e-11)
        assert gp.eval_tammes(rpts) == pytest.approx(gp.eval_tammes(pts), abs=1e-12)

    def test_reference_values_are_extremal(self):
        # the tabulated five-point energy is a global minimum and the
        # three-point separation a global maximum
        rng = np.random.default_rng(8)
        for _ in range(300):
            pts5 = SpherePoints(d=3, points=tuple(map(tuple, rng.normal(size=(5, 3)))))
            try:
                assert gp.eval_thomson(pts5) >= 6.474691495 - 1e-9
            except Infeasible:
                pass
            pts3 = SpherePoints(d=3, points=tuple(map(tuple, rng.normal(size=(3, 3)))))
            assert gp.eval_tammes(pts3) <= 1.73205081 + 1e-9


class TestPackings:
    def test_single_hexagon(self):
        scale, penalty = gp.eval_pack_dilate(PoseSet(shape="hexagon", poses=((0, 0, 0.0),)))
        assert penalty == 0.0
        assert scale == pytest.approx(1.0, abs=2e-9)

    def test_coincident_squares_full_overlap(self):
        scale, penalty = gp.eval_pack_dilate(
            PoseSet(shape="square", poses=((0, 0, 0.0), (0, 0, 0.0))))
        assert penalty == pytest.approx(1.0, abs=1e-12)
        assert scale == pytest.approx(1.0, abs=2e-9)

    def test_disjoint_squares_no_penalty(self):
        scale, penalty = gp.eval_pack_dilate(
            PoseSet(shape="square", poses=((0, 0, 0.0), (2, 0, 0.0))))
        assert penalty == 0.0
        assert scale == pytest.approx(3.0, abs=2e-9)

    def test_two_cubes_overlap_volume(self):
        half = gp.eval_pack_dilate(
            PoseSet(shape="cube", poses=((0, 0, 0, 0, 0, 0.0), (0.5, 0, 0, 0, 0, 0.0))))
        assert half[1] == pytest.approx(0.5, abs=1e-6)

    def test_circle_sum_optimum_n1(self):
        assert gp.eval_pack_circles_sum(DiskSet(disks=((0.5, 0.5, 0.5),))) == 0.5

    def test_two_quarter_disks(self):
        ds = DiskSet(disks=((0.25, 0.25, 0.25), (0.75, 0.75, 0.25)))
        assert gp.eval_pack_circles_sum(ds) == 0.5

    def test_overlapping_pair_reports_indices(self):
        ds = DiskSet(disks=((0.3, 0.5, 0.25), (0.7, 0.5, 0.2500001)))
        with pytest.raises(Infeasible) as err:
            gp.eval_pack_circles_sum(ds)
        assert err.value.details["pair"] == (0, 1)

    def test_outside_square_rejected(self):
        with pytest.raises(Infeasible):
            gp.eval_pack_circles_sum(DiskSet(disks=((0.1, 0.5, 0.2),)))


class TestPlaneScores:
    def test_corner_triangle(self):
        pp = PlanePoints(points=((0, 0), (1, 0), (0, 1)), frame="unit_square")
        assert gp.eval_heilbronn(pp, "box") == pytest.approx(0.5)

    def test_collinear_triple_scores_zero(self):
        pp = PlanePoints(points=((0, 0), (0.5, 0.5), (1, 1), (0.3, 0.9)), frame="unit_square")
        assert gp.eval_heilbronn(pp, "box") == 0.0

    def test_hull_variant(self):
        pp = PlanePoints(points=((0, 0), (1, 0), (0, 1), (1, 1)))
        # each triangle has area 1/2, hull area 1
        assert gp.eval_heilbronn(pp, "hull") == pytest.approx(0.5)

    def test_degenerate_hull_infeasible(self):
        pp = PlanePoints(points=((0, 0), (0.5, 0.5), (1, 1)))
        with pytest.raises(Infeasible):
            gp.eval_heilbronn(pp, "hull")

    def test_triangle_frame_projection(self):
        pp = PlanePoints(points=((5, 5), (-1, -1), (0.4, 0.2)),
                         frame="unit_area_equilateral_triangle")
        proj = gp.project_into_frame(pp)
        tri = gp._EQ_TRI
        for x, y in proj.points:
            assert -1e-9 <= y <= tri[2][1] + 1e-9

    def test_maxmin_pair(self):
        assert gp.eval_maxmin_ratio(PlanePoints(points=((0, 0), (3, 4)))) == 1.0

    def test_maxmin_unit_square(self):
        pp = PlanePoints(points=((0, 0), (1, 0), (0, 1), (1, 1)))
        assert gp.eval_maxmin_ratio(pp) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_maxmin_hexagon_center(self):
        pts = [(math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)) for k in range(6)]
        pts.append((0.0, 0.0))
        assert gp.eval_maxmin_ratio(PlanePoints(points=tuple(pts))) == pytest.approx(2.0, abs=1e-12)

    def test_maxmin_coincident_infeasible(self):
        with pytest.raises(Infeasible):
            gp.eval_maxmin_ratio(PlanePoints(points=((1, 1), (1, 1))))
