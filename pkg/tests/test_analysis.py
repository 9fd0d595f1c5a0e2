import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

from evoconstruct import analysis_problems as ap
from evoconstruct.payloads import EigenCombo, HLInstance, StepFunction
from evoconstruct.registry import hl_block_family
from evoconstruct.scoring import Infeasible

Q = Fraction(1, 4)


def step(heights, domain=(-Q, Q), nonneg=True):
    return StepFunction(n=len(heights), heights=tuple(heights), domain=domain, nonneg=nonneg)


def brute_autoconv(f: StepFunction, t: float, samples: int = 20000) -> float:
    """Quadrature oracle for (f*f)(t), independent of the node construction."""
    a, b = float(f.domain[0]), float(f.domain[1])
    w = (b - a) / f.n
    xs = np.linspace(a + 1e-12, b - 1e-12, samples)

    def fx(x):
        idx = np.floor((x - a) / w).astype(int)
        inside = (x >= a) & (x < b)
        vals = np.zeros_like(x)
        hv = np.asarray([float(h) for h in f.heights])
        vals[inside] = hv[np.clip(idx[inside], 0, f.n - 1)]
        return vals

    return float(np.trapezoid(fx(xs) * fx(t - xs), xs))


class TestAutoconvNodes:
    def test_single_part_indicator(self):
        g = ap.autoconv_nodes(step([1]), exact=True)
        assert g.node_x == (Fraction(-1, 2), Fraction(0), Fraction(1, 2))
        assert g.node_y == (Fraction(0), Fraction(1, 2), Fraction(0))
        # independent quadrature oracle at the middle node
        assert brute_autoconv(step([1]), 0.0) == pytest.approx(0.5, abs=1e-4)

    def test_two_parts_single_product(self):
        g = ap.autoconv_nodes(step([1, 0]), exact=True)
        assert g.node_y == (Fraction(0), Fraction(1, 4), Fraction(0), Fraction(0), Fraction(0))

    def test_zero_heights(self):
        g = ap.autoconv_nodes(step([0, 0, 0]), exact=True)
        assert all(v == 0 for v in g.node_y)

    def test_nodes_match_quadrature(self):
        rng = np.random.default_rng(5)
        f = step(list(rng.uniform(0, 2, 7)))
        g = ap.autoconv_nodes(f)
        for k in (3, 7, 10):
            assert g.node_y[k] == pytest.approx(brute_autoconv(f, g.node_x[k]), abs=2e-3)

    def test_node_max_dominates_dense_grid(self):
        # piecewise-linear extremum property
        rng = np.random.default_rng(11)
        for _ in range(10):
            f = step(list(rng.uniform(0, 1, int(rng.integers(2, 12)))))
            g = ap.autoconv_nodes(f)
            xs = np.asarray(g.node_x)
            ys = np.asarray(g.node_y)
            grid = np.linspace(xs[0], xs[-1], 10_000)
            interp = np.interp(grid, xs, ys)
            assert interp.max() <= max(g.node_y) + 1e-12


class TestAutocorrelationScores:
    def test_c1_constant_function(self):
        assert ap.eval_autocorrelation(step([1] * 8), "c1_max_nonneg", exact=True) == 2

    def test_c1_scale_invariance_exact(self):
        f1 = step([Fraction(1, 3), Fraction(2, 3), Fraction(1, 6)])
        f2 = step([Fraction(5, 3), Fraction(10, 3), Fraction(5, 6)])
        a = ap.eval_autocorrelation(f1, "c1_max_nonneg", exact=True)
        b = ap.eval_autocorrelation(f2, "c1_max_nonneg", exact=True)
        assert a == b

    def test_c1_domain_enforced(self):
        with pytest.raises(Infeasible):
            ap.eval_autocorrelation(step([1], domain=(0, 1)), "c1_max_nonneg")

    def test_c1_lower_bound_on_random_candidates(self):
        # every candidate ratio upper-bounds the true constant, known >= 1.28
        rng = np.random.default_rng(0)
        for _ in range(200):
            f = step(list(rng.uniform(0, 1, int(rng.integers(1, 20)))))
            if sum(float(h) for h in f.heights) == 0:
                continue
            assert ap.eval_autocorrelation(f, "c1_max_nonneg") >= 1.28 - 1e-6

    def test_c3_signed_uses_absolute_value(self):
        f = step([1, Fraction(-1, 2)], nonneg=False)
        v = ap.eval_autocorrelation(f, "c3_max_signed", exact=True)
        g = ap.autoconv_nodes(f, exact=True)
        assert v == max(abs(y) for y in g.node_y) / (f.width * Fraction(1, 2)) ** 2

    def test_c6_unit_indicator(self):
        f = StepFunction(n=1, heights=(1,), domain=(0, 1))
        assert ap.eval_autocorrelation(f, "c6_min_corr", exact=True) == 0

    def test_c6_upper_bound_on_random_candidates(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(1, 15))
            f = StepFunction(n=n, heights=tuple(rng.uniform(0.01, 1, n)), domain=(0, 2))
            assert ap.eval_autocorrelation(f, "c6_min_corr") <= 0.411 + 1e-6

    def test_exact_and_float_agree(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(1, 10))
            heights = [Fraction(int(rng.integers(0, 50)), 7) for _ in range(n)]
            if all(h == 0 for h in heights):
                continue
            f = step(heights)
            exact = ap.eval_autocorrelation(f, "c1_max_nonneg", exact=True)
            approx = ap.eval_autocorrelation(f, "c1_max_nonneg")
            assert approx == pytest.approx(float(exact), rel=1e-9)


class TestNormRatio:
    def test_single_part(self):
        assert ap.eval_autoconv_norm_ratio(step([1]), exact=True) == Fraction(2, 3)

    def test_homogeneity(self):
        f1 = step([Fraction(1, 2), Fraction(1, 5)])
        f2 = step([1, Fraction(2, 5)])
        assert (ap.eval_autoconv_norm_ratio(f1, exact=True)
                == ap.eval_autoconv_norm_ratio(f2, exact=True))

    def test_bounded_by_one(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            f = step(list(rng.uniform(0, 1, int(rng.integers(1, 25)))))
            if sum(float(h) for h in f.heights) == 0:
                continue
            assert ap.eval_autoconv_norm_ratio(f) <= 1 + 1e-12


class TestMinOverlap:
    def test_constant_half(self):
        f = StepFunction(n=4, heights=(Fraction(1, 2),) * 4, domain=(-1, 1))
        assert ap.eval_min_overlap(f, exact=True) == Fraction(1, 2)

    def test_left_indicator(self):
        f = StepFunction(n=2, heights=(1, 0), domain=(-1, 1))
        assert ap.eval_min_overlap(f, exact=True) == 1

    def test_wrong_integral_rejected(self):
        f = StepFunction(n=2, heights=(Fraction(1, 4), Fraction(1, 4)), domain=(-1, 1))
        with pytest.raises(Infeasible):
            ap.eval_min_overlap(f)

    def test_literature_floor_on_random_candidates(self):
        from evoconstruct.registry import _overlap_repair
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            h = _overlap_repair(rng.uniform(0, 1, n))
            f = StepFunction(n=n, heights=tuple(float(v) for v in h), domain=(-1, 1))
            assert ap.eval_min_overlap(f) >= 0.379005 - 1e-6


class TestIntervalUnionRatio:
    def test_single_interval(self):
        assert ap.eval_hl_maximal(HLInstance(y=(5,), k=(2,)), exact=True) == 1

    def test_two_blocks(self):
        assert ap.eval_hl_maximal(HLInstance(y=(3, 6), k=(1, 1)), exact=True) == Fraction(5, 4)

    def test_unit_family_exact(self):
        assert ap.eval_hl_maximal(hl_block_family({"n": 100}), exact=True) == Fraction(299, 200)

    def test_solved_constant_upper_bound(self):
        rng = np.random.default_rng(6)
        bound = (11 + math.sqrt(61)) / 12
        for _ in range(300):
            n = int(rng.integers(1, 10))
            y = tuple(np.cumsum(rng.uniform(0.1, 3.0, n)))
            k = tuple(rng.uniform(0.05, 2.0, n))
            assert ap.eval_hl_maximal(HLInstance(y=y, k=k)) <= bound + 1e-9


class TestSignChangeBound:
    def test_scale_invariance(self):
        c1 = EigenCombo(coeffs=(0.32925, -0.01159, -8.9216e-5))
        c2 = EigenCombo(coeffs=(0.6585, -0.02318, -1.78432e-4))
        assert (ap.eval_uncertainty_sign_change(c1)
                == pytest.approx(ap.eval_uncertainty_sign_change(c2), rel=1e-12))

    def test_single_eigenfunction_infeasible(self):
        # the pure Gaussian has no sign change at all
        with pytest.raises(Infeasible):
            ap.eval_uncertainty_sign_change(EigenCombo(coeffs=(1.0,)))

    def test_wrong_origin_sign_infeasible(self):
        # tail-normalized positive at the origin
        with pytest.raises(Infeasible):
            ap.eval_uncertainty_sign_change(EigenCombo(coeffs=(1.0, 0.2)))


@settings(max_examples=60, deadline=None)
@given(hst.lists(hst.fractions(min_value=0, max_value=3), min_size=1, max_size=10))
def test_ratio_scores_accept_rational_heights(heights):
    f = step(heights)
    if sum(heights) == 0:
        return
    exact = ap.eval_autocorrelation(f, "c1_max_nonneg", exact=True)
    assert float(exact) == pytest.approx(
        ap.eval_autocorrelation(f, "c1_max_nonneg"), rel=1e-9)
