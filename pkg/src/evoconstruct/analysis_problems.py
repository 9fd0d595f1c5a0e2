"""Evaluators over discretized one-dimensional functions.

Covers the autocorrelation ratio family, the minimum-overlap constant, the
interval-union form of the centered maximal-function constant, and the
sign-change bound for self-dual Gaussian-weighted test functions.

Step functions have exactly piecewise-linear self-convolutions, so every
extremum here is taken over a finite node lattice; with rational inputs the
whole computation stays in exact rational arithmetic.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .payloads import EigenCombo, HLInstance, PiecewiseLinear, StepFunction, as_fraction
from .scoring import Infeasible

QUARTER = Fraction(1, 4)


def _exact_heights(f: StepFunction) -> list[Fraction]:
    return [as_fraction(h) for h in f.heights]


def autoconv_nodes(f: StepFunction, exact: bool = False) -> PiecewiseLinear:
    """Self-convolution of a step function as its exact piecewise-linear form.

    Nodes sit at t_k = 2a + k*width for k = 0..2n; the value at an interior
    node is width * sum_{i+j=k-1} h_i h_j (the boundary nodes are 0).
    """
    a = as_fraction(f.domain[0])
    w = f.width
    n = f.n
    if exact:
        h = _exact_heights(f)
        conv = [Fraction(0)] * (2 * n - 1)
        for i, hi in enumerate(h):
            if hi == 0:
                continue
            for j, hj in enumerate(h):
                conv[i + j] += hi * hj
        values: list = [Fraction(0)] + [w * c for c in conv] + [Fraction(0)]
        xs: list = [2 * a + k * w for k in range(2 * n + 1)]
        return PiecewiseLinear(tuple(xs), tuple(values))
    hf = np.asarray([float(v) for v in f.heights])
    conv = np.convolve(hf, hf) if n > 1 else hf * hf
    wf = float(w)
    values = np.concatenate(([0.0], wf * conv, [0.0]))
    xs = 2 * float(a) + wf * np.arange(2 * n + 1)
    return PiecewiseLinear(tuple(xs.tolist()), tuple(values.tolist()))


def _integral(f: StepFunction, exact: bool):
    if exact:
        return f.width * sum(_exact_heights(f))
    return float(f.width) * float(np.sum([float(h) for h in f.heights]))


def _require_quarter_domain(f: StepFunction):
    a, b = as_fraction(f.domain[0]), as_fraction(f.domain[1])
    if a != -QUARTER or b != QUARTER:
        raise Infeasible("domain must be (-1/4, 1/4) for this variant")


def eval_autocorrelation(f: StepFunction, variant: str, exact: bool = False):
    """Autocorrelation ratio scores.

    c1_max_nonneg: max_t (f*f)(t) / (int f)^2 for non-negative f on (-1/4, 1/4).
    c3_max_signed: max_t |f*f(t)| / (int f)^2, signed f on the same domain.
    c6_min_corr:   min_{0<=t<=1} int f(x)f(x+t) dx / ||f||_1^2, non-negative f.
    """
    if variant == "c1_max_nonneg":
        if not f.nonneg:
            raise Infeasible("variant requires a non-negative function")
        _require_quarter_domain(f)
        g = autoconv_nodes(f, exact=exact)
        total = _integral(f, exact)
        if total == 0:
            raise Infeasible("integral of f is zero")
        return max(g.node_y) / total**2
    if variant == "c3_max_signed":
        _require_quarter_domain(f)
        g = autoconv_nodes(f, exact=exact)
        total = _integral(f, exact)
        if total == 0:
            raise Infeasible("integral of f is zero")
        return max(abs(v) for v in g.node_y) / total**2
    if variant == "c6_min_corr":
        if not f.nonneg:
            raise Infeasible("variant requires a non-negative function")
        return _min_correlation_ratio(f, exact)
    raise ValueError(f"unknown autocorrelation variant {variant!r}")


def _min_correlation_ratio(f: StepFunction, exact: bool):
    """min over t in [0, 1] of corr(t) = int f(x) f(x+t) dx, over ||f||_1^2.

    corr is piecewise linear with nodes at multiples of the part width, so the
    minimum over [0, 1] is attained on the clipped node lattice plus the two
    interval endpoints.
    """
    w = f.width if exact else float(f.width)
    h = _exact_heights(f) if exact else [float(v) for v in f.heights]
    n = f.n
    norm1 = _integral(f, exact)
    if norm1 == 0:
        raise Infeasible("f is identically zero")

    def corr_at_lag(k: int):
        if k >= n:
            return w * 0
        return w * sum(h[i] * h[i + k] for i in range(n - k))

    def corr(t):
        if t >= n * w:
            return 0 * w
        k = int(t // w)
        frac = (t - k * w) / w
        c0, c1 = corr_at_lag(k), corr_at_lag(k + 1)
        return c0 + (c1 - c0) * frac

    one = Fraction(1) if exact else 1.0
    candidates = [corr(one * 0), corr(one)]
    k = 1
    while k * w < 1:
        candidates.append(corr_at_lag(k))
        k += 1
    return min(candidates) / norm1**2


def eval_autoconv_norm_ratio(f: StepFunction, exact: bool = False):
    """||f*f||_2^2 / (||f*f||_1 ||f*f||_inf) with all three norms exact."""
    if not f.nonneg:
        raise Infeasible("ratio requires a non-negative function")
    total = _integral(f, exact)
    if total == 0:
        raise Infeasible("f is identically zero")
    g = autoconv_nodes(f, exact=exact)
    norm1 = total**2
    norm_inf = max(g.node_y)
    w = f.width if exact else float(f.width)
    ys = g.node_y
    three = Fraction(3) if exact else 3.0
    norm2_sq = sum(w * (ys[i] ** 2 + ys[i] * ys[i + 1] + ys[i + 1] ** 2) / three
                   for i in range(len(ys) - 1))
    return norm2_sq / (norm1 * norm_inf)


def eval_min_overlap(f: StepFunction, exact: bool = False):
    """Max cross-correlation of f against 1 - f on (-1, 1), shift range [-2, 2].

    The cross-correlation of two step functions on the same lattice is
    piecewise linear in the shift, so the maximum is taken on the lattice.
    """
    a, b = as_fraction(f.domain[0]), as_fraction(f.domain[1])
    if a != -1 or b != 1:
        raise Infeasible("minimum-overlap candidates live on (-1, 1)")
    hx = _exact_heights(f)
    if any(h < 0 or h > 1 for h in hx):
        raise Infeasible("heights must lie in [0, 1]")
    total = f.width * sum(hx)
    if abs(float(total) - 1.0) > 1e-12:
        raise Infeasible("integral of f must be 1", integral=float(total))
    if exact:
        w = f.width
        fh = hx
        gh = [1 - v for v in hx]
    else:
        w = float(f.width)
        fh = [float(v) for v in hx]
        gh = [1.0 - float(v) for v in hx]
    n = f.n
    # xcorr(s*w) = w * sum_i f_i g_{i+s}, s = -n..n; |s*w| <= 2 always here.
    best = None
    for s in range(-n, n + 1):
        acc = 0 * w
        for i in range(n):
            j = i + s
            if 0 <= j < n:
                acc += fh[i] * gh[j]
        val = w * acc
        if best is None or val > best:
            best = val
    return best


def eval_hl_maximal(inst: HLInstance, exact: bool = False):
    """Interval-union ratio |union of [y_j - S_ij, y_i + S_ij]| / (2 sum k).

    S_ij is the radius sum k_i + ... + k_j over 1 <= i <= j <= n; inverted
    intervals are dropped. Exact for rational inputs.
    """
    if not exact:
        return _hl_maximal_fast(inst)
    y = [as_fraction(v) for v in inst.y]
    k = [as_fraction(v) for v in inst.k]
    n = len(y)
    prefix = [0 * k[0]]
    for v in k:
        prefix.append(prefix[-1] + v)
    intervals = []
    for i in range(n):
        for j in range(i, n):
            s = prefix[j + 1] - prefix[i]
            lo, hi = y[j] - s, y[i] + s
            if lo <= hi:
                intervals.append((lo, hi))
    intervals.sort()
    measure = 0 * k[0]
    cur_lo, cur_hi = intervals[0]
    for lo, hi in intervals[1:]:
        if lo <= cur_hi:
            if hi > cur_hi:
                cur_hi = hi
        else:
            measure += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
    measure += cur_hi - cur_lo
    return measure / (2 * prefix[-1])


def _hl_maximal_fast(inst: HLInstance) -> float:
    y = np.asarray([float(v) for v in inst.y])
    k = np.asarray([float(v) for v in inst.k])
    n = len(y)
    prefix = np.concatenate(([0.0], np.cumsum(k)))
    radius = prefix[None, 1:] - prefix[:-1, None]      # radius[i, j] = k_i + ... + k_j
    lo = y[None, :] - radius
    hi = y[:, None] + radius
    keep = np.triu(np.ones((n, n), dtype=bool)) & (lo <= hi)
    lo, hi = lo[keep], hi[keep]
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    running_end = np.maximum.accumulate(hi)
    prev_end = np.concatenate(([-np.inf], running_end[:-1]))
    measure = np.maximum(0.0, hi - np.maximum(lo, prev_end)).sum()
    return float(measure / (2.0 * prefix[-1]))


# --- sign-change bound for self-dual test functions -------------------------

def _hermite_eigenpoly_coeffs(m: int) -> list[list[int]]:
    """Coefficients (in u = 2*pi*x^2) of the degree-4k Hermite polynomials
    H_{4k}(sqrt(2*pi) x) for k = 0..m-1; these span the +1 eigenspace of the
    Fourier transform after multiplying by exp(-pi x^2).
    """
    # physicists' recurrence in y, then substitute y^2 = u (only even powers appear)
    polys = []
    h_prev = [1]            # H_0
    h_cur = [0, 2]          # H_1
    table = [h_prev, h_cur]
    for nn in range(1, 4 * (m - 1) + 1 if m > 1 else 1):
        nxt = [0] * (nn + 2)
        for i, c in enumerate(table[-1]):
            nxt[i + 1] += 2 * c
        for i, c in enumerate(table[-2]):
            nxt[i] -= 2 * nn * c
        table.append(nxt)
    for kk in range(m):
        coeffs_y = table[4 * kk]
        polys.append([coeffs_y[2 * j] for j in range(len(coeffs_y) // 2 + 1)])
    return polys


def eigen_combo_poly(c: EigenCombo) -> list[float]:
    """Polynomial p(u) with f(x) = p(2*pi*x^2) exp(-pi x^2), monomial coefficients."""
    basis = _hermite_eigenpoly_coeffs(len(c.coeffs))
    deg = max(len(b) for b in basis)
    out = [0.0] * deg
    for coeff, poly in zip(c.coeffs, basis):
        for i, v in enumerate(poly):
            out[i] += float(coeff) * v
    return out


def _poly_eval(coeffs, u):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


def eval_uncertainty_sign_change(c: EigenCombo) -> float:
    """Square of the largest sign change of the normalized test function.

    The Gaussian factor is strictly positive, so signs are scanned on the
    polynomial part only. The sign convention normalizes the tail to be
    eventually non-negative and then requires a strictly negative origin.
    """
    poly = eigen_combo_poly(c)
    while poly and poly[-1] == 0.0:
        poly.pop()
    if not poly:
        raise Infeasible("zero test function")
    R = float(c.scan_limit)
    xs = np.linspace(0.0, R, c.scan_points)
    us = 2.0 * math.pi * xs * xs
    vals = np.polynomial.polynomial.polyval(us, np.asarray(poly))
    tail_sign = math.copysign(1.0, poly[-1])
    vals = tail_sign * vals
    if vals[0] >= 0.0:
        raise Infeasible("test function must be negative at the origin")
    signs = np.sign(vals)
    flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    if len(flips) == 0:
        raise Infeasible("no sign change located in the scan range")
    i = int(flips[-1])
    lo, hi = float(xs[i]), float(xs[i + 1])
    flo = tail_sign * _poly_eval(poly, 2.0 * math.pi * lo * lo)
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        fm = tail_sign * _poly_eval(poly, 2.0 * math.pi * mid * mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    r = 0.5 * (lo + hi)
    return r * r
