"""Vectorized closed-form root finding for cubics and quartic minimization.

Every distance computation in this package reduces to minimizing a low-degree
polynomial on an interval: the fourth power of the Koranyi distance from a
point to a horizontal segment is a monic quartic in the segment parameter,
and squared Euclidean point-to-parabola distance has a cubic derivative.
Solving these in closed form (Cardano / trigonometric method) keeps the hot
loops free of per-point iteration and makes membership tests exact to
rounding.
"""

from __future__ import annotations

import numpy as np

_TWO_PI_3 = 2.0 * np.pi / 3.0


def real_cubic_roots(c3, c2, c1, c0) -> np.ndarray:
    """Real roots of c3 s^3 + c2 s^2 + c1 s + c0, broadcast elementwise.

    Returns an array of shape broadcast(...) + (3,) with non-real (or absent,
    for degenerate leading coefficients) roots filled with NaN.  Degenerate
    cubics fall back to the quadratic / linear formulas.
    """
    c3, c2, c1, c0 = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (c3, c2, c1, c0)))
    shape = c3.shape
    roots = np.full(shape + (3,), np.nan)

    scale = np.maximum.reduce([np.abs(c2), np.abs(c1), np.abs(c0), np.ones(shape)])
    is_cubic = np.abs(c3) > 1e-14 * scale

    if np.any(is_cubic):
        a = np.where(is_cubic, c2 / np.where(is_cubic, c3, 1.0), 0.0)
        b = np.where(is_cubic, c1 / np.where(is_cubic, c3, 1.0), 0.0)
        c = np.where(is_cubic, c0 / np.where(is_cubic, c3, 1.0), 0.0)
        # depressed cubic t^3 + p t + q with s = t - a/3
        p = b - a * a / 3.0
        q = c - a * b / 3.0 + 2.0 * a ** 3 / 27.0
        disc = 0.25 * q * q + p ** 3 / 27.0

        one_real = is_cubic & (disc > 0.0)
        if np.any(one_real):
            sq = np.sqrt(np.where(one_real, disc, 1.0))
            u = np.cbrt(-0.5 * q + sq)
            v = np.cbrt(-0.5 * q - sq)
            roots[..., 0] = np.where(one_real, u + v - a / 3.0, roots[..., 0])

        three_real = is_cubic & (disc <= 0.0)
        if np.any(three_real):
            pm = np.where(three_real & (p < 0.0), p, -1.0)
            m = 2.0 * np.sqrt(-pm / 3.0)
            cos_arg = np.clip(3.0 * q / (pm * m), -1.0, 1.0)
            theta = np.arccos(cos_arg) / 3.0
            for k in range(3):
                rk = m * np.cos(theta - _TWO_PI_3 * k) - a / 3.0
                # p == 0 with disc <= 0 forces q == 0: triple root at -a/3
                rk = np.where(p < 0.0, rk, -a / 3.0)
                roots[..., k] = np.where(three_real, rk, roots[..., k])

    is_quad = (~is_cubic) & (np.abs(c2) > 1e-14 * scale)
    if np.any(is_quad):
        aa = np.where(is_quad, c2, 1.0)
        disc2 = c1 * c1 - 4.0 * aa * c0
        ok = is_quad & (disc2 >= 0.0)
        sq = np.sqrt(np.where(ok, disc2, 0.0))
        # Citardauq pairing avoids cancellation for small roots
        qq = -0.5 * (c1 + np.sign(np.where(c1 == 0, 1.0, c1)) * sq)
        r0 = qq / aa
        r1 = np.where(np.abs(qq) > 0, c0 / np.where(qq == 0, 1.0, qq), r0)
        roots[..., 0] = np.where(ok, r0, roots[..., 0])
        roots[..., 1] = np.where(ok, r1, roots[..., 1])

    is_lin = (~is_cubic) & (~is_quad) & (np.abs(c1) > 1e-14 * scale)
    if np.any(is_lin):
        roots[..., 0] = np.where(is_lin, -c0 / np.where(is_lin, c1, 1.0), roots[..., 0])

    return roots


def eval_quartic(A, B, C, D, s):
    """Evaluate the monic quartic s^4 + A s^3 + B s^2 + C s + D (Horner)."""
    return (((s + A) * s + B) * s + C) * s + D


def minimize_monic_quartic(A, B, C, D, lo, hi) -> tuple[np.ndarray, np.ndarray]:
    """Exact global minimum of s^4 + A s^3 + B s^2 + C s + D over [lo, hi].

    The candidates are the interval endpoints plus the real roots of the
    derivative 4 s^3 + 3A s^2 + 2B s + C clamped into the interval.  Returns
    (min value, argmin), elementwise over broadcast inputs.
    """
    A, B, C, D, lo, hi = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (A, B, C, D, lo, hi)))
    crit = real_cubic_roots(4.0, 3.0 * A, 2.0 * B, C)
    # polish critical points (helps nearly-multiple roots of the derivative)
    for _ in range(2):
        d1 = ((4.0 * crit + 3.0 * A[..., None]) * crit + 2.0 * B[..., None]) * crit + C[..., None]
        d2 = (12.0 * crit + 6.0 * A[..., None]) * crit + 2.0 * B[..., None]
        step = d1 / np.where(np.abs(d2) > 1e-300, d2, 1.0)
        crit = np.where(np.isfinite(step) & (np.abs(d2) > 1e-300), crit - step, crit)
    lo_e = lo[..., None]
    hi_e = hi[..., None]
    cand = np.concatenate([
        np.clip(np.where(np.isnan(crit), lo_e, crit), lo_e, hi_e),
        lo[..., None],
        hi[..., None],
    ], axis=-1)
    vals = eval_quartic(A[..., None], B[..., None], C[..., None], D[..., None], cand)
    idx = np.argmin(vals, axis=-1)
    best = np.take_along_axis(vals, idx[..., None], axis=-1)[..., 0]
    arg = np.take_along_axis(cand, idx[..., None], axis=-1)[..., 0]
    return best, arg
