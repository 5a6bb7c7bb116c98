"""Compiled hot loops for tube rasterization.

The per-cell membership test (exact quartic minimization over the core
parameter) is identical in math to `cubics.minimize_monic_quartic`, inlined
here as scalar code so the per-tube column loop runs compiled.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, fastmath=False)
def _quartic_min_unit(A, B, C, D):
    """Min of s^4 + A s^3 + B s^2 + C s + D over s in [-1/2, 1/2]."""
    lo, hi = -0.5, 0.5
    vlo = (((lo + A) * lo + B) * lo + C) * lo + D
    vhi = (((hi + A) * hi + B) * hi + C) * hi + D
    best = vlo if vlo < vhi else vhi
    # critical points: 4 s^3 + 3A s^2 + 2B s + C = 0
    a = 0.75 * A
    b = 0.5 * B
    c = 0.25 * C
    p = b - a * a / 3.0
    q = c - a * b / 3.0 + 2.0 * a * a * a / 27.0
    disc = 0.25 * q * q + p * p * p / 27.0
    if disc > 0.0:
        sq = math.sqrt(disc)
        u = -0.5 * q + sq
        v = -0.5 * q - sq
        u = math.copysign(abs(u) ** (1.0 / 3.0), u)
        v = math.copysign(abs(v) ** (1.0 / 3.0), v)
        r = u + v - a / 3.0
        if lo < r < hi:
            val = (((r + A) * r + B) * r + C) * r + D
            if val < best:
                best = val
    else:
        if p < 0.0:
            m = 2.0 * math.sqrt(-p / 3.0)
            arg = 3.0 * q / (p * m)
            if arg > 1.0:
                arg = 1.0
            elif arg < -1.0:
                arg = -1.0
            theta = math.acos(arg) / 3.0
            for k in range(3):
                r = m * math.cos(theta - 2.0943951023931953 * k) - a / 3.0
                if lo < r < hi:
                    val = (((r + A) * r + B) * r + C) * r + D
                    if val < best:
                        best = val
        else:
            r = -a / 3.0
            if lo < r < hi:
                val = (((r + A) * r + B) * r + C) * r + D
                if val < best:
                    best = val
    return best


@njit(cache=True, nogil=True, fastmath=False)
def rasterize_tube(values, o1, o2, o3, h1, h2, h3,
                   y1, y2, y3, e1, e2, delta):
    """Add the exact cell-center indicator of one tube into the count field."""
    n1, n2, n3 = values.shape
    d2 = delta * delta
    d4 = d2 * d2 * (1.0 + 1e-9)
    ax = y1 - 0.5 * e1
    ay = y2 - 0.5 * e2
    ex = e1
    ey = e2

    xlo = min(ax, ax + ex) - delta
    xhi = max(ax, ax + ex) + delta
    ylo = min(ay, ay + ey) - delta
    yhi = max(ay, ay + ey) + delta
    i0 = max(0, int(math.floor((xlo - o1) / h1)))
    i1 = min(n1 - 1, int(math.ceil((xhi - o1) / h1)))
    j0 = max(0, int(math.floor((ylo - o2) / h2)))
    j1 = min(n2 - 1, int(math.ceil((yhi - o2) / h2)))

    for i in range(i0, i1 + 1):
        px = o1 + h1 * i
        for j in range(j0, j1 + 1):
            py = o2 + h2 * j
            # 2D distance from the column to the core segment
            t = (px - ax) * ex + (py - ay) * ey
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            qx = px - ax - t * ex
            qy = py - ay - t * ey
            if qx * qx + qy * qy > d2:
                continue
            # admissible core parameters: |x' - y' - s e|^2 <= delta^2
            dx1 = px - y1
            dx2 = py - y2
            sm = dx1 * ex + dx2 * ey
            disc = d2 - (dx1 * dx1 + dx2 * dx2) + sm * sm
            if disc < 0.0:
                continue
            rt = math.sqrt(disc)
            s_lo = sm - rt
            s_hi = sm + rt
            if s_lo < -0.5:
                s_lo = -0.5
            if s_hi > 0.5:
                s_hi = 0.5
            if s_lo > s_hi:
                continue
            # vertical bracket from the linear center line +- fiber height
            c0 = y3 + 0.5 * (y1 * py - y2 * px)
            c1 = 0.5 * ((y1 - px) * ey - (y2 - py) * ex)
            ca = c0 + c1 * s_lo
            cb = c0 + c1 * s_hi
            zlo = (ca if ca < cb else cb) - 0.25 * d2
            zhi = (ca if ca > cb else cb) + 0.25 * d2
            k0 = max(0, int(math.floor((zlo - o3) / h3)))
            k1 = min(n3 - 1, int(math.ceil((zhi - o3) / h3)))
            if k1 < k0:
                continue
            # quartic coefficients shared along the column
            beta = -2.0 * sm
            gamma = dx1 * dx1 + dx2 * dx2
            w1 = 0.5 * (dx1 * ey - dx2 * ex)
            Acf = 2.0 * beta
            base_B = beta * beta + 2.0 * gamma + 16.0 * w1 * w1
            for k in range(k0, k1 + 1):
                pz = o3 + h3 * k
                w0 = pz - y3 - 0.5 * (y1 * py - y2 * px)
                Bcf = base_B
                Ccf = 2.0 * beta * gamma + 32.0 * w0 * w1
                Dcf = gamma * gamma + 16.0 * w0 * w0
                if _quartic_min_unit(Acf, Bcf, Ccf, Dcf) <= d4:
                    values[i, j, k] += 1
