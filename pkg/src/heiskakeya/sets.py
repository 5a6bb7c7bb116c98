"""Analytic indicator sets: balls, tubes, ball unions, and disk neighborhoods.

These are the standard inputs of the maximal-function and dimension
experiments.  Each set knows its support box, whether it is invariant under
rotations about the vertical axis (an exact symmetry of the whole geometry),
and how to estimate its measure.  Membership tests are vectorized over
point arrays of shape (..., 3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cubics import real_cubic_roots
from .grid import Box, mc_volume, tube_bounding_box
from .heis import group_mul, koranyi_norm4
from .tubes import Tube, tube_contains


class AnalyticSet:
    """Base: bounded measurable set with a vectorized indicator."""

    rotation_invariant: bool = False
    label: str = "set"

    def contains(self, pts) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, pts) -> np.ndarray:
        return self.contains(pts)

    @property
    def support_box(self) -> Box:
        raise NotImplementedError

    def measure(self, n: int = 400_000, seed: int = 0) -> tuple[float, float]:
        return mc_volume(self.contains, self.support_box, n, seed)


@dataclass
class KoranyiBall(AnalyticSet):
    """Koranyi ball B(center, radius) = center * B(0, radius)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.rotation_invariant = bool(np.hypot(self.center[0], self.center[1]) == 0.0)
        self.label = f"ball(r={self.radius:g})"

    def contains(self, pts) -> np.ndarray:
        rel = group_mul(-self.center, np.asarray(pts, dtype=float))
        return koranyi_norm4(rel) <= self.radius ** 4

    @property
    def support_box(self) -> Box:
        r = self.radius
        c = self.center
        tilt = r * r / 4.0 + 0.5 * np.hypot(c[0], c[1]) * r
        lo = np.array([c[0] - r, c[1] - r, c[2] - tilt])
        hi = np.array([c[0] + r, c[1] + r, c[2] + tilt])
        return Box(lo, hi)


@dataclass
class TubeSet(AnalyticSet):
    """Indicator of one Heisenberg tube."""

    tube: Tube

    def __post_init__(self):
        self.rotation_invariant = False
        self.label = f"tube(delta={self.tube.radius:g})"

    def contains(self, pts) -> np.ndarray:
        return tube_contains(self.tube, pts)

    @property
    def support_box(self) -> Box:
        return tube_bounding_box(self.tube)


@dataclass
class UnionOfBalls(AnalyticSet):
    """Union of Koranyi balls; generators keep them pairwise disjoint."""

    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        self.radii = np.broadcast_to(np.asarray(self.radii, dtype=float),
                                     (len(self.centers),)).copy()
        self.rotation_invariant = False
        self.label = f"balls(k={len(self.centers)})"

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=bool)
        for c, r in zip(self.centers, self.radii):
            out |= koranyi_norm4(group_mul(-c, pts)) <= r ** 4
        return out

    @property
    def support_box(self) -> Box:
        boxes = [KoranyiBall(c, r).support_box for c, r in zip(self.centers, self.radii)]
        return Box(np.min([b.lo for b in boxes], axis=0),
                   np.max([b.hi for b in boxes], axis=0))


@dataclass
class DiskNeighborhood(AnalyticSet):
    """Koranyi delta-neighborhood of the horizontal disk {(w,0) : |w| <= R}.

    Membership is exact: with u = x' - w' and v = (x2, -x1), the distance
    functional |u|^4 + 16 (x3 + <u,v>/2)^2 has interior critical points
    u = tau v with tau solving the cubic

        tau^3 |v|^2 + 2 tau |v|^2 + 4 x3 = 0,

    plus the vertical drop u = 0 (valid when |x'| <= R) and rim candidates
    |w'| = R (sampled and refined; they only matter within ~delta of the rim).
    """

    delta: float
    disk_radius: float = 1.0
    rim_samples: int = 64

    def __post_init__(self):
        self.rotation_invariant = True
        self.label = f"disk-nbhd(delta={self.delta:g},R={self.disk_radius:g})"

    def dist4(self, pts, return_argmin: bool = False):
        """Fourth power of the Koranyi distance to the disk.

        With return_argmin, also returns the disk point achieving the value,
        which certifies the result as an attained upper bound.
        """
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        x1, x2, x3 = pts[:, 0], pts[:, 1], pts[:, 2]
        R = self.disk_radius
        rho2 = x1 * x1 + x2 * x2
        rho = np.sqrt(rho2)

        best = np.full(len(pts), np.inf)
        best_w = np.zeros((len(pts), 2))
        # vertical drop onto the disk itself
        inside = rho <= R
        best[inside] = 16.0 * x3[inside] ** 2
        best_w[inside] = pts[inside, :2]

        def consider(idx, val, w1, w2):
            upd = val < best[idx]
            tgt = idx[upd]
            best[tgt] = val[upd]
            best_w[tgt, 0] = w1[upd]
            best_w[tgt, 1] = w2[upd]

        # interior critical points u = tau * (x2, -x1)
        has_v = rho2 > 0
        if np.any(has_v):
            idx = np.where(has_v)[0]
            taus = real_cubic_roots(rho2[has_v], 0.0, 2.0 * rho2[has_v], 4.0 * x3[has_v])
            for k in range(3):
                tau = taus[:, k]
                ok = ~np.isnan(tau)
                tau = np.where(ok, tau, 0.0)
                w1 = x1[has_v] - tau * x2[has_v]
                w2 = x2[has_v] + tau * x1[has_v]
                ok &= w1 * w1 + w2 * w2 <= R * R * (1 + 1e-12)
                un2 = tau * tau * rho2[has_v]
                val = un2 * un2 + 16.0 * (x3[has_v] + 0.5 * tau * rho2[has_v]) ** 2
                consider(idx, np.where(ok, val, np.inf), w1, w2)

        # rim candidates, needed only near |x'| ~ R
        band = rho >= R - 2.5 * self.delta
        hard = band | (~np.isfinite(best))
        if np.any(hard):
            xh1, xh2, xh3 = x1[hard], x2[hard], x3[hard]

            def rim_val(th):
                w1 = R * np.cos(th)
                w2 = R * np.sin(th)
                d1 = xh1 - w1
                d2 = xh2 - w2
                r2 = d1 * d1 + d2 * d2
                w = xh3 - 0.5 * (w1 * xh2 - w2 * xh1)
                return r2 * r2 + 16.0 * w * w

            theta0 = np.arctan2(xh2, xh1)
            offs = np.linspace(-math.pi, math.pi, self.rim_samples, endpoint=False)
            vals = np.stack([rim_val(theta0 + o) for o in offs], axis=1)
            jbest = np.argmin(vals, axis=1)
            tb = theta0 + offs[jbest]
            vb = np.take_along_axis(vals, jbest[:, None], 1)[:, 0]
            h = offs[1] - offs[0]
            for _ in range(4):
                tm, tp = tb - h, tb + h
                vm, vp = rim_val(tm), rim_val(tp)
                denom = vm - 2 * vb + vp
                shift = np.clip(np.where(np.abs(denom) > 1e-300,
                                         0.5 * (vm - vp) / np.where(denom == 0, 1.0, denom),
                                         0.0), -1.0, 1.0)
                tn = tb + shift * h
                vn = rim_val(tn)
                cand_v = np.stack([vb, vm, vp, vn], axis=0)
                cand_t = np.stack([tb, tm, tp, tn], axis=0)
                j = np.argmin(cand_v, axis=0)
                ar = np.arange(len(tb))
                vb = cand_v[j, ar]
                tb = cand_t[j, ar]
                h = h / 3.0
            idx = np.where(hard)[0]
            consider(idx, vb, R * np.cos(tb), R * np.sin(tb))
        if return_argmin:
            return best, best_w
        return best

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return (self.dist4(pts) <= self.delta ** 4).reshape(pts.shape[:-1])

    @property
    def support_box(self) -> Box:
        R, d = self.disk_radius, self.delta
        h = d * d / 4.0 + 0.5 * R * d
        return Box(np.array([-R - d, -R - d, -h]), np.array([R + d, R + d, h]))

    def core_sampler(self, gap: float) -> np.ndarray:
        """d_H-dense sample of the disk: rings at radial step ~ gap/2 with
        transverse spacing gap^2/(4 rho); grows like (R/gap)^3."""
        R = self.disk_radius
        dr = gap / 2.0
        pts = [np.zeros((1, 3))]
        rho = dr
        while rho <= R + 1e-15:
            t = gap * gap / (4.0 * rho)
            m = max(8, int(math.ceil(2 * math.pi * rho / t)))
            th = 2 * math.pi * np.arange(m) / m
            ring = np.zeros((m, 3))
            ring[:, 0] = rho * np.cos(th)
            ring[:, 1] = rho * np.sin(th)
            pts.append(ring)
            rho += dr
        return np.concatenate(pts, axis=0)


def horizontal_segment_sampler(phi: float = 0.0, half_length: float = 0.5):
    """Core sampler of the segment {(s e,0)}: arc-length = d_H along the core."""
    e1, e2 = math.cos(phi), math.sin(phi)

    def sampler(gap: float) -> np.ndarray:
        m = int(math.ceil(2 * half_length / gap)) + 1
        s = np.linspace(-half_length, half_length, m)
        out = np.zeros((m, 3))
        out[:, 0] = s * e1
        out[:, 1] = s * e2
        return out

    return sampler


def disjoint_ball_union(k: int, radius: float, spread: float, seed: int = 0) -> UnionOfBalls:
    """k pairwise-disjoint Koranyi balls with centers in B(0, spread)."""
    from .heis import sample_ball
    rng = np.random.default_rng(seed)
    centers = []
    while len(centers) < k:
        cand = sample_ball(spread, 1, rng)[0]
        if all(koranyi_norm4(group_mul(-c, cand)) > (2.2 * radius) ** 4 for c in centers):
            centers.append(cand)
    return UnionOfBalls(np.array(centers), np.full(k, radius))
