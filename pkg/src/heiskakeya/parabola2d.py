"""Planar incidence engine for neighborhoods of parabola arcs.

Families of arcs gamma_z(s) = (s, <(s^2/2, s, 1), z>) with z = (a,b,c) are
the planar shadows of tube families.  This module rasterizes Euclidean
delta-neighborhoods of such arcs onto the unit square, computes the
L^p-style incidence integral of the overlap counts, and checks the
non-concentration (ball-counting) condition that a-separated coefficient
sets satisfy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .projection import arc_distance
from .tubes import PreconditionError


@dataclass(frozen=True)
class ParabolaNbhd:
    """Euclidean delta-neighborhood of an arc {(s, (a/2)s^2+bs+c) : s in I}."""

    z: tuple[float, float, float]
    interval: tuple[float, float]
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.interval[0] < self.interval[1]:
            raise ValueError(f"empty parameter interval {self.interval}")

    @property
    def a(self) -> float:
        return self.z[0]

    def f(self, s):
        a, b, c = self.z
        return (0.5 * a * np.asarray(s, dtype=float) + b) * s + c

    def distance(self, pts) -> np.ndarray:
        a, b, c = self.z
        return arc_distance(a, b, c, self.interval[0], self.interval[1], pts)


def nbhd_contains(pn: ParabolaNbhd, pt) -> np.ndarray:
    """Exact membership: distance to the arc (cubic critical points) <= delta."""
    return pn.distance(pt) <= pn.delta


@dataclass
class CoefficientFamily:
    """Coefficient triples with pairwise separated leading coefficients."""

    zs: np.ndarray
    bound_r: float
    a_separation: float
    interval: tuple[float, float] = (0.0, 1.0)
    delta: float = field(default=float("nan"))

    def __post_init__(self):
        self.zs = np.asarray(self.zs, dtype=float).reshape(-1, 3)

    def __len__(self) -> int:
        return len(self.zs)

    def min_a_gap(self) -> float:
        a = np.sort(self.zs[:, 0])
        return float(np.diff(a).min()) if len(a) > 1 else float("inf")

    def neighborhoods(self, delta: float | None = None,
                      interval: tuple[float, float] | None = None) -> list[ParabolaNbhd]:
        d = self.delta if delta is None else delta
        iv = self.interval if interval is None else interval
        return [ParabolaNbhd(tuple(z), iv, d) for z in self.zs]

    def to_csv(self, path) -> None:
        lo, hi = self.interval
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("a,b,c,lo,hi,delta\n")
            for z in self.zs:
                row = (z[0], z[1], z[2], lo, hi, self.delta)
                fh.write(",".join("%.17g" % v for v in row) + "\n")

    @staticmethod
    def from_csv(path) -> "CoefficientFamily":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        zs = data[:, :3]
        fam = CoefficientFamily(zs, bound_r=float(np.abs(zs).max()),
                                a_separation=float("nan"),
                                interval=(float(data[0, 3]), float(data[0, 4])),
                                delta=float(data[0, 5]))
        fam.a_separation = fam.min_a_gap()
        return fam


def family_random_coeffs(delta: float, r: float = 1.0, seed: int = 0) -> CoefficientFamily:
    """a on a separated grid of [-1,1] (one per slot, jitter < delta/4), b,c uniform.

    Slot spacing 1.5*delta keeps pairwise |a - a'| >= delta after jittering;
    the cardinality is ~ 4/(3 delta).
    """
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0,1), got {delta}")
    rng = np.random.default_rng(seed)
    spacing = 1.5 * delta
    k = int(2.0 / spacing)
    a = -1.0 + spacing * (np.arange(k) + 0.5) + rng.uniform(-0.245, 0.245, k) * delta
    b = rng.uniform(-r, r, k)
    c = rng.uniform(-r, r, k)
    zs = np.stack([a, b, c], axis=1)
    fam = CoefficientFamily(zs, bound_r=max(r, 1.0), a_separation=delta,
                            interval=(0.0, 1.0), delta=delta)
    fam.a_separation = min(delta, fam.min_a_gap())
    return fam


@dataclass
class NonconcentrationReport:
    """Ball-counting statistics of a coefficient family."""

    separation_ok: bool
    min_a_gap: float
    n_balls: int
    max_ratio: float           # max over balls of card(Z cap B) * delta / rho
    max_count: int
    interval_bound_ok: bool    # card(Z cap B) <= card(A cap [a0 +- rho]) always
    pairwise_bound_ok: bool    # card(Z cap B) <= 2*rho/a_sep + 1 per ball
    katz_tao_ok: bool          # card(Z cap B) <= delta^-eps * rho / delta

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def check_nonconcentration(fam: CoefficientFamily, delta: float, eps: float,
                           n_balls: int, seed: int = 0) -> NonconcentrationReport:
    """Sample random balls and bound membership counts via the a-coordinates.

    Two routes are compared: the direct 3D count in each sampled ball, and
    the 1D count of a-coordinates in the ball's a-shadow (which dominates it
    whenever the a's are separated).  Reports the max of count*delta/rho.
    """
    if not (delta > 0 and eps > 0):
        raise PreconditionError("delta and eps must be positive")
    a_sorted = np.sort(fam.zs[:, 0])
    min_gap = float(np.diff(a_sorted).min()) if len(a_sorted) > 1 else float("inf")
    separation_ok = min_gap >= fam.a_separation * (1 - 1e-12) and min_gap > 0

    rng = np.random.default_rng(seed)
    span = 2.0 * fam.bound_r * math.sqrt(3.0)
    rho = np.exp(rng.uniform(math.log(delta), math.log(max(span, 2 * delta)), n_balls))
    centers = fam.zs[rng.integers(0, len(fam.zs), n_balls)] + \
        rng.uniform(-1, 1, (n_balls, 3)) * rho[:, None]

    diffs = fam.zs[None, :, :] - centers[:, None, :]
    counts = np.count_nonzero((diffs ** 2).sum(axis=2) <= rho[:, None] ** 2, axis=1)
    shadow = np.count_nonzero(
        np.abs(fam.zs[None, :, 0] - centers[:, None, 0]) <= rho[:, None], axis=1)

    ratios = counts * delta / rho
    sep = fam.a_separation if fam.a_separation > 0 else min_gap
    pairwise_ok = np.all(counts <= 2.0 * rho / sep + 1.0 + 1e-9) if sep > 0 else False
    return NonconcentrationReport(
        separation_ok=bool(separation_ok),
        min_a_gap=min_gap,
        n_balls=n_balls,
        max_ratio=float(ratios.max()) if n_balls else 0.0,
        max_count=int(counts.max()) if n_balls else 0,
        interval_bound_ok=bool(np.all(counts <= shadow)),
        pairwise_bound_ok=bool(pairwise_ok),
        katz_tao_ok=bool(np.all(counts <= delta ** (-eps) * rho / delta)),
    )


@dataclass
class ScalarField2:
    """Overlap counts on the cell-center grid of the unit square."""

    grid_n: int
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return 1.0 / self.grid_n ** 2

    def power_integral(self, exponent: float) -> float:
        counts = np.bincount(self.values.ravel())
        k = np.arange(len(counts), dtype=float)
        return float((counts * k ** exponent).sum() * self.cell_area)


def rasterize_neighborhoods(nbhds: list[ParabolaNbhd], grid_n: int) -> ScalarField2:
    """Count, per grid cell center of [0,1]^2, the neighborhoods containing it.

    Per neighborhood and per column, candidate rows are bracketed by the
    parabola's range over the reachable parameter window; membership on the
    candidates is the exact arc distance.  Each cell is visited at most once
    per neighborhood, so counts are plain increments.
    """
    field2 = np.zeros((grid_n, grid_n), dtype=np.int32)
    h = 1.0 / grid_n
    for pn in nbhds:
        lo, hi = pn.interval
        d = pn.delta
        a, b, c = pn.z
        i0 = max(0, int(math.floor((lo - d) * grid_n - 0.5)))
        i1 = min(grid_n - 1, int(math.ceil((hi + d) * grid_n)))
        if i1 < i0:
            continue
        xs = (np.arange(i0, i1 + 1) + 0.5) * h
        w_lo = np.maximum(lo, xs - d)
        w_hi = np.minimum(hi, xs + d)
        ok = w_lo <= w_hi
        if not np.any(ok):
            continue
        xs, w_lo, w_hi = xs[ok], w_lo[ok], w_hi[ok]
        cols = np.arange(i0, i1 + 1)[ok]
        # range of f over the window: endpoints plus interior vertex
        f_lo = (0.5 * a * w_lo + b) * w_lo + c
        f_hi = (0.5 * a * w_hi + b) * w_hi + c
        fmin = np.minimum(f_lo, f_hi)
        fmax = np.maximum(f_lo, f_hi)
        if a != 0.0:
            sv = -b / a
            inside = (w_lo < sv) & (sv < w_hi)
            fv = c - 0.5 * b * b / a
            fmin = np.where(inside, np.minimum(fmin, fv), fmin)
            fmax = np.where(inside, np.maximum(fmax, fv), fmax)
        k0 = np.maximum(0, np.floor((fmin - d) * grid_n - 0.5).astype(int))
        k1 = np.minimum(grid_n - 1, np.ceil((fmax + d) * grid_n).astype(int))
        lens = np.maximum(0, k1 - k0 + 1)
        keep = lens > 0
        if not np.any(keep):
            continue
        xs, cols, k0, lens = xs[keep], cols[keep], k0[keep], lens[keep]
        total = int(lens.sum())
        col_rep = np.repeat(cols, lens)
        x_rep = np.repeat(xs, lens)
        row_idx = np.repeat(k0, lens) + (np.arange(total) - np.repeat(
            np.concatenate([[0], np.cumsum(lens)[:-1]]), lens))
        pts = np.stack([x_rep, (row_idx + 0.5) * h], axis=1)
        member = pn.distance(pts) <= d
        field2[col_rep[member], row_idx[member]] += 1
    return ScalarField2(grid_n=grid_n, values=field2)


def incidence_integral(nbhds: list[ParabolaNbhd], exponent: float = 1.5,
                       grid_n: int = 64) -> float:
    """(1/grid_n^2) * sum over cells of (overlap count)^exponent on [0,1]^2.

    The grid must resolve the thinnest neighborhood: spacing <= delta/8 is
    enforced so rasterization error stays subdominant in slope fits.
    """
    if exponent < 1.0:
        raise PreconditionError(f"exponent must be >= 1, got {exponent}")
    if grid_n < 64:
        raise PreconditionError(f"grid_n must be >= 64, got {grid_n}")
    min_delta = min(pn.delta for pn in nbhds)
    if 1.0 / grid_n > min_delta / 8.0 + 1e-15:
        raise PreconditionError(
            f"grid spacing 1/{grid_n} too coarse for delta={min_delta:g}; need >= {math.ceil(8/min_delta)} cells")
    return rasterize_neighborhoods(nbhds, grid_n).power_integral(exponent)


def incidence_result_json(delta: float, card: int, integral: float,
                          exponent: float, grid_n: int) -> str:
    return json.dumps({"delta": delta, "card": card, "integral": integral,
                       "exponent": exponent, "grid_n": grid_n}, sort_keys=True)
