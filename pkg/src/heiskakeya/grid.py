"""Anisotropic 3D grids, tube rasterization, volumes, and box counting.

Grids follow the Koranyi ball aspect: vertical spacing ~ (horizontal
spacing)^2 at the working scale, since balls of radius r have height r^2/2.
Tube rasterization is exact cell-center membership, organized per horizontal
column: a tube's cross-section over a fixed (x1,x2) is a single x3-interval,
whose location is bracketed cheaply before running the exact quartic
membership test on the few candidate cells.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cubics import minimize_monic_quartic
from .tubes import PreconditionError, Tube, TubeFamily, _segment_quartic

try:
    from ._kernels import rasterize_tube as _rasterize_tube_compiled
except ImportError:  # pragma: no cover - numba is a declared dependency
    _rasterize_tube_compiled = None

# Largest dense field allocated by rasterization helpers; experiment runners
# check estimated cell counts against this before any computation.
MAX_FIELD_CELLS = 350_000_000


class GridCapacityError(RuntimeError):
    """Estimated cell count exceeds the configured memory budget."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo1,hi1] x [lo2,hi2] x [lo3,hi3]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float).reshape(3))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float).reshape(3))
        if not np.all(self.hi > self.lo):
            raise ValueError(f"degenerate box lo={self.lo} hi={self.hi}")

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, 3))


@dataclass
class ScalarField3:
    """Dense sampled field; origin is the center of cell (0,0,0), C order."""

    origin: np.ndarray
    spacing: np.ndarray
    dims: tuple[int, int, int]
    values: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        self.spacing = np.asarray(self.spacing, dtype=float).reshape(3)
        if not np.all(self.spacing > 0):
            raise ValueError(f"spacings must be positive, got {self.spacing}")
        self.dims = tuple(int(d) for d in self.dims)
        if self.values.size != int(np.prod(self.dims)):
            raise ValueError(f"values size {self.values.size} != prod{self.dims}")
        self.values = self.values.reshape(self.dims)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_centers(self, k: int) -> np.ndarray:
        return self.origin[k] + self.spacing[k] * np.arange(self.dims[k])

    def save(self, path) -> None:
        """Persist as a text header line + 8-byte little-endian reals."""
        header = ("heisfield3 dims=%d,%d,%d origin=%.17g,%.17g,%.17g "
                  "spacing=%.17g,%.17g,%.17g order=row-major dtype=float64-le\n")
        header = header % (self.dims + tuple(self.origin) + tuple(self.spacing))
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(self.values.astype("<f8").tobytes(order="C"))

    @staticmethod
    def load(path) -> "ScalarField3":
        with open(path, "rb") as fh:
            header = fh.readline().decode("ascii").split()
            fields = dict(kv.split("=") for kv in header[1:])
            dims = tuple(int(v) for v in fields["dims"].split(","))
            origin = np.array([float(v) for v in fields["origin"].split(",")])
            spacing = np.array([float(v) for v in fields["spacing"].split(",")])
            values = np.frombuffer(fh.read(), dtype="<f8").reshape(dims).copy()
        return ScalarField3(origin, spacing, dims, values)


def field_dims(region: Box, spacing) -> tuple[int, int, int]:
    spacing = np.asarray(spacing, dtype=float)
    return tuple(int(math.ceil((region.hi[k] - region.lo[k]) / spacing[k])) for k in range(3))


def estimate_cells(region: Box, spacing) -> int:
    return int(np.prod(field_dims(region, spacing)))


def tube_bounding_box(tube: Tube, pad_spacing=(0.0, 0.0, 0.0)) -> Box:
    """Conservative axis-aligned box containing the tube.

    Horizontal: segment endpoints padded by delta.  Vertical: the core's x3
    span +- (delta^2/4 + |y'| delta/2 + delta/4), covering the group twist of
    fiber points over the whole segment.
    """
    y = tube.base
    e = tube.dir.e
    d = tube.radius
    ends = np.array([y[:2] - 0.5 * e, y[:2] + 0.5 * e])
    lo2 = ends.min(axis=0) - d
    hi2 = ends.max(axis=0) + d
    cross_ye = y[0] * e[1] - y[1] * e[0]
    core_span = 0.5 * abs(cross_ye)
    pad3 = d * d / 4.0 + 0.5 * np.hypot(y[0], y[1]) * d + 0.25 * d
    lo = np.array([lo2[0], lo2[1], y[2] - core_span - pad3])
    hi = np.array([hi2[0], hi2[1], y[2] + core_span + pad3])
    return Box(lo - np.asarray(pad_spacing), hi + np.asarray(pad_spacing))


def family_region(fam: TubeFamily, pad_spacing=(0.0, 0.0, 0.0)) -> Box:
    boxes = [tube_bounding_box(t, pad_spacing) for t in fam.tubes]
    lo = np.min([b.lo for b in boxes], axis=0)
    hi = np.max([b.hi for b in boxes], axis=0)
    return Box(lo, hi)


def _point_segment_dist2d(px, py, ax, ay, bx, by):
    ux, uy = bx - ax, by - ay
    L2 = ux * ux + uy * uy
    t = np.clip(((px - ax) * ux + (py - ay) * uy) / L2, 0.0, 1.0)
    return np.hypot(px - ax - t * ux, py - ay - t * uy)


def _rasterize_tube_into(field: ScalarField3, tube: Tube) -> None:
    """Add the tube's exact cell-center indicator into the count field."""
    if _rasterize_tube_compiled is not None:
        e = tube.dir.e
        _rasterize_tube_compiled(field.values, field.origin[0], field.origin[1],
                                 field.origin[2], field.spacing[0], field.spacing[1],
                                 field.spacing[2], tube.base[0], tube.base[1],
                                 tube.base[2], e[0], e[1], tube.radius)
        return
    _rasterize_tube_numpy(field, tube)


def _rasterize_tube_numpy(field: ScalarField3, tube: Tube) -> None:
    """Pure-numpy fallback of the compiled rasterizer (identical semantics)."""
    y = tube.base
    e = tube.dir.e
    d = tube.radius
    h = field.spacing
    o = field.origin
    n1, n2, n3 = field.dims

    ax, ay = y[0] - 0.5 * e[0], y[1] - 0.5 * e[1]
    bx, by = y[0] + 0.5 * e[0], y[1] + 0.5 * e[1]
    i0 = max(0, int(math.floor((min(ax, bx) - d - o[0]) / h[0])))
    i1 = min(n1 - 1, int(math.ceil((max(ax, bx) + d - o[0]) / h[0])))
    j0 = max(0, int(math.floor((min(ay, by) - d - o[1]) / h[1])))
    j1 = min(n2 - 1, int(math.ceil((max(ay, by) + d - o[1]) / h[1])))
    if i1 < i0 or j1 < j0:
        return
    xs = o[0] + h[0] * np.arange(i0, i1 + 1)
    ys = o[1] + h[1] * np.arange(j0, j1 + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    strip = _point_segment_dist2d(X, Y, ax, ay, bx, by) <= d
    if not strip.any():
        return
    ii, jj = np.nonzero(strip)
    px = X[ii, jj]
    py = Y[ii, jj]
    ii = ii + i0
    jj = jj + j0

    # admissible core parameters: |x' - y' - s e|^2 <= d^2 is quadratic in s
    dx1 = px - y[0]
    dx2 = py - y[1]
    sm = dx1 * e[0] + dx2 * e[1]
    disc = d * d - (dx1 * dx1 + dx2 * dx2) + sm * sm
    disc = np.sqrt(np.maximum(disc, 0.0))
    s_lo = np.clip(sm - disc, -0.5, 0.5)
    s_hi = np.clip(sm + disc, -0.5, 0.5)

    # vertical center line c(s) is linear in s; fiber half-width <= d^2/4
    c0 = y[2] + 0.5 * (y[0] * py - y[1] * px)
    c1 = 0.5 * ((y[0] - px) * e[1] - (y[1] - py) * e[0])
    ca = c0 + c1 * s_lo
    cb = c0 + c1 * s_hi
    zlo = np.minimum(ca, cb) - d * d / 4.0
    zhi = np.maximum(ca, cb) + d * d / 4.0
    k0 = np.maximum(0, np.floor((zlo - o[2]) / h[2]).astype(np.int64))
    k1 = np.minimum(n3 - 1, np.ceil((zhi - o[2]) / h[2]).astype(np.int64))
    lens = np.maximum(0, k1 - k0 + 1)
    keep = lens > 0
    if not keep.any():
        return
    ii, jj, px, py, k0, lens = ii[keep], jj[keep], px[keep], py[keep], k0[keep], lens[keep]
    total = int(lens.sum())
    starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
    kk = np.repeat(k0, lens) + (np.arange(total) - np.repeat(starts, lens))
    col = np.repeat(np.arange(len(lens)), lens)
    pts = np.stack([px[col], py[col], o[2] + h[2] * kk], axis=1)
    A, B, C, D = _segment_quartic(y, e, pts)
    p4, _ = minimize_monic_quartic(A, B, C, D, -0.5, 0.5)
    member = p4 <= d ** 4 * (1.0 + 1e-9)
    if member.any():
        flat = (np.repeat(ii, lens)[member] * n2 + np.repeat(jj, lens)[member]) * n3 + kk[member]
        field.values.reshape(-1)[flat] += 1


def rasterize_overlap(fam: TubeFamily, region: Box, spacing) -> ScalarField3:
    """Per cell-center count of tubes containing the point.

    Spacing must resolve the tubes: at most (delta/4, delta/4, delta^2/4).
    The per-tube loop touches only cells inside the tube's strip and vertical
    bracket, so cost scales with tube volume rather than field volume.
    """
    delta = fam.delta
    spacing = np.asarray(spacing, dtype=float)
    limit = np.array([delta / 4.0, delta / 4.0, delta * delta / 4.0])
    if np.any(spacing > limit * (1 + 1e-12)):
        raise PreconditionError(f"spacing {spacing} too coarse; needs <= {limit}")
    dims = field_dims(region, spacing)
    if int(np.prod(dims)) > MAX_FIELD_CELLS:
        raise GridCapacityError(f"field would need {int(np.prod(dims)):,} cells")
    dtype = np.uint16 if len(fam) < 60000 else np.int32
    field = ScalarField3(origin=region.lo + spacing / 2.0, spacing=spacing,
                         dims=dims, values=np.zeros(dims, dtype=dtype))
    for tube in fam.tubes:
        _rasterize_tube_into(field, tube)
    return field


def lp_integral(field: ScalarField3, p: float) -> float:
    """cellvol * sum |v|^p; exact count-histogram path for integer fields."""
    if p < 1.0:
        raise PreconditionError(f"exponent must be >= 1, got {p}")
    v = field.values
    if np.issubdtype(v.dtype, np.integer):
        counts = np.bincount(v.reshape(-1))
        k = np.arange(len(counts), dtype=float)
        return float((counts * k ** p).sum() * field.cell_volume)
    total = 0.0
    flat = np.abs(v.reshape(-1))
    for start in range(0, flat.size, 1 << 22):
        total += float((flat[start:start + (1 << 22)] ** p).sum())
    return total * field.cell_volume


def mc_volume(member, region: Box, n: int, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo volume of {x in region : member(x)}; binomial stderr."""
    if n < 1000:
        raise PreconditionError(f"need at least 1e3 samples, got {n}")
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 1 << 20
    remaining = n
    while remaining > 0:
        m = min(chunk, remaining)
        pts = region.sample(m, rng)
        hits += int(np.count_nonzero(member(pts)))
        remaining -= m
    p_hat = hits / n
    vol = region.volume
    return vol * p_hat, vol * math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / n)


def koranyi_dist4_to_points(queries: np.ndarray, cores: np.ndarray,
                            chunk: int = 2048) -> np.ndarray:
    """min over core points p of d(x, p)^4, chunked over queries."""
    out = np.empty(len(queries))
    for start in range(0, len(queries), chunk):
        q = queries[start:start + chunk]
        dx1 = q[:, None, 0] - cores[None, :, 0]
        dx2 = q[:, None, 1] - cores[None, :, 1]
        w = (q[:, None, 2] - cores[None, :, 2]
             - 0.5 * (cores[None, :, 0] * q[:, None, 1] - cores[None, :, 1] * q[:, None, 0]))
        r2 = dx1 * dx1 + dx2 * dx2
        out[start:start + chunk] = (r2 * r2 + 16.0 * w * w).min(axis=1)
    return out


def koranyi_neighborhood_volume(core_sampler, delta: float, n: int, seed: int = 0,
                                region: Box | None = None,
                                return_bracket: bool = False):
    """Monte Carlo volume of the Koranyi delta-neighborhood of a sampled core.

    `core_sampler(gap)` must return points covering the core set with d_H
    gaps at most `gap`; it is invoked with gap = delta/4, so the nearest
    sampled point approximates the true distance within delta/4.  That error
    is absorbed by also evaluating at radii delta*(1 -+ 1/4) (returned when
    return_bracket is set).
    """
    cores = np.asarray(core_sampler(delta / 4.0), dtype=float).reshape(-1, 3)
    if region is None:
        maxr = float(np.hypot(cores[:, 0], cores[:, 1]).max())
        pad3 = delta ** 2 / 4.0 + 0.5 * maxr * delta + 1e-12
        lo = cores.min(axis=0) - np.array([delta, delta, pad3])
        hi = cores.max(axis=0) + np.array([delta, delta, pad3])
        region = Box(lo, hi)
    rng = np.random.default_rng(seed)
    pts = region.sample(n, rng)
    d4 = koranyi_dist4_to_points(pts, cores)
    vol = region.volume

    def est(radius):
        p_hat = float(np.count_nonzero(d4 <= radius ** 4)) / n
        return vol * p_hat, vol * math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / n)

    mid = est(delta)
    if return_bracket:
        return mid, est(0.75 * delta), est(1.25 * delta)
    return mid


def heis_box_count(member, delta: float, region: Box, probes: int = 3) -> int:
    """Count Heisenberg lattice boxes of size delta x delta x delta^2 meeting a set.

    Boxes are left translates g * ([0,delta)^2 x [0,delta^2)) for lattice
    points g = (i delta, j delta, k delta^2); unlike axis-aligned boxes these
    stay comparable to Koranyi balls away from the vertical axis (the
    translation twists the box by (i delta u2 - j delta u1)/2).  A box counts
    if any of its probes x probes x 3 subcell-center probes satisfies
    `member`; thin sets should be probed with a membership tolerance of half
    a subcell.  The three vertical probes tile the box height exactly;
    `probes` controls the horizontal density, and for sets whose twisted-box
    multiplicity grows (e.g. horizontal surfaces at distance rho from the
    axis meet ~ rho/delta boxes per footprint) it must grow like
    1/sqrt(delta) to avoid undercounting.
    """
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0,1), got {delta}")
    d2 = delta * delta
    i_range = np.arange(int(math.floor(region.lo[0] / delta)),
                        int(math.ceil(region.hi[0] / delta)) + 1)
    j_range = np.arange(int(math.floor(region.lo[1] / delta)),
                        int(math.ceil(region.hi[1] / delta)) + 1)
    sub2 = (np.arange(probes) + 0.5) / probes
    sub3 = (np.arange(3) + 0.5) / 3.0
    U1, U2, U3 = np.meshgrid(sub2 * delta, sub2 * delta, sub3 * d2, indexing="ij")
    u1, u2, u3 = U1.ravel(), U2.ravel(), U3.ravel()
    n_probe = u1.size

    count = 0
    for i in i_range:
        x_base = i * delta
        for j in j_range:
            y_base = j * delta
            twist = 0.5 * (i * delta * u2 - j * delta * u1)
            tw_lo, tw_hi = float(twist.min()), float(twist.max())
            k_lo = int(math.floor((region.lo[2] - tw_hi) / d2)) - 1
            k_hi = int(math.ceil((region.hi[2] - tw_lo) / d2)) + 1
            ks = np.arange(k_lo, k_hi + 1)
            pts = np.empty((len(ks), n_probe, 3))
            pts[..., 0] = x_base + u1
            pts[..., 1] = y_base + u2
            pts[..., 2] = ks[:, None] * d2 + twist[None, :] + u3[None, :]
            hits = member(pts.reshape(-1, 3)).reshape(len(ks), n_probe)
            count += int(np.count_nonzero(hits.any(axis=1)))
    return count


@dataclass
class ScalingFit:
    """OLS fit of log(value) against log(x); slopes drive all criteria."""

    points: list[tuple[float, float]]
    slope: float
    intercept: float
    r_squared: float

    def to_json(self) -> str:
        return json.dumps({"points": self.points, "slope": self.slope,
                           "intercept": self.intercept, "r_squared": self.r_squared},
                          sort_keys=True)


def fit_powerlaw(points) -> ScalingFit:
    """Fit y ~ C x^slope through (x, y) pairs with positive coordinates."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise PreconditionError(f"need at least 3 points for a fit, got {len(pts)}")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise PreconditionError("power-law fit requires positive coordinates")
    xs = np.log([p[0] for p in pts])
    ys = np.log([p[1] for p in pts])
    if np.unique(xs).size < len(xs):
        raise PreconditionError("x values must be distinct")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float((resid ** 2).sum()) / ss_tot
    return ScalingFit(points=list(zip(xs.tolist(), ys.tolist())),
                      slope=float(slope), intercept=float(intercept), r_squared=r2)
