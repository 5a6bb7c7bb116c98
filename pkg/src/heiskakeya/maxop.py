"""Discretized Kakeya maximal operator on horizontal tube directions.

M_delta f(e) is the sup over base points y of the average of f on the tube
T_delta(y, e).  The discretization: averages use a fixed (s, fiber) node set
(s uniform midpoints, fiber a fixed low-discrepancy point set of the unit
ball rescaled by the anisotropic dilation), and the sup runs over a
rectangular net of bases with horizontal spacing a*delta and vertical
spacing a*delta^2, restricted to bases whose tube can touch the declared
support of f (all others average exactly 0).  The discretized sup is a lower
bound of the true sup by construction and is monotone under net refinement.

Direction norms integrate the tube maxima over a uniform net of S^1 whose
angular spacing c1*delta^2/2 matches the direction-stability scale of the
geometry; inputs that are rotation-invariant about the vertical axis have
exactly constant direction profiles, so one representative direction is
evaluated and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Box, ScalarField3
from .heis import C1_INCLUSION, dilate, group_mul
from .sets import AnalyticSet, KoranyiBall, UnionOfBalls
from .tubes import Direction, PreconditionError, Tube, _segment_quartic
from .cubics import minimize_monic_quartic

_EVAL_CHUNK = 1 << 21


@dataclass
class DirectionFunction:
    """Sampled function on S^1 with arc-length quadrature weights."""

    angles: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if not (len(self.angles) == len(self.values) == len(self.weights)):
            raise ValueError("angles, values, weights must have equal length")
        if abs(self.weights.sum() - 2 * math.pi) > 1e-9:
            raise ValueError("weights must sum to 2*pi")
        if np.any(self.weights <= 0) or np.any(self.values < 0):
            raise ValueError("weights must be positive and values nonnegative")

    def lp_norm(self, p: float) -> float:
        return float((self.weights * self.values ** p).sum() ** (1.0 / p))

    def normalized_lp(self, p: float) -> float:
        return float(((self.weights * self.values ** p).sum() / (2 * math.pi)) ** (1.0 / p))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("phi,value,weight\n")
            for row in zip(self.angles, self.values, self.weights):
                fh.write(",".join("%.17g" % v for v in row) + "\n")


def _halton(n: int, base: int) -> np.ndarray:
    out = np.zeros(n)
    for i in range(n):
        f, r, k = 1.0, 0.0, i + 1
        while k > 0:
            f /= base
            r += f * (k % base)
            k //= base
        out[i] = r
    return out


def unit_ball_nodes(n_z: int = 32) -> np.ndarray:
    """Fixed low-discrepancy points of the unit Koranyi ball (Halton 2,3,5)."""
    m = 4 * n_z
    while True:
        cand = np.stack([2 * _halton(m, 2) - 1, 2 * _halton(m, 3) - 1,
                         0.5 * _halton(m, 5) - 0.25], axis=1)
        r2 = cand[:, 0] ** 2 + cand[:, 1] ** 2
        keep = cand[r2 * r2 + 16 * cand[:, 2] ** 2 <= 1.0]
        if len(keep) >= n_z:
            return keep[:n_z]
        m *= 2


def default_n_s(delta: float) -> int:
    """s-node count: 64 floor, scaled so delta-size features stay resolved."""
    return max(64, int(math.ceil(16.0 / delta)))


def default_search_region(support: Box) -> Box:
    """The support box padded by 2 in the Koranyi metric."""
    maxr = float(np.max(np.abs(np.concatenate([support.lo[:2], support.hi[:2]])))) + 2.0
    pad3 = 1.0 + maxr
    return Box(support.lo - np.array([2.0, 2.0, pad3]),
               support.hi + np.array([2.0, 2.0, pad3]))


def _as_indicator(f):
    """Adapt ScalarField3 or AnalyticSet to (evaluate, support_box, invariant, sup)."""
    if isinstance(f, AnalyticSet):
        sup = 1.0
        return f.contains, f.support_box, f.rotation_invariant, sup, f
    if isinstance(f, ScalarField3):
        lo = f.origin - f.spacing / 2
        hi = f.origin + f.spacing * (np.array(f.dims) - 0.5)
        box = Box(lo, hi)
        vmax = float(f.values.max())

        def evaluate(pts):
            pts = np.asarray(pts, dtype=float)
            idx = np.round((pts - f.origin) / f.spacing).astype(np.int64)
            ok = np.all((idx >= 0) & (idx < np.array(f.dims)), axis=-1)
            idx = np.clip(idx, 0, np.array(f.dims) - 1)
            vals = f.values[idx[..., 0], idx[..., 1], idx[..., 2]].astype(float)
            return np.where(ok, vals, 0.0)

        return evaluate, box, False, vmax, None
    raise PreconditionError(f"unsupported input type {type(f)!r}; "
                            "need AnalyticSet or ScalarField3 (bounded support)")


def _feasible_bases(fset, bases: np.ndarray, e: np.ndarray, delta: float) -> np.ndarray:
    """Exact-or-superset mask of bases whose tube can intersect the support."""
    if isinstance(fset, KoranyiBall):
        A, B, C, D = _segment_quartic(bases, e, fset.center[None, :])
        p4, _ = minimize_monic_quartic(A, B, C, D, -0.5, 0.5)
        return p4 <= (delta + fset.radius) ** 4 * (1 + 1e-9)
    if isinstance(fset, UnionOfBalls):
        out = np.zeros(len(bases), dtype=bool)
        for c, r in zip(fset.centers, fset.radii):
            A, B, C, D = _segment_quartic(bases, e, c[None, :])
            p4, _ = minimize_monic_quartic(A, B, C, D, -0.5, 0.5)
            out |= p4 <= (delta + r) ** 4 * (1 + 1e-9)
        return out
    return np.ones(len(bases), dtype=bool)


def _tube_averages(evaluate, bases: np.ndarray, e: np.ndarray, z_nodes: np.ndarray,
                   s_nodes: np.ndarray) -> np.ndarray:
    """Mean of f over the fixed (s, z) tube nodes, per base; chunked."""
    n_s, n_z = len(s_nodes), len(z_nodes)
    per = max(1, _EVAL_CHUNK // (n_s * n_z))
    out = np.empty(len(bases))
    for start in range(0, len(bases), per):
        yb = bases[start:start + per]
        core = np.empty((len(yb), n_s, 3))
        core[..., 0] = yb[:, None, 0] + s_nodes[None, :] * e[0]
        core[..., 1] = yb[:, None, 1] + s_nodes[None, :] * e[1]
        core[..., 2] = yb[:, None, 2] + 0.5 * s_nodes[None, :] * (
            yb[:, None, 0] * e[1] - yb[:, None, 1] * e[0])
        pts = group_mul(core[:, :, None, :], z_nodes[None, None, :, :])
        vals = evaluate(pts.reshape(-1, 3)).reshape(len(yb), n_s * n_z)
        out[start:start + per] = vals.mean(axis=1)
    return out


def maximal_value(f, delta: float, e: Direction, search_region: Box | None = None,
                  y_net_scale: float = 0.5, n_s: int | None = None, n_z: int = 32,
                  max_bases: int | None = None) -> float:
    """Discretized M_delta f(e): max tube average over the base net.

    The net is the coordinate lattice anchor + (i a delta, j a delta,
    k a delta^2) intersected with the search region, restricted to bases
    whose tube can meet supp(f) (an exact reduction).  For indicator inputs
    the scan stops early once an average reaches sup f (it cannot be beaten).
    """
    evaluate, support, _, sup_f, fset = _as_indicator(f)
    if search_region is None:
        search_region = default_search_region(support)
    else:
        if np.any(search_region.lo > support.lo) or np.any(search_region.hi < support.hi):
            raise PreconditionError("search_region must contain the support of f")
    if n_s is None:
        n_s = default_n_s(delta)
    a = y_net_scale
    h = np.array([a * delta, a * delta, a * delta * delta])
    anchor = 0.5 * (support.lo + support.hi)
    ev = e.e

    s_nodes = -0.5 + (np.arange(n_s) + 0.5) / n_s
    z_nodes = dilate(delta, unit_ball_nodes(n_z))

    # candidate columns: tube horizontal segment must reach the support
    # rectangle padded by delta (slab test against the padded rectangle)
    pad = delta * 1.0001 + 1e-12
    lo2 = support.lo[:2] - pad
    hi2 = support.hi[:2] + pad
    i_lo = int(math.floor((max(lo2[0] - 0.5 * abs(ev[0]), search_region.lo[0]) - anchor[0]) / h[0]))
    i_hi = int(math.ceil((min(hi2[0] + 0.5 * abs(ev[0]), search_region.hi[0]) - anchor[0]) / h[0]))
    j_lo = int(math.floor((max(lo2[1] - 0.5 * abs(ev[1]), search_region.lo[1]) - anchor[1]) / h[1]))
    j_hi = int(math.ceil((min(hi2[1] + 0.5 * abs(ev[1]), search_region.hi[1]) - anchor[1]) / h[1]))
    if i_hi < i_lo or j_hi < j_lo:
        return 0.0
    ii, jj = np.meshgrid(np.arange(i_lo, i_hi + 1), np.arange(j_lo, j_hi + 1), indexing="ij")
    y1 = anchor[0] + h[0] * ii.ravel()
    y2 = anchor[1] + h[1] * jj.ravel()

    # slab test: does {y' + s e : s in [-1/2,1/2]} meet [lo2,hi2]?
    s_min = np.full(y1.shape, -0.5)
    s_max = np.full(y1.shape, 0.5)
    okcol = np.ones(y1.shape, dtype=bool)
    for (yc, lo_c, hi_c, ec) in ((y1, lo2[0], hi2[0], ev[0]), (y2, lo2[1], hi2[1], ev[1])):
        if abs(ec) < 1e-15:
            okcol &= (yc >= lo_c) & (yc <= hi_c)
        else:
            t1 = (lo_c - yc) / ec
            t2 = (hi_c - yc) / ec
            s_min = np.maximum(s_min, np.minimum(t1, t2))
            s_max = np.minimum(s_max, np.maximum(t1, t2))
    okcol &= s_min <= s_max
    if not okcol.any():
        return 0.0
    y1, y2, s_min, s_max = y1[okcol], y2[okcol], s_min[okcol], s_max[okcol]

    # vertical feasibility: c3(s) - y3 = s cross(y',e)/2 + cross(q'(s), n)/2,
    # |n| <= delta and |q'| <= Q, so bound the offset over the s-window
    Q = float(np.max(np.abs([lo2, hi2]))) * math.sqrt(2.0) + delta
    cross_ye = y1 * ev[1] - y2 * ev[0]
    g1 = 0.5 * s_min * cross_ye
    g2 = 0.5 * s_max * cross_ye
    off = 0.5 * Q * delta + 0.25 * delta * delta
    z_lo = support.lo[2] - np.maximum(g1, g2) - off
    z_hi = support.hi[2] - np.minimum(g1, g2) + off
    k_lo = np.ceil((np.maximum(z_lo, search_region.lo[2]) - anchor[2]) / h[2]).astype(np.int64)
    k_hi = np.floor((np.minimum(z_hi, search_region.hi[2]) - anchor[2]) / h[2]).astype(np.int64)
    lens = np.maximum(0, k_hi - k_lo + 1)
    keep = lens > 0
    if not keep.any():
        return 0.0
    y1, y2, k_lo, lens = y1[keep], y2[keep], k_lo[keep], lens[keep]

    # order columns by horizontal distance to the anchor: indicator inputs
    # with a full tube inside the set terminate on the first block
    order = np.argsort(np.hypot(y1 - anchor[0], y2 - anchor[1]), kind="stable")
    y1, y2, k_lo, lens = y1[order], y2[order], k_lo[order], lens[order]

    best = 0.0
    evaluated = 0
    block_cols = max(1, 262144 // max(1, int(lens.mean()) + 1))
    for cstart in range(0, len(y1), block_cols):
        csl = slice(cstart, min(cstart + block_cols, len(y1)))
        l = lens[csl]
        total = int(l.sum())
        if total == 0:
            continue
        starts = np.concatenate([[0], np.cumsum(l)[:-1]])
        kk = np.repeat(k_lo[csl], l) + (np.arange(total) - np.repeat(starts, l))
        bases = np.stack([np.repeat(y1[csl], l), np.repeat(y2[csl], l),
                          anchor[2] + h[2] * kk], axis=1)
        if fset is not None:
            mask = _feasible_bases(fset, bases, ev, delta)
            bases = bases[mask]
        if max_bases is not None and evaluated + len(bases) > max_bases:
            room = max(1, max_bases - evaluated)
            stride = max(1, int(math.ceil(len(bases) / room)))
            bases = bases[::stride]
        if len(bases) == 0:
            continue
        avgs = _tube_averages(evaluate, bases, ev, z_nodes, s_nodes)
        evaluated += len(bases)
        best = max(best, float(avgs.max()))
        if best >= sup_f * (1 - 1e-12):
            break
    return best


def direction_net_for_norm(delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Uniform S^1 net at the stability spacing c1*delta^2/2, with weights."""
    step = C1_INCLUSION * delta * delta / 2.0
    m = int(math.ceil(2 * math.pi / step))
    angles = 2 * math.pi * np.arange(m) / m
    weights = np.full(m, 2 * math.pi / m)
    return angles, weights


def maxfun_values(f, delta: float, **kw) -> DirectionFunction:
    """M_delta f sampled on the stability direction net.

    Rotation-invariant inputs have exactly constant direction profiles
    (vertical-axis rotations are isometries fixing f and permuting tubes),
    so a single representative direction is evaluated and broadcast.
    """
    angles, weights = direction_net_for_norm(delta)
    _, _, invariant, _, _ = _as_indicator(f)
    force_full = kw.pop("force_full_net", False)
    if invariant and not force_full:
        v = maximal_value(f, delta, Direction(math.pi / 2), **kw)
        values = np.full(len(angles), v)
    else:
        values = np.array([maximal_value(f, delta, Direction(phi), **kw) for phi in angles])
    return DirectionFunction(angles, values, weights)


def maxfun_norm(f, delta: float, p: float, **kw) -> float:
    """Weighted L^p(S^1) quadrature of the sampled maximal function."""
    if p < 1:
        raise PreconditionError(f"p must be >= 1, got {p}")
    return maxfun_values(f, delta, **kw).lp_norm(p)


def make_probe_suite(delta: float, seed: int = 0) -> dict:
    """Named inputs of the operator-norm probe."""
    from .heis import sample_ball
    from .sets import DiskNeighborhood, TubeSet, disjoint_ball_union
    rng = np.random.default_rng(seed)
    base = sample_ball(0.25, 1, rng)[0]
    phi = float(rng.uniform(0, 2 * math.pi))
    return {
        "ball": KoranyiBall(np.zeros(3), delta),
        "tube": TubeSet(Tube(base, Direction(phi), delta)),
        "ball-union": disjoint_ball_union(6, delta, 0.3, seed=seed + 1),
        "disk-nbhd": DiskNeighborhood(delta),
    }


@dataclass
class ProbeRecord:
    name: str
    norm_ratio: float       # ||M_delta f||_p / ||f||_p
    sup_proxy_ratio: float  # normalized ell^64 of values / sup f
    measure: float


@dataclass
class ProbeReport:
    delta: float
    p: float
    records: list
    max_ratio: float


def operator_norm_probe(delta: float, p: float, test_suite: dict | None = None,
                        seed: int = 0, n_s: int = 64, max_bases: int = 1024,
                        measure_n: int = 200_000) -> ProbeReport:
    """Max over the input suite of ||M_delta f||_p / ||f||_p, plus sup proxies.

    The sup proxy uses the normalized angular measure and the sup of f, so
    the trivial bound (tube averages never exceed the sup) reads exactly 1.
    """
    if p < 3:
        raise PreconditionError(f"probe is for p >= 3, got {p}")
    suite = make_probe_suite(delta, seed) if test_suite is None else test_suite
    records = []
    for name, f in suite.items():
        df = maxfun_values(f, delta, n_s=n_s, max_bases=max_bases)
        vol, _ = f.measure(n=measure_n, seed=seed + 17)
        ratio = df.lp_norm(p) / vol ** (1.0 / p)
        sup_proxy = df.normalized_lp(64.0) / 1.0
        records.append(ProbeRecord(name=name, norm_ratio=float(ratio),
                                   sup_proxy_ratio=float(sup_proxy), measure=float(vol)))
    return ProbeReport(delta=delta, p=p, records=records,
                       max_ratio=max(r.norm_ratio for r in records))
