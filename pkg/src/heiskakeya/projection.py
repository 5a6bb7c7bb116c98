"""Vertical Heisenberg projection and the tube-to-parabola dictionary.

The projection pi_W sends (x1,x2,x3) to (x2, x3 + x1*x2/2), identifying the
vertical plane {x1=0} with R^2.  Its fibers are left cosets w * L of the
x1-axis.  A tube whose direction avoids (1,0)/(−1,0) projects into a
neighborhood of an arc of the parabola

    gamma_{(a,b,c)}(s) = (s, (a/2) s^2 + b s + c),

with coefficients determined by the tube's direction angle phi and base y:

    a = cos(phi)/sin(phi),  b = y1 - a y2,  c = y3 - y1 y2/2 + a y2^2/2,

parameter window s in [s-, s+] = y2 -+ 1/(2 sqrt(1+a^2)), and neighborhood
radius (1+|a|) delta^2 / 2.  The segment projection identity is exact; the
tube containment carries the explicit constant above.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cubics import real_cubic_roots
from .heis import as_points, group_mul
from .tubes import PreconditionError, Tube, sample_tube_points, segment_point


def pi_w(p) -> np.ndarray:
    """Vertical projection onto {x1=0}, as a point of R^2 = (x2, x3-plane)."""
    p = as_points(p)
    out = np.empty(p.shape[:-1] + (2,))
    out[..., 0] = p[..., 1]
    out[..., 1] = p[..., 2] + 0.5 * p[..., 0] * p[..., 1]
    return out


@dataclass(frozen=True)
class ParabolaParams:
    """Image data of a projected tube: coefficients, window, and radius."""

    a: float
    b: float
    c: float
    s_minus: float
    s_plus: float
    nbhd_radius: float

    def point(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape + (2,))
        out[..., 0] = s
        out[..., 1] = (0.5 * self.a * s + self.b) * s + self.c
        return out


def tube_to_parabola(tube: Tube) -> ParabolaParams:
    """Parabola parameters of the projected tube; requires sin(phi) != 0."""
    phi = tube.dir.phi % math.pi
    if min(phi, math.pi - phi) < 1e-9 or math.sin(tube.dir.phi) == 0.0:
        raise PreconditionError(
            f"direction angle {tube.dir.phi} too close to the x1-axis; rotate the family first")
    cphi = math.cos(tube.dir.phi)
    sphi = math.sin(tube.dir.phi)
    a = cphi / sphi
    y1, y2, y3 = tube.base
    b = y1 - a * y2
    c = y3 - 0.5 * y1 * y2 + 0.5 * a * y2 * y2
    half = 0.5 / math.sqrt(1.0 + a * a)
    return ParabolaParams(a=a, b=b, c=c, s_minus=y2 - half, s_plus=y2 + half,
                          nbhd_radius=0.5 * (1.0 + abs(a)) * tube.radius ** 2)


def parabola_point(pp: ParabolaParams, s):
    """Graph point (s, (a/2)s^2 + b s + c)."""
    return pp.point(s)


def arc_distance(a: float, b: float, c: float, lo: float, hi: float, pts) -> np.ndarray:
    """Exact Euclidean distance from planar points to the arc gamma_{(a,b,c)}([lo,hi]).

    The squared distance has a cubic derivative in the arc parameter; its
    real roots (clamped to the window) plus the window endpoints are the only
    candidates.  Vectorized over pts of shape (..., 2).
    """
    pts = np.asarray(pts, dtype=float)
    x = pts[..., 0]
    y = pts[..., 1]
    gy = c - y
    c3 = 0.5 * a * a
    c2 = 1.5 * a * b
    c1 = 1.0 + b * b + a * gy
    c0 = b * gy - x
    roots = real_cubic_roots(c3, c2, c1, np.asarray(c0, dtype=float))
    cand = np.concatenate([
        np.clip(np.where(np.isnan(roots), lo, roots), lo, hi),
        np.broadcast_to(lo, x.shape)[..., None],
        np.broadcast_to(hi, x.shape)[..., None],
    ], axis=-1)
    fx = (0.5 * a * cand + b) * cand + c
    d2 = (cand - x[..., None]) ** 2 + (fx - y[..., None]) ** 2
    return np.sqrt(d2.min(axis=-1))


def verify_segment_projection(tube: Tube, n: int) -> float:
    """Max Euclidean deviation between the projected core and the parabola arc.

    The identity is exact, so the return value is pure rounding; callers
    compare against 1e-10 * (1 + |y| + |a|).
    """
    pp = tube_to_parabola(tube)
    sphi = math.sin(tube.dir.phi)
    s_prime = np.linspace(-0.5, 0.5, n)
    projected = pi_w(segment_point(tube.base, tube.dir, s_prime))
    sigma = tube.base[1] + s_prime * sphi
    on_arc = pp.point(sigma)
    return float(np.linalg.norm(projected - on_arc, axis=-1).max())


@dataclass
class ProjectionReport:
    """Containment check of a projected tube in the arc neighborhood."""

    lemma: str
    params: dict
    n_samples: int
    violations: int
    max_ratio: float

    def to_json(self) -> str:
        return json.dumps({"lemma": self.lemma, "params": self.params,
                           "n_samples": self.n_samples, "violations": self.violations,
                           "max_ratio": self.max_ratio}, sort_keys=True)


def verify_tube_projection(tube: Tube, n: int, seed: int = 0) -> ProjectionReport:
    """Sample the tube and check its projection lies in the arc neighborhood.

    The window is the parameter interval extended by delta on both sides; the
    admissible radius is (1+|a|) delta^2 / 2 plus rounding slack.  Reports the
    violation count (must be 0) and the max of distance/delta^2.
    """
    pp = tube_to_parabola(tube)
    delta = tube.radius
    pts = sample_tube_points(tube, n, np.random.default_rng(seed))
    proj = pi_w(pts)
    d = arc_distance(pp.a, pp.b, pp.c, pp.s_minus - delta, pp.s_plus + delta, proj)
    bound = pp.nbhd_radius + 1e-12
    return ProjectionReport(
        lemma="tube-projection-into-parabola-neighborhood",
        params={"delta": delta, "a": pp.a, "b": pp.b, "c": pp.c},
        n_samples=n,
        violations=int(np.count_nonzero(d > bound)),
        max_ratio=float((d / delta ** 2).max()),
    )


def fiber_length(tube: Tube, w, step: float | None = None) -> float:
    """Length of {x : w * (x,0,0) in T}, by 1D sampling at the given step.

    Requires the tube direction within pi/4 of the x2-axis (|sin phi| >=
    cos(pi/4)); the fiber is bracketed in [-2, 2] since tubes have unit
    length and delta < 1.  Default step is delta/200.
    """
    sphi = math.sin(tube.dir.phi)
    if abs(sphi) < math.cos(math.pi / 4.0) - 1e-12:
        raise PreconditionError(
            f"fiber bound requires direction within pi/4 of the x2-axis, phi={tube.dir.phi}")
    if step is None:
        step = tube.radius / 200.0
    w = np.asarray(w, dtype=float).reshape(2)
    xs = np.arange(-2.0, 2.0 + step, step)
    fiber = np.empty((xs.size, 3))
    fiber[:, 0] = xs
    fiber[:, 1] = w[0]
    fiber[:, 2] = w[1] - 0.5 * xs * w[0]
    from .tubes import tube_contains
    hits = tube_contains(tube, fiber)
    return float(np.count_nonzero(hits) * step)


def fubini_check(h, quad_n: int = 64, box_half_width: float = 8.0) -> float:
    """Relative discrepancy of the vertical-fiber change of variables.

    Integrates h over R^3 directly and as iterated integrals over the
    vertical plane and its x1-axis cosets; the substitution (x,y,t) ->
    (x, y, t - xy/2) has Jacobian 1, so any discrepancy is quadrature error.
    Uses tensor-product Gauss-Legendre with quad_n nodes per axis on
    [-box_half_width, box_half_width]^3; h must decay rapidly.
    """
    nodes, weights = np.polynomial.legendre.leggauss(quad_n)
    nodes = nodes * box_half_width
    weights = weights * box_half_width
    X = nodes[:, None, None]
    Y = nodes[None, :, None]
    T = nodes[None, None, :]
    W = weights[:, None, None] * weights[None, :, None] * weights[None, None, :]

    pts = np.empty((quad_n, quad_n, quad_n, 3))
    pts[..., 0], pts[..., 1], pts[..., 2] = np.broadcast_arrays(X, Y, T)
    lhs = float(np.sum(h(pts) * W))

    pts[..., 2] = T - 0.5 * X * Y
    rhs = float(np.sum(h(pts) * W))

    if lhs == 0.0 and rhs == 0.0:
        return 0.0
    return abs(lhs - rhs) / max(abs(lhs), 1e-300)
