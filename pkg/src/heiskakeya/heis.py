"""Heisenberg group arithmetic and the Koranyi gauge.

The first Heisenberg group is R^3 with the twisted product

    (x1,x2,x3) * (x1',x2',x3') = (x1+x1', x2+x2', x3+x3' + (x1*x2' - x2*x1')/2)

and the Koranyi norm ||x|| = ((x1^2+x2^2)^2 + 16*x3^2)^(1/4), which induces
a left-invariant metric d(p,q) = ||inv(q)*p||.  All functions here operate
on arrays of shape (..., 3) so they vectorize over point clouds; the HPoint
dataclass is a convenience wrapper for single points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Tightest constant C with d(e,e') <= C*sqrt(|e-e'|) on S^1 x {0}, obtained
# from d^4 = |e-e'|^4 + 4(ab'-ba')^2 with |ab'-ba'| <= |e-e'| <= 2.
CHORD_METRIC_CONSTANT = 8.0 ** 0.25
# Direction-stability threshold 1/C^2: chord-closeness c1*delta^2 guarantees
# that a delta-tube fits inside the 2*delta-tube with the nearby direction.
C1_INCLUSION = 1.0 / (2.0 * math.sqrt(2.0))


@dataclass(frozen=True)
class HPoint:
    """A point of the Heisenberg group; x1, x2 horizontal, x3 vertical."""

    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2) and math.isfinite(self.x3)):
            raise ValueError(f"coordinates must be finite, got {(self.x1, self.x2, self.x3)}")

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x1, self.x2, self.x3], dtype=dtype or float)

    @staticmethod
    def from_array(a) -> "HPoint":
        a = np.asarray(a, dtype=float).reshape(3)
        return HPoint(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Rotation2:
    """Rotation about the vertical axis, (x', x3) -> (O x', x3); an isometry."""

    angle: float

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def inverse(self) -> "Rotation2":
        return Rotation2(-self.angle)


def as_points(p) -> np.ndarray:
    """Coerce HPoint / tuple / array input to a float array of shape (..., 3)."""
    a = np.asarray(p, dtype=float)
    if a.shape[-1] != 3:
        raise ValueError(f"expected trailing dimension 3, got shape {a.shape}")
    return a


def group_mul(p, q) -> np.ndarray:
    """Heisenberg product p*q, broadcasting over leading dimensions."""
    p = as_points(p)
    q = as_points(q)
    out = np.empty(np.broadcast_shapes(p.shape, q.shape), dtype=float)
    out[..., 0] = p[..., 0] + q[..., 0]
    out[..., 1] = p[..., 1] + q[..., 1]
    out[..., 2] = (p[..., 2] + q[..., 2]
                   + 0.5 * (p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0]))
    return out


def group_inv(p) -> np.ndarray:
    """Group inverse; coordinate negation (the twist term cancels)."""
    return -as_points(p)


def koranyi_norm(p) -> np.ndarray:
    """Koranyi gauge ((x1^2+x2^2)^2 + 16 x3^2)^(1/4)."""
    p = as_points(p)
    r2 = p[..., 0] ** 2 + p[..., 1] ** 2
    return (r2 * r2 + 16.0 * p[..., 2] ** 2) ** 0.25


def koranyi_norm4(p) -> np.ndarray:
    """Fourth power of the gauge; cheaper and exact for comparisons."""
    p = as_points(p)
    r2 = p[..., 0] ** 2 + p[..., 1] ** 2
    return r2 * r2 + 16.0 * p[..., 2] ** 2


def koranyi_dist(p, q) -> np.ndarray:
    """Left-invariant metric d(p,q) = ||inv(q)*p||."""
    return koranyi_norm(group_mul(group_inv(q), p))


def dilate(r: float, p) -> np.ndarray:
    """Anisotropic dilation (r x1, r x2, r^2 x3); scales the gauge by r."""
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    p = as_points(p)
    out = p.copy()
    out[..., :2] *= r
    out[..., 2] *= r * r
    return out


def rotate(rot: Rotation2, p) -> np.ndarray:
    """Apply the vertical-axis rotation; a group automorphism and isometry."""
    p = as_points(p)
    out = p.copy()
    out[..., :2] = p[..., :2] @ rot.matrix.T
    return out


def ball_box(radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Tight circumscribing box of the Koranyi ball B(0, radius).

    The gauge formula gives B(0,r) inside [-r,r]^2 x [-r^2/4, r^2/4], with
    both bounds attained, so rejection sampling from this box has a fixed
    acceptance rate independent of r.
    """
    r = float(radius)
    lo = np.array([-r, -r, -r * r / 4.0])
    return lo, -lo


def sample_ball(radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample of n points from the Koranyi ball B(0, radius).

    Rejection sampling from the circumscribing box; acceptance is the fixed
    ratio |B(0,1)| / 2 ~ 0.617.
    """
    lo, hi = ball_box(radius)
    out = np.empty((n, 3))
    filled = 0
    while filled < n:
        m = max(256, int(1.8 * (n - filled)))
        cand = rng.uniform(lo, hi, size=(m, 3))
        cand = cand[koranyi_norm4(cand) <= radius ** 4]
        take = min(n - filled, cand.shape[0])
        out[filled:filled + take] = cand[:take]
        filled += take
    return out
