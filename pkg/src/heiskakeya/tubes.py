"""Horizontal segments, Heisenberg delta-tubes, and tube families.

A tube T_delta(y, e) is the Koranyi delta-neighborhood of the translated
horizontal segment y * {(s e, 0) : s in [-1/2, 1/2]}.  Membership tests are
exact: the fourth power of the Koranyi distance from a point to the core
segment is a monic quartic in s (see below), minimized in closed form via
`cubics.minimize_monic_quartic`.

With dx = x' - y' and cross(a, b) = a1 b2 - a2 b1,

    d(x, y*(s e, 0))^4 = u(s)^2 + 16 w(s)^2,
    u(s) = s^2 - 2<dx, e> s + |dx|^2,
    w(s) = [x3 - y3 - cross(y', x')/2] + s * cross(dx, e)/2,

so the quartic is monic with coefficients assembled in `_segment_quartic`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cubics import minimize_monic_quartic
from .heis import C1_INCLUSION, as_points, group_mul, koranyi_dist, sample_ball

# Relative slack on the quartic comparison P <= delta^4; covers rounding in
# the closed-form minimization.
MEMBERSHIP_REL_SLACK = 1e-9


class PreconditionError(ValueError):
    """A caller violated a documented precondition (usage error, not a finding)."""


@dataclass(frozen=True)
class Direction:
    """Unit direction e = (cos phi, sin phi) of S^1."""

    phi: float

    def __post_init__(self):
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))

    @property
    def e(self) -> np.ndarray:
        return np.array([math.cos(self.phi), math.sin(self.phi)])

    def chord_to(self, other: "Direction") -> float:
        return float(np.linalg.norm(self.e - other.e))


@dataclass(frozen=True)
class Tube:
    """Heisenberg delta-tube with base point y, direction e, radius delta."""

    base: np.ndarray
    dir: Direction
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float).reshape(3))
        if not 0.0 < self.radius < 1.0:
            raise ValueError(f"tube radius must lie in (0,1), got {self.radius}")

    @property
    def delta(self) -> float:
        return self.radius


def segment_point(y, e: Direction | np.ndarray, s) -> np.ndarray:
    """Point y * (s e, 0) of the core segment; s must lie in [-1/2, 1/2]."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < -0.5 - 1e-15) or np.any(s_arr > 0.5 + 1e-15):
        raise PreconditionError(f"segment parameter outside [-1/2, 1/2]: {s}")
    ev = e.e if isinstance(e, Direction) else np.asarray(e, dtype=float)
    y = as_points(y)
    core = np.zeros(s_arr.shape + (3,))
    core[..., 0] = s_arr * ev[0]
    core[..., 1] = s_arr * ev[1]
    return group_mul(y, core)


def _segment_quartic(y, ev: np.ndarray, x):
    """Monic-quartic coefficients (A, B, C, D) of d(x, y*(s e,0))^4 in s."""
    y = as_points(y)
    x = as_points(x)
    dx1 = x[..., 0] - y[..., 0]
    dx2 = x[..., 1] - y[..., 1]
    beta = -2.0 * (dx1 * ev[0] + dx2 * ev[1])
    gamma = dx1 * dx1 + dx2 * dx2
    w0 = x[..., 2] - y[..., 2] - 0.5 * (y[..., 0] * x[..., 1] - y[..., 1] * x[..., 0])
    w1 = 0.5 * (dx1 * ev[1] - dx2 * ev[0])
    A = 2.0 * beta
    B = beta * beta + 2.0 * gamma + 16.0 * w1 * w1
    C = 2.0 * beta * gamma + 32.0 * w0 * w1
    D = gamma * gamma + 16.0 * w0 * w0
    return A, B, C, D


def certified_tolerance(tube: Tube) -> float:
    """Conservative absolute error bound for dist_to_segment.

    The closed-form minimization is exact up to rounding in the quartic
    value; the distance itself is quartically flat near on-core points, so
    the conservative bound min(delta, 0.01)/64 (one Lipschitz grid step of
    the reference method) is quoted.  Observed errors are far smaller away
    from the core.
    """
    return min(tube.radius, 0.01) / 64.0


def dist_to_segment(tube: Tube, x, return_argmin: bool = False):
    """Exact min over s in [-1/2,1/2] of d(x, y*(s e, 0)); vectorized in x."""
    A, B, C, D = _segment_quartic(tube.base, tube.dir.e, x)
    p4, arg = minimize_monic_quartic(A, B, C, D, -0.5, 0.5)
    d = np.maximum(p4, 0.0) ** 0.25
    if return_argmin:
        return d, arg
    return d


def tube_contains(tube: Tube, x):
    """Membership x in T_delta(y, e), i.e. dist to the core segment <= delta."""
    A, B, C, D = _segment_quartic(tube.base, tube.dir.e, x)
    p4, _ = minimize_monic_quartic(A, B, C, D, -0.5, 0.5)
    return p4 <= tube.radius ** 4 * (1.0 + MEMBERSHIP_REL_SLACK)


def sample_tube_points(tube: Tube, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points y * (s e, 0) * z with s uniform and z uniform in B(0, delta)."""
    s = rng.uniform(-0.5, 0.5, size=n)
    z = sample_ball(tube.radius, n, rng)
    core = segment_point(tube.base, tube.dir, s)
    return group_mul(core, z)


def net_angles(scale: float) -> np.ndarray:
    """Angles of the maximal uniformly-spaced direction net at chord `scale`."""
    if not 0.0 < scale <= 1.0:
        raise PreconditionError(f"direction net chord scale must lie in (0, 1], got {scale}")
    m = int(math.pi / math.asin(0.5 * scale) + 1e-9)
    return 2.0 * math.pi * np.arange(m) / m


def direction_net(scale: float) -> list[Direction]:
    """Uniform direction net: consecutive chords in [scale, 2*scale), maximal.

    m = floor(pi / asin(scale/2)) equally spaced angles; the consecutive
    chord 2 sin(pi/m) is then >= scale, and every point of S^1 lies within
    chord distance scale of the net.
    """
    return [Direction(phi) for phi in net_angles(scale)]


def min_chord_separation(angles: np.ndarray) -> float:
    """Minimum pairwise chord distance of a set of angles on S^1."""
    a = np.sort(np.asarray(angles, dtype=float) % (2.0 * math.pi))
    if a.size < 2:
        return float("inf")
    gaps = np.diff(a)
    wrap = 2.0 * math.pi - (a[-1] - a[0])
    min_arc = min(gaps.min(), wrap)
    # the chord is monotone in the arc up to pi; antipodal-ish pairs never
    # realize the minimum for nets denser than a quarter circle
    return float(2.0 * math.sin(min(min_arc, math.pi) / 2.0))


@dataclass
class TubeFamily:
    """A family of same-radius tubes in pairwise chord-separated directions."""

    tubes: list[Tube]
    separation_scale: float
    label: str = ""
    min_separation: float = field(default=float("nan"))

    def __post_init__(self):
        radii = {t.radius for t in self.tubes}
        if len(radii) > 1:
            raise ValueError(f"tubes must share one radius, got {sorted(radii)}")
        if math.isnan(self.min_separation) and self.tubes:
            self.min_separation = min_chord_separation(self.angles)

    def __len__(self) -> int:
        return len(self.tubes)

    @property
    def delta(self) -> float:
        return self.tubes[0].radius

    @property
    def angles(self) -> np.ndarray:
        return np.array([t.dir.phi for t in self.tubes])

    @property
    def bases(self) -> np.ndarray:
        return np.array([t.base for t in self.tubes]).reshape(-1, 3)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("phi,y1,y2,y3,delta\n")
            for t in self.tubes:
                row = (t.dir.phi, t.base[0], t.base[1], t.base[2], t.radius)
                fh.write(",".join("%.17g" % v for v in row) + "\n")

    @staticmethod
    def from_csv(path, separation_scale: float = float("nan"), label: str = "") -> "TubeFamily":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        tubes = [Tube(row[1:4], Direction(row[0]), row[4]) for row in data]
        if math.isnan(separation_scale):
            separation_scale = min_chord_separation(data[:, 0])
        return TubeFamily(tubes, separation_scale, label)


@dataclass
class InclusionReport:
    """Result of sampling T_delta(y,e) against containment in T_2delta(y,e')."""

    delta: float
    chord: float
    n_samples: int
    violations: int
    max_dist: float

    def to_dict(self) -> dict:
        return {
            "lemma": "tube-inclusion-under-direction-perturbation",
            "params": {"delta": self.delta, "chord": self.chord},
            "n_samples": self.n_samples,
            "violations": self.violations,
            "max_ratio": self.max_dist / (2.0 * self.delta),
        }


def check_tube_inclusion(y, e: Direction, eprime: Direction, delta: float,
                         n_samples: int, seed: int = 0) -> InclusionReport:
    """Sample T_delta(y,e) and assert each point lies in T_2delta(y,e').

    Requires the chord |e - e'| <= c1 * delta^2 with c1 = 1/(2 sqrt 2); a
    violated precondition raises PreconditionError (usage error), which is
    distinct from a containment violation counted in the report.
    """
    chord = e.chord_to(eprime)
    if chord > C1_INCLUSION * delta ** 2 * (1.0 + 1e-12):
        raise PreconditionError(
            f"direction chord {chord:.3e} exceeds c1*delta^2 = {C1_INCLUSION * delta**2:.3e}")
    tube = Tube(as_points(y), e, delta)
    pts = sample_tube_points(tube, n_samples, np.random.default_rng(seed))
    big = Tube(as_points(y), eprime, min(2.0 * delta, 1.0 - 1e-12))
    d = dist_to_segment(big, pts)
    bad = d > 2.0 * delta * (1.0 + 1e-9)
    return InclusionReport(delta=delta, chord=chord, n_samples=n_samples,
                           violations=int(np.count_nonzero(bad)), max_dist=float(d.max()))


def inclusion_counterexample(delta: float):
    """Witness that chord ~ delta closeness does NOT give tube inclusion.

    Returns (e, e', x) with x in T_delta(0, e) but x outside T_2delta(0, e')
    for small delta, where |e - e'| ~ delta.
    """
    norm = math.sqrt(1.0 + delta ** 2)
    e = Direction(math.atan2(delta, 1.0))
    eprime = Direction(0.0)
    x = np.array([0.5 / norm, 0.5 * delta / norm, 0.0])
    return e, eprime, x


def _family(angles: np.ndarray, bases: np.ndarray, delta: float,
            separation_scale: float, label: str) -> TubeFamily:
    tubes = [Tube(bases[i], Direction(angles[i]), delta) for i in range(len(angles))]
    return TubeFamily(tubes, separation_scale, label)


def family_random(delta: float, region_radius: float = 0.25, seed: int = 0,
                  quadrant: bool = True) -> TubeFamily:
    """One tube per delta^2-net direction, bases uniform in B(0, region_radius).

    By default directions are restricted to the quadrant |phi - pi/2| <= pi/4
    (the standard reduction for overlap experiments; rotations cover the rest);
    pass quadrant=False for the full circle.
    """
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0,1), got {delta}")
    angles = net_angles(delta ** 2)
    if quadrant:
        angles = angles[np.abs(angles - math.pi / 2.0) <= math.pi / 4.0 + 1e-12]
    rng = np.random.default_rng(seed)
    bases = sample_ball(region_radius, len(angles), rng)
    fam = _family(angles, bases, delta, delta ** 2,
                  f"random(delta={delta:g},R={region_radius:g},seed={seed},quadrant={quadrant})")
    fam.label += f" min_sep={fam.min_separation:.6g}"
    return fam


def family_bush(delta: float) -> TubeFamily:
    """All tubes based at the origin, one per delta^2-net direction."""
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0,1), got {delta}")
    angles = net_angles(delta ** 2)
    bases = np.zeros((len(angles), 3))
    fam = _family(angles, bases, delta, delta ** 2, f"bush(delta={delta:g})")
    fam.label += f" min_sep={fam.min_separation:.6g}"
    return fam


def family_disk(delta: float) -> TubeFamily:
    """The bush family under its set-level reading: the segments through the
    origin sweep the horizontal unit disk; kept as a named scenario input."""
    fam = family_bush(delta)
    fam.label = f"disk(delta={delta:g}) " + fam.label
    return fam


def segment_decomposition(tube: Tube, x):
    """Factor x as y * (s* e, 0) * z at the distance-minimizing s*.

    Returns (s*, z, ||z||); x lies in the tube iff ||z|| <= delta.
    """
    d, s_star = dist_to_segment(tube, x, return_argmin=True)
    core = segment_point(tube.base, tube.dir, np.clip(s_star, -0.5, 0.5))
    z = group_mul(-core, as_points(x))
    return s_star, z, d
