"""Vertical projection, parabola parameters, fiber lengths, Fubini identity."""

import math

import numpy as np
import pytest

from heiskakeya.heis import group_mul
from heiskakeya.projection import (ParabolaParams, ProjectionReport, arc_distance,
                                   fiber_length, fubini_check, parabola_point, pi_w,
                                   tube_to_parabola, verify_segment_projection,
                                   verify_tube_projection)
from heiskakeya.tubes import Direction, PreconditionError, Tube

RNG = np.random.default_rng(2024)


def quadrant_tube(rng, delta=None, base_scale=1.0):
    delta = delta if delta is not None else float(rng.uniform(0.02, 0.25))
    phi = float(rng.uniform(np.pi / 4, 3 * np.pi / 4))
    return Tube(rng.uniform(-base_scale, base_scale, 3), Direction(phi), delta)


def test_pi_w_examples():
    assert np.allclose(pi_w((0, 1.5, -2)), (1.5, -2))
    assert np.allclose(pi_w((1, 1, 0)), (1, 0.5))
    # fibers are cosets: projecting w*(x,0,0) recovers w
    for _ in range(200):
        y, t, x = RNG.uniform(-3, 3, 3)
        p = group_mul((0, y, t), (x, 0, 0))
        assert np.allclose(pi_w(p), (y, t), atol=1e-12)


def test_tube_to_parabola_examples():
    pp = tube_to_parabola(Tube((0, 0, 0), Direction(np.pi / 2), 0.1))
    assert pp.a == pytest.approx(0.0, abs=1e-15)
    assert pp.b == 0.0 and pp.c == 0.0
    assert (pp.s_minus, pp.s_plus) == (-0.5, 0.5)
    assert pp.nbhd_radius == pytest.approx(0.005)

    pp = tube_to_parabola(Tube((1, 2, 3), Direction(np.pi / 4), 0.1))
    assert pp.a == pytest.approx(1.0)
    assert pp.b == pytest.approx(-1.0)
    assert pp.c == pytest.approx(4.0)
    assert pp.s_minus == pytest.approx(2 - 1 / (2 * math.sqrt(2)))
    assert pp.s_plus == pytest.approx(2 + 1 / (2 * math.sqrt(2)))

    with pytest.raises(PreconditionError):
        tube_to_parabola(Tube((0, 0, 0), Direction(0.0), 0.1))
    with pytest.raises(PreconditionError):
        tube_to_parabola(Tube((0, 0, 0), Direction(np.pi), 0.1))


def test_parabola_params_invariants():
    for _ in range(50):
        t = quadrant_tube(RNG)
        pp = tube_to_parabola(t)
        assert pp.s_plus - pp.s_minus == pytest.approx(1 / math.sqrt(1 + pp.a ** 2), rel=1e-12)
        assert pp.nbhd_radius == pytest.approx((1 + abs(pp.a)) * t.radius ** 2 / 2, rel=1e-12)


def test_parabola_point_examples():
    assert np.allclose(parabola_point(ParabolaParams(0, 0, 0, -1, 1, 0), 1.0), (1, 0))
    assert np.allclose(parabola_point(ParabolaParams(2, 0, 0, -1, 1, 0), 1.0), (1, 1))
    assert np.allclose(parabola_point(ParabolaParams(1, -1, 4, -1, 1, 0), 2.0), (2, 4))


def test_coefficient_separation_tracks_direction_chord():
    # a -> (a,1)/|(a,1)| is bi-Lipschitz on [-1,1]: a-gaps control chord gaps
    phis = np.linspace(np.pi / 4, 3 * np.pi / 4, 200)
    a = np.cos(phis) / np.sin(phis)
    e = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    for i in range(0, 200, 17):
        for j in range(i + 1, 200, 23):
            chord = np.linalg.norm(e[i] - e[j])
            assert abs(a[i] - a[j]) >= 0.7 * chord  # c0 ~ 1/sqrt(2) on the quadrant


def test_segment_projection_identity_exact():
    t = Tube((0, 0, 0), Direction(np.pi / 2), 0.1)
    assert verify_segment_projection(t, 100) <= 1e-14
    rng = np.random.default_rng(10)
    for _ in range(100):
        t = quadrant_tube(rng)
        pp = tube_to_parabola(t)
        err = verify_segment_projection(t, 1000)
        assert err <= 1e-10 * (1 + np.linalg.norm(t.base) + abs(pp.a))


def test_segment_projection_endpoint():
    t = Tube((1, 2, 3), Direction(np.pi / 4), 0.1)
    pp = tube_to_parabola(t)
    from heiskakeya.tubes import segment_point
    end = pi_w(segment_point(t.base, t.dir, 0.5))
    on_arc = pp.point(2 + 1 / (2 * math.sqrt(2)))
    assert np.allclose(end, on_arc, atol=1e-12)


def test_arc_distance_against_dense_sampling():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b, c = rng.uniform(-2, 2, 3)
        lo, hi = sorted(rng.uniform(-1.5, 1.5, 2))
        if hi - lo < 0.1:
            hi = lo + 0.1
        pts = rng.uniform(-2, 2, size=(200, 2))
        d = arc_distance(a, b, c, lo, hi, pts)
        s = np.linspace(lo, hi, 20001)
        arc = np.stack([s, (0.5 * a * s + b) * s + c], axis=1)
        dense = np.linalg.norm(pts[:, None, :] - arc[None, :, :], axis=2).min(axis=1)
        assert np.all(d <= dense + 1e-12)
        assert np.all(dense - d <= 1e-6)


def test_tube_projection_containment():
    rng = np.random.default_rng(4)
    for _ in range(25):
        t = quadrant_tube(rng)
        rep = verify_tube_projection(t, 2000, seed=int(rng.integers(1 << 31)))
        assert rep.violations == 0
        assert rep.max_ratio <= (1 + abs(tube_to_parabola(t).a)) / 2 + 1e-9


def test_tube_projection_ratio_shrinks_with_delta():
    phi = 1.2
    base = np.array([0.3, -0.2, 0.1])
    ratios = []
    for delta in [0.2, 0.1, 0.05, 0.025]:
        t = Tube(base, Direction(phi), delta)
        rep = verify_tube_projection(t, 4000, seed=9)
        a = tube_to_parabola(t).a
        assert rep.max_ratio <= (1 + abs(a)) / 2 + 1e-9
        ratios.append(rep.max_ratio)
    # core samples project exactly onto the arc
    t = Tube(base, Direction(phi), 0.1)
    pp = tube_to_parabola(t)
    from heiskakeya.tubes import segment_point
    core = pi_w(segment_point(t.base, t.dir, np.linspace(-0.5, 0.5, 100)))
    d = arc_distance(pp.a, pp.b, pp.c, pp.s_minus - t.radius, pp.s_plus + t.radius, core)
    assert d.max() <= 1e-10


def test_report_json_schema():
    rep = verify_tube_projection(Tube((0, 0, 0), Direction(np.pi / 2), 0.1), 100, seed=0)
    import json
    data = json.loads(rep.to_json())
    assert set(data) == {"lemma", "params", "n_samples", "violations", "max_ratio"}


def test_fiber_length_waist_and_bound():
    delta = 0.05
    t = Tube((0, 0, 0), Direction(np.pi / 2), delta)
    length = fiber_length(t, (0.0, 0.0))
    assert length == pytest.approx(2 * delta, rel=0.02)
    assert length <= 2 * math.sqrt(2) * delta * 1.02 + 2 * (delta / 200)

    far = fiber_length(t, (5.0, 0.0))
    assert far == 0.0

    with pytest.raises(PreconditionError):
        fiber_length(Tube((0, 0, 0), Direction(0.1), delta), (0, 0))


def test_fiber_length_bound_random():
    rng = np.random.default_rng(6)
    for _ in range(100):
        delta = float(rng.uniform(0.02, 0.15))
        phi = float(rng.uniform(np.pi / 4, 3 * np.pi / 4))
        t = Tube(rng.uniform(-0.5, 0.5, 3), Direction(phi), delta)
        w = rng.uniform(-0.7, 0.7, 2)
        step = delta / 200
        length = fiber_length(t, w, step)
        assert length <= 2 * math.sqrt(2) * delta * 1.02 + 2 * step


def test_fiber_length_left_translation_reduction():
    rng = np.random.default_rng(7)
    for _ in range(20):
        delta = float(rng.uniform(0.03, 0.1))
        t = Tube(rng.uniform(-0.5, 0.5, 3), Direction(float(rng.uniform(np.pi / 3, 2 * np.pi / 3))), delta)
        w = rng.uniform(-0.5, 0.5, 2)
        w3 = np.array([0.0, w[0], w[1]])
        shifted = Tube(group_mul(-w3, t.base), t.dir, delta)
        a = fiber_length(t, w)
        b = fiber_length(shifted, (0.0, 0.0))
        assert a == b  # identical membership sets on the same sample grid


def test_fubini_gaussian():
    h = lambda p: np.exp(-np.sum(np.asarray(p) ** 2, axis=-1))
    disc = fubini_check(h, quad_n=64)
    assert disc <= 1e-6


def test_fubini_zero_and_convergence():
    assert fubini_check(lambda p: np.zeros(np.asarray(p).shape[:-1]), quad_n=16) == 0.0
    # smoothed indicator: discrepancy decreases as nodes double
    h = lambda p: 1.0 / (1.0 + np.exp(np.clip(4 * (np.sum(np.asarray(p) ** 2, axis=-1) - 1.0), -500, 500)))
    prev = np.inf
    for n in (16, 32, 64):
        d = fubini_check(h, quad_n=n, box_half_width=6.0)
        assert d < prev
        prev = d
