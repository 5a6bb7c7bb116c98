"""Numerical geometry of Heisenberg Kakeya tubes.

Library layout:

- `heis`: group product, Koranyi gauge/metric, dilations, rotations.
- `cubics`: vectorized closed-form cubic roots and quartic minimization.
- `tubes`: horizontal segments, delta-tubes, direction nets, tube families.
- `projection`: vertical projection to the plane {x1=0}, tube-to-parabola
  parameters, fiber lengths, change-of-variables check.
- `parabola2d`: planar incidence engine for parabola-arc neighborhoods.
- `grid`: anisotropic 3D fields, tube rasterization, Monte Carlo volumes,
  Heisenberg box counting, power-law fits.
- `sets`: analytic indicator sets (balls, tubes, disk neighborhoods).
- `maxop`: the discretized Kakeya maximal operator and its direction norms.
- `experiments`: named, seeded end-to-end scenarios and the pass criteria.
- `cli`: `heiskakeya run|verify|list` command-line front end.
"""

from .heis import (C1_INCLUSION, CHORD_METRIC_CONSTANT, HPoint, Rotation2, dilate,
                   group_inv, group_mul, koranyi_dist, koranyi_norm, rotate)
from .tubes import (Direction, Tube, TubeFamily, direction_net, dist_to_segment,
                    family_bush, family_disk, family_random, segment_point,
                    tube_contains)

__all__ = [
    "C1_INCLUSION", "CHORD_METRIC_CONSTANT", "HPoint", "Rotation2", "dilate",
    "group_inv", "group_mul", "koranyi_dist", "koranyi_norm", "rotate",
    "Direction", "Tube", "TubeFamily", "direction_net", "dist_to_segment",
    "family_bush", "family_disk", "family_random", "segment_point",
    "tube_contains",
]

__version__ = "0.1.0"
