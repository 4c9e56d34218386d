"""Shared fixtures and independent oracles for the test suite."""
import math

import numpy as np

from plateau_hxr.boundary_curves import BoundaryCurveFamily, rect_curve
from plateau_hxr.topology import RegionOp, region_boundary

TWO_PI = 2.0 * math.pi


def random_family(rng, max_rects: int = 4) -> BoundaryCurveFamily:
    """Boundary of a random union of axis-aligned rectangles in [0, 2pi) x [-6, 6]."""
    while True:
        ops = []
        for _ in range(rng.integers(1, max_rects + 1)):
            a = rng.uniform(0.0, 5.5)
            b = min(a + rng.uniform(0.2, 2.5), TWO_PI - 0.05)
            c = rng.uniform(-6.0, 4.0)
            d = min(c + rng.uniform(0.5, 7.0), 6.0)
            if b > a + 0.05 and d > c + 0.05:
                ops.append(RegionOp((round(a, 3), round(b, 3), round(c, 3), round(d, 3)), True))
        if ops:
            return region_boundary(ops)


def grid_height(family: BoundaryCurveFamily, n_meridians: int = 100_000):
    """Height oracle on a uniform meridian grid, from the horizontal edges only.

    Returns (minimum bounded gap over the grid, grid angles, per-angle minimum).
    """
    theta = (np.arange(n_meridians) + 0.5) * TWO_PI / n_meridians
    lo, length, t = [], [], []
    for curve in family:
        for kind, a, b in curve.edges():
            if kind != "h":
                continue
            x0, x1 = sorted((a[0], b[0]))
            lo.append(x0 % TWO_PI)
            length.append(x1 - x0)
            t.append(a[1])
    lo, length, t = map(np.asarray, (lo, length, t))
    hits = np.mod(theta[:, None] - lo[None, :], TWO_PI) < length[None, :]
    ts = np.where(hits, t[None, :], np.nan)
    ts.sort(axis=1)
    gaps = np.diff(ts, axis=1)
    per = np.nanmin(np.where(np.isnan(gaps), np.inf, gaps), axis=1)
    return float(per.min()), theta, per


def two_rect_family(gap_lo=-3.0, gap_hi=3.0):
    return BoundaryCurveFamily.of(rect_curve(-1.2, 1.2, -7.0, gap_lo), rect_curve(-1.2, 1.2, gap_hi, 7.0))
