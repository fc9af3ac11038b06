"""Periodic unit-cell microstructure: matrix phase, soft inclusions, weight.

The cell is Q = [0,1)^d with one inclusion per cell.  The matrix phase (the
connected substrate) carries weight 1; the inclusion carries weight delta.
Phase membership of a point is decided by the exact signed distance of the
inclusion shape, never by a mesh.
"""

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Invalid or degenerate microstructure parameters."""


@dataclass(frozen=True)
class UnitCellGeometry:
    """A 1-periodic microstructure with a single centered inclusion per cell.

    shape "disk" is a ball of the given radius centered at (1/2, ..., 1/2);
    shape "none" has no inclusion (the matrix fills the whole cell).
    """

    dimension: int = 2
    shape: str = "disk"
    radius: float = 0.25

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise GeometryError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.shape not in ("disk", "none"):
            raise GeometryError(f"unknown inclusion shape {self.shape!r}")
        if self.shape == "disk" and not 0.0 < self.radius < 0.5:
            raise GeometryError(
                f"disk radius must lie in (0, 1/2) so inclusions stay separated, got {self.radius}"
            )

    @property
    def center(self):
        return np.full(self.dimension, 0.5)


def indicator_plus(geom, points):
    """Characteristic function of the matrix phase, evaluated 1-periodically.

    Accepts points of shape (..., d); returns 0/1 floats of shape (...).
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != geom.dimension:
        raise GeometryError(f"points have {pts.shape[-1]} coordinates, expected {geom.dimension}")
    if geom.shape == "none":
        return np.ones(pts.shape[:-1])
    wrapped = pts - np.floor(pts)
    dist2 = ((wrapped - geom.center) ** 2).sum(axis=-1)
    return np.where(dist2 < geom.radius**2, 0.0, 1.0)


def indicator_minus(geom, points):
    """Characteristic function of the inclusion phase, 1 - indicator_plus."""
    return 1.0 - indicator_plus(geom, points)


def kappa(geom, delta, points, eps=1.0):
    """Two-phase weight delta + (1-delta) * 1_+(points/eps).

    Equals 1 in the (rescaled) matrix phase and delta in the inclusions.
    """
    if not 0.0 <= delta <= 1.0:
        raise GeometryError(f"delta must lie in [0, 1], got {delta}")
    if eps <= 0.0:
        raise GeometryError(f"eps must be positive, got {eps}")
    pts = np.asarray(points, dtype=float)
    return delta + (1.0 - delta) * indicator_plus(geom, pts / eps)


@dataclass(frozen=True)
class WeightField:
    """The weight kappa bound to a geometry and a softness delta."""

    geometry: UnitCellGeometry
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise GeometryError(f"delta must lie in [0, 1], got {self.delta}")

    def values(self, points, eps=1.0):
        return kappa(self.geometry, self.delta, points, eps)


def gap(geom):
    """Shortest distance between distinct periodic inclusion components.

    Inclusions sit one per cell, so the minimum runs over the nonzero integer
    shifts; for centered disks this is 1 - 2*radius.  Returns +inf when there
    is no inclusion.
    """
    if geom.shape == "none":
        return np.inf
    shifts = np.array(
        [z for z in np.ndindex((3,) * geom.dimension)], dtype=float
    ) - 1.0
    shifts = shifts[(shifts != 0).any(axis=1)]
    value = np.min(np.linalg.norm(shifts, axis=1)) - 2.0 * geom.radius
    if value <= 0.0:
        raise GeometryError(f"inclusions touch or overlap: gap {value:.3g} <= 0")
    return float(value)


def volume_fraction(geom, resolution=1024):
    """Midpoint-quadrature estimate of the matrix volume |Q ∩ matrix|."""
    if resolution < 16:
        raise GeometryError(f"resolution must be >= 16, got {resolution}")
    axes = [(np.arange(resolution) + 0.5) / resolution] * geom.dimension
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return float(indicator_plus(geom, pts).mean())
