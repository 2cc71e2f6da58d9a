"""Target submanifolds N of R^n: nearest-point projection and tangent/normal projectors.

Projectors are always evaluated at the projected base point pi(p), and only
inside the open tube {dist(p, N) < eta}.  Outside the tube the operations
raise instead of extending smoothly.
"""
from __future__ import annotations

import abc

import numpy as np

from . import kernels

__all__ = [
    "OutsideTubularNeighbourhood",
    "CutLocusAmbiguity",
    "TargetManifold",
    "SphereTarget",
    "CirclePairTarget",
    "CUT_LOCUS_TOL",
    "make_target",
]

CUT_LOCUS_TOL = 1e-9


class OutsideTubularNeighbourhood(ValueError):
    pass


class CutLocusAmbiguity(ValueError):
    pass


def _as_points(p, n):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != n:
        raise ValueError(f"expected points in R^{n}, got trailing dimension {p.shape[-1]}")
    return np.ascontiguousarray(p.reshape(-1, n)), p.shape


class TargetManifold(abc.ABC):
    """Closed submanifold N of R^n with a tubular neighbourhood of radius eta."""

    ambient_dim: int
    tubular_radius: float

    @abc.abstractmethod
    def _project(self, pts):
        """Return (nearest, dist, ambiguous) for an (m, n) array of points."""

    @abc.abstractmethod
    def _tangent(self, base, w):
        """Tangent projection of rows of ``w`` at base points already on N."""

    def _checked(self, pts):
        nearest, dist, ambiguous = self._project(pts)
        if np.any(ambiguous):
            i = int(np.argmax(ambiguous))
            raise CutLocusAmbiguity(f"point {pts[i]} has no unique nearest point on {self!r}")
        worst = float(np.max(dist)) if dist.size else 0.0
        if not worst < self.tubular_radius:
            raise OutsideTubularNeighbourhood(
                f"distance {worst:.6g} to {self!r} is not below the tubular radius {self.tubular_radius:.6g}"
            )
        return nearest, dist

    def nearest_point(self, p) -> np.ndarray:
        pts, shape = _as_points(p, self.ambient_dim)
        return self._checked(pts)[0].reshape(shape)

    def distance(self, p) -> np.ndarray:
        pts, shape = _as_points(p, self.ambient_dim)
        _, dist, _ = self._project(pts)
        return dist.reshape(shape[:-1])

    def tangent_project(self, p, w) -> np.ndarray:
        pts, shape = _as_points(p, self.ambient_dim)
        ws, wshape = _as_points(w, self.ambient_dim)
        if wshape != shape:
            raise ValueError("points and vectors must have the same shape")
        base, _ = self._checked(pts)
        return self._tangent(base, ws).reshape(shape)

    def normal_project(self, p, w) -> np.ndarray:
        return np.asarray(w, dtype=float) - self.tangent_project(p, w)

    def tangent_matrix(self, p) -> np.ndarray:
        """Matrix of the tangent projector at pi(p), shape (..., n, n)."""
        pts, shape = _as_points(p, self.ambient_dim)
        base, _ = self._checked(pts)
        n = self.ambient_dim
        m = pts.shape[0]
        cols = []
        for j in range(n):
            e = np.zeros((m, n))
            e[:, j] = 1.0
            cols.append(self._tangent(base, e))
        P = np.stack(cols, axis=-1)
        return P.reshape(shape[:-1] + (n, n))


class SphereTarget(TargetManifold):
    """Round sphere of radius R centred at the origin of R^n."""

    def __init__(self, radius: float = 1.0, ambient_dim: int = 3, tubular_radius: float | None = None):
        if not radius > 0:
            raise ValueError("sphere radius must be positive")
        if ambient_dim < 2:
            raise ValueError("sphere needs ambient dimension >= 2")
        self.radius = float(radius)
        self.ambient_dim = int(ambient_dim)
        self.tubular_radius = float(tubular_radius) if tubular_radius is not None else 0.5 * self.radius
        if not 0 < self.tubular_radius < self.radius:
            raise ValueError("tubular radius must lie in (0, R)")

    def __repr__(self):
        return f"SphereTarget(radius={self.radius}, ambient_dim={self.ambient_dim})"

    def _project(self, pts):
        nearest, dist, norm = kernels.sphere_nearest(pts, self.radius)
        return nearest, dist, norm < CUT_LOCUS_TOL

    def _tangent(self, base, w):
        return kernels.sphere_tangent(base, w)


class CirclePairTarget(TargetManifold):
    """Two coaxial circles of radius r in the planes x3 = +h and x3 = -h of R^3."""

    ambient_dim = 3

    def __init__(self, radius: float = 1.0, half_gap: float = 0.5, tubular_radius: float | None = None):
        if not radius > 0:
            raise ValueError("circle radius must be positive")
        if not half_gap > 0:
            raise ValueError("the circles are disjoint only for half_gap > 0")
        self.radius = float(radius)
        self.half_gap = float(half_gap)
        default = 0.5 * min(self.radius, self.half_gap)
        self.tubular_radius = float(tubular_radius) if tubular_radius is not None else default
        if not 0 < self.tubular_radius <= default:
            raise ValueError(f"tubular radius must lie in (0, {default}]")

    def __repr__(self):
        return f"CirclePairTarget(radius={self.radius}, half_gap={self.half_gap})"

    def _project(self, pts):
        nearest, dist, gap, rho = kernels.circle_pair_nearest(pts, self.radius, self.half_gap)
        return nearest, dist, (gap < CUT_LOCUS_TOL) | (rho < CUT_LOCUS_TOL)

    def _tangent(self, base, w):
        return kernels.circle_pair_tangent(base, w)

    def angle(self, p) -> np.ndarray:
        """Angular coordinate of pi(p) on its circle."""
        q = self.nearest_point(p)
        return np.arctan2(q[..., 1], q[..., 0])

    def circle_of(self, p) -> np.ndarray:
        """+1 for the top circle, -1 for the bottom one."""
        q = self.nearest_point(p)
        return np.sign(q[..., 2]).astype(int)


def make_target(kind: str, **kw) -> TargetManifold:
    if kind == "sphere":
        return SphereTarget(**kw)
    if kind == "circle_pair":
        return CirclePairTarget(**kw)
    raise ValueError(f"unknown target kind {kind!r}")

