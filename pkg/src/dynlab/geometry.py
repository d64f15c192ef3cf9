"""Jordan disks and the planar measurements made on them.

A JordanDisk is a polygonal approximation of a topological disk: a closed
counterclockwise polyline plus an interior basepoint.  Shape statistics,
certified annulus-modulus lower bounds, union-with-filling, and the Euclidean
surrogate of hyperbolic balls all live here.  Boolean polygon operations are
delegated to shapely (GEOS); every result is re-wrapped as a JordanDisk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull
from shapely.geometry import LineString, Point, Polygon
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

from .errors import GeometryError

DEFAULT_BOUNDARY_POINTS = 512
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class JordanDisk:
    boundary: np.ndarray   # closed ccw polyline (last point != first)
    basepoint: complex

    def __post_init__(self):
        b = np.asarray(self.boundary, dtype=complex)
        if len(b) < 3:
            raise GeometryError("boundary needs at least 3 points")
        if _signed_area(b) < 0:
            b = b[::-1].copy()
        object.__setattr__(self, "boundary", b)
        object.__setattr__(self, "basepoint", complex(self.basepoint))

    @classmethod
    def circle(cls, center: complex, radius: float,
               m: int = DEFAULT_BOUNDARY_POINTS) -> "JordanDisk":
        t = np.arange(m) / m
        return cls(center + radius * np.exp(2j * np.pi * t), center)

    def validate(self) -> "JordanDisk":
        """Check simplicity and that the basepoint has winding number 1."""
        if not self.polygon.is_simple or not self.polygon.is_valid:
            raise GeometryError("boundary polyline is not simple")
        if winding_number(self.boundary, self.basepoint) != 1:
            raise GeometryError("basepoint is not inside the boundary")
        return self

    @cached_property
    def polygon(self) -> Polygon:
        return Polygon([(z.real, z.imag) for z in self.boundary])

    @cached_property
    def diameter(self) -> float:
        b = self.boundary
        if len(b) > 600:
            # hull first: O(n^2) over all samples would dominate
            pts = np.column_stack([b.real, b.imag])
            try:
                v = ConvexHull(pts).vertices
                b = b[v]
            except Exception:
                pass  # degenerate (collinear) input; fall through to O(n^2)
        return float(np.abs(b[:, None] - b[None, :]).max())

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        p = Point(z.real, z.imag)
        if not self.polygon.contains(p):
            return False
        if margin > 0.0:
            return self.polygon.exterior.distance(p) > margin
        return True

    def boundary_distance(self, z: complex) -> float:
        return float(self.polygon.exterior.distance(Point(z.real, z.imag)))

    def resample(self, m: int) -> "JordanDisk":
        """Arc-length resampling of the boundary to m points."""
        b = np.append(self.boundary, self.boundary[0])
        seg = np.abs(np.diff(b))
        s = np.concatenate([[0.0], np.cumsum(seg)])
        total = s[-1]
        t = np.arange(m) / m * total
        re = np.interp(t, s, b.real)
        im = np.interp(t, s, b.imag)
        return JordanDisk(re + 1j * im, self.basepoint)

    def to_json(self) -> dict:
        return {
            "boundary": [[z.real, z.imag] for z in self.boundary],
            "basepoint": [self.basepoint.real, self.basepoint.imag],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "JordanDisk":
        b = np.array([complex(re, im) for re, im in obj["boundary"]])
        bp = complex(obj["basepoint"][0], obj["basepoint"][1])
        return cls(b, bp)


def _signed_area(b: np.ndarray) -> float:
    x, y = b.real, b.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def winding_number(polyline: np.ndarray, z: complex) -> int:
    """Winding number of a closed polyline around z."""
    v = np.append(polyline, polyline[0]) - z
    ang = np.angle(v[1:] / v[:-1])
    return int(round(float(np.sum(ang)) / TWO_PI))


@dataclass(frozen=True)
class ShapeStats:
    inner_radius: float
    outer_radius: float

    @property
    def shape(self) -> float:
        return self.outer_radius / self.inner_radius


@dataclass(frozen=True)
class ModulusBound:
    lower: float
    method: str  # "round-annulus" | "degenerate"


def shape_stats(disk: JordanDisk, z: complex) -> ShapeStats:
    """Inradius/outradius of the disk seen from z, exact on the polyline."""
    z = complex(z)
    if not disk.contains(z):
        raise GeometryError("z is not strictly inside the disk")
    d = np.abs(disk.boundary - z)
    return ShapeStats(inner_radius=float(d.min()), outer_radius=float(d.max()))


def contains_disk(outer: JordanDisk, inner: JordanDisk) -> bool:
    """closure(inner) subset of outer, by winding plus boundary-crossing test."""
    if winding_number(outer.boundary, inner.basepoint) != 1:
        return False
    outer_line = LineString([(z.real, z.imag) for z in
                             np.append(outer.boundary, outer.boundary[0])])
    inner_line = LineString([(z.real, z.imag) for z in
                             np.append(inner.boundary, inner.boundary[0])])
    return not outer_line.intersects(inner_line)


def modulus_lower_bound(outer: JordanDisk, inner: JordanDisk) -> ModulusBound:
    """Certified lower bound on mod(outer; inner).

    A round annulus centered at a with radii (OR(inner,a), IR(outer,a))
    embeds in outer \\ closure(inner), so (1/2pi) log(IR/OR) is a true lower
    bound; it is maximized over the inner centroid and the inner basepoint.
    """
    if not contains_disk(outer, inner):
        raise GeometryError("inner disk is not compactly contained in outer")
    candidates = [inner.basepoint]
    c = inner.polygon.centroid
    candidates.append(complex(c.x, c.y))
    best = 0.0
    for a in candidates:
        if not outer.contains(a) or not inner.contains(a):
            continue
        ir = float(np.abs(outer.boundary - a).min())
        orad = float(np.abs(inner.boundary - a).max())
        if orad > 0:
            best = max(best, math.log(ir / orad) / TWO_PI)
    best = max(best, 0.0)
    return ModulusBound(lower=best,
                        method="round-annulus" if best > 0 else "degenerate")


def fill_union(core: JordanDisk, attachments: list[JordanDisk],
               resolution: int | None = None) -> JordanDisk:
    """Union of core and attachments with bounded complementary holes filled.

    Every attachment must intersect the core.  The result's boundary is the
    outer boundary of the union; interior rings are dropped (that is the
    filling).  With no attachments the core is returned unchanged.
    """
    if not attachments:
        return core
    polys = [core.polygon] + [a.polygon for a in attachments]
    merged = unary_union(polys)
    # connectivity of the whole union subsumes the pairwise-overlap intent
    # (a chain of attachments around the core is allowed)
    if merged.geom_type != "Polygon":
        raise GeometryError("union is disconnected")
    filled = orient(Polygon(merged.exterior), 1.0)
    coords = np.array([complex(x, y) for x, y in filled.exterior.coords[:-1]])
    disk = JordanDisk(coords, core.basepoint)
    if resolution:
        disk = disk.resample(resolution)
    return disk


def pseudo_hyperbolic_ball(ambient: JordanDisk, z0: complex, lam: float,
                           m: int = DEFAULT_BOUNDARY_POINTS) -> JordanDisk:
    """Euclidean stand-in for the hyperbolic ball B(z0, lam) of the ambient.

    The round disk of radius tanh(lam/2) * IR(ambient, z0) about z0,
    intersected with the ambient disk.  It is contained in the true
    hyperbolic ball up to the usual factor-4 distortion of the comparison
    between the hyperbolic density and 1/dist-to-boundary.
    """
    z0 = complex(z0)
    if lam <= 0:
        raise GeometryError("lambda must be positive")
    if not ambient.contains(z0):
        raise GeometryError("z0 must lie inside the ambient disk")
    ir = float(np.abs(ambient.boundary - z0).min())
    r = math.tanh(lam / 2.0) * ir
    ball = JordanDisk.circle(z0, r, m)
    inter = ambient.polygon.intersection(ball.polygon)
    if inter.geom_type == "MultiPolygon":
        inter = next(g for g in inter.geoms
                     if g.contains(Point(z0.real, z0.imag)))
    inter = orient(inter, 1.0)
    coords = np.array([complex(x, y) for x, y in inter.exterior.coords[:-1]])
    return JordanDisk(coords, z0)
