"""Island domains V: discs, ellipses and simple polygons."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import ellipe
from shapely.geometry import LineString, Point, Polygon

from .errors import ScenarioError

DISC_SEGMENTS = 2048


def polygon_area(pts) -> float:
    """Signed shoelace area (positive for counterclockwise order)."""
    x, y = np.asarray(pts, dtype=float).T
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(frozen=True, eq=False)
class Domain:
    """A planar island.

    ``kind`` is ``"disc"`` (``radius``), ``"ellipse"`` (semi-axes ``a >= b``,
    major axis along x) or ``"polygon"`` (counterclockwise ``vertices``).
    Discs and ellipses are centred at the origin.
    """

    kind: str
    radius: float = 0.0
    a: float = 0.0
    b: float = 0.0
    vertices: np.ndarray | None = None
    _shape: Polygon = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "disc":
            if not self.radius > 0:
                raise ScenarioError("disc radius must be positive", "radius")
            t = np.linspace(0, 2 * np.pi, DISC_SEGMENTS, endpoint=False)
            ring = self.radius * np.column_stack([np.cos(t), np.sin(t)])
        elif self.kind == "ellipse":
            if not (self.a >= self.b > 0):
                raise ScenarioError("ellipse needs semi-axes a >= b > 0", "a")
            t = np.linspace(0, 2 * np.pi, DISC_SEGMENTS, endpoint=False)
            ring = np.column_stack([self.a * np.cos(t), self.b * np.sin(t)])
        elif self.kind == "polygon":
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
                raise ScenarioError("polygon needs at least three [x, y] vertices", "vertices")
            if np.allclose(v[0], v[-1]):
                v = v[:-1]
            if polygon_area(v) <= 0:
                raise ScenarioError("polygon must be counterclockwise with positive area", "vertices")
            if not Polygon(v).is_valid:
                raise ScenarioError("polygon must be simple", "vertices")
            v.setflags(write=False)
            object.__setattr__(self, "vertices", v)
            ring = v
        else:
            raise ScenarioError(f"unknown domain kind {self.kind!r}", "kind")
        object.__setattr__(self, "_shape", Polygon(ring))

    # -- construction -----------------------------------------------------

    @classmethod
    def from_spec(cls, spec: dict) -> "Domain":
        spec = dict(spec)
        kind = spec.pop("kind", None)
        if kind == "disc":
            return cls("disc", radius=float(spec["radius"]))
        if kind == "ellipse":
            return cls("ellipse", a=float(spec["a"]), b=float(spec["b"]))
        if kind == "polygon":
            return cls("polygon", vertices=np.asarray(spec["vertices"], dtype=float))
        raise ScenarioError(f"unknown domain kind {kind!r}", "kind")

    @classmethod
    def equilateral(cls, side: float = 1.0) -> "Domain":
        h = side * np.sqrt(3.0) / 2.0
        return cls("polygon", vertices=np.array([[0.0, 0.0], [side, 0.0], [side / 2, h]]))

    @classmethod
    def rectangle(cls, w: float, h: float) -> "Domain":
        return cls("polygon", vertices=np.array([[0, 0], [w, 0], [w, h], [0, h]], dtype=float))

    def to_spec(self) -> dict:
        if self.kind == "disc":
            return {"kind": "disc", "radius": self.radius}
        if self.kind == "ellipse":
            return {"kind": "ellipse", "a": self.a, "b": self.b}
        return {"kind": "polygon", "vertices": self.vertices.tolist()}

    # -- geometry ---------------------------------------------------------

    @property
    def shape(self) -> Polygon:
        return self._shape

    @property
    def area(self) -> float:
        if self.kind == "disc":
            return np.pi * self.radius**2
        if self.kind == "ellipse":
            return np.pi * self.a * self.b
        return polygon_area(self.vertices)

    @property
    def perimeter(self) -> float:
        if self.kind == "disc":
            return 2 * np.pi * self.radius
        if self.kind == "ellipse":
            return 4 * self.a * float(ellipe(1 - (self.b / self.a) ** 2))
        return float(np.sum(np.linalg.norm(np.roll(self.vertices, -1, 0) - self.vertices, axis=1)))

    @property
    def diameter(self) -> float:
        if self.kind == "disc":
            return 2 * self.radius
        if self.kind == "ellipse":
            return 2 * self.a
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=-1)))

    @property
    def is_convex(self) -> bool:
        if self.kind != "polygon":
            return True
        v = self.vertices
        e = np.roll(v, -1, 0) - v
        cross = e[:, 0] * np.roll(e, -1, 0)[:, 1] - e[:, 1] * np.roll(e, -1, 0)[:, 0]
        return bool(np.all(cross >= -1e-12))

    def boundary_ring(self) -> np.ndarray:
        return np.asarray(self._shape.exterior.coords)[:-1]

    def contains(self, pts, tol: float = 1e-9) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "disc":
            return np.linalg.norm(pts, axis=1) <= self.radius + tol
        if self.kind == "ellipse":
            # scaled radius is within tol/b of the true distance scale
            return np.hypot(pts[:, 0] / self.a, pts[:, 1] / self.b) <= 1.0 + tol / self.b
        poly = self._shape.buffer(tol)
        return np.array([poly.covers(Point(p)) for p in pts])

    def project(self, pts) -> np.ndarray:
        """Nearest points on the boundary (perpendicular projection)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "disc":
            r = np.linalg.norm(pts, axis=1, keepdims=True)
            return self.radius * pts / np.where(r == 0, 1, r)
        ring = self._shape.exterior
        return np.array([np.asarray(ring.interpolate(ring.project(Point(p))).coords[0]) for p in pts])

    def boundary_param(self, pts) -> np.ndarray:
        """Arclength position of boundary points along the (counterclockwise) exterior."""
        ring = self._shape.exterior
        return np.array([ring.project(Point(p)) for p in np.atleast_2d(pts)])

    @cached_property
    def _ring_s(self):
        c = np.asarray(self._shape.exterior.coords)
        return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(c, axis=0), axis=1))])

    def boundary_between(self, s0: float, s1: float) -> np.ndarray:
        """Boundary points going counterclockwise from arclength s0 to s1 (wrapping)."""
        c = np.asarray(self._shape.exterior.coords)
        s_nodes = self._ring_s
        L = s_nodes[-1]
        s0 = s0 % L
        s1 = s1 % L
        if s1 <= s0:
            s1 += L
        nodes = np.concatenate([s_nodes[:-1], s_nodes[:-1] + L])
        pts_all = np.concatenate([c[:-1], c[:-1]])
        m = (nodes > s0) & (nodes < s1)

        def at(s):
            s = s % L
            k = min(np.searchsorted(s_nodes, s, side="right") - 1, len(c) - 2)
            w = (s - s_nodes[k]) / (s_nodes[k + 1] - s_nodes[k])
            return (1 - w) * c[k] + w * c[k + 1]

        return np.vstack([at(s0), pts_all[m], at(s1)])

    def chord_inside(self, p, q) -> LineString:
        return LineString([p, q]).intersection(self._shape)
