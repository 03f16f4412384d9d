"""Lagrangian front tracking for planar sets moving with inward normal speed beta.

Closed curves are counterclockwise, so the interior lies to the left and the
inward normal is the tangent rotated by +90 degrees.  An open curve lives in an
island V: its endpoints sit on the boundary of V and the region it bounds is
the curve followed by the boundary of V from the last endpoint
counterclockwise back to the first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from shapely.geometry import LinearRing, LineString, MultiLineString, Point, Polygon
from shapely.ops import linemerge

from .domain import Domain, polygon_area
from .errors import (
    ComputeError,
    DegenerateTriple,
    MisalignedField,
    OpenCurveWithoutDomain,
    SelfIntersectionAfterStep,
    UnstableStep,
)

EPS_AREA = 1e-6
COLLINEAR_TOL = 1e-12
KNOT_ANGLE = 0.35  # vertices turning more than this are kept by the resampler
FAN_STEP = 0.1  # max angle between consecutive points of a corner fan
MITER_LIMIT = 4.0
CLIP_TOL = 1e-9
CFL = 0.5
MIN_VERTICES = 128


@dataclass(frozen=True, eq=False)
class FrontCurve:
    """Polygonal front.

    Parameters
    ----------
    points : (n, 2) array
        Vertices.  Closed curves must be counterclockwise and are stored
        without repeating the first vertex.
    closed : bool
    h0 : float, optional
        Target spacing used by the resampler (default: mean edge length).
    attach : (s0, s1), optional
        Boundary arclength parameters of the endpoints of an open curve.
    """

    points: np.ndarray
    closed: bool = True
    h0: float = 0.0
    attach: tuple | None = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if self.closed and len(p) > 1 and np.allclose(p[0], p[-1]):
            p = p[:-1]
        if len(p) and self.closed and len(p) < 3:
            raise ValueError("a closed curve needs at least three vertices")
        if self.closed and len(p) and polygon_area(p) <= 0:
            raise ValueError("closed curves must be counterclockwise with positive area")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)
        if not self.h0 and len(p) > 1:
            object.__setattr__(self, "h0", float(np.mean(self.edge_lengths())))

    @classmethod
    def empty(cls) -> "FrontCurve":
        """Sentinel for the eradicated (empty) set."""
        return cls(np.zeros((0, 2)), closed=True, h0=1.0)

    @classmethod
    def circle(cls, radius: float, n: int = 256, center=(0.0, 0.0)) -> "FrontCurve":
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        pts = np.asarray(center) + radius * np.column_stack([np.cos(t), np.sin(t)])
        return cls(pts)

    @classmethod
    def ellipse(cls, a: float, b: float, n: int = 512) -> "FrontCurve":
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        return cls(np.column_stack([a * np.cos(t), b * np.sin(t)]))

    @classmethod
    def polygon(cls, vertices, h0: float | None = None) -> "FrontCurve":
        """Closed curve through ``vertices``, densified to spacing ``h0``."""
        c = cls(vertices)
        return resample(c, h0 or c.h0)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    def __len__(self):
        return len(self.points)

    def edges(self) -> np.ndarray:
        p = self.points
        if self.closed:
            return np.roll(p, -1, axis=0) - p
        return np.diff(p, axis=0)

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edges(), axis=1)

    def length(self) -> float:
        return float(np.sum(self.edge_lengths())) if len(self) > 1 else 0.0

    def is_simple(self) -> bool:
        if len(self) < 3:
            return True
        if self.closed:
            return LinearRing(self.points).is_simple
        return LineString(self.points).is_simple

    def normals(self) -> tuple[np.ndarray, np.ndarray]:
        """Inward unit normals of the edges entering and leaving each vertex.

        For open curves the end vertices reuse their single edge normal.
        """
        e = self.edges()
        ln = np.linalg.norm(e, axis=1, keepdims=True)
        if np.any(ln == 0):
            raise DegenerateTriple("coincident consecutive vertices")
        t = e / ln
        n = np.column_stack([-t[:, 1], t[:, 0]])
        if self.closed:
            return np.roll(n, 1, axis=0), n
        n_in = np.vstack([n[:1], n])
        n_out = np.vstack([n, n[-1:]])
        return n_in, n_out

    def vertex_normals(self) -> np.ndarray:
        n_in, n_out = self.normals()
        m = n_in + n_out
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    def region(self, V: Domain | None = None) -> np.ndarray:
        """Counterclockwise ring bounding the enclosed region."""
        if self.closed:
            return self.points
        if V is None:
            raise OpenCurveWithoutDomain("an open curve needs a domain to enclose a region")
        s0, s1 = self.attach if self.attach is not None else V.boundary_param(self.points[[0, -1]])
        back = V.boundary_between(s1, s0)
        return np.vstack([self.points, back[1:-1]])

    def to_csv(self, path):
        np.savetxt(path, self.points, delimiter=",", header="x,y", comments="", fmt="%.12g")


@dataclass(frozen=True, eq=False)
class SpeedField:
    """Inward normal speed at each vertex, optionally with the effort density E(beta)."""

    beta: np.ndarray
    effort: np.ndarray | None = None

    @classmethod
    def from_effort(cls, beta, E: Callable, basic: bool = False) -> "SpeedField":
        beta = np.asarray(beta, dtype=float)
        if basic and np.any(beta < -1.0 - 1e-12):
            raise ComputeError("speeds below -1 are meaningless under the basic effort")
        return cls(beta, np.asarray(E(beta), dtype=float))

    @classmethod
    def constant(cls, curve: FrontCurve, value: float) -> "SpeedField":
        return cls(np.full(len(curve), float(value)))

    def __len__(self):
        return len(self.beta)


def curvature(curve: FrontCurve) -> np.ndarray:
    """Signed curvature from the circle through each vertex and its neighbours.

    Positive where the set is locally convex.  Collinear triples give 0; the
    two end vertices of an open curve copy their neighbour.
    """
    p = curve.points
    if curve.closed:
        a, b, c = np.roll(p, 1, 0), p, np.roll(p, -1, 0)
    else:
        if len(p) < 3:
            return np.zeros(len(p))
        a, b, c = p[:-2], p[1:-1], p[2:]
    u, v, w = b - a, c - b, c - a
    la, lb, lc = (np.linalg.norm(x, axis=1) for x in (u, v, w))
    if np.any(la * lb * lc == 0):
        raise DegenerateTriple("coincident vertices in a curvature triple")
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    k = np.where(np.abs(cross) <= COLLINEAR_TOL * la * lb, 0.0, 2.0 * cross / (la * lb * lc))
    if not curve.closed:
        k = np.concatenate([k[:1], k, k[-1:]])
    return k


def area_perimeter(curve: FrontCurve, V: Domain | None = None) -> tuple[float, float]:
    """Area of the enclosed region and length of the relative boundary."""
    if curve.is_empty:
        return 0.0, 0.0
    return polygon_area(curve.region(V)), curve.length()


def _trapezoid_line(curve: FrontCurve, values: np.ndarray) -> float:
    if curve.closed:
        avg = 0.5 * (values + np.roll(values, -1))
    else:
        avg = 0.5 * (values[:-1] + values[1:])
    return float(np.sum(avg * curve.edge_lengths()))


def total_effort(curve: FrontCurve, field: SpeedField, E: Callable | None = None) -> float:
    """Integral of E(beta) along the relative boundary (trapezoidal rule)."""
    if curve.is_empty:
        return 0.0
    if len(field) != len(curve):
        raise MisalignedField(f"{len(field)} speeds for {len(curve)} vertices")
    vals = field.effort if E is None else np.asarray(E(field.beta), dtype=float)
    if vals is None:
        raise ComputeError("no effort values and no effort function given")
    return _trapezoid_line(curve, vals)


def normal_flux(curve: FrontCurve, field: SpeedField) -> float:
    """Integral of -beta along the curve: the rate of change of the enclosed area."""
    if curve.is_empty:
        return 0.0
    if len(field) != len(curve):
        raise MisalignedField(f"{len(field)} speeds for {len(curve)} vertices")
    return -_trapezoid_line(curve, field.beta)


# -- resampling and stepping ---------------------------------------------------


def _turn_angles(p: np.ndarray, closed: bool) -> np.ndarray:
    if closed:
        t_in, t_out = p - np.roll(p, 1, 0), np.roll(p, -1, 0) - p
    else:
        t_in, t_out = p[1:-1] - p[:-2], p[2:] - p[1:-1]
    cr = t_in[:, 0] * t_out[:, 1] - t_in[:, 1] * t_out[:, 0]
    dt = np.einsum("ij,ij->i", t_in, t_out)
    phi = np.arctan2(cr, dt)
    if not closed:
        phi = np.concatenate([[np.pi], phi, [np.pi]])
    return phi


def _resample_piece(piece: np.ndarray, h0: float) -> np.ndarray:
    """Uniform arclength points on a polyline, both ends included."""
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(piece, axis=0), axis=1))])
    m = max(1, int(round(s[-1] / h0)))
    q = np.linspace(0.0, s[-1], m + 1)
    if len(piece) >= 4:
        # shape-preserving in arclength, so short corner fans are not flattened to chords
        return PchipInterpolator(s, piece)(q)
    return np.column_stack([np.interp(q, s, piece[:, 0]), np.interp(q, s, piece[:, 1])])


def resample(curve: FrontCurve, h0: float | None = None) -> FrontCurve:
    """Redistribute vertices at spacing ~h0, keeping sharp corners as fixed knots."""
    if curve.is_empty:
        return curve
    h0 = h0 or curve.h0
    p = curve.points
    keep = np.concatenate([[True], np.linalg.norm(np.diff(p, axis=0), axis=1) > 1e-14])
    p = p[keep]
    if curve.closed and np.linalg.norm(p[0] - p[-1]) <= 1e-14:
        p = p[:-1]
    knots = np.flatnonzero(np.abs(_turn_angles(p, curve.closed)) > KNOT_ANGLE)
    if curve.closed:
        start = knots[0] if len(knots) else 0
        p = np.roll(p, -start, axis=0)
        knots = np.sort((knots - start) % len(p)) if len(knots) else np.array([0])
        ring = np.vstack([p, p[:1]])
        bounds = list(knots) + [len(p)]
    else:
        ring = p
        bounds = sorted(set(knots.tolist()) | {0, len(p) - 1})
    if curve.closed and not len(np.flatnonzero(np.abs(_turn_angles(p, True)) > KNOT_ANGLE)) and len(p) >= 8:
        # smooth closed front: periodic cubic spline in arclength
        ring = np.vstack([p, p[:1]])
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(ring, axis=0), axis=1))])
        m = max(8, int(round(s[-1] / h0)))
        sp = CubicSpline(s, ring, bc_type="periodic")
        pts = sp(np.linspace(0.0, s[-1], m, endpoint=False))
        return FrontCurve(pts, True, h0, curve.attach)
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        out.append(_resample_piece(ring[a : b + 1], h0)[:-1])
    if not curve.closed:
        out.append(p[-1:])
    return FrontCurve(np.vstack(out), curve.closed, h0, curve.attach)


def _rot(n: np.ndarray, th: float) -> np.ndarray:
    c, s = np.cos(th), np.sin(th)
    return np.array([c * n[0] - s * n[1], s * n[0] + c * n[1]])


def _displace(curve: FrontCurve, beta: np.ndarray, dt: float) -> np.ndarray:
    """Move vertices by beta dt along the inward normal.

    Straight-edge corners use the miter offset.  A corner on the side the
    front moves away from is unfolded into a circular fan, which is the
    Minkowski-sum behaviour of unit-speed expansion.
    """
    p = curve.points
    n_in, n_out = curve.normals()
    phi = _turn_angles(p, curve.closed)
    out = []
    for i in range(len(p)):
        d = beta[i] * dt
        a, b = n_in[i], n_out[i]
        ends = not curve.closed and i in (0, len(p) - 1)
        if not ends and ((d < 0 and phi[i] > FAN_STEP) or (d > 0 and phi[i] < -FAN_STEP)):
            k = int(np.ceil(abs(phi[i]) / FAN_STEP))
            out.extend(p[i] + d * _rot(a, phi[i] * j / k) for j in range(k + 1))
            continue
        if ends:
            m = a
        else:
            m = (a + b) / max(1.0 + float(a @ b), 1.0 / MITER_LIMIT)
        out.append(p[i] + d * m)
    return np.asarray(out)


def _orient_like(piece: np.ndarray, ref) -> np.ndarray:
    """Reverse ``piece`` if it runs against the direction of the reference line."""
    s0, s1 = ref.project(Point(piece[0])), ref.project(Point(piece[min(1, len(piece) - 1)]))
    L = ref.length
    if ((s1 - s0) % L) > 0.5 * L:
        return piece[::-1]
    return piece


def _clip(points: np.ndarray, closed: bool, V: Domain) -> np.ndarray | None:
    """Part of the displaced front inside V as an open polyline (None if wholly inside)."""
    if closed and np.all(V.contains(points, CLIP_TOL)):
        return None
    line = LinearRing(points) if closed else LineString(points)
    inside = line.intersection(V.shape)
    if isinstance(inside, MultiLineString):
        inside = linemerge(inside)
    if isinstance(inside, MultiLineString):
        raise SelfIntersectionAfterStep(f"front splits into {len(inside.geoms)} pieces inside the domain")
    if not isinstance(inside, LineString) or inside.is_empty:
        return np.zeros((0, 2))
    piece = np.asarray(inside.coords)
    if closed:
        if np.allclose(piece[0], piece[-1]):
            return None
        return _orient_like(piece, line)
    return _orient_like(piece, LineString(points)) if len(piece) > 1 else piece


def effective_h0(curve: FrontCurve, h0: float | None = None) -> float:
    """Target spacing, refined so a small closed front keeps at least MIN_VERTICES vertices."""
    h0 = h0 or curve.h0
    if curve.closed and not curve.is_empty:
        h0 = min(h0, curve.length() / MIN_VERTICES)
    return h0


def evolve_step(
    curve: FrontCurve, field: SpeedField, dt: float, V: Domain | None = None, h0: float | None = None
) -> FrontCurve:
    """Advance the front by one explicit step of x_t = beta n.

    Returns :meth:`FrontCurve.empty` when the enclosed area falls below
    ``EPS_AREA``.  Raises :class:`SelfIntersectionAfterStep` on any
    topology change.
    """
    if curve.is_empty:
        return curve
    if len(field) != len(curve):
        raise MisalignedField(f"{len(field)} speeds for {len(curve)} vertices")
    h0 = effective_h0(curve, h0)
    beta = np.asarray(field.beta, dtype=float)
    if dt * np.max(np.abs(beta)) > CFL * h0 * (1 + 1e-12):
        raise UnstableStep(f"dt*max|beta| = {dt * np.max(np.abs(beta)):.3g} exceeds {CFL}*h0 = {CFL * h0:.3g}")
    q = _displace(curve, beta, dt)
    closed = curve.closed
    if closed:
        if polygon_area(q) <= EPS_AREA:
            return FrontCurve.empty()
        if not LinearRing(q).is_simple:
            raise SelfIntersectionAfterStep("the displaced front intersects itself")
    if V is not None:
        if not closed:
            ends = V.project(q[[0, -1]])
            for j, e in zip((0, -1), ends):
                if V.contains(q[j], 0.0)[0]:
                    q[j] = e
        piece = _clip(q, closed, V)
        if piece is not None:
            if len(piece) < 2:
                return FrontCurve.empty()
            piece[[0, -1]] = V.project(piece[[0, -1]])
            closed = False
            q = piece
    if not closed and not LineString(q).is_simple:
        raise SelfIntersectionAfterStep("the displaced front intersects itself")
    if closed:
        out = resample(FrontCurve(q, True, h0), h0)
    else:
        attach = tuple(V.boundary_param(q[[0, -1]])) if V is not None else None
        out = resample(FrontCurve(q, False, h0, attach), h0)
    if V is not None and area_perimeter(out, V)[0] <= EPS_AREA:
        return FrontCurve.empty()
    if closed and polygon_area(out.points) <= EPS_AREA:
        return FrontCurve.empty()
    return out


# -- markers -------------------------------------------------------------------


def _ring_arclength(curve: FrontCurve) -> np.ndarray:
    p = curve.points
    q = np.vstack([p, p[:1]]) if curve.closed else p
    return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(q, axis=0), axis=1))])


def locate(curve: FrontCurve, pts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nearest points on the curve: (points, arclength, interpolated unit normal)."""
    p = curve.points
    line = LinearRing(p) if curve.closed else LineString(p)
    s = np.array([line.project(Point(x)) for x in np.atleast_2d(pts)])
    s_nodes = _ring_arclength(curve)
    q = np.vstack([p, p[:1]]) if curve.closed else p
    nv = curve.vertex_normals()
    nq = np.vstack([nv, nv[:1]]) if curve.closed else nv
    k = np.clip(np.searchsorted(s_nodes, s, side="right") - 1, 0, len(q) - 2)
    w = ((s - s_nodes[k]) / np.maximum(s_nodes[k + 1] - s_nodes[k], 1e-300))[:, None]
    on = (1 - w) * q[k] + w * q[k + 1]
    n = (1 - w) * nq[k] + w * nq[k + 1]
    return on, s, n / np.linalg.norm(n, axis=1, keepdims=True)


def sample_on_curve(curve: FrontCurve, values: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Linear interpolation of per-vertex ``values`` at arclength positions ``s``."""
    s_nodes = _ring_arclength(curve)
    v = np.concatenate([values, values[:1]]) if curve.closed else np.asarray(values)
    return np.interp(s, s_nodes, v)


def advance_markers(old: FrontCurve, field: SpeedField, markers, dt: float, new: FrontCurve) -> np.ndarray:
    """Move markers along the normal with the local speed, then snap onto ``new``."""
    on, s, n = locate(old, markers)
    b = sample_on_curve(old, field.beta, s)
    moved = on + (b * dt)[:, None] * n
    if new.is_empty:
        return moved
    return locate(new, moved)[0]


def marker_orthogonality(traj: "Trajectory") -> float:
    """Largest angle (radians) between a marker displacement and the curve normal."""
    if traj.markers is None:
        return 0.0
    worst = 0.0
    for k in range(len(traj.times) - 1):
        c = traj.curves[k + 1]
        if c.is_empty:
            break
        d = traj.markers[k + 1] - traj.markers[k]
        ln = np.linalg.norm(d, axis=1)
        ok = ln > 1e-12
        if not np.any(ok):
            continue
        _, _, n = locate(c, traj.markers[k + 1][ok])
        cosang = np.abs(np.einsum("ij,ij->i", d[ok], n)) / ln[ok]
        worst = max(worst, float(np.max(np.arccos(np.clip(cosang, 0.0, 1.0)))))
    return worst


# -- trajectories --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time series of fronts with the speed fields that drove them.

    ``fields[k]`` is the speed on ``curves[k]`` (``None`` once the set is
    empty).  ``effort`` is the total effort at each time, or over the step
    starting there when ``effort_midpoint`` is set.
    """

    times: np.ndarray
    curves: list
    fields: list
    effort: np.ndarray
    domain: Domain | None = None
    markers: np.ndarray | None = None
    basic: bool = False
    monotone: bool = False
    effort_midpoint: bool = False
    area: np.ndarray = field(init=False, repr=False)
    perimeter: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise ComputeError("trajectory times must increase")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "effort", np.asarray(self.effort, dtype=float))
        ap = np.array([area_perimeter(c, self.domain) for c in self.curves]).reshape(-1, 2)
        object.__setattr__(self, "area", ap[:, 0])
        object.__setattr__(self, "perimeter", ap[:, 1])
        if self.monotone:
            self.check_nested()

    def check_nested(self, tol: float = 1e-6):
        """Raise if some front leaves the region of the previous one."""
        for k in range(len(self.curves) - 1):
            a, b = self.curves[k], self.curves[k + 1]
            if a.is_empty or b.is_empty:
                continue
            outer = Polygon(a.region(self.domain)).buffer(tol)
            if not all(outer.covers(Point(x)) for x in b.points):
                raise ComputeError(f"front at t={self.times[k + 1]:.6g} leaves the previous region")

    @property
    def eradicated(self) -> bool:
        return bool(self.curves[-1].is_empty)

    def flux(self) -> np.ndarray:
        """Integral of -beta along each front (NaN where no field is stored)."""
        return np.array([np.nan if f is None else normal_flux(c, f) for c, f in zip(self.curves, self.fields)])

    def to_csv(self, path, extra: dict | None = None):
        cols = {"t": self.times, "area": self.area, "perimeter": self.perimeter, "effort": self.effort}
        cols.update(extra or {})
        names = list(cols)
        with open(path, "w") as fh:
            fh.write(",".join(names) + "\n")
            for row in zip(*(cols[n] for n in names)):
                fh.write(",".join(f"{v:.10g}" for v in row) + "\n")

    def viewbox(self, margin: float = 0.2) -> tuple[float, float, float, float]:
        pts = [c.points for c in self.curves if not c.is_empty]
        if self.domain is not None:
            pts.append(self.domain.boundary_ring())
        allp = np.vstack(pts)
        lo, hi = allp.min(axis=0), allp.max(axis=0)
        pad = margin * max(hi - lo)
        return lo[0] - pad, lo[1] - pad, (hi - lo)[0] + 2 * pad, (hi - lo)[1] + 2 * pad

    def svg_frames(self, directory, n_frames: int = 6) -> list:
        """Write ``n_frames`` evenly spaced SVG frames with a common fixed view box."""
        from pathlib import Path

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        x0, y0, w, h = self.viewbox()
        idx = np.unique(np.linspace(0, len(self.curves) - 1, n_frames).round().astype(int))
        out = []
        for j, k in enumerate(idx):
            parts = []
            if self.domain is not None:
                parts.append(_svg_path(self.domain.boundary_ring(), True, "none", "#444"))
            c = self.curves[k]
            if not c.is_empty:
                parts.append(_svg_path(c.region(self.domain), True, "#c33", "#800", 0.35))
            body = "\n".join(parts)
            sw = 0.004 * max(w, h)
            svg = (
                f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.6g} {-(y0 + h):.6g} {w:.6g} {h:.6g}" '
                f'width="480" height="{480 * h / w:.0f}">\n'
                f'<g transform="scale(1,-1)" stroke-width="{sw:.4g}">\n{body}\n</g>\n'
                f'<text x="{x0 + 0.02 * w:.6g}" y="{-(y0 + h) + 0.06 * h:.6g}" font-size="{0.04 * h:.4g}">'
                f"t = {self.times[k]:.4f}</text>\n</svg>\n"
            )
            fp = d / f"frame_{j:03d}.svg"
            fp.write_text(svg)
            out.append(fp)
        return out


def _svg_path(pts, closed, fill, stroke, opacity=1.0) -> str:
    dstr = "M " + " L ".join(f"{x:.6g} {y:.6g}" for x, y in pts) + (" Z" if closed else "")
    return f'<path d="{dstr}" fill="{fill}" fill-opacity="{opacity}" stroke="{stroke}"/>'


def evolve(
    curve: FrontCurve,
    speed: Callable[[float, FrontCurve], SpeedField],
    dt: float,
    T: float,
    V: Domain | None = None,
    E: Callable | None = None,
    basic: bool = False,
    markers=None,
    monotone: bool = False,
) -> Trajectory:
    """Run :func:`evolve_step` from t=0 to ``T`` (or until the set is empty).

    ``dt`` is the largest step; it is shortened whenever the displacement
    bound of :func:`evolve_step` would be violated.

    ``speed(t, curve)`` supplies the field at each step; ``E`` turns it into
    an effort series (zero if omitted).
    """
    times, curves, fields, eff = [0.0], [curve], [], []
    mk = None if markers is None else [np.asarray(markers, dtype=float)]
    t = 0.0
    while t < T - 1e-12:
        f = speed(t, curve)
        fields.append(f)
        eff.append(total_effort(curve, f, E) if E is not None else 0.0)
        vmax = float(np.max(np.abs(f.beta)))
        h = min(dt, T - t)
        if vmax > 0:
            h = min(h, CFL * effective_h0(curve) / vmax)
        new = evolve_step(curve, f, h, V)
        if mk is not None:
            mk.append(advance_markers(curve, f, mk[-1], h, new))
        t += h
        times.append(t)
        curves.append(new)
        curve = new
        if new.is_empty:
            break
    if curve.is_empty:
        fields.append(None)
        eff.append(0.0)
    else:
        f = speed(t, curve)
        fields.append(f)
        eff.append(total_effort(curve, f, E) if E is not None else 0.0)
    return Trajectory(
        np.array(times), curves, fields, np.array(eff), V,
        None if mk is None else np.array(mk), basic, monotone,
    )


def transport_speed(old: FrontCurve, field: SpeedField, new: FrontCurve) -> SpeedField:
    """Carry a speed field to the vertices of ``new`` by nearest-point lookup on ``old``."""
    _, s, _ = locate(old, new.points)
    return SpeedField(sample_on_curve(old, field.beta, s))


def area_balance_residual(traj: Trajectory) -> float:
    """Largest mismatch between the discrete area rate and the boundary flux.

    Over step k the flux is the integral of -beta_k averaged over the fronts
    at both ends of the step (beta_k carried to the new front), which is
    exact for uniform offsets of convex curves.  Under the basic effort the
    rate is also compared with perimeter minus recorded effort: averaged
    over both ends of the step, or with the mean perimeter when the
    trajectory records step-averaged effort (``effort_midpoint``).
    Residuals are divided by the mean perimeter of the step.  Steps ending
    in the empty set are skipped.
    """
    if len(traj.times) < 3:
        raise ComputeError("need at least three time samples")
    A, P, E = traj.area, traj.perimeter, traj.effort
    worst = 0.0
    for k in range(len(traj.times) - 1):
        old, new, f = traj.curves[k], traj.curves[k + 1], traj.fields[k]
        if new.is_empty or f is None:
            continue
        rate = (A[k + 1] - A[k]) / (traj.times[k + 1] - traj.times[k])
        q0 = normal_flux(old, f)
        q1 = normal_flux(new, transport_speed(old, f, new))
        per = 0.5 * (P[k] + P[k + 1])
        r = abs(rate - 0.5 * (q0 + q1))
        if traj.basic:
            if traj.effort_midpoint:
                r = max(r, abs(rate - (per - E[k])))
            else:
                r = max(r, abs(rate - 0.5 * ((P[k] - E[k]) + q1)))
        worst = max(worst, r / per)
    return worst
