"""Minimum-time eradication of convex sets in the plane with effort budget M.

Effort model: E(beta) = max(0, 1 + beta), so an uncontrolled front expands
with unit speed and a budget M spent along the boundary changes the area at
rate perimeter - M.

Convex sets are stored through their support function h on a fixed fan of
N outward normals u_j; the set is the intersection of the half planes
x . u_j <= h_j.  One planning step of length dt:

1. every boundary point moves out with unit speed: h -> h + dt (the set D);
2. the parts of D with curvature above 1/r are replaced by arcs of radius r,
   i.e. D is replaced by its morphological opening (D - rB) + rB;
3. r is chosen so that the effort spent, integral of (1 + beta), is M.

Facets moved less than dt form the active arcs (beta > -1), all of radius r.
When r reaches the inradius of D the core of the opening is a segment; the
set is then a stadium whose caps shrink while its flat sides expand, and
finally a shrinking disc.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linprog
from scipy.spatial import ConvexHull, QhullError
from shapely.geometry import MultiPoint

from .curves import FrontCurve, SpeedField, Trajectory, area_perimeter
from .errors import ComputeError, ConvexityLost, InfeasibleBudget, RadiusBisectionFailed

N_NORMALS = 512
EPS_AREA = 1e-6
TERMINAL_AREA = 100 * EPS_AREA
R_TOL = 1e-8
ACTIVE_TOL = 1e-9
SATURATION_TOL = 1e-2


# -- closed-form pieces --------------------------------------------------------


def feasible(curve: FrontCurve | np.ndarray, M: float) -> str:
    """"Feasible" if the convex hull of the set has perimeter below M, else "Unknown".

    The test is sufficient only: a failed test says nothing.
    """
    pts = curve.points if isinstance(curve, FrontCurve) else np.asarray(curve, dtype=float)
    return "Feasible" if MultiPoint(pts).convex_hull.length < M else "Unknown"


def disc_min_time(R0: float, M: float) -> float:
    """Time for a disc of radius R0 to vanish when the full budget M is spent on it.

    dR/dt = 1 - M/(2 pi R), integrated in closed form.
    """
    if R0 <= 0:
        return 0.0
    k = 2 * np.pi / M
    if k * R0 >= 1.0:
        raise InfeasibleBudget(f"M = {M:g} does not exceed the perimeter 2 pi R0 = {2 * np.pi * R0:g}")
    return float(-R0 - np.log1p(-k * R0) / k)


def smallest_enclosing_disc(pts, seed: int = 0) -> tuple[np.ndarray, float]:
    """Welzl's randomized incremental algorithm (iterative form)."""
    p = np.asarray(pts, dtype=float)
    p = p[np.random.default_rng(seed).permutation(len(p))]

    def circ2(a, b):
        c = 0.5 * (a + b)
        return c, np.linalg.norm(a - c)

    def circ3(a, b, c):
        d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        if abs(d) < 1e-300:
            pairs = [circ2(a, b), circ2(a, c), circ2(b, c)]
            return max(pairs, key=lambda t: t[1])
        sa, sb, sc = a @ a, b @ b, c @ c
        ux = (sa * (b[1] - c[1]) + sb * (c[1] - a[1]) + sc * (a[1] - b[1])) / d
        uy = (sa * (c[0] - b[0]) + sb * (a[0] - c[0]) + sc * (b[0] - a[0])) / d
        o = np.array([ux, uy])
        return o, np.linalg.norm(a - o)

    def inside(c, r, q):
        return np.linalg.norm(q - c) <= r * (1 + 1e-12) + 1e-15

    c, r = p[0], 0.0
    for i in range(1, len(p)):
        if inside(c, r, p[i]):
            continue
        c, r = p[i], 0.0
        for j in range(i):
            if inside(c, r, p[j]):
                continue
            c, r = circ2(p[i], p[j])
            for k in range(j):
                if not inside(c, r, p[k]):
                    c, r = circ3(p[i], p[j], p[k])
    return np.asarray(c), float(r)


# -- support-function geometry -------------------------------------------------


class SupportGeometry:
    """Polygons described by support values on ``n`` equally spaced normals."""

    def __init__(self, n: int = N_NORMALS):
        self.n = n
        self.theta = 2 * np.pi * np.arange(n) / n
        self.u = np.column_stack([np.cos(self.theta), np.sin(self.theta)])
        self.dtheta = 2 * np.pi / n

    def support_of(self, pts) -> np.ndarray:
        return np.max(np.asarray(pts) @ self.u.T, axis=0)

    def corners(self, h: np.ndarray) -> np.ndarray:
        """Intersections of consecutive facet lines (the vertices when h is tight)."""
        u0, u1 = self.u, np.roll(self.u, -1, axis=0)
        h0, h1 = h, np.roll(h, -1)
        det = u0[:, 0] * u1[:, 1] - u0[:, 1] * u1[:, 0]
        x = (h0 * u1[:, 1] - h1 * u0[:, 1]) / det
        y = (u0[:, 0] * h1 - u1[:, 0] * h0) / det
        return np.column_stack([x, y])

    def facet_lengths(self, h: np.ndarray) -> np.ndarray:
        c = self.corners(h)
        t = np.column_stack([-self.u[:, 1], self.u[:, 0]])
        return np.einsum("ij,ij->i", c - np.roll(c, 1, axis=0), t)

    def area(self, h: np.ndarray) -> float:
        return 0.5 * float(np.dot(h, self.facet_lengths(h)))

    def chebyshev(self, h: np.ndarray) -> tuple[np.ndarray, float]:
        """Centre and radius of the largest inscribed disc."""
        A = np.column_stack([self.u, np.ones(self.n)])
        res = linprog([0, 0, -1], A_ub=A, b_ub=h, bounds=[(None, None), (None, None), (0, None)], method="highs")
        if res.status != 0:
            raise ComputeError(f"inscribed-disc linear program failed: {res.message}")
        c = res.x[:2]
        # the solver is only feasible to ~1e-7; take the exact radius at its centre
        return c, float(np.min(h - self.u @ c))

    def tighten(self, h: np.ndarray, c: np.ndarray) -> np.ndarray:
        """Support function of the intersection of half planes, given an interior point ``c``."""
        slack = h - self.u @ c
        if np.any(slack <= 0):
            raise ComputeError("the interior point is not inside every half plane")
        dual = self.u / slack[:, None]
        try:
            hull = ConvexHull(dual)
        except QhullError as exc:
            raise ComputeError(f"dual hull failed: {exc}") from exc
        act = np.sort(hull.vertices)
        ua, ha = self.u[act], h[act]
        ub, hb = np.roll(ua, -1, axis=0), np.roll(ha, -1)
        det = ua[:, 0] * ub[:, 1] - ua[:, 1] * ub[:, 0]
        vx = (ha * ub[:, 1] - hb * ua[:, 1]) / det
        vy = (ua[:, 0] * hb - ub[:, 0] * ha) / det
        return self.support_of(np.column_stack([vx, vy]))

    def polygon(self, h: np.ndarray, min_len: float = 1e-12) -> np.ndarray:
        c = self.corners(h)
        keep = np.linalg.norm(c - np.roll(c, 1, axis=0), axis=1) > min_len
        return c[keep]


# -- the planner ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BudgetedPlan:
    """Output of :func:`plan_convex`.

    Series are sampled at ``times``; ``r`` is the common radius of the active
    arcs (NaN when nothing is active) and ``arcs[k]`` lists the active arc
    components at step k as ``(mid_angle, radius, length)`` with the angle of
    the outward normal at the arc midpoint.
    """

    M: float
    times: np.ndarray
    area: np.ndarray
    perimeter: np.ndarray
    effort: np.ndarray
    r: np.ndarray
    n_active_arcs: np.ndarray
    arcs: list
    phase: list
    T: float
    trajectory: Trajectory
    support: np.ndarray = field(repr=False)

    def to_csv(self, path):
        self.trajectory.to_csv(path, extra={"r": self.r, "n_active_arcs": self.n_active_arcs})

    def saturation_error(self) -> float:
        live = self.area > 0
        return float(np.max(np.abs(self.effort[live] - self.M)) / self.M) if np.any(live[:-1]) else 0.0

    def balance_residual(self) -> float:
        """Max over steps of |dA/dt - (mean perimeter - effort)| / mean perimeter, in facet form."""
        n = len(self.arcs) - 2
        if n <= 0:
            return 0.0
        dA = np.diff(self.area[: n + 1]) / np.diff(self.times[: n + 1])
        pm = 0.5 * (self.perimeter[:n] + self.perimeter[1 : n + 1])
        return float(np.max(np.abs(dA - (pm - self.effort[:n])) / pm))

    def curvature_gap(self) -> float:
        """Smallest value over steps of min curvature on active arcs minus max on the free part.

        Negative values mean some free boundary is more curved than an active arc.
        """
        geo = SupportGeometry(self.support.shape[1])
        worst = np.inf
        for k, arcs in enumerate(self.arcs):
            if not arcs or k + 1 >= len(self.support) - 1:
                continue
            h0, h1 = self.support[k], self.support[k + 1]
            active = (h0 + (self.times[k + 1] - self.times[k]) - h1) > ACTIVE_TOL
            kap = _facet_curvature(geo, h1)
            ok = np.isfinite(kap)
            if np.all(active[ok]) or not np.any(active[ok]):
                continue
            worst = min(worst, float(np.min(kap[ok & active]) - np.max(kap[ok & ~active])))
        return worst

    def radius_spread(self) -> float:
        """Largest relative spread of arc radii within one time step."""
        worst = 0.0
        for arcs in self.arcs:
            big = [a[1] for a in arcs if a[2] > 0]
            if len(big) > 1:
                worst = max(worst, (max(big) - min(big)) / np.mean(big))
        return worst


def _facet_curvature(geo: SupportGeometry, h: np.ndarray) -> np.ndarray:
    lens = geo.facet_lengths(h)
    with np.errstate(divide="ignore"):
        return np.where(lens > 1e-14, geo.dtheta / np.maximum(lens, 1e-300), np.inf)


def _arc_components(active: np.ndarray, lens: np.ndarray, geo: SupportGeometry):
    """Circular runs of active facets as (mid_angle, radius, length)."""
    n = len(active)
    if np.all(active):
        return [(np.nan, float(np.sum(lens)) / (2 * np.pi), float(np.sum(lens)))]
    if not np.any(active):
        return []
    start = int(np.flatnonzero(~active)[0])
    order = np.roll(np.arange(n), -start)
    out, run = [], []
    for j in list(order) + [order[0]]:
        if active[j]:
            run.append(j)
        elif run:
            ln = float(np.sum(lens[run]))
            mid = geo.theta[run[0]] + 0.5 * geo.dtheta * (len(run) - 1)
            out.append((float(mid % (2 * np.pi)), ln / (len(run) * geo.dtheta), ln))
            run = []
    return out


def _curve(geo: SupportGeometry, h: np.ndarray) -> FrontCurve:
    pts = geo.polygon(h)
    return FrontCurve(pts) if len(pts) >= 3 else FrontCurve.empty()


def _vertex_beta(geo: SupportGeometry, h: np.ndarray, beta_facet: np.ndarray) -> np.ndarray:
    """Per-vertex speed for the polygon of ``h``: mean of the two facets meeting there."""
    c = geo.corners(h)
    keep = np.linalg.norm(c - np.roll(c, 1, axis=0), axis=1) > 1e-12
    b = 0.5 * (beta_facet + np.roll(beta_facet, -1))
    return b[keep]


def _step(geo: SupportGeometry, h: np.ndarray, A: float, P: float, M: float, dt: float):
    """One planning step.  Returns (h_new, r, phase)."""
    hD = h + dt
    c, rho = geo.chebyshev(hD)

    def opening(r):
        return geo.tighten(hD - r, c) + r

    def residual(hn):
        return geo.area(hn) - A - dt * (0.5 * (P + float(np.sum(geo.facet_lengths(hn)))) - M)

    r_top = rho * (1 - 1e-9)
    top = opening(r_top)
    if residual(top) < 0:
        lo = 0.0
        if residual(hD) <= 0:
            raise RadiusBisectionFailed("the budget is exceeded even without removing anything")
        try:
            r = brentq(lambda r: residual(opening(r)), lo, r_top, xtol=R_TOL)
        except ValueError as exc:
            raise RadiusBisectionFailed(str(exc)) from exc
        return opening(r), r, "arcs"

    # core of the opening is (nearly) a segment: shorten it at fixed radius rho
    core = geo.polygon(geo.tighten(hD - r_top, c))
    if len(core) >= 2:
        d = np.linalg.norm(core[:, None] - core[None], axis=-1)
        i, j = np.unravel_index(np.argmax(d), d.shape)
        p, q = core[i], core[j]
    else:
        p = q = c
    ell = float(np.linalg.norm(q - p))
    mid = 0.5 * (p + q)
    e = (q - p) / ell if ell > 0 else np.array([1.0, 0.0])
    # 2 rho l + pi rho^2 = A + dt (P/2 + l + pi rho - M)
    new_ell = (A + dt * (0.5 * P + np.pi * rho - M) - np.pi * rho**2) / (2 * rho - dt)
    if 0 < new_ell < ell + 1e-12:
        a, b = mid - 0.5 * new_ell * e, mid + 0.5 * new_ell * e
        return np.maximum(a @ geo.u.T, b @ geo.u.T) + rho, rho, "stadium"
    # pi R^2 = A + dt (P/2 + pi R - M)
    C = A + dt * (0.5 * P - M)
    if C <= 0:
        return None, 0.0, "disc"
    R = 0.5 * (np.pi * dt + np.sqrt((np.pi * dt) ** 2 + 4 * np.pi * C)) / np.pi
    return mid @ geo.u.T + R, R, "disc"


def plan_convex(
    curve: FrontCurve, M: float, dt: float | None = None, n_normals: int = N_NORMALS, max_steps: int = 200000
) -> BudgetedPlan:
    """Saturated equal-radius eradication plan for a convex set.

    Parameters
    ----------
    curve
        Closed convex initial front.
    M
        Effort budget; must exceed the perimeter of the set.
    dt
        Time step, default ``1e-3 * diameter``.
    """
    if not curve.closed or curve.is_empty:
        raise ComputeError("plan_convex needs a closed nonempty curve")
    hull = MultiPoint(curve.points).convex_hull
    A0, P0 = area_perimeter(curve)
    if abs(hull.area - A0) > 1e-3 * A0:
        raise ConvexityLost("the initial set is not convex")
    if feasible(curve, M) != "Feasible":
        raise InfeasibleBudget(f"M = {M:g} does not exceed the hull perimeter {hull.length:g}")
    geo = SupportGeometry(n_normals)
    h = geo.support_of(curve.points)
    if dt is None:
        pts = curve.points
        dt = 1e-3 * float(np.max(np.linalg.norm(pts[:, None] - pts[None], axis=-1)))

    times, hs, rs, nact, arcs, phases, betas, efforts = [0.0], [h], [], [], [], [], [], []
    t = 0.0
    A = geo.area(h)
    P = float(np.sum(geo.facet_lengths(h)))
    T_end = None
    for _ in range(max_steps):
        if A <= TERMINAL_AREA:
            c, R = smallest_enclosing_disc(geo.polygon(h))
            T_end = t + disc_min_time(R, M)
            break
        hn, r, ph = _step(geo, h, A, P, M, dt)
        if hn is None:
            # the disc vanishes inside this step
            T_end = t + disc_min_time(np.sqrt(A / np.pi), M)
            break
        lens0, lens1 = geo.facet_lengths(h), geo.facet_lengths(hn)
        beta = (h - hn) / dt
        lmid = 0.5 * (lens0 + lens1)
        active = (beta > -1 + ACTIVE_TOL / dt) & (lmid > 1e-14)
        efforts.append(float(np.sum((1 + beta) * lmid)))
        betas.append(beta)
        rs.append(r if np.any(active) else np.nan)
        comps = _arc_components(active, lens1, geo)
        arcs.append(comps)
        nact.append(len(comps))
        phases.append(ph)
        t += dt
        h = hn
        A = geo.area(h)
        P = float(np.sum(lens1))
        times.append(t)
        hs.append(h)
    else:
        raise ComputeError("step limit reached before eradication")

    # the last recorded set is replaced by the terminal finish
    times.append(T_end)
    curves = [_curve(geo, hk) for hk in hs] + [FrontCurve.empty()]
    fields = [SpeedField(_vertex_beta(geo, hk, b)) for hk, b in zip(hs[:-1], betas)]
    last = hs[-1]
    fields.append(SpeedField(np.zeros(len(curves[-2]))))
    fields.append(None)
    eff = np.array(efforts + [M, 0.0])
    traj = Trajectory(np.array(times), curves, fields, eff, basic=True, effort_midpoint=True)
    area = np.array([geo.area(hk) for hk in hs] + [0.0])
    per = np.array([float(np.sum(geo.facet_lengths(hk))) for hk in hs] + [0.0])
    return BudgetedPlan(
        M=M,
        times=np.array(times),
        area=area,
        perimeter=per,
        effort=eff,
        r=np.array(rs + [np.nan, np.nan]),
        n_active_arcs=np.array(nact + [0, 0]),
        arcs=arcs + [[], []],
        phase=phases + ["terminal", "empty"],
        T=float(T_end),
        trajectory=traj,
        support=np.array(hs + [last]),
    )
