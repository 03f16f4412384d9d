"""Eradication on an island V: cut invariants, verdicts, sweeps and optimality checks.

A cut of V is a subset whose relative boundary (the part of its boundary
inside V) is the cost.  kappa(V, lam) is the shortest relative boundary of a
subset with area fraction lam, searched over the classical Dido family:
circular arcs and straight chords meeting the boundary of V perpendicularly
at both ends.  K(V) is the smallest possible largest slice of a sweep.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar
from shapely.geometry import LineString, MultiLineString, Point, Polygon

from .curves import FrontCurve, SpeedField, Trajectory
from .domain import Domain
from .errors import ComputeError, NotIsosceles, NotNested, UnsupportedShape

N_LAMBDA = 101
CIRCLE_SEGMENTS = 4096
STALL_RATE = 1e-6
STALL_STEPS = 10
EDGE_TOL = 1e-7


# -- caps of discs and ellipses ------------------------------------------------


def _cap(a: float, b: float, x0: float):
    """Arc perpendicular to the ellipse x^2/a^2 + y^2/b^2 = 1 through (x0, +-y0).

    The circle is centred at (a^2/x0, 0).  Returns (area of the cap beyond
    the arc, arc length, centre abscissa, radius, y0).
    """
    y0 = b * np.sqrt(max(0.0, 1.0 - (x0 / a) ** 2))
    c = a * a / x0
    rho = np.hypot(c - x0, y0)
    half = np.arctan2(y0, c - x0)

    def width(y):
        return a * np.sqrt(max(0.0, 1.0 - (y / b) ** 2)) - (c - np.sqrt(max(0.0, rho * rho - y * y)))

    area = 2.0 * quad(width, 0.0, y0, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    return area, 2.0 * half * rho, c, rho, y0


def _cap_for_area(a: float, b: float, target: float):
    """Cap (perpendicular arc at the +x end) enclosing ``target`` area, target < pi a b / 2."""
    x0 = brentq(lambda x: _cap(a, b, x)[0] - target, 1e-9 * a, a * (1 - 1e-15), xtol=1e-14 * a, rtol=1e-13)
    return x0, _cap(a, b, x0)


def _oval_candidates(V: Domain, mu: float):
    """(length, witness) for axis caps of a disc or ellipse with area fraction mu <= 1/2."""
    a, b = (V.radius, V.radius) if V.kind == "disc" else (V.a, V.b)
    total = np.pi * a * b
    out = []
    if abs(mu - 0.5) < 1e-12:
        out.append((2 * b, {"kind": "chord", "axis": "x", "x0": 0.0}))
        out.append((2 * a, {"kind": "chord", "axis": "y", "x0": 0.0}))
        return out
    for axis, (p, q) in (("x", (a, b)), ("y", (b, a))):
        x0, (_, ln, c, rho, y0) = _cap_for_area(p, q, mu * total)
        out.append((ln, {"kind": "cap", "axis": axis, "x0": x0, "center": c, "radius": rho, "y0": y0}))
    return out


# -- polygons ------------------------------------------------------------------


def _edges(V: Domain):
    v = V.vertices
    return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]


def _on_segment(p, a, b, tol=EDGE_TOL) -> bool:
    return LineString([a, b]).distance(Point(p)) <= tol * max(1.0, np.linalg.norm(b - a))


def _circle(center, rho):
    t = np.linspace(0, 2 * np.pi, CIRCLE_SEGMENTS, endpoint=False)
    return Polygon(np.column_stack([center[0] + rho * np.cos(t), center[1] + rho * np.sin(t)]))


def _line_intersection(p1, p2, q1, q2):
    d1, d2 = p2 - p1, q2 - q1
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(den) < 1e-14 * np.linalg.norm(d1) * np.linalg.norm(d2):
        return None
    t = ((q1[0] - p1[0]) * d2[1] - (q1[1] - p1[1]) * d2[0]) / den
    return p1 + t * d1


def _polygon_candidates(V: Domain, mu: float):
    """Perpendicular arcs centred where two edge lines meet, and perpendicular chords
    between parallel edges, for area fractions mu and 1 - mu."""
    A = V.area
    E = _edges(V)
    n = len(E)
    verts = V.vertices
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            (p1, p2), (q1, q2) = E[i], E[j]
            X = _line_intersection(p1, p2, q1, q2)
            if X is None:
                out.extend(_parallel_chords(V, E[i], E[j], mu))
                continue
            shared = (j == i + 1) or (i == 0 and j == n - 1)
            if shared:
                k = j if j == i + 1 else i
                vtx = verts[k]
                e_in, e_out = verts[k - 1] - vtx, verts[(k + 1) % n] - vtx
                theta = np.arccos(np.clip(e_in @ e_out / np.linalg.norm(e_in) / np.linalg.norm(e_out), -1, 1))
                others = [LineString(E[m]) for m in range(n) if m not in (i, j)]
                reach = min([np.linalg.norm(e_in), np.linalg.norm(e_out)] + [g.distance(Point(vtx)) for g in others])
                for frac in {mu, 1 - mu}:
                    rho = np.sqrt(2 * frac * A / theta)
                    if rho <= reach * (1 + 1e-12):
                        out.append((theta * rho, {"kind": "sector", "vertex": k, "center": vtx, "radius": rho,
                                                  "inside": True, "fraction": frac}))
                continue
            out.extend(_general_arc(V, X, E[i], E[j], mu))
    return out


def _parallel_chords(V, e1, e2, mu):
    (p1, p2) = e1
    t = (p2 - p1) / np.linalg.norm(p2 - p1)
    nrm = np.array([-t[1], t[0]])
    width = abs((e2[0] - p1) @ nrm)
    s1 = sorted([(p1 - p1) @ t, (p2 - p1) @ t])
    s2 = sorted([(e2[0] - p1) @ t, (e2[1] - p1) @ t])
    lo, hi = max(s1[0], s2[0]), min(s1[1], s2[1])
    if hi <= lo:
        return []
    shape = V.shape
    big = 10 * (V.diameter + 1)

    def area_before(s):
        half = Polygon([p1 + (s - big) * t - big * nrm, p1 + s * t - big * nrm,
                        p1 + s * t + big * nrm, p1 + (s - big) * t + big * nrm])
        return shape.intersection(half).area

    out = []
    a_lo, a_hi = area_before(lo), area_before(hi)
    for frac in {mu, 1 - mu}:
        target = frac * V.area
        if a_lo - 1e-12 <= target <= a_hi + 1e-12:
            s = lo if a_hi == a_lo else brentq(lambda s: area_before(s) - target, lo, hi, xtol=1e-13)
            out.append((width, {"kind": "chord", "point": p1 + s * t, "direction": nrm, "fraction": frac}))
    return out


def _general_arc(V, X, e1, e2, mu):
    shape = V.shape
    d = [np.linalg.norm(v - X) for v in V.vertices]
    r_lo, r_hi = shape.exterior.distance(Point(X)) if not shape.contains(Point(X)) else 0.0, max(d)
    out = []

    def area(r):
        return shape.intersection(_circle(X, r)).area

    for frac in {mu, 1 - mu}:
        target = frac * V.area
        if not (area(r_lo + 1e-12) < target < area(r_hi)):
            continue
        r = brentq(lambda r: area(r) - target, r_lo + 1e-12, r_hi, xtol=1e-12)
        arc = _circle(X, r).exterior.intersection(shape)
        if isinstance(arc, MultiLineString) or arc.is_empty:
            continue
        ends = np.asarray(arc.coords)[[0, -1]]
        ok = (_on_segment(ends[0], *e1) and _on_segment(ends[1], *e2)) or (
            _on_segment(ends[0], *e2) and _on_segment(ends[1], *e1))
        if ok:
            out.append((arc.length, {"kind": "arc", "center": X, "radius": r, "fraction": frac}))
    return out


# -- public invariants ---------------------------------------------------------


def kappa_witness(V: Domain, lam: float):
    """Shortest Dido-family cut with area fraction ``lam``: (length, witness dict)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("area fraction must lie in [0, 1]")
    if lam in (0.0, 1.0):
        return 0.0, {"kind": "empty"}
    mu = min(lam, 1.0 - lam)
    if V.kind in ("disc", "ellipse"):
        cands = _oval_candidates(V, mu)
    else:
        cands = _polygon_candidates(V, mu)
    if not cands:
        raise ComputeError(f"no Dido-family cut found for fraction {lam:g}")
    best = min(cands, key=lambda c: c[0])
    if V.kind == "polygon" and not V.is_convex:
        raise UnsupportedShape("nonconvex polygon: the Dido family is not known to be exhaustive", best[0])
    return best


def kappa_lambda(V: Domain, lam: float) -> float:
    """kappa(V, lam): minimal relative boundary of a subset with area fraction lam.

    Raises :class:`UnsupportedShape` for nonconvex polygons; the exception's
    ``upper_bound`` holds the family minimum.
    """
    return float(kappa_witness(V, lam)[0])


def kappa(V: Domain, n: int = N_LAMBDA) -> tuple[float, float]:
    """sup over lam of kappa(V, lam) and the maximising lam (grid plus bounded refinement)."""
    lams = np.linspace(0.0, 1.0, n)
    vals = np.array([kappa_lambda(V, l) for l in lams])
    k = int(np.argmax(vals))
    lo, hi = lams[max(k - 1, 0)], lams[min(k + 1, n - 1)]
    res = minimize_scalar(lambda l: -kappa_lambda(V, l), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    if -res.fun > vals[k]:
        return float(-res.fun), float(res.x)
    return float(vals[k]), float(lams[k])


def _chords_along(V: Domain, phi: float, s: np.ndarray) -> np.ndarray:
    """Lengths of the slices {x . d = s} with d = (cos phi, sin phi)."""
    d = np.array([np.cos(phi), np.sin(phi)])
    t = np.array([-d[1], d[0]])
    ring = V.boundary_ring() if V.kind != "polygon" else V.vertices
    P = ring @ d
    Q = ring @ t
    P1, Q1 = np.roll(P, -1), np.roll(Q, -1)
    out = np.zeros(len(s))
    for k, sk in enumerate(s):
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (sk - P) / (P1 - P)
        hit = (w >= 0) & (w <= 1) & np.isfinite(w)
        if np.count_nonzero(hit) >= 2:
            q = Q[hit] + w[hit] * (Q1[hit] - Q[hit])
            out[k] = q.max() - q.min()
    return out


def max_slice(V: Domain, phi: float) -> float:
    """Largest slice perpendicular to direction phi (convex V: attained at a vertex level)."""
    d = np.array([np.cos(phi), np.sin(phi)])
    ring = V.boundary_ring() if V.kind != "polygon" else V.vertices
    return float(np.max(_chords_along(V, phi, ring @ d)))


@dataclass(frozen=True)
class KResult:
    value: float
    direction: float
    exact: bool


def big_K(V: Domain, n_dir: int = 720) -> KResult:
    """K(V): smallest over sweep directions of the largest perpendicular slice.

    Exact for discs and equilateral triangles, an upper bound otherwise.
    """
    if V.kind == "disc":
        return KResult(2 * V.radius, 0.0, True)
    if V.kind == "ellipse":
        return KResult(2 * V.b, 0.0, False)
    if not V.is_convex:
        raise UnsupportedShape("K(V) is only computed for convex polygons")
    phis = np.linspace(0.0, np.pi, n_dir, endpoint=False)
    vals = np.array([max_slice(V, p) for p in phis])
    k = int(np.argmin(vals))
    h = np.pi / n_dir
    res = minimize_scalar(lambda p: max_slice(V, p), bounds=(phis[k] - h, phis[k] + h), method="bounded",
                          options={"xatol": 1e-12})
    val, phi = (float(res.fun), float(res.x)) if res.fun < vals[k] else (float(vals[k]), float(phis[k]))
    return KResult(val, phi % np.pi, _is_equilateral(V))


def _is_equilateral(V: Domain) -> bool:
    if V.kind != "polygon" or len(V.vertices) != 3:
        return False
    s = np.linalg.norm(np.roll(V.vertices, -1, 0) - V.vertices, axis=1)
    return bool(np.ptp(s) <= 1e-9 * s.max())


@dataclass(frozen=True, eq=False)
class CutInvariants:
    """kappa(V, lam) on a grid together with kappa(V) and K(V)."""

    lambdas: np.ndarray
    values: np.ndarray
    kappa: float
    lambda_max: float
    K: KResult

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("lambda,kappa_lambda\n")
            for l, v in zip(self.lambdas, self.values):
                fh.write(f"{l:.10g},{v:.12g}\n")

    def critical_lambda(self, M: float) -> float | None:
        """Largest lam <= lam_max with kappa(V, lam) = M, the level where a sweep from V stalls."""
        if M >= self.kappa:
            return None
        lam, val = self.lambdas, self.values
        over = np.flatnonzero(val >= M)
        k = over[-1]
        if k + 1 >= len(lam):
            return float(lam[k])
        return float(lam[k] + (M - val[k]) * (lam[k + 1] - lam[k]) / (val[k + 1] - val[k]))


def cut_invariants(V: Domain, n: int = N_LAMBDA) -> CutInvariants:
    lams = np.linspace(0.0, 1.0, n)
    vals = np.array([kappa_lambda(V, l) for l in lams])
    kap, lam_max = kappa(V, n)
    return CutInvariants(lams, vals, kap, lam_max, big_K(V))


@dataclass(frozen=True)
class Verdict:
    kappa: float
    K: float
    M: float
    verdict: str
    K_exact: bool

    def to_json(self) -> str:
        return json.dumps({"kappa": self.kappa, "K": self.K, "M": self.M, "verdict": self.verdict}, sort_keys=True)


def erad_verdict(V: Domain, M: float, kap: float | None = None, K: KResult | None = None) -> Verdict:
    """Eradicable if M > K(V), NotEradicable if M < kappa(V), otherwise Indeterminate."""
    kap = kappa(V)[0] if kap is None else kap
    K = big_K(V) if K is None else K
    if M > K.value:
        v = "Eradicable"
    elif M < kap:
        v = "NotEradicable"
    else:
        v = "Indeterminate"
    return Verdict(float(kap), float(K.value), float(M), v, K.exact)


# -- straight sweeps -------------------------------------------------------------


def _slice_table(V: Domain, phi: float, n: int = 2001):
    """Levels s, remaining area |V cap {x.d >= s}| and slice length, for d at angle phi."""
    d = np.array([np.cos(phi), np.sin(phi)])
    ring = V.boundary_ring() if V.kind != "polygon" else V.vertices
    p = ring @ d
    s = np.linspace(p.min(), p.max(), n)
    ell = _chords_along(V, phi, s)
    ell[0] = ell[-1] = 0.0
    # area from the slice lengths (exact for polygons up to the trapezoid rule on a fine grid)
    ds = np.diff(s)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (ell[1:] + ell[:-1]) * ds)])
    area = (cum[-1] - cum) * (V.area / cum[-1])
    return s, area, ell


def _chord_curve(V: Domain, phi: float, s: float, n: int = 33) -> FrontCurve:
    """Slice {x.d = s} oriented so that {x.d >= s} lies on its left."""
    d = np.array([np.cos(phi), np.sin(phi)])
    t = np.array([-d[1], d[0]])
    big = 2 * V.diameter + 1
    base = s * d
    seg = LineString([base - big * t, base + big * t]).intersection(V.shape)
    q = np.asarray(seg.coords) @ t
    qa, qb = q.max(), q.min()
    pts = base[None, :] + np.linspace(qa, qb, n)[:, None] * t[None, :]
    return FrontCurve(pts, closed=False)


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Sweep by parallel slices perpendicular to ``direction`` with saturated effort M."""

    direction: float
    M: float
    times: np.ndarray
    area: np.ndarray
    ell: np.ndarray
    stalled: bool
    T: float | None
    lambda_star: float | None
    min_fraction: float
    trajectory: Trajectory

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,area,ell,effort\n")
            for row in zip(self.times, self.area, self.ell):
                fh.write(",".join(f"{v:.10g}" for v in row) + f",{self.M:.10g}\n")


def sweep_strategy(V: Domain, M: float, direction: float | None = None, dt: float | None = None,
                   max_steps: int = 400_000, n_frames: int = 200) -> SweepResult:
    """Sweep V with parallel slices, removing area at rate M - l(A).

    The default direction is the one realising K(V).  The front is the slice
    {x.d = s}; its uniform speed v satisfies l(1 + v) = M.  The sweep stalls
    when the removal rate stays above -1e-6 for ten consecutive steps.
    """
    if M <= 0:
        raise ComputeError("the budget must be positive")
    phi = big_K(V).direction if direction is None else float(direction)
    s, area, ell = _slice_table(V, phi)
    Ai, li = area[::-1], ell[::-1]

    def rate(A):
        return np.interp(A, Ai, li) - M

    dt = V.area / (M * 2000) if dt is None else dt
    A = V.area
    ts, As = [0.0], [A]
    quiet = 0
    stalled = False
    eps = 1e-9 * V.area
    for _ in range(max_steps):
        k1 = rate(A)
        k2 = rate(A + 0.5 * dt * k1)
        k3 = rate(A + 0.5 * dt * k2)
        k4 = rate(A + dt * k3)
        step = dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        if A + step <= eps:
            # last partial step: the slice is short here so the rate is nearly -M
            ts.append(ts[-1] + A / (-k1))
            As.append(0.0)
            break
        A += step
        ts.append(ts[-1] + dt)
        As.append(A)
        quiet = quiet + 1 if step / dt >= -STALL_RATE else 0
        if quiet >= STALL_STEPS:
            stalled = True
            break
    else:
        stalled = True
    ts, As = np.array(ts), np.array(As)
    ells = np.interp(As, Ai, li)
    T = None if stalled else float(ts[-1])

    # frames evenly spaced in time and in area, so the fast end of the sweep is resolved
    by_time = np.linspace(0, len(ts) - 1, n_frames // 2 + 1).round().astype(int)
    levels = np.linspace(As[0], As[-1], n_frames // 2 + 1)
    by_area = np.clip(np.searchsorted(-As, -levels), 0, len(ts) - 1)
    idx = np.unique(np.concatenate([by_time, by_area]))
    s_of_A = (s[::-1], Ai)
    t_fr, curves, fields, eff = [], [], [], []
    for k in idx:
        if As[k] <= eps:
            continue
        lk = ells[k]
        if lk < 1e-6:
            continue
        c = _chord_curve(V, phi, float(np.interp(As[k], s_of_A[1], s_of_A[0])))
        t_fr.append(ts[k])
        curves.append(c)
        fields.append(SpeedField(np.full(len(c), (M - lk) / lk), np.full(len(c), M / lk)))
        eff.append(M)
    if not stalled:
        t_fr.append(T)
        curves.append(FrontCurve.empty())
        fields.append(None)
        eff.append(0.0)
    traj = Trajectory(np.array(t_fr), curves, fields, np.array(eff), domain=V, basic=True)
    lam_star = float(As[-1] / V.area) if stalled else None
    return SweepResult(phi, float(M), ts, As, ells, stalled, T, lam_star, float(As.min() / V.area), traj)


# -- Dido sweep of discs and ellipses --------------------------------------------


def _axes(V: Domain):
    if V.kind == "disc":
        return V.radius, V.radius
    if V.kind == "ellipse":
        return V.a, V.b
    raise UnsupportedShape("Dido sweeps are built for discs and ellipses; use isosceles_plan for triangles")


def _cap_points(a, b, x0, n):
    """Arc of the cap at the +x end, from its upper to its lower endpoint."""
    if x0 <= 0:
        return np.column_stack([np.zeros(n), np.linspace(b, -b, n)])
    _, _, c, rho, y0 = _cap(a, b, x0)
    half = np.arctan2(y0, c - x0)
    ang = np.linspace(np.pi - half, np.pi + half, n)
    return np.column_stack([c + rho * np.cos(ang), rho * np.sin(ang)])


def dido_sweep(V: Domain, M: float, n_grid: int = 400, n_frames: int = 200, n_points: int = 129) -> Trajectory:
    """Nested sweep of a disc or ellipse through perpendicular-arc cuts with saturated effort.

    For lam > 1/2 the set is V minus a cap at the -x end, for lam < 1/2 a
    cap at the +x end; the two meet at the minor-axis chord.  Each set is a
    minimiser of kappa(V, lam) within the family, and the area decreases at
    rate M - l.
    """
    a, b = _axes(V)
    total = V.area
    th = np.linspace(0.0, np.pi / 2, n_grid)
    x0 = a * np.cos(th)
    x0[-1] = 0.0
    caps = np.array([_cap(a, b, x)[:2] if x > 0 else (0.5 * np.pi * a * b, 2 * b) for x in x0[1:]])
    mu = np.concatenate([[0.0], caps[:, 0] / (np.pi * a * b)])
    ln = np.concatenate([[0.0], caps[:, 1]])
    if M <= ln.max():
        raise ComputeError(f"budget {M:g} does not exceed kappa(V) = {ln.max():g}: the sweep stalls")
    # lam runs 1 -> 1/2 (left caps growing) then 1/2 -> 0 (right caps shrinking)
    lam = np.concatenate([1 - mu, mu[::-1][1:]])
    ell = np.concatenate([ln, ln[::-1][1:]])
    xs = np.concatenate([-x0, x0[::-1][1:]])
    g = total / (M - ell)
    t = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * -np.diff(lam))])

    idx = np.unique(np.linspace(1, len(t) - 2, n_frames).round().astype(int))
    curves, fields = [], []
    for k in idx:
        p = _cap_points(a, b, abs(xs[k]), n_points)
        if xs[k] < 0:
            p[:, 0] *= -1
        c = FrontCurve(p, closed=False)
        fields.append(SpeedField(np.full(len(c), M / ell[k] - 1), np.full(len(c), M / ell[k])))
        curves.append(c)
    times = np.concatenate([t[idx], [t[-1]]])
    curves.append(FrontCurve.empty())
    fields.append(None)
    effort = np.concatenate([np.full(len(idx), M), [0.0]])
    return Trajectory(times, curves, fields, effort, domain=V, basic=True)


# -- optimality conditions of island strategies --------------------------------


@dataclass(frozen=True)
class DidoReport:
    verdict: str
    a2_max: float
    opc_max: float
    t_violation: float | None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def check_dido_optimality(traj: Trajectory, V: Domain, M: float | None = None, tol: float = 1e-2) -> DidoReport:
    """Check a trajectory against the necessary conditions for optimality.

    (a2) the area decreases at rate M - l (effort saturated), relative to M;
    (opc) each relative boundary is no longer than kappa(V, A/|V|).
    The verdict names the first condition violated in time, or "Optimal".
    The budget defaults to the largest effort recorded on the trajectory.
    """
    M = float(np.max(traj.effort)) if M is None else float(M)
    keep = [k for k, c in enumerate(traj.curves) if not c.is_empty]
    t = traj.times[keep]
    A = traj.area[keep]
    ell = traj.perimeter[keep]
    if len(t) < 3:
        raise ComputeError("at least three nonempty frames are needed")
    # central differences only: one-sided ones are unreliable where l ~ sqrt(area)
    rate = np.gradient(A, t, edge_order=2)
    a2 = np.abs(rate - (ell - M)) / M
    a2[[0, -1]] = 0.0
    kap = np.array([kappa_lambda(V, float(np.clip(x / V.area, 0, 1))) for x in A])
    opc = ell - kap
    bad_a2 = np.flatnonzero(a2 > tol)
    bad_opc = np.flatnonzero(opc > tol)
    first = [(t[x[0]], name) for x, name in ((bad_a2, "a2"), (bad_opc, "opc")) if len(x)]
    if not first:
        return DidoReport("Optimal", float(a2.max()), float(opc.max()), None)
    tv, name = min(first)
    return DidoReport(f"Violated:{name}", float(a2.max()), float(opc.max()), float(tv))


# -- isosceles triangles -----------------------------------------------------------


def _isosceles_frame(V: Domain):
    """Apex C, base midpoint D and unit axes (e_x towards base vertex B, e_y towards C)."""
    if V.kind != "polygon" or len(V.vertices) != 3:
        raise NotIsosceles("the island must be a triangle")
    v = V.vertices
    for k in range(3):
        C, P, Q = v[k], v[(k + 1) % 3], v[(k + 2) % 3]
        lp, lq = np.linalg.norm(P - C), np.linalg.norm(Q - C)
        if abs(lp - lq) <= 1e-9 * max(lp, lq):
            D = 0.5 * (P + Q)
            ey = (C - D) / np.linalg.norm(C - D)
            ex = np.array([ey[1], -ey[0]])
            b = abs((P - D) @ ex)
            return C, D, ex, ey, b, float(np.linalg.norm(C - D))
    raise NotIsosceles("no two sides of the triangle are equal")


@dataclass(frozen=True, eq=False)
class IsoscelesPlan:
    """Time-symmetric strategy for an isosceles island.

    Up to t_star the cleared region R near base vertex B is first a sector
    centred at B, then the region behind a free segment x = -(t_star - t)
    (normal speed -1 for the contaminated set) joined to an arc tangent to
    it and perpendicular to side BC.  At t_star the free boundary is the
    axis CD and half the area is clear.  Afterwards the contaminated set is
    the mirror image of R(2 t_star - t).
    """

    M: float
    T: float
    t_star: float
    t1: float
    rho1: float
    trajectory: Trajectory
    frame: tuple

    def mirror(self, pts: np.ndarray) -> np.ndarray:
        _, D, ex, ey, _, _ = self.frame
        x = (pts - D) @ ex
        y = (pts - D) @ ey
        return D + np.outer(-x, ex) + np.outer(y, ey)

    def symmetry_error(self) -> float:
        """Largest distance between the front at t_star + u and the mirrored front at t_star - u."""
        tr = self.trajectory
        err = 0.0
        for k, t in enumerate(tr.times):
            if t <= self.t_star or tr.curves[k].is_empty:
                continue
            j = int(np.argmin(np.abs(tr.times - (2 * self.t_star - t))))
            if abs(tr.times[j] - (2 * self.t_star - t)) > 1e-12:
                continue
            a = LineString(tr.curves[k].points)
            b = LineString(self.mirror(tr.curves[j].points))
            err = max(err, a.hausdorff_distance(b))
        return err

    def perpendicularity_error(self) -> float:
        """Largest deviation from a right angle where an arc meets a side."""
        C = self.frame[0]
        V = self.trajectory.domain
        worst = 0.0
        for c in self.trajectory.curves:
            if c.is_empty or len(c.points) < 3:
                continue
            for end, prev in ((c.points[-1], c.points[-2]), (c.points[0], c.points[1])):
                if np.linalg.norm(end - C) < 1e-9:
                    continue
                side = _side_through(V, end)
                if side is None:
                    continue
                tang = (end - prev) / np.linalg.norm(end - prev)
                worst = max(worst, abs(np.pi / 2 - np.arccos(np.clip(abs(tang @ side), 0, 1))))
        return worst


def _side_through(V: Domain, p):
    v = V.vertices
    for k in range(3):
        a, b = v[k], v[(k + 1) % 3]
        if _on_segment(p, a, b, 1e-9):
            return (b - a) / np.linalg.norm(b - a)
    return None


def _iso_cleared(b, H, beta, rho, s, n_points):
    """Relative boundary of the cleared region near B = (b, 0), local coordinates.

    With ``s`` None the region is the sector of radius rho at B; otherwise it
    lies behind the segment x = -s joined to an arc of radius rho tangent to
    it and centred on side BC.  Oriented with the contaminated side on the left.
    """
    ang = np.linspace(np.pi, np.pi - beta, n_points)
    if s is None:
        return np.column_stack([b + rho * np.cos(ang), rho * np.sin(ang)])
    q = (b + s - rho) * H / b
    seg = np.column_stack([np.full(33, -s), np.linspace(0.0, q, 33)])
    if rho <= 0:
        return seg
    arc = np.column_stack([rho - s + rho * np.cos(ang), q + rho * np.sin(ang)])
    return np.vstack([seg, arc[1:]])


def _iso_to_world(frame, p):
    _, D, ex, ey, _, _ = frame
    return D + np.outer(p[:, 0], ex) + np.outer(p[:, 1], ey)


def isosceles_slicing(V: Domain, n_frames: int = 200, n_points: int = 129) -> Trajectory:
    """Nested slicing of an isosceles triangle, the large-budget limit of :func:`isosceles_plan`.

    Corner sectors at B grow until they touch the axis CD; then the cleared
    region is bounded by part of CD and an arc tangent to it, perpendicular
    to BC, shrinking to the apex.  The second half mirrors the first.  Time
    is the cleared area.
    """
    frame = _isosceles_frame(V)
    C, D, ex, ey, b, H = frame
    beta = np.arctan2(H, b)
    half = V.area / 2
    rhos1 = np.linspace(0.0, b, n_frames // 4 + 1)[1:]
    rhos2 = np.linspace(b, 0.0, n_frames // 4 + 1)[1:]
    pieces = [(r, None) for r in rhos1] + [(r, 0.0) for r in rhos2]

    def cleared_area(r, s):
        if s is None:
            return 0.5 * beta * r * r
        q = (b - r) * H / b
        return b * q - b * q * q / (2 * H) + 0.5 * beta * r * r

    areas = [cleared_area(*pc) for pc in pieces]
    curves = []
    for pc in pieces:
        curves.append(FrontCurve(_iso_to_world(frame, _iso_cleared(b, H, beta, pc[0], pc[1], n_points)), closed=False))
    times = list(areas)
    for pc, a in zip(pieces[-2::-1], areas[-2::-1]):
        p = _iso_cleared(b, H, beta, pc[0], pc[1], n_points)
        p[:, 0] *= -1
        curves.append(FrontCurve(_iso_to_world(frame, p), closed=False))
        times.append(2 * half - a)
    times.append(V.area)
    curves.append(FrontCurve.empty())
    fields = [None] * len(curves)
    return Trajectory(np.array(times), curves, fields, np.zeros(len(curves)), domain=V)


def isosceles_plan(V: Domain, M: float, n_frames: int = 200, n_points: int = 129) -> IsoscelesPlan:
    """Build the symmetric eradication strategy of an isosceles triangle with budget M.

    In the frame with D at the origin, B = (b, 0) and C = (0, H), with base
    angle beta and k = tan(beta) - beta, saturation gives
    rho' = M / (beta rho) - 1 while R is a sector and rho' = -1 - M / (k rho)
    afterwards.  The switch happens at radius rho1 = (M/k)(exp(k b / M) - 1)
    and both phases integrate in closed form.
    """
    C, D, ex, ey, b, H = _isosceles_frame(V)
    beta = np.arctan2(H, b)
    k = np.tan(beta) - beta
    rho1 = (M / k) * np.expm1(k * b / M)
    if beta * rho1 >= M:
        raise ComputeError(f"budget {M:g} too small: the corner sector stalls before reaching the axis")
    reach = 2 * b * H / np.hypot(b, H)
    if rho1 > reach:
        raise ComputeError("the corner sector would cross the opposite side")
    s1 = rho1 - b

    def t_sector(rho):
        return -rho - (M / beta) * np.log1p(-beta * rho / M)

    def t_second(rho):
        return t1 + (rho1 - rho) - (M / k) * (np.log1p(k * rho1 / M) - np.log1p(k * rho / M))

    t1 = t_sector(rho1)
    t_star = t1 + s1
    T = 2 * t_star

    def region_R(t):
        if t <= t1:
            return _iso_cleared(b, H, beta, brentq(lambda r: t_sector(r) - t, 0.0, rho1), None, n_points)
        rho = 0.0 if t >= t_star else brentq(lambda r: t_second(r) - t, 0.0, rho1)
        return _iso_cleared(b, H, beta, rho, t_star - t, n_points)

    def to_world(p):
        return _iso_to_world((C, D, ex, ey, b, H), p)

    u = np.linspace(0.0, t_star, n_frames // 2 + 1)[:-1]
    times = np.unique(np.concatenate([t_star - u, t_star + u]))
    curves, fields = [], []
    for t in times:
        if t <= t_star:
            p = region_R(t)
        else:
            p = region_R(2 * t_star - t)
            p[:, 0] *= -1
        c = FrontCurve(to_world(p), closed=False)
        arc_len = c.length() - (np.linalg.norm(p[32] - p[0]) if t > t1 and t < T - t1 else 0.0)
        beta_field = np.full(len(c), M / arc_len - 1 if arc_len > 1e-12 else 0.0)
        if t1 < t < T - t1:
            beta_field[:33] = -1.0
        fields.append(SpeedField(beta_field, 1 + beta_field))
        curves.append(c)
    times = np.concatenate([times, [T]])
    curves.append(FrontCurve.empty())
    fields.append(None)
    effort = np.concatenate([np.full(len(times) - 1, M), [0.0]])
    traj = Trajectory(times, curves, fields, effort, domain=V, basic=True)
    return IsoscelesPlan(float(M), float(T), float(t_star), float(t1), float(rho1), traj, (C, D, ex, ey, b, H))


# -- slicing cost ----------------------------------------------------------------


def slicing_cost(traj: Trajectory, check: bool = True) -> float:
    """Integral of the relative boundary length over removed area, l dA.

    The trajectory must be nested (each set inside the previous one);
    otherwise :class:`NotNested` is raised.
    """
    A = traj.area
    ell = traj.perimeter
    if np.any(np.diff(A) > 1e-9 * max(A.max(), 1e-300)):
        raise NotNested("the area increases along the trajectory")
    if check:
        try:
            traj.check_nested(1e-6 * (traj.domain.diameter if traj.domain is not None else 1.0))
        except ComputeError as exc:
            raise NotNested(str(exc)) from exc
    if traj.domain is not None and A[0] < traj.domain.area:
        A = np.concatenate([[traj.domain.area], A])
        ell = np.concatenate([[0.0], ell])
    return float(np.sum(0.5 * (ell[1:] + ell[:-1]) * -np.diff(A)))
