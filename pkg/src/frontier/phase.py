"""Optimal controlled travelling waves in the (U, P) phase plane.

The cost of a control realising a front of speed ``beta`` is the line integral
of the one-form

    v = (f(U) / (U P) + beta / U) dU + (1 / U) dP

along an admissible path from (0, 0) to (1, 0).  Its curl
``f(U) / (U P**2) - 1 / U**2`` vanishes on P = P*(U) = sqrt(U f(U)); the
optimal path follows the two saddle manifolds and bridges them along P*.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import (
    ComputeError,
    DegenerateNode,
    HypothesisViolated,
    NegativeControl,
    NonIntegrable,
    RegionDegenerate,
    ShootingFailed,
    SingularIntegrand,
)
from .reaction import (
    ATOL,
    RTOL,
    ReactionTerm,
    dpstar,
    integrate_stable,
    integrate_unstable,
    pstar,
)

UNSTABLE = "unstable-manifold"
ARC = "pstar-arc"
STABLE = "stable-manifold"
CONTROLLED = "controlled"
MANIFOLD_LABELS = (UNSTABLE, STABLE)

N_MANIFOLD = 3000
N_ARC = 2001
PATH_TOL = 1e-9
NEG_CONTROL_TOL = 1e-8
TAIL = 1e-4
HETEROCLINIC_GAP = 1e-8

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


@dataclass(frozen=True, eq=False)
class PhasePath:
    """Piecewise path in the (U, P) plane.

    ``labels[i]`` names the provenance of the edge ``vertices[i] -> vertices[i+1]``.
    """

    vertices: np.ndarray
    labels: tuple
    beta: float
    A: tuple | None = None
    B: tuple | None = None
    attained: bool = True

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
            raise ValueError("vertices must be an (n, 2) array with n >= 2")
        if len(self.labels) != len(v) - 1:
            raise ValueError("one label per edge is required")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def U(self):
        return self.vertices[:, 0]

    @property
    def P(self):
        return self.vertices[:, 1]

    def segments(self):
        """Yield ``(label, start, stop)`` vertex index ranges of maximal label runs."""
        start = 0
        for i in range(1, len(self.labels) + 1):
            if i == len(self.labels) or self.labels[i] != self.labels[start]:
                yield self.labels[start], start, i
                start = i

    def check(self, rt: ReactionTerm | None = None, tol: float = PATH_TOL):
        """Raise ``ValueError`` if the admissibility invariants fail."""
        v = self.vertices
        if np.hypot(*v[0]) > tol or np.hypot(v[-1, 0] - 1.0, v[-1, 1]) > tol:
            raise ValueError("path must run from (0, 0) to (1, 0)")
        if np.any(v[1:-1, 1] < -tol):
            raise ValueError("P must be nonnegative along the path")
        if np.any(np.diff(v[:, 0]) < -tol):
            raise ValueError("U must be nondecreasing along the path")
        if rt is not None:
            for label, i, j in self.segments():
                if label == ARC:
                    seg = v[i : j + 1]
                    if np.max(np.abs(seg[:, 1] - pstar(rt, seg[:, 0]))) > 1e-7:
                        raise ValueError("pstar-arc vertices leave the curve P = P*(U)")
        return self

    def to_csv(self, path):
        labels = list(self.labels) + [self.labels[-1]]
        with open(path, "w") as fh:
            fh.write("U,P,segment_label\n")
            for (u, p), lab in zip(self.vertices, labels):
                fh.write(f"{u:.12g},{p:.12g},{lab}\n")


# ---------------------------------------------------------------------------
# manifold branches


def _curve_gap(rt):
    def gap(t, y):
        u = min(max(y[0], rt.u_star), 1.0)
        return y[1] - float(pstar(rt, u))

    return gap


def _terminal(fn, direction):
    fn.terminal = True
    fn.direction = direction
    return fn


@dataclass(frozen=True, eq=False)
class Branches:
    """Dense unstable (forward) and stable (backward) manifolds for one speed."""

    beta: float
    unstable: object
    stable: object
    t_cross_u: np.ndarray
    t_cross_s: np.ndarray
    t_end_u: float
    t_end_s: float
    reaches_u_star: bool

    @staticmethod
    def _times(sol, t0, t1, n):
        # uniform times plus the solver's own steps, which resolve the fast
        # transient right after the seed
        lo, hi = min(t0, t1), max(t0, t1)
        steps = sol.t[(sol.t > lo) & (sol.t < hi)]
        t = np.unique(np.concatenate([np.linspace(lo, hi, n), steps]))
        return t if t1 >= t0 else t[::-1]

    def unstable_samples(self, t0, t1, n=N_MANIFOLD):
        return self.unstable.sol(self._times(self.unstable, t0, t1, n)).T

    def stable_samples(self, t0, t1, n=N_MANIFOLD):
        return self.stable.sol(self._times(self.stable, t0, t1, n)).T

    def stable_graph(self):
        """(U, P) of the whole stable branch sorted by increasing U."""
        pts = self.stable_samples(0.0, self.t_end_s, 4 * N_MANIFOLD)[::-1]
        return pts

    def unstable_graph(self):
        return self.unstable_samples(0.0, self.t_end_u, 4 * N_MANIFOLD)


def manifold_branches(rt: ReactionTerm, beta: float) -> Branches:
    gap = _curve_gap(rt)
    gap.direction = 0
    su = integrate_unstable(
        rt, beta, dense=True,
        events=[gap, _terminal(lambda t, y: y[1], -1), _terminal(lambda t, y: y[0] - 1.0, 1)],
    )
    umax = float(np.max(su.y[0]))
    reaches = umax > rt.u_star
    gap_s = _curve_gap(rt)
    gap_s.direction = 0
    ss = integrate_stable(
        rt, beta, dense=True,
        events=[gap_s, _terminal(lambda t, y: y[0] - 0.01, -1), _terminal(lambda t, y: y[1] - 50.0, 1)],
    )
    tu = np.asarray(su.t_events[0])
    ts = np.asarray(ss.t_events[0])
    # only crossings inside (u*, 1) count
    def inside(sol, t):
        if not len(t):
            return t
        u = sol.sol(t)[0]
        return t[(u > rt.u_star + 1e-12) & (u < 1.0 - 1e-9)]

    tu, ts = inside(su, tu), inside(ss, ts)
    return Branches(
        beta=float(beta), unstable=su, stable=ss, t_cross_u=tu, t_cross_s=ts,
        t_end_u=float(su.t[-1]), t_end_s=float(ss.t[-1]), reaches_u_star=bool(reaches),
    )


def _refine_on_curve(rt, pt):
    u = float(pt[0])
    return np.array([u, pstar(rt, u)])


def _arc(rt, u0, u1, n=N_ARC):
    s = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, n)))
    u = u0 + (u1 - u0) * s
    return np.column_stack([u, pstar(rt, u)])


def optimal_path(rt: ReactionTerm, beta: float, branches: Branches | None = None,
                 allow_split: bool = False) -> PhasePath:
    """Cost-minimising admissible path for speed ``beta``.

    Follows the unstable manifold of (0, 0) to its first meeting A with P*,
    the curve P* from A to B, and the stable manifold of (1, 0) from B.

    When ``beta`` exceeds the node threshold and the unstable manifold falls
    into (u*, 0), no single profile exists and :class:`DegenerateNode` is
    raised.  With ``allow_split=True`` the split path (manifold into the node,
    then the P* arc out of it) is returned instead, flagged ``attained=False``.
    """
    beta = float(beta)
    if beta < rt.beta_star - 1e-9:
        raise ComputeError(f"beta={beta} is below the minimal speed {rt.beta_star}")
    br = branches or manifold_branches(rt, beta)

    if len(br.t_cross_s) == 0:
        raise ShootingFailed("stable manifold never meets P = P*(U)")
    t_b = br.t_cross_s[0]
    B = _refine_on_curve(rt, br.stable.sol(t_b))
    stable_pts = br.stable_samples(t_b, 0.0)  # from B forward to (1, 0)
    stable_pts[0] = B

    if not br.reaches_u_star:
        if beta > rt.beta_star_star:
            if not allow_split:
                raise DegenerateNode(
                    f"beta={beta:g} exceeds {rt.beta_star_star:.6g} and the unstable manifold "
                    "enters the node (u*, 0): the front splits into two profiles"
                )
            return _degenerate_path(rt, beta, br, B, stable_pts)
        raise ShootingFailed("unstable manifold never passes u*")
    if len(br.t_cross_u) == 0:
        # just below the node threshold the orbit can graze (u*, 0) so closely
        # that the crossing with P* is lost in round-off; A is then u* itself
        if float(np.max(br.unstable.y[0])) - rt.u_star < 1e-6:
            return _degenerate_path(rt, beta, br, B, stable_pts, attained=True)
        raise ShootingFailed("unstable manifold never meets P = P*(U)")

    t_a = br.t_cross_u[0]
    A = _refine_on_curve(rt, br.unstable.sol(t_a))
    extra = [tuple(br.unstable.sol(t)) for t in br.t_cross_u[1:]]
    extra += [tuple(br.stable.sol(t)) for t in br.t_cross_s[1:]]
    if extra:
        raise HypothesisViolated(
            "a saddle manifold meets P = P*(U) more than once in (u*, 1)", crossings=extra
        )

    unstable_pts = br.unstable_samples(0.0, t_a)
    unstable_pts[-1] = A
    verts = [np.zeros((1, 2)), unstable_pts]
    labels = [UNSTABLE] * len(unstable_pts)
    if B[0] > A[0] + HETEROCLINIC_GAP:
        arc = _arc(rt, A[0], B[0])
        verts.append(arc[1:-1])
        labels += [ARC] * (len(arc) - 1)
        tail = stable_pts
    else:
        # heteroclinic (beta == beta*): A and B coincide up to shooting error
        tail = stable_pts[stable_pts[:, 0] > A[0] + 1e-12]
        B = A
        labels.append(STABLE)
    verts += [tail, np.array([[1.0, 0.0]])]
    labels += [STABLE] * len(tail)
    return PhasePath(np.vstack(verts), labels, beta, tuple(A), tuple(B))


def _degenerate_path(rt, beta, br, B, stable_pts, attained=False):
    """Split profile: uncontrolled front into (u*, 0), then P* arc from u* to B."""
    pts = br.unstable_samples(0.0, br.t_end_u)
    # stop once inside the node's linear neighbourhood; the last edge then
    # runs straight into the rest point and carries no cost
    near = (pts[:, 0] >= rt.u_star) | (np.hypot(pts[:, 0] - rt.u_star, pts[:, 1]) < 1e-5)
    pts = pts[: int(np.argmax(near))] if np.any(near) else pts
    node = np.array([[rt.u_star, 0.0]])
    arc = _arc(rt, rt.u_star, B[0])
    verts = [np.zeros((1, 2)), pts, node, arc[1:-1], stable_pts, np.array([[1.0, 0.0]])]
    labels = [UNSTABLE] * (len(pts) + 1) + [ARC] * (len(arc) - 1) + [STABLE] * len(stable_pts)
    return PhasePath(
        np.vstack(verts), labels, beta, (rt.u_star, 0.0), tuple(B), attained=attained
    )


# ---------------------------------------------------------------------------
# costs


def cost_form(rt, beta, u, p):
    """Components (v_U, v_P) of the cost one-form."""
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    return rt.f(u) / (u * p) + beta / u, 1.0 / u


def curl(rt, u, p):
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    return rt.f(u) / (u * p**2) - 1.0 / u**2


def _arc_cost(rt, beta, u0, u1):
    def integrand(u):
        ps = pstar(rt, u)
        return ps / u**2 + beta / u + float(dpstar(rt, u)) / u

    if pstar(rt, u0) > 0.0:
        val, _ = quad(integrand, u0, u1, limit=400, epsabs=1e-13, epsrel=1e-12)
        return val
    # arc leaving the node: dP*/dU ~ (U - u0)**-1/2, so integrate in s = sqrt(U - u0)
    val, _ = quad(lambda s: 2.0 * s * integrand(u0 + s * s), 0.0, np.sqrt(u1 - u0),
                  limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


def _edge_costs(rt, beta, v0, v1):
    # Simpson on straight edges (exact for vertical jumps, where v_P = 1/U)
    mid = 0.5 * (v0 + v1)
    d = v1 - v0
    tot = 0.0
    for w, pt in ((1.0, v0), (4.0, mid), (1.0, v1)):
        a, b = cost_form(rt, beta, pt[:, 0], pt[:, 1])
        tot = tot + w * (a * d[:, 0] + b * d[:, 1])
    return tot / 6.0


def _graph_cost(rt, beta, pts):
    """Cost along a smooth graph P(U) sampled at ``pts``.

    The samples come from an ODE orbit, so a cubic spline through them is far
    closer to the true curve than the polyline; Gauss-Legendre on each interval.
    """
    u, p = pts[:, 0], pts[:, 1]
    cs = CubicSpline(u, p)
    ds = cs.derivative()
    a, b = u[:-1], u[1:]
    uu = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _GL_X[None, :]
    pp = cs(uu)
    g = rt.f(uu) / (uu * pp) + beta / uu + ds(uu) / uu
    return float(np.sum(g @ _GL_W * 0.5 * (b - a)))


def _is_rest_point(rt, pt, tol=1e-9):
    return abs(pt[1]) < tol and abs(float(rt.f(pt[0]))) < tol


def path_cost(path: PhasePath, rt: ReactionTerm, beta: float | None = None) -> float:
    """Line integral of the cost one-form along ``path``.

    Manifold edges ending at a rest point (the saddles, or the node in a split
    path) contribute nothing: along the linearised manifold the 1/U terms
    cancel exactly.
    """
    beta = path.beta if beta is None else float(beta)
    v = path.vertices
    total = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        for label, i, j in path.segments():
            if label == ARC:
                total += _arc_cost(rt, beta, v[i, 0], v[j, 0])
                continue
            seg = v[i : j + 1]
            lo, hi = 0, len(seg)
            if label in MANIFOLD_LABELS:
                while lo < hi and _is_rest_point(rt, seg[lo]):
                    lo += 1
                while hi > lo and _is_rest_point(rt, seg[hi - 1]):
                    hi -= 1
            seg = seg[lo:hi]
            if len(seg) < 2:
                continue
            if np.any(seg[:, 1] <= 1e-14):
                raise SingularIntegrand("P vanishes at an interior vertex of the path")
            total += _polyline_cost(rt, beta, seg)
    return float(total)


def _polyline_cost(rt, beta, seg):
    # split into runs where U strictly increases (smooth graph) and the rest
    du = np.diff(seg[:, 0])
    rising = du > 1e-13 * np.maximum(1.0, np.abs(seg[:-1, 0]))
    total = 0.0
    k = 0
    n = len(du)
    while k < n:
        m = k
        while m < n and rising[m] == rising[k]:
            m += 1
        run = seg[k : m + 1]
        if rising[k] and len(run) >= 4:
            total += _graph_cost(rt, beta, run)
        else:
            total += float(np.sum(_edge_costs(rt, beta, run[:-1], run[1:])))
        k = m
    return total


# ---------------------------------------------------------------------------
# comparison paths


def jump_path(rt: ReactionTerm, beta: float, u_jump: float, branches: Branches | None = None):
    """Unstable manifold up to ``u_jump``, an impulsive vertical jump, then the stable manifold."""
    br = branches or manifold_branches(rt, beta)
    un = br.unstable_graph()
    idx = np.nonzero(un[:, 1] <= 0.0)[0]
    if len(idx):
        un = un[: idx[0]]
    k = np.searchsorted(un[:, 0], u_jump)
    if k == 0 or k >= len(un) or np.any(np.diff(un[: k + 1, 0]) <= 0):
        raise ComputeError("jump point is not on the rising part of the unstable manifold")
    st = br.stable_graph()
    if not (st[0, 0] < u_jump < st[-1, 0]):
        raise ComputeError("jump point is outside the stable branch")
    p_lo = float(np.interp(u_jump, un[:, 0], un[:, 1]))
    p_hi = float(np.interp(u_jump, st[:, 0], st[:, 1]))
    head = un[:k]
    tail = st[st[:, 0] > u_jump]
    verts = np.vstack([[0.0, 0.0], head, [u_jump, p_lo], [u_jump, p_hi], tail, [1.0, 0.0]])
    labels = [UNSTABLE] * (len(head) + 1) + [CONTROLLED] + [STABLE] * (len(tail) + 1)
    return PhasePath(verts, labels, beta), (p_hi - p_lo) / u_jump


def controlled_path(rt: ReactionTerm, beta: float, u_start: float, gain, branches=None, n=800):
    """Admissible path leaving the unstable manifold at ``u_start`` under extra push ``gain(U) >= 0``.

    Integrates dP/dU = -beta - f/P + gain(U) (control alpha = gain * P / U) until the
    stable manifold is met.  Returns ``(path, exact_cost)`` or ``None`` if the
    controlled orbit never reaches the stable manifold.
    """
    br = branches or manifold_branches(rt, beta)
    un = br.unstable_graph()
    idx = np.nonzero(un[:, 1] <= 0.0)[0]
    if len(idx):
        un = un[: idx[0]]
    st = br.stable_graph()
    k = np.searchsorted(un[:, 0], u_start)
    if k == 0 or k >= len(un):
        return None
    p0 = float(np.interp(u_start, un[:, 0], un[:, 1]))

    def rhs(u, y):
        return [-beta - float(rt.f(u)) / y[0] + gain(u), gain(u) / u]

    def meet(u, y):
        if u < st[0, 0]:
            return -1.0
        return y[0] - float(np.interp(u, st[:, 0], st[:, 1]))

    meet.terminal, meet.direction = True, 1
    floor = _terminal(lambda u, y: y[0] - 1e-6, -1)
    sol = solve_ivp(rhs, (u_start, 1.0 - 1e-6), [p0, 0.0], events=[meet, floor],
                    rtol=RTOL, atol=ATOL, dense_output=True)
    if not len(sol.t_events[0]):
        return None
    u_end = float(sol.t_events[0][0])
    if u_end <= u_start + 1e-6:
        return None
    uu = np.linspace(u_start, u_end, n)
    pp = sol.sol(uu)[0]
    pp[-1] = float(np.interp(u_end, st[:, 0], st[:, 1]))
    tail = st[st[:, 0] > u_end]
    head = un[:k]
    verts = np.vstack([[0.0, 0.0], head, np.column_stack([uu, pp]), tail, [1.0, 0.0]])
    labels = [UNSTABLE] * (len(head) + 1) + [CONTROLLED] * (n - 1) + [STABLE] * (len(tail) + 1)
    return PhasePath(verts, labels, beta), float(sol.sol(u_end)[1])


# ---------------------------------------------------------------------------
# Stokes comparison

def _graph_eval(path, u, rt):
    """P(U) on open intervals between breakpoints (vertical jumps allowed).

    Exact on the P* arc; elsewhere a cubic spline through the orbit samples
    wherever U strictly increases, linear otherwise.
    """
    out = np.interp(u, path.U, path.P)
    v = path.vertices
    for label, i, j in path.segments():
        if label == ARC:
            m = (u > v[i, 0]) & (u < v[j, 0])
            out[m] = pstar(rt, u[m])
        else:
            seg = v[i : j + 1]
            # keep the edges into rest points linear, they are shared verbatim
            seg = seg[(seg[:, 1] > 0.0) & (seg[:, 0] > 0.0) & (seg[:, 0] < 1.0)]
            if len(seg) >= 4 and np.all(np.diff(seg[:, 0]) > 0):
                m = (u > seg[0, 0]) & (u < seg[-1, 0])
                out[m] = CubicSpline(seg[:, 0], seg[:, 1])(u[m])
    return out


def stokes_area_difference(g1: PhasePath, g2: PhasePath, rt: ReactionTerm, max_crossings: int = 16):
    """I(g1) - I(g2) as the signed area integral of the curl between the two graphs.

    The inner P-integral of the curl is done in closed form, the outer U-integral
    by Gauss-Legendre on every interval between breakpoints of either path.
    """
    br = np.unique(np.concatenate([g1.U, g2.U]))
    a, b = br[:-1], br[1:]
    keep = b - a > 1e-15
    a, b = a[keep], b[keep]
    mid = 0.5 * (a + b)
    diff = _graph_eval(g1, mid, rt) - _graph_eval(g2, mid, rt)
    sgn = np.sign(np.where(np.abs(diff) < 1e-12, 0.0, diff))
    sgn = sgn[sgn != 0]
    if np.count_nonzero(np.diff(sgn)) > max_crossings:
        raise RegionDegenerate("paths cross too often to split the enclosed region")
    u = mid[:, None] + 0.5 * (b - a)[:, None] * _GL_X[None, :]
    p1 = _graph_eval(g1, u, rt)
    p2 = _graph_eval(g2, u, rt)
    same = p1 == p2
    with np.errstate(divide="ignore", invalid="ignore"):
        fu = rt.f(u)

        def anti(p):
            return -fu / (u * p) - p / u**2

        inner = np.where(same, 0.0, anti(p2) - anti(p1))
    if not np.all(np.isfinite(inner)):
        raise SingularIntegrand("curl integrand is singular inside the enclosed region")
    return float(np.sum(inner @ _GL_W * 0.5 * (b - a)))


def stokes_compare(g1: PhasePath, g2: PhasePath, rt: ReactionTerm, beta: float | None = None,
                   rel_tol: float = 1e-4) -> float:
    """Signed cost difference I(g1) - I(g2), cross-checked by the curl-area form."""
    line = path_cost(g1, rt, beta) - path_cost(g2, rt, beta)
    area = stokes_area_difference(g1, g2, rt)
    scale = max(abs(line), abs(area), 1e-12)
    if abs(line - area) > rel_tol * scale and abs(line - area) > 1e-10:
        raise ComputeError(f"line-integral difference {line:.8g} != curl-area form {area:.8g}")
    return area


# ---------------------------------------------------------------------------
# profile and control reconstruction


@dataclass(frozen=True, eq=False)
class ControlProfile:
    """Travelling profile x -> U(x) together with the feedback control U -> alpha(U)."""

    x: np.ndarray | None = None
    U: np.ndarray | None = None
    u_grid: np.ndarray | None = None
    alpha: np.ndarray | None = None
    support: tuple = (np.nan, np.nan)
    x_of_u: object = field(default=None, repr=False)

    def alpha_of(self, u):
        """Feedback control evaluated at density ``u`` (zero off the support)."""
        u = np.asarray(u, dtype=float)
        if self.u_grid is None or not np.isfinite(self.support[0]):
            return np.zeros_like(u)
        lo, hi = self.support
        val = np.interp(u, self.u_grid, self.alpha)
        return np.where((u >= lo) & (u <= hi), np.clip(val, 0.0, None), 0.0)

    def with_profile(self, other: "ControlProfile") -> "ControlProfile":
        return ControlProfile(other.x, other.U, self.u_grid, self.alpha, self.support, other.x_of_u)

    def total_cost(self, n: int = 20001) -> float:
        """x-space cost: integral of alpha(U(x)) dx over the support by Simpson's rule."""
        if self.x_of_u is None:
            raise ComputeError("profile part missing; call reconstruct_profile first")
        if not np.isfinite(self.support[0]):
            return 0.0
        lo, hi = self.support
        x0, x1 = float(self.x_of_u(lo)), float(self.x_of_u(hi))
        xs = np.linspace(x0, x1, n)
        inv = PchipInterpolator(self.x, self.U)
        us = np.clip(inv(xs), lo, hi)
        vals = np.interp(us, self.u_grid, self.alpha)
        h = (x1 - x0) / (n - 1)
        return float(h / 3.0 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum()))


def reconstruct_profile(path: PhasePath, n_x: int = 4001, u_ref: float = 0.5) -> ControlProfile:
    """Invert x(u) = int_{u*}^{u} dU / P(U) on the path to get the front profile.

    P is piecewise linear between vertices, so each edge integrates exactly to
    dU / dP * log(P1 / P0).
    """
    v = path.vertices
    U, P = v[:, 0], v[:, 1]
    if np.any(np.diff(U) <= 0.0):
        raise NonIntegrable("profile needs U strictly increasing along the path")
    interior = (U > TAIL * 0.5) & (U < 1.0 - TAIL * 0.5)
    if np.any(P[interior] <= 1e-14):
        raise NonIntegrable("P vanishes at an interior density: the front splits in two")
    m = (U >= TAIL) & (U <= 1.0 - TAIL)
    idx = np.nonzero(m)[0]
    lo_i, hi_i = max(idx[0] - 1, 0), min(idx[-1] + 1, len(U) - 1)
    u = U[lo_i : hi_i + 1]
    p = P[lo_i : hi_i + 1]
    du, dp = np.diff(u), np.diff(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = p[1:] / p[:-1]
        dx = np.where(np.abs(dp) > 1e-12 * np.abs(p[:-1]), du / dp * np.log(ratio),
                      du / p[:-1] * (1.0 - 0.5 * (ratio - 1.0)))
    x = np.concatenate([[0.0], np.cumsum(dx)])
    # x = 0 where U = u_ref
    ref = float(np.interp(u_ref, u, x))
    x = x - ref
    x_of_u = PchipInterpolator(u, x)
    xs = np.linspace(float(x_of_u(TAIL)), float(x_of_u(1.0 - TAIL)), n_x)
    us = PchipInterpolator(x, u)(xs)
    return ControlProfile(x=xs, U=us, x_of_u=x_of_u)


def reconstruct_control(path: PhasePath, rt: ReactionTerm, beta: float | None = None) -> ControlProfile:
    """Feedback control alpha(U) = (P dP/dU + beta P + f(U)) / U along the path."""
    beta = path.beta if beta is None else float(beta)
    v = path.vertices
    us, als = [], []
    for label, i, j in path.segments():
        if label in MANIFOLD_LABELS:
            continue
        seg = v[i : j + 1]
        u, p = seg[:, 0], seg[:, 1]
        if np.any(np.diff(u) <= 0):
            raise NegativeControl("controlled segment is not a graph over U")
        dpdu = np.gradient(p, u, edge_order=2)
        al = (p * dpdu + beta * p + rt.f(u)) / u
        if label == ARC:
            # exact slope on the curve where P* > 0
            ok = p > 1e-8
            al[ok] = (p[ok] * dpstar(rt, u[ok]) + beta * p[ok] + rt.f(u[ok])) / u[ok]
        if np.any(al < -NEG_CONTROL_TOL):
            k = int(np.argmin(al))
            raise NegativeControl(f"alpha={al[k]:.3e} < 0 at U={u[k]:.6g}")
        us.append(u)
        als.append(np.clip(al, 0.0, None))
    if not us:
        return ControlProfile()
    u = np.concatenate(us)
    al = np.concatenate(als)
    return ControlProfile(u_grid=u, alpha=al, support=(float(u[0]), float(u[-1])))
