"""Necessary conditions for optimal control of a moving front.

Along a trajectory carrying marker paths, the shadow price Y(t, xi) (cost
saved per unit area removed near marker xi) solves the backward equation

    Y_t = (beta - E/E') omega Y - k1,     Y(T) = k2,

and the effort multiplier lambda(t) makes each marker speed minimise
lambda E(beta) - Y beta.  Under the basic effort E = 1 + beta the
coefficient is -omega.  Each step is integrated exactly with the
coefficient frozen at its trapezoid average, so the adjoint and the
forward area sensitivity satisfy the shadow-price identity to round-off.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .curves import Trajectory, advance_markers, curvature, locate, sample_on_curve
from .errors import ComputeError, MissingMarkers, NoActiveMarkers, NonDifferentiableEffort

N_BETA = 2001
ACTIVE_TOL = 1e-6
SLACK_TOL = 1e-3


@dataclass(frozen=True)
class CostWeights:
    """Running and terminal area weights and the cost of effort.

    ``phi`` is a convex nondecreasing cost of the total effort with
    derivative ``phi_prime``.  Leave both unset for the hard budget
    E(t) <= M, in which case ``M`` is required.
    """

    kappa1: float = 0.0
    kappa2: float = 1.0
    phi: Callable | None = None
    phi_prime: Callable | None = None
    M: float | None = None

    def __post_init__(self):
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("area weights must be nonnegative")
        if self.phi is None:
            if self.M is None or self.M <= 0:
                raise ValueError("the budget model needs a positive M")
            return
        if self.phi_prime is None:
            raise ValueError("a smooth effort cost needs its derivative")
        s = np.linspace(0.0, 10.0, 101)
        v = np.array([self.phi(x) for x in s])
        if abs(v[0]) > 1e-12 or np.any(np.diff(v) < -1e-12) or np.any(np.diff(v, 2) < -1e-9):
            raise ValueError("phi must vanish at 0 and be convex and nondecreasing")

    @property
    def constrained(self) -> bool:
        return self.phi is None

    def scaled(self, c: float) -> "CostWeights":
        return dataclasses.replace(self, kappa1=c * self.kappa1, kappa2=c * self.kappa2)


def seed_markers(traj: Trajectory, n: int = 64) -> Trajectory:
    """Copy of ``traj`` with ``n`` markers spread evenly along the first front and
    carried along the normals by the stored speed fields."""
    c0 = traj.curves[0]
    s_nodes = np.concatenate([[0.0], np.cumsum(c0.edge_lengths())])
    s = np.linspace(0.0, s_nodes[-1], n, endpoint=not c0.closed)
    pts = np.column_stack([np.interp(s, s_nodes, np.r_[c0.points[:, k], c0.points[:1, k]] if c0.closed
                                     else c0.points[:, k]) for k in range(2)])
    mk = [pts]
    for k in range(len(traj.times) - 1):
        f = traj.fields[k]
        if f is None:
            mk.append(mk[-1])
            continue
        mk.append(advance_markers(traj.curves[k], f, mk[-1], traj.times[k + 1] - traj.times[k], traj.curves[k + 1]))
    return dataclasses.replace(traj, markers=np.array(mk))


@dataclass(frozen=True, eq=False)
class MarkerSamples:
    """Speed, curvature and the adjoint coefficient at each marker, on the nonempty frames."""

    times: np.ndarray
    beta: np.ndarray
    omega: np.ndarray
    coef: np.ndarray
    active: np.ndarray


def marker_samples(traj: Trajectory, E) -> MarkerSamples:
    if traj.markers is None:
        raise MissingMarkers("the trajectory carries no marker paths")
    keep = [k for k, c in enumerate(traj.curves) if not c.is_empty and traj.fields[k] is not None]
    if len(keep) < 2:
        raise ComputeError("need at least two nonempty frames")
    beta, omega = [], []
    for k in keep:
        c = traj.curves[k]
        _, s, _ = locate(c, traj.markers[k])
        beta.append(sample_on_curve(c, traj.fields[k].beta, s))
        omega.append(sample_on_curve(c, curvature(c), s))
    beta, omega = np.array(beta), np.array(omega)
    bstar = getattr(E, "beta_star", -1.0)
    if np.any(beta < bstar - 1e-9):
        raise ComputeError("realised speeds below the free speed beta*")
    beta = np.maximum(beta, bstar)
    d = np.asarray(E.derivative(beta, "right"), dtype=float)
    bad = np.argwhere(d <= 0)
    if len(bad):
        err = NonDifferentiableEffort(f"effort has no usable derivative at {len(bad)} marker samples")
        err.markers = [(float(traj.times[keep[i]]), int(j)) for i, j in bad]
        raise err
    coef = (beta - np.asarray(E(beta), dtype=float) / d) * omega
    return MarkerSamples(traj.times[keep], beta, omega, coef, beta > bstar + ACTIVE_TOL)


def _phi1(x):
    """(exp(x) - 1)/x, continuous at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    return np.where(small, 1 + x / 2, np.expm1(np.where(small, 1.0, x)) / np.where(small, 1.0, x))


@dataclass(frozen=True, eq=False)
class AdjointField:
    """Shadow prices Y[t, xi] on the marker time grid, plus the multiplier once known."""

    times: np.ndarray
    Y: np.ndarray
    omega: np.ndarray
    beta: np.ndarray
    active: np.ndarray
    coef: np.ndarray
    weights: CostWeights
    lam: np.ndarray | None = None

    @property
    def xi(self) -> np.ndarray:
        return np.arange(self.Y.shape[1])

    def with_multiplier(self, lam) -> "AdjointField":
        return dataclasses.replace(self, lam=np.asarray(lam, dtype=float))

    def to_csv(self, path, residual: np.ndarray | None = None):
        with open(path, "w") as fh:
            fh.write("t,xi,Y,omega,beta,residual\n")
            for k, t in enumerate(self.times):
                for j in self.xi:
                    r = np.nan if residual is None else residual[k, j]
                    fh.write(f"{t:.10g},{j},{self.Y[k, j]:.10g},{self.omega[k, j]:.10g},"
                             f"{self.beta[k, j]:.10g},{r:.6g}\n")


def adjoint_solve(traj: Trajectory, E, w: CostWeights) -> AdjointField:
    """Integrate the shadow-price equation backward from Y(T) = kappa2 for every marker."""
    ms = marker_samples(traj, E)
    t = ms.times
    a = 0.5 * (ms.coef[1:] + ms.coef[:-1])
    h = np.diff(t)[:, None]
    Y = np.empty_like(ms.coef)
    Y[-1] = w.kappa2
    for k in range(len(t) - 2, -1, -1):
        # exact solution of Y' = a Y - k1 over the step, integrated backward
        Y[k] = np.exp(-a[k] * h[k]) * Y[k + 1] + w.kappa1 * h[k] * _phi1(-a[k] * h[k])
    return AdjointField(t, Y, ms.omega, ms.beta, ms.active, ms.coef, w)


def multiplier(traj: Trajectory, E, w: CostWeights, adj: AdjointField | None = None) -> np.ndarray:
    """lambda(t) on the adjoint time grid.

    Smooth cost: phi'(E(t)).  Budget model: zero while the budget is slack
    (complementary slackness), otherwise the mean shadow price over active
    markers, where the interior minimum forces Y = lambda.
    """
    adj = adjoint_solve(traj, E, w) if adj is None else adj
    eff = np.interp(adj.times, traj.times, traj.effort)
    if not w.constrained:
        return np.array([w.phi_prime(e) for e in eff], dtype=float)
    lam = np.zeros(len(adj.times))
    missing = []
    for k in range(len(adj.times)):
        if eff[k] < w.M * (1 - SLACK_TOL):
            continue
        act = adj.active[k]
        if not np.any(act):
            missing.append(float(adj.times[k]))
            continue
        lam[k] = adj.Y[k, act].mean()
    if missing:
        err = NoActiveMarkers(f"budget binding but no active marker at {len(missing)} times")
        err.times = missing
        raise err
    return lam


def cc_dispersion(adj: AdjointField) -> float:
    """Largest relative spread (std / mean) of Y over the active markers at one time."""
    worst = 0.0
    for k in range(len(adj.times)):
        act = adj.active[k]
        if np.count_nonzero(act) >= 2:
            y = adj.Y[k, act]
            worst = max(worst, float(np.std(y) / abs(np.mean(y))))
    return worst


def _minimise(E, lam_k: float, Y: np.ndarray, lo: float, hi: float):
    """Minimum and minimiser of lam_k E(beta) - Y beta over [lo, hi] for each entry of Y.

    Grid search on 2001 points, refined by bounded golden-section search
    where the grid minimiser is interior.
    """
    grid = np.linspace(lo, hi, N_BETA)
    eg = np.asarray(E(grid), dtype=float)
    vals = lam_k * eg[:, None] - grid[:, None] * Y[None, :]
    # ties within round-off go to the slowest speed, so the minimiser is scale invariant
    scale = np.abs(lam_k) * np.max(np.abs(eg)) + np.abs(Y) * max(abs(lo), abs(hi))
    k = np.argmax(vals <= vals.min(axis=0) + 1e-12 * scale, axis=0)
    fmin = vals[k, np.arange(len(Y))]
    arg = grid[k]
    for j in np.flatnonzero((k > 0) & (k < N_BETA - 1)):
        res = minimize_scalar(lambda x, y=Y[j]: lam_k * float(E(x)) - y * x,
                              bounds=(grid[k[j] - 1], grid[k[j] + 1]), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < fmin[j]:
            fmin[j], arg[j] = res.fun, res.x
    return fmin, arg


def _beta_range(adj: AdjointField, E):
    return float(getattr(E, "beta_star", -1.0)), float(np.max(adj.beta)) + 2.0


def pmp_residual(traj: Trajectory, adj: AdjointField, E, lam=None) -> tuple[float, np.ndarray]:
    """Pointwise minimum-principle defect.

    For each (t, xi): lambda E(beta) - Y beta minus its minimum over
    beta >= beta*, normalised by lambda E(1) + |Y|.  Returns the maximum and
    the full residual array.
    """
    lam = adj.lam if lam is None else np.asarray(lam, dtype=float)
    if lam is None:
        raise ComputeError("the multiplier is needed: call multiplier() first")
    lo, hi = _beta_range(adj, E)
    e1 = float(E(1.0))
    res = np.zeros_like(adj.Y)
    for k in range(len(adj.times)):
        y, b = adj.Y[k], adj.beta[k]
        fmin, _ = _minimise(E, lam[k], y, lo, hi)
        f = lam[k] * np.asarray(E(b), dtype=float) - y * b
        res[k] = np.maximum(0.0, f - fmin) / (lam[k] * e1 + np.abs(y))
    return float(res.max()), res


def argmin_speeds(adj: AdjointField, E, lam) -> np.ndarray:
    """Minimiser of lambda E(beta) - Y beta at each (t, xi)."""
    lo, hi = _beta_range(adj, E)
    return np.array([_minimise(E, lam[k], adj.Y[k], lo, hi)[1] for k in range(len(adj.times))])


def area_sensitivity(traj: Trajectory, tau: float, xi: int, E, samples: MarkerSamples | None = None):
    """Growth factor A(t) of a small area removed near marker xi at time tau.

    Solves A' = (E/E' - beta) omega A forward from A(tau) = 1 on the marker
    time grid (tau is snapped to the nearest sample).  Returns (times, A).
    """
    ms = marker_samples(traj, E) if samples is None else samples
    k0 = int(np.argmin(np.abs(ms.times - tau)))
    if not ms.active[k0, xi]:
        raise NonDifferentiableEffort(f"marker {xi} is not active at t={ms.times[k0]:.6g}")
    a = -0.5 * (ms.coef[k0 + 1:, xi] + ms.coef[k0:-1, xi])
    h = np.diff(ms.times[k0:])
    A = np.concatenate([[1.0], np.exp(np.cumsum(a * h))])
    return ms.times[k0:], A


def shadow_price_error(traj: Trajectory, adj: AdjointField, E, taus=None, markers=None) -> float:
    """Largest relative gap in Y(tau, xi) = int k1 A dt + k2 A(T) over the given samples."""
    ms = marker_samples(traj, E)
    w = adj.weights
    taus = adj.times[:-1:max(1, len(adj.times) // 10)] if taus is None else taus
    markers = range(adj.Y.shape[1]) if markers is None else markers
    worst = 0.0
    for tau in taus:
        k0 = int(np.argmin(np.abs(adj.times - tau)))
        for j in markers:
            if not ms.active[k0, j]:
                continue
            t, A = area_sensitivity(traj, tau, j, E, ms)
            a = -0.5 * (ms.coef[k0 + 1:, j] + ms.coef[k0:-1, j])
            h = np.diff(t)
            running = np.sum(A[:-1] * h * _phi1(a * h))
            pred = w.kappa1 * running + w.kappa2 * A[-1]
            worst = max(worst, abs(pred - adj.Y[k0, j]) / max(abs(adj.Y[k0, j]), 1e-300))
    return worst


@dataclass(frozen=True)
class OptimalityReport:
    max_pmp_residual: float
    shadow_price_error: float
    cc_dispersion: float

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)


def verify(traj: Trajectory, E, w: CostWeights, n_markers: int = 32):
    """Run all checks; seeds markers if the trajectory has none.  Returns (report, adjoint, residuals)."""
    if traj.markers is None:
        traj = seed_markers(traj, n_markers)
    adj = adjoint_solve(traj, E, w)
    adj = adj.with_multiplier(multiplier(traj, E, w, adj))
    r, res = pmp_residual(traj, adj, E)
    rep = OptimalityReport(r, shadow_price_error(traj, adj, E), cc_dispersion(adj))
    return rep, adj, res
