"""Direct simulation of the controlled 1-D reaction-diffusion equation.

    u_t = u_xx + f(u) - alpha(u) u    on [-L, L],  u(-L) = 0, u(L) = 1

Diffusion is implicit (banded Cholesky factor computed once), reaction and
control are explicit.  The control is state feedback: alpha is a function of
the local density.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator

from .errors import BlowUp, NoFront, UnstableStep
from .phase import ControlProfile
from .reaction import ReactionTerm

RANGE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class WaveField:
    """Result of :func:`simulate`.

    ``t``, ``front`` and ``cost`` are recorded every ``record_every`` steps;
    ``snapshots`` holds full density profiles at the times ``snapshot_t``.
    """

    x: np.ndarray
    h: float
    tau: float
    t: np.ndarray
    front: np.ndarray
    cost: np.ndarray
    snapshot_t: np.ndarray
    snapshots: np.ndarray
    u_star: float

    @property
    def u_final(self) -> np.ndarray:
        return self.snapshots[-1]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,front_position,instantaneous_cost\n")
            for t, xf, c in zip(self.t, self.front, self.cost):
                fh.write(f"{t:.10g},{xf:.10g},{c:.10g}\n")


def front_position(x, u, level):
    """Leftmost crossing of ``level`` by linear interpolation (NaN if absent)."""
    above = u >= level
    k = np.argmax(above)
    if not above[k] or k == 0:
        return np.nan
    u0, u1 = u[k - 1], u[k]
    return x[k - 1] + (level - u0) / (u1 - u0) * (x[k] - x[k - 1])


def profile_initial(profile: ControlProfile, shift: float = 0.0) -> Callable:
    """Initial datum U(x - shift) from a reconstructed profile, 0 / 1 in the tails."""
    inv = PchipInterpolator(profile.x, profile.U, extrapolate=False)

    def u0(x):
        y = inv(np.asarray(x) - shift)
        xx = np.asarray(x) - shift
        return np.where(np.isnan(y), np.where(xx < profile.x[0], 0.0, 1.0), y)

    return u0


def step_initial(shift: float = 0.0) -> Callable:
    return lambda x: (np.asarray(x) >= shift).astype(float)


def simulate(
    rt: ReactionTerm,
    alpha: Callable | None = None,
    L: float = 40.0,
    h: float = 0.05,
    T: float = 60.0,
    tau: float | None = None,
    initial: Callable | None = None,
    reaction: Callable | None = None,
    record_every: int = 10,
    n_snapshots: int = 7,
    bc: tuple = (0.0, 1.0),
) -> WaveField:
    """Integrate the controlled equation up to time ``T``.

    Parameters
    ----------
    rt
        Reaction term (only ``rt.f`` and ``rt.u_star`` are used).
    alpha
        Feedback removal rate as a function of density; ``None`` means no control.
    tau
        Time step, default ``h**2 / 4``; larger values are rejected.
    initial
        Callable x -> u(0, x); default is a step at x = 0.
    reaction
        Override for f (e.g. ``lambda u: 0 * u`` to test the pure heat flow).
    bc
        Dirichlet values at -L and L.
    """
    if tau is None:
        tau = h * h / 4.0
    if tau > h * h / 4.0 * (1.0 + 1e-12):
        raise UnstableStep(f"tau={tau:g} exceeds h^2/4={h * h / 4:g}")
    f = reaction or rt.f
    n = int(round(2.0 * L / h)) + 1
    x = np.linspace(-L, L, n)
    u = np.clip(np.asarray((initial or step_initial())(x), dtype=float), 0.0, 1.0)
    u[0], u[-1] = bc
    inner = slice(1, n - 1)
    m = n - 2

    # (I - tau D2) on interior nodes, upper banded form for cholesky_banded
    r = tau / (h * h)
    ab = np.empty((2, m))
    ab[0, :] = -r
    ab[1, :] = 1.0 + 2.0 * r
    chol = cholesky_banded(ab)

    n_steps = int(round(T / tau))
    rec_t, rec_front, rec_cost = [], [], []
    snap_steps = set(np.linspace(0, n_steps, n_snapshots).round().astype(int).tolist())
    snap_t, snaps = [], []

    def instantaneous_cost(uu):
        if alpha is None:
            return 0.0
        return float(trapezoid(alpha(uu), x))

    for k in range(n_steps + 1):
        if k % record_every == 0 or k == n_steps:
            rec_t.append(k * tau)
            rec_front.append(front_position(x, u, rt.u_star))
            rec_cost.append(instantaneous_cost(u))
        if k in snap_steps:
            snap_t.append(k * tau)
            snaps.append(u.copy())
        if k == n_steps:
            break
        src = f(u)
        if alpha is not None:
            src = src - alpha(u) * u
        rhs = u[inner] + tau * src[inner]
        rhs[0] += r * bc[0]
        rhs[-1] += r * bc[1]
        u[inner] = cho_solve_banded((chol, False), rhs)
        lo, hi = u.min(), u.max()
        if lo < -0.1 or hi > 1.1 or not np.isfinite(lo + hi):
            raise BlowUp(f"density left [-0.1, 1.1] at t={(k + 1) * tau:.4g}")
        if lo < -RANGE_TOL or hi > 1.0 + RANGE_TOL:
            raise BlowUp(f"density left [0, 1] by more than {RANGE_TOL:g} at t={(k + 1) * tau:.4g}")
        np.clip(u, 0.0, 1.0, out=u)

    return WaveField(
        x=x, h=h, tau=tau, t=np.array(rec_t), front=np.array(rec_front), cost=np.array(rec_cost),
        snapshot_t=np.array(snap_t), snapshots=np.array(snaps), u_star=rt.u_star,
    )


def _final_half(field: WaveField):
    return field.t >= 0.5 * field.t[-1]


def front_speed(field: WaveField) -> float:
    """Least-squares slope of the u* crossing over the final half of the run."""
    m = _final_half(field)
    t, xf = field.t[m], field.front[m]
    if len(t) < 2 or np.any(np.isnan(xf)):
        raise NoFront("the level u* is not crossed throughout the final half")
    slope, _ = np.polyfit(t, xf, 1)
    return float(slope)


def realized_cost(field: WaveField) -> float:
    """Time average of the instantaneous cost over the final half of the run."""
    m = _final_half(field)
    t, c = field.t[m], field.cost[m]
    if len(t) < 2:
        return float(c[-1])
    return float(trapezoid(c, t) / (t[-1] - t[0]))
