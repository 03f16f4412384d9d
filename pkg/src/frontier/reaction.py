"""Bistable reaction terms and phase-plane shooting for the travelling-wave system.

The uncontrolled travelling-wave system is

    U' = P,    P' = -beta * P - f(U),

with saddles at (0, 0) and (1, 0).  Manifolds are seeded on the linearised
eigenvectors and integrated with an adaptive Dormand-Prince scheme.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (
    MultipleInteriorZeros,
    NegativeRadicand,
    NoInteriorZero,
    NotBistable,
    ShootingFailed,
)

SEED_OFFSET = 1e-6
RTOL = 1e-10
ATOL = 1e-16
ZERO_TOL = 1e-12
BRACKET = (-10.0, 10.0)


@dataclass(frozen=True, eq=False)
class ReactionTerm:
    """A validated bistable nonlinearity with zeros at 0, ``u_star`` and 1."""

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    u_star: float
    spec: dict = field(default_factory=dict)

    @property
    def beta_star_star(self) -> float:
        """Node threshold 2*sqrt(f'(u*)) above which (u*, 0) is a stable node."""
        return 2.0 * float(np.sqrt(self.df(self.u_star)))

    @cached_property
    def beta_star(self) -> float:
        return _shoot_min_speed(self)

    def __call__(self, u):
        return self.f(u)


def _cubic(a: float):
    def f(u):
        u = np.asarray(u, dtype=float)
        return u * (1.0 - u) * (u - a)

    def df(u):
        u = np.asarray(u, dtype=float)
        return -3.0 * u**2 + 2.0 * (1.0 + a) * u - a

    return f, df


def _sampled(knots):
    knots = np.asarray(knots, dtype=float)
    if knots.ndim != 2 or knots.shape[1] != 2 or len(knots) < 4:
        raise NotBistable("sampled reaction needs at least four [u, f] knots")
    order = np.argsort(knots[:, 0])
    spline = CubicSpline(knots[order, 0], knots[order, 1])
    deriv = spline.derivative()
    return (lambda u: spline(np.asarray(u, dtype=float))), (
        lambda u: deriv(np.asarray(u, dtype=float))
    )


def validate_reaction(f_spec, df=None) -> ReactionTerm:
    """Build a :class:`ReactionTerm` and check the bistable sign pattern.

    ``f_spec`` is either a scenario dictionary (``{"kind": "cubic", "a": 0.3}``
    or ``{"kind": "sampled", "knots": [[u, f], ...]}``) or a callable, in which
    case ``df`` must be supplied as well.
    """
    if callable(f_spec):
        if df is None:
            raise TypeError("a callable reaction needs its derivative df")
        f, spec = f_spec, {"kind": "callable"}
    else:
        spec = dict(f_spec)
        kind = spec.get("kind")
        if kind == "cubic":
            f, df = _cubic(float(spec["a"]))
        elif kind == "sampled":
            f, df = _sampled(spec["knots"])
        else:
            raise NotBistable(f"unknown reaction kind {kind!r}")

    if abs(float(f(0.0))) > ZERO_TOL or abs(float(f(1.0))) > ZERO_TOL:
        raise NotBistable("f(0) and f(1) must vanish")
    if float(df(0.0)) >= 0.0 or float(df(1.0)) >= 0.0:
        raise NotBistable("f'(0) and f'(1) must be negative")

    grid = np.linspace(0.0, 1.0, 4001)[1:-1]
    vals = np.asarray(f(grid), dtype=float)
    sign = np.sign(vals)
    nz = sign != 0
    changes = np.nonzero(np.diff(sign[nz]) != 0)[0]
    if len(changes) == 0:
        raise NoInteriorZero("f has no sign change in (0, 1)")
    if len(changes) > 1:
        raise MultipleInteriorZeros(f"f changes sign {len(changes)} times in (0, 1)")
    g = grid[nz]
    lo, hi = g[changes[0]], g[changes[0] + 1]
    if vals[nz][changes[0]] > 0:
        raise NotBistable("f must be negative on (0, u*) and positive on (u*, 1)")
    u_star = brentq(lambda u: float(f(u)), lo, hi, xtol=1e-15, rtol=1e-15)
    if float(df(u_star)) <= 0.0:
        raise NotBistable("f'(u*) must be positive")
    return ReactionTerm(f=f, df=df, u_star=float(u_star), spec=spec)


def pstar(rt: ReactionTerm, u):
    """Momentum on the zero-curl curve, sqrt(U f(U))."""
    u = np.asarray(u, dtype=float)
    rad = u * np.asarray(rt.f(u), dtype=float)
    if np.any(rad < -1e-14):
        raise NegativeRadicand("P*(U) is only defined where f(U) >= 0")
    out = np.sqrt(np.clip(rad, 0.0, None))
    return float(out) if out.ndim == 0 else out


def dpstar(rt: ReactionTerm, u):
    """dP*/dU = (f + U f') / (2 P*)."""
    u = np.asarray(u, dtype=float)
    return (rt.f(u) + u * rt.df(u)) / (2.0 * pstar(rt, u))


def _rhs(rt, beta):
    def rhs(t, y):
        return [y[1], -beta * y[1] - float(rt.f(y[0]))]

    return rhs


def unstable_eigen(rt: ReactionTerm, beta: float) -> float:
    return 0.5 * (-beta + np.sqrt(beta**2 - 4.0 * float(rt.df(0.0))))


def stable_eigen(rt: ReactionTerm, beta: float) -> float:
    return 0.5 * (-beta - np.sqrt(beta**2 - 4.0 * float(rt.df(1.0))))


def _t_max(rt, beta):
    return 60.0 * (1.0 + abs(beta)) / min(unstable_eigen(rt, beta), -stable_eigen(rt, beta))


def integrate_unstable(rt, beta, events=(), t_max=None, dense=False):
    lam = unstable_eigen(rt, beta)
    y0 = [SEED_OFFSET, SEED_OFFSET * lam]
    return solve_ivp(
        _rhs(rt, beta), (0.0, t_max or _t_max(rt, beta)), y0, method="DOP853",
        rtol=RTOL, atol=ATOL, events=list(events), dense_output=dense,
    )


def integrate_stable(rt, beta, events=(), t_max=None, dense=False):
    """Stable manifold of (1, 0), traced backward in time."""
    lam = stable_eigen(rt, beta)
    y0 = [1.0 - SEED_OFFSET, -SEED_OFFSET * lam]
    return solve_ivp(
        _rhs(rt, beta), (0.0, -(t_max or _t_max(rt, beta))), y0, method="DOP853",
        rtol=RTOL, atol=ATOL, events=list(events), dense_output=dense,
    )


def _section(u0, direction):
    def ev(t, y):
        return y[0] - u0

    ev.terminal = True
    ev.direction = direction
    return ev


def _p_zero():
    def ev(t, y):
        return y[1]

    ev.terminal = True
    ev.direction = -1
    return ev


def manifold_gap(rt: ReactionTerm, beta: float) -> float:
    """P_unstable(u*) - P_stable(u*); decreasing in beta, zero at beta*."""
    su = integrate_unstable(rt, beta, events=[_section(rt.u_star, 1), _p_zero()])
    if len(su.t_events[0]):
        pu = su.y_events[0][0][1]
    else:
        # manifold fell into the node at (u*, 0) or turned back before u*
        pu = 0.0
    ss = integrate_stable(rt, beta, events=[_section(rt.u_star, -1)])
    if not len(ss.t_events[0]):
        raise ShootingFailed(f"stable manifold never reached u* at beta={beta}")
    ps = ss.y_events[0][0][1]
    return float(pu - ps)


def _shoot_min_speed(rt: ReactionTerm) -> float:
    # the gap is decreasing in beta: widen a bracket around 0 until it changes sign
    lo, hi = -0.5, 0.5
    g_lo, g_hi = manifold_gap(rt, lo), manifold_gap(rt, hi)
    while g_lo < 0.0 or g_hi > 0.0:
        if g_lo < 0.0:
            if lo <= BRACKET[0]:
                raise ShootingFailed("no sign change of the manifold gap in [-10, 10]")
            hi, g_hi = lo, g_lo
            lo = max(2.0 * lo, BRACKET[0])
            g_lo = manifold_gap(rt, lo)
        else:
            if hi >= BRACKET[1]:
                raise ShootingFailed("no sign change of the manifold gap in [-10, 10]")
            lo, g_lo = hi, g_hi
            hi = min(2.0 * hi, BRACKET[1])
            g_hi = manifold_gap(rt, hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    beta = brentq(lambda x: manifold_gap(rt, x), lo, hi, xtol=1e-13, rtol=1e-14)
    res = manifold_gap(rt, beta)
    if abs(res) > 1e-8:
        raise ShootingFailed(f"residual {res:.3e} at matching section exceeds 1e-8")
    return float(beta)


def min_speed(rt: ReactionTerm) -> float:
    """Speed of the unique uncontrolled heteroclinic front."""
    return rt.beta_star
