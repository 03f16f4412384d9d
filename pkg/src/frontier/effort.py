"""Effort functions: minimal control cost per unit front length as a function of speed."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ComputeError, DegenerateNode
from .phase import optimal_path, path_cost
from .reaction import ReactionTerm, validate_reaction

CONVEX_TOL = 1e-9
ZERO_SPEED_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EffortTable:
    """Tabulated effort E(beta) with monotone piecewise linear interpolation.

    Parameters
    ----------
    betas, values
        Strictly increasing speed grid and the effort at each node.
    attained
        False where the infimum comes from a split (two-profile) front.
    beta_star
        Speed reachable for free; E vanishes at and below it.
    basic
        If True the table is the analytic ``max(0, 1 + beta)`` and the grid
        is only used for export.
    """

    betas: np.ndarray
    values: np.ndarray
    attained: np.ndarray
    beta_star: float
    basic: bool = False

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        a = np.asarray(self.attained, dtype=bool)
        if b.ndim != 1 or b.shape != v.shape or a.shape != b.shape or len(b) == 0:
            raise ValueError("betas, values and attained must be 1-d of equal length")
        if np.any(np.diff(b) <= 0):
            raise ValueError("speed grid must be strictly increasing")
        for arr in (b, v, a):
            arr.setflags(write=False)
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "attained", a)

    @classmethod
    def basic_table(cls, betas=None) -> "EffortTable":
        if betas is None:
            betas = np.linspace(-1.0, 4.0, 51)
        betas = np.asarray(betas, dtype=float)
        return cls(betas, np.maximum(0.0, 1.0 + betas), np.ones(len(betas), bool), -1.0, basic=True)

    # -- evaluation -------------------------------------------------------

    def __call__(self, beta):
        beta = np.asarray(beta, dtype=float)
        if self.basic:
            return np.maximum(0.0, 1.0 + beta)
        b, v = self.betas, self.values
        if len(b) == 1:
            return np.where(beta <= b[0], 0.0, np.nan)
        out = np.interp(beta, b, v)
        hi = beta > b[-1]
        if np.any(hi):
            slope = (v[-1] - v[-2]) / (b[-1] - b[-2])
            out = np.where(hi, v[-1] + slope * (beta - b[-1]), out)
        return np.where(beta <= self.beta_star, 0.0, out)

    def derivative(self, beta, side: str = "right"):
        """One-sided derivative of the interpolant (right derivative by default)."""
        beta = np.asarray(beta, dtype=float)
        if self.basic:
            return np.where(beta > -1.0 if side == "left" else beta >= -1.0, 1.0, 0.0)
        b, v = self.betas, self.values
        if len(b) == 1:
            return np.zeros_like(beta)
        slopes = np.diff(v) / np.diff(b)
        if side == "right":
            k = np.searchsorted(b, beta, side="right") - 1
        else:
            k = np.searchsorted(b, beta, side="left") - 1
        k = np.clip(k, 0, len(slopes) - 1)
        d = slopes[k]
        below = beta < self.beta_star if side == "right" else beta <= self.beta_star
        return np.where(below, 0.0, d)

    # -- invariants -------------------------------------------------------

    def violations(self, tol: float = CONVEX_TOL) -> list[str]:
        """Human-readable list of broken invariants (empty when the table is sound)."""
        b, v = self.betas, self.values
        out = []
        if np.any(v < -tol):
            out.append("negative effort")
        if np.any(np.abs(v[b <= self.beta_star]) > tol):
            out.append("nonzero effort at or below beta*")
        if len(b) < 2:
            return out
        if np.any(np.diff(v) < -tol):
            out.append("effort decreases")
        slopes = np.diff(v) / np.diff(b)
        if np.any(np.diff(slopes) < -tol):
            out.append("effort is not convex on the grid")
        # E - beta E' >= 0 with E' replaced by the left secant slope
        sec = v[1:] - b[1:] * slopes
        if np.any(sec[b[1:] > 0] < -tol):
            out.append("E(beta) - beta E'(beta) < 0 for some beta > 0")
        e1 = float(self(1.0))
        big = b >= 1.0
        if b[-1] >= 1.0 and np.any(v[big] > b[big] * e1 + tol):
            out.append("E(beta) > beta E(1) for some beta >= 1")
        return out

    def check(self, tol: float = CONVEX_TOL) -> "EffortTable":
        bad = self.violations(tol)
        if bad:
            raise ComputeError("effort table invariants fail: " + "; ".join(bad))
        return self

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("beta,effort,attained_flag\n")
            for b, e, a in zip(self.betas, self.values, self.attained):
                fh.write(f"{b:.12g},{e:.12g},{int(a)}\n")


def chebyshev_grid(lo: float, hi: float, n: int = 64) -> np.ndarray:
    """Chebyshev-Lobatto points on [lo, hi], increasing."""
    k = np.arange(n)
    return lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * k / max(n - 1, 1)))


def effort_at(rt: ReactionTerm, beta: float) -> tuple[float, bool]:
    """Minimal cost for speed ``beta`` and whether a single profile attains it."""
    if beta <= rt.beta_star + ZERO_SPEED_TOL:
        return 0.0, True
    try:
        return path_cost(optimal_path(rt, beta), rt, beta), True
    except DegenerateNode:
        path = optimal_path(rt, beta, allow_split=True)
        return path_cost(path, rt, beta), False


def effort_function(rt: ReactionTerm, grid=None) -> EffortTable:
    """Tabulate E(beta) = cost of the optimal phase-plane path on ``grid``.

    The structural invariants are not enforced here; inspect
    ``table.violations()`` or call ``table.check()``.
    """
    bs = rt.beta_star
    if grid is None:
        grid = chebyshev_grid(bs, bs + 4.0)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < bs - ZERO_SPEED_TOL):
        raise ComputeError(f"grid speeds must be >= beta* = {bs:.10g}")
    vals, att = zip(*(effort_at(rt, float(b)) for b in grid))
    return EffortTable(grid, np.array(vals), np.array(att), bs)


class EffortEstimator(BaseEstimator):
    """Estimator wrapper: ``fit`` tabulates the effort, ``predict`` interpolates it.

    Parameters
    ----------
    reaction : dict
        Reaction description, e.g. ``{"kind": "cubic", "a": 0.3}``, or
        ``{"kind": "basic"}`` for the analytic ``max(0, 1 + beta)``.
    n_grid : int
        Number of Chebyshev nodes when ``fit`` is called without speeds.
    span : float
        Width of the default grid above beta*.
    """

    def __init__(self, reaction=None, n_grid: int = 64, span: float = 4.0):
        self.reaction = reaction
        self.n_grid = n_grid
        self.span = span

    def fit(self, X=None, y=None):
        spec = self.reaction or {"kind": "basic"}
        if X is not None:
            grid = np.sort(check_array(X, ensure_2d=False).ravel())
        else:
            grid = None
        if spec.get("kind") == "basic":
            self.table_ = EffortTable.basic_table(grid)
            self.beta_star_ = -1.0
        else:
            rt = validate_reaction(spec)
            self.beta_star_ = rt.beta_star
            if grid is None:
                grid = chebyshev_grid(rt.beta_star, rt.beta_star + self.span, self.n_grid)
            self.table_ = effort_function(rt, grid)
        return self

    def predict(self, X):
        check_is_fitted(self, "table_")
        x = check_array(X, ensure_2d=False).ravel()
        return np.asarray(self.table_(x), dtype=float)

    def derivative(self, X, side: str = "right"):
        check_is_fitted(self, "table_")
        x = check_array(X, ensure_2d=False).ravel()
        return np.asarray(self.table_.derivative(x, side), dtype=float)
