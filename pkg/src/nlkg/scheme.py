"""Finite-difference time stepping for the reduced radial field.

The 3D radial equation u_tt - u_rr - (2/r) u_r + u = u^3 becomes, with
v(t,r) = r*u(t,r),

    v_tt - v_rr + v = v^3 / r^2,

a 1D wave equation with a 1/r^2 weight on the cubic term. Two schemes are
provided, both second order:

  * an implicit scheme whose nonlinear term is the difference quotient
    (G(v_new) - G(v_old)) / (v_new - v_old) with G(v) = -v^4/4, solved
    pointwise by Newton iteration; it conserves a discrete energy exactly;
  * an explicit leapfrog-style scheme, cheaper per step, which conserves
    the same discrete energy only approximately.

Both hold v = 0 at the origin and at the outermost grid point; runs are
meant to use a grid enlarged to radius R + T so that the rectangle of
interest (0,T) x (0,R) is causally insulated from the outer boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from ._kernels import explicit_kernel, implicit_kernel, warm_up

RadialData = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]

__all__ = [
    "RadialGrid", "FieldState", "SolverConfig", "BlowupDetected",
    "IMPLICIT_SV", "EXPLICIT", "init_levels", "step_explicit",
    "step_implicit", "step", "discrete_energy", "warm_up",
]


class BlowupDetected(Exception):
    """Raised by the steppers when an evolution leaves the computable regime.

    Attributes:
        step_index: time level at which the signal fired.
        j: grid index of the offending entry (-1 if not localized).
        trigger: 'NONFINITE' or 'NEWTON_DEGENERATE'.
        detail: free-text diagnostic (derivative floor, non-convergence,
            amplitude pre-check, ...).
    """

    def __init__(self, step_index: int, j: int, trigger: str, detail: str = ""):
        super().__init__(f"blowup at step {step_index}, j={j}: {trigger} {detail}")
        self.step_index = step_index
        self.j = j
        self.trigger = trigger
        self.detail = detail


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial mesh r_j = j*dr with a fixed time step ratio.

    The first grid point r_0 = 0 carries the boundary value v = 0; the time
    step is dt = cfl_ratio * dr with cfl_ratio < 1 so the numerical domain
    of dependence contains the physical one.
    """

    dr: float
    n_points: int
    cfl_ratio: float = 0.9

    def __post_init__(self):
        if not 0 < self.cfl_ratio < 1:
            raise ValueError(f"cfl_ratio must be in (0,1), got {self.cfl_ratio}")
        if self.dr <= 0 or self.n_points < 3:
            raise ValueError("need dr > 0 and at least 3 grid points")

    @property
    def dt(self) -> float:
        return self.cfl_ratio * self.dr

    @property
    def r_extent(self) -> float:
        return self.n_points * self.dr

    @cached_property
    def r(self) -> np.ndarray:
        rr = np.arange(self.n_points) * self.dr
        rr.flags.writeable = False
        return rr

    @cached_property
    def _inv_r2_interior(self) -> np.ndarray:
        w = 1.0 / self.r[1:-1] ** 2
        w.flags.writeable = False
        return w

    @classmethod
    def for_domain(cls, dr: float, r_extent: float, cfl_ratio: float = 0.9) -> "RadialGrid":
        return cls(dr=dr, n_points=int(round(r_extent / dr)) + 1, cfl_ratio=cfl_ratio)


@dataclass(frozen=True)
class FieldState:
    """Two consecutive time levels of the reduced field v = r*u.

    v_prev is level n-1 and v_curr level n; step_index is n. All entries
    are finite by construction: a non-finite value is a detected blowup and
    never stored.
    """

    v_prev: np.ndarray
    v_curr: np.ndarray
    step_index: int
    grid: RadialGrid

    @property
    def time(self) -> float:
        return self.step_index * self.grid.dt


IMPLICIT_SV = "sv"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class SolverConfig:
    """Evolution parameters shared by the classify/sweep/bisect layers.

    The grid extends to r_interest + t_final (the smallest rectangle
    containing the domain of dependence of (0,t_final) x (0,r_interest)).
    """

    scheme: str = IMPLICIT_SV
    dr: float = 1e-2
    cfl_ratio: float = 0.9
    t_final: float = 60.0
    r_interest: float = 5.0
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    nonlinear: bool = True

    def __post_init__(self):
        if self.scheme not in (IMPLICIT_SV, EXPLICIT):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.newton_tol <= 0 or self.t_final <= 0:
            raise ValueError("newton_tol and t_final must be positive")

    def make_grid(self) -> RadialGrid:
        return RadialGrid.for_domain(self.dr, self.r_interest + self.t_final,
                                     self.cfl_ratio)

    @property
    def dt(self) -> float:
        return self.cfl_ratio * self.dr

    @property
    def max_steps(self) -> int:
        return int(np.floor(self.t_final / self.dt + 1e-9))


def _sample(data: RadialData, grid: RadialGrid, label: str) -> np.ndarray:
    vals = np.asarray(data(grid.r) if callable(data) else data, dtype=float)
    if vals.shape != grid.r.shape:
        raise ValueError(f"{label} has shape {vals.shape}, grid needs {grid.r.shape}")
    bad = ~np.isfinite(vals)
    if bad.any():
        j = int(np.argmax(bad))
        raise ValueError(f"{label} is not finite at r = {grid.r[j]}")
    return vals


def init_levels(u0: RadialData, u1: RadialData, grid: RadialGrid,
                dt: float | None = None) -> FieldState:
    """Build the first two time levels from the data (u0, u1).

    v^0 = r*u0 and v^1 is the second-order Taylor start
    v^0 + dt*r*u1 + (dt^2/2) [v_rr - v + v^3/r^2] evaluated on v^0 with a
    centered second difference; origin and outermost entries are held at 0.
    """
    if dt is None:
        dt = grid.dt
    u0v = _sample(u0, grid, "u0")
    u1v = _sample(u1, grid, "u1")
    r = grid.r
    v0 = r * u0v
    v0[0] = 0.0
    v0[-1] = 0.0

    dr2 = grid.dr ** 2
    accel = np.zeros_like(v0)
    accel[1:-1] = (v0[2:] - 2.0 * v0[1:-1] + v0[:-2]) / dr2 - v0[1:-1] \
        + v0[1:-1] ** 3 * grid._inv_r2_interior
    v1 = v0 + dt * r * u1v + 0.5 * dt * dt * accel
    v1[0] = 0.0
    v1[-1] = 0.0
    return FieldState(v_prev=v0, v_curr=v1, step_index=1, grid=grid)


def _check_finite(v_new: np.ndarray, step_index: int) -> None:
    finite = np.isfinite(v_new)
    if not finite.all():
        raise BlowupDetected(step_index, int(np.argmin(finite)), "NONFINITE")


_IMPLICIT_FAILURES = {
    1: "Newton derivative below floor",
    2: "Newton did not converge within the iteration cap",
    3: "Newton iterate out of range",
    4: "amplitude pre-check max|u|*dr > 1",
}


def step_explicit(state: FieldState, *, nonlinear: bool = True,
                  out: np.ndarray | None = None) -> FieldState:
    """Advance one time level with the explicit second-order scheme.

    v^{n+1}_j = 2 v^n_j - v^{n-1}_j + dt^2 [ D2 v^n - v^n + (v^n)^3/r^2 ]_j
    on the interior; origin and outermost entries stay 0.
    """
    g = state.grid
    v_new = np.empty_like(state.v_curr) if out is None else out
    explicit_kernel(state.v_curr, state.v_prev, v_new, g.dr, g.dt, nonlinear)
    n = state.step_index + 1
    _check_finite(v_new, n)
    return FieldState(v_prev=state.v_curr, v_curr=v_new, step_index=n, grid=g)


def step_implicit(state: FieldState, cfg: SolverConfig,
                  out: np.ndarray | None = None) -> FieldState:
    """Advance one time level with the implicit energy-conserving scheme.

    Each interior unknown x = v^{n+1}_j solves the scalar equation

        x/dt^2 + (x + a)/2 - (x + a)(x^2 + a^2)/(4 r_j^2) + (known terms) = 0,

    a = v^{n-1}_j, by Newton iteration started from the explicit predictor
    (every later occurrence of x replaced by v^n_j); the solves for
    different j are independent. Degenerate or non-convergent solves raise
    BlowupDetected: degeneracy requires max|v|/r * dr > 1, which is also
    checked before each step and short-circuits to the same signal.
    """
    g = state.grid
    v_new = np.empty_like(state.v_curr) if out is None else out
    status, j = implicit_kernel(state.v_curr, state.v_prev, v_new, g.dr, g.dt,
                                cfg.newton_tol, cfg.newton_max_iter,
                                cfg.nonlinear)
    n = state.step_index + 1
    if status:
        raise BlowupDetected(n, j, "NEWTON_DEGENERATE", _IMPLICIT_FAILURES[status])
    _check_finite(v_new, n)
    return FieldState(v_prev=state.v_curr, v_curr=v_new, step_index=n, grid=g)


def step(state: FieldState, cfg: SolverConfig) -> FieldState:
    if cfg.scheme == IMPLICIT_SV:
        return step_implicit(state, cfg)
    return step_explicit(state, nonlinear=cfg.nonlinear)


def discrete_energy(state: FieldState, *, nonlinear: bool = True) -> float:
    """Energy of the level pair (v^n, v^{n+1}) held by the state.

    E = dr * [ (1/2) sum ((v^{n+1}-v^n)/dt)^2
             + (1/2) sum D(v^{n+1}) D(v^n)            (D = forward difference)
             + (1/2) sum ((v^{n+1})^2 + (v^n)^2)/2
             -       sum ((v^{n+1})^4 + (v^n)^4)/(8 r_j^2) ],

    the quantity the implicit scheme conserves exactly; the j = 0 term of
    the quartic sum is omitted (v_0 = 0).
    """
    g = state.grid
    vn, vm = state.v_curr, state.v_prev  # levels n+1 and n
    dt, dr = g.dt, g.dr
    kinetic = 0.5 * np.sum(((vn - vm) / dt) ** 2)
    gradient = 0.5 * np.sum((vn[1:] - vn[:-1]) * (vm[1:] - vm[:-1])) / dr ** 2
    mass = 0.25 * np.sum(vn ** 2 + vm ** 2)
    total = kinetic + gradient + mass
    if nonlinear:
        r2 = g.r[1:] ** 2
        total -= np.sum((vn[1:] ** 4 + vm[1:] ** 4) / (8.0 * r2))
    return dr * float(total)
