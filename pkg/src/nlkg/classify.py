"""Blowup / dispersive / indecisive verdicts for single evolutions.

The decision rule follows the monitored H1 x L2 norm on a fixed ball:
an evolution is declared blowup when that norm exceeds blowup_factor times
its initial value (or when the stepper itself fails: degenerate Newton
solve, non-finite value), dispersive when the norm stays below
disperse_factor times the initial value for a sustained run of monitor
events, and indecisive when the step cap is reached first. Indecisive data
are interpreted as lying very near the blowup/scattering boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .scheme import (EXPLICIT, IMPLICIT_SV, BlowupDetected, FieldState,
                     RadialGrid, RadialData, SolverConfig, init_levels,
                     step_explicit, step_implicit)


class Verdict(enum.Enum):
    BLOWUP = "BLOWUP"
    DISPERSIVE = "DISPERSIVE"
    INDECISIVE = "INDECISIVE"


class Trigger(enum.Enum):
    NORM_EXPLODED = "NORM_EXPLODED"
    NEWTON_DEGENERATE = "NEWTON_DEGENERATE"
    NONFINITE = "NONFINITE"
    NORM_SMALL_SUSTAINED = "NORM_SMALL_SUSTAINED"
    MAX_STEPS = "MAX_STEPS"


_BLOWUP_TRIGGERS = (Trigger.NORM_EXPLODED, Trigger.NEWTON_DEGENERATE,
                    Trigger.NONFINITE)


@dataclass(frozen=True)
class Classification:
    """Outcome of one evolution."""

    verdict: Verdict
    trigger: Trigger
    decision_time: float
    steps_taken: int
    peak_norm: float
    final_norm: float


@dataclass(frozen=True)
class ClassifierConfig:
    """Thresholds and cadence of the decision rule.

    max_steps of None means the solver's t_final sets the cap. The window
    counts consecutive monitor events (stride steps apart), so the
    small-norm condition must hold for sustain_window * monitor_stride
    time steps before a dispersive verdict.
    """

    r_monitor: float = 5.0
    blowup_factor: float = 1e5
    disperse_factor: float = 0.1
    sustain_window: int = 200
    monitor_stride: int = 10
    max_steps: Optional[int] = None

    def __post_init__(self):
        if not (self.blowup_factor > 1.0 > self.disperse_factor > 0.0):
            raise ValueError("need blowup_factor > 1 > disperse_factor > 0")
        if self.monitor_stride < 1 or self.sustain_window < 1:
            raise ValueError("monitor_stride and sustain_window must be >= 1")


def _ball_norm(v_prev: np.ndarray, v_curr: np.ndarray, grid: RadialGrid,
               m: int) -> float:
    """H1 x L2 norm of (u, u_t) on the ball r <= m*dr, u = v/r.

    u(0) is the limit v_1/dr, u_r a centered difference (one-sided at the
    endpoints of the monitored slice), u_t the two-level difference
    (v_curr - v_prev)/(dt*r).
    """
    dr, dt = grid.dr, grid.dt
    r = grid.r
    with np.errstate(over="ignore", invalid="ignore"):
        u = np.empty(m + 2)
        u[0] = v_curr[1] / dr
        u[1:] = v_curr[1:m + 2] / r[1:m + 2]
        ur = np.gradient(u, dr)[:m + 1]
        ut = np.empty(m + 1)
        ut[0] = (v_curr[1] - v_prev[1]) / (dt * dr)
        ut[1:] = (v_curr[1:m + 1] - v_prev[1:m + 1]) / (dt * r[1:m + 1])
        w = (ur ** 2 + u[:m + 1] ** 2 + ut ** 2) * r[:m + 1] ** 2
        total = 4.0 * np.pi * np.trapezoid(w, dx=dr)
        return float(np.sqrt(total))


def monitored_norm(state: FieldState, r_monitor: float) -> float:
    """Monitored norm of a state on the ball of radius r_monitor."""
    grid = state.grid
    m = int(round(r_monitor / grid.dr))
    if m + 2 > grid.n_points:
        raise ValueError("r_monitor exceeds the grid extent")
    return _ball_norm(state.v_prev, state.v_curr, grid, m)


def field_u(state: FieldState) -> np.ndarray:
    """Current field u = v/r on the full grid, with the origin limit v_1/dr."""
    grid = state.grid
    u = np.empty(grid.n_points)
    u[0] = state.v_curr[1] / grid.dr
    u[1:] = state.v_curr[1:] / grid.r[1:]
    return u


def ball_h1_seminorm(field: np.ndarray, grid: RadialGrid, r_ball: float) -> float:
    """Position-only H1 seminorm sqrt(4 pi int (f_r^2 + f^2) r^2 dr) on a ball."""
    m = int(round(r_ball / grid.dr))
    fr = np.gradient(field[:m + 2], grid.dr)[:m + 1]
    w = (fr ** 2 + field[:m + 1] ** 2) * grid.r[:m + 1] ** 2
    return float(np.sqrt(4.0 * np.pi * np.trapezoid(w, dx=grid.dr)))


MonitorHook = Callable[[float, FieldState, float], None]


def classify_evolution(u0: RadialData, u1: RadialData,
                       solver_cfg: SolverConfig | None = None,
                       classifier_cfg: ClassifierConfig | None = None,
                       *, grid: RadialGrid | None = None,
                       monitor_hook: MonitorHook | None = None) -> Classification:
    """Evolve the data and return the verdict.

    The initial norm N0 is recorded from the first two levels; every
    monitor_stride steps the ball norm is re-evaluated. Identically zero
    data short-circuit to DISPERSIVE at t = 0. A monitor_hook, when given,
    is called as hook(t, state, norm) at every monitor event; the state it
    receives is only valid during the call (buffers are recycled).
    """
    scfg = solver_cfg or SolverConfig()
    ccfg = classifier_cfg or ClassifierConfig()
    if grid is None:
        grid = scfg.make_grid()
    elif abs(grid.dr - scfg.dr) > 1e-15 * scfg.dr or grid.cfl_ratio != scfg.cfl_ratio:
        raise ValueError("grid spacing does not match the solver config")
    if ccfg.r_monitor > scfg.r_interest:
        raise ValueError("r_monitor must not exceed r_interest")

    m = int(round(ccfg.r_monitor / grid.dr))
    dt = grid.dt
    n_cap = scfg.max_steps if ccfg.max_steps is None \
        else min(ccfg.max_steps, scfg.max_steps)

    state = init_levels(u0, u1, grid)
    n0 = _ball_norm(state.v_prev, state.v_curr, grid, m)
    if monitor_hook is not None:
        monitor_hook(0.0, state, n0)
    if n0 == 0.0:
        if state.v_prev.any() or state.v_curr.any():
            raise ValueError("initial data vanish on the monitored ball but "
                             "not elsewhere; relative thresholds are undefined")
        return Classification(verdict=Verdict.DISPERSIVE,
                              trigger=Trigger.NORM_SMALL_SUSTAINED,
                              decision_time=0.0, steps_taken=0,
                              peak_norm=0.0, final_norm=0.0)

    blow_at = ccfg.blowup_factor * n0
    small_at = ccfg.disperse_factor * n0
    peak = n0
    last = n0
    low_run = 0
    spare = np.empty_like(state.v_curr)
    implicit = scfg.scheme == IMPLICIT_SV

    def result(verdict, trigger, steps):
        return Classification(verdict=verdict, trigger=trigger,
                              decision_time=steps * dt, steps_taken=steps,
                              peak_norm=peak, final_norm=last)

    try:
        while state.step_index < n_cap:
            # recycle the retiring level's buffer as the step output
            out = spare
            spare = state.v_prev
            if implicit:
                state = step_implicit(state, scfg, out=out)
            else:
                state = step_explicit(state, nonlinear=scfg.nonlinear, out=out)
            if state.step_index % ccfg.monitor_stride == 0 \
                    or state.step_index >= n_cap:
                norm = _ball_norm(state.v_prev, state.v_curr, grid, m)
                if monitor_hook is not None:
                    monitor_hook(state.time, state, norm)
                if not np.isfinite(norm):
                    return result(Verdict.BLOWUP, Trigger.NONFINITE,
                                  state.step_index)
                last = norm
                if norm > peak:
                    peak = norm
                if norm > blow_at:
                    return result(Verdict.BLOWUP, Trigger.NORM_EXPLODED,
                                  state.step_index)
                if norm < small_at:
                    low_run += 1
                    if low_run >= ccfg.sustain_window:
                        return result(Verdict.DISPERSIVE,
                                      Trigger.NORM_SMALL_SUSTAINED,
                                      state.step_index)
                else:
                    low_run = 0
    except BlowupDetected as sig:
        trigger = Trigger.NONFINITE if sig.trigger == "NONFINITE" \
            else Trigger.NEWTON_DEGENERATE
        return result(Verdict.BLOWUP, trigger, sig.step_index)

    return result(Verdict.INDECISIVE, Trigger.MAX_STEPS, n_cap)
