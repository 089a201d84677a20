"""Boundary refinement between a blowup point and a dispersive point.

Bisecting the parameter segment joining two opposite-verdict points tracks
the blowup/scattering boundary to (near) machine precision; data that deep
in the bracket evolve metastably, hugging +Q or -Q for a long transient
before the final decision ("quasinormal ringing"). The ringing trace
records that transient as the distance of the evolving field to the pair
{+Q, -Q} in a position-only ball seminorm (the velocity term is dropped:
boundary solutions shed radiation, so only the position approach to the
solitons is meaningful).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .classify import (ClassifierConfig, Verdict, ball_h1_seminorm,
                       classify_evolution, field_u)
from .groundstate import GroundState, compute_ground_state
from .scheme import RadialGrid, SolverConfig
from .sweep import _ResolvedFamily, resolve_family, sample_data

Point = tuple[float, float]


@dataclass(frozen=True)
class BisectionStep:
    point: Point
    verdict: Verdict
    decision_time: float


@dataclass(frozen=True)
class BisectionTrace:
    """Full record of one bisection run.

    endpoints holds the verified (blowup, dispersive) input points;
    midpoints the tested midpoints in order. The bracket sequence can be
    replayed from those: a BLOWUP midpoint replaces the blowup endpoint,
    a DISPERSIVE one the dispersive endpoint, an INDECISIVE one ends the
    run. ringing is filled by ringing_trace when requested.
    """

    endpoints: tuple
    midpoints: tuple
    final_width: float
    ringing: Optional[np.ndarray] = None

    def replay_brackets(self):
        """Brackets (p_blow, p_disp) after each accepted step."""
        pb, pd = self.endpoints
        out = [(pb, pd)]
        for step in self.midpoints:
            if step.verdict is Verdict.BLOWUP:
                pb = step.point
            elif step.verdict is Verdict.DISPERSIVE:
                pd = step.point
            else:
                break
            out.append((pb, pd))
        return out


def _dist(p: Point, q: Point) -> float:
    return float(np.hypot(p[0] - q[0], p[1] - q[1]))


class _Runner:
    """Shared setup for bisection and ringing runs on one family."""

    def __init__(self, family, solver_cfg: SolverConfig,
                 classifier_cfg: ClassifierConfig, c: Optional[float],
                 ground: Optional[GroundState], ground_tol: float,
                 headroom: float = 2.0):
        self.fam: _ResolvedFamily = family if isinstance(family, _ResolvedFamily) \
            else resolve_family(family)
        # size the grid for the doubled indecisive-retry horizon up front,
        # so retries stay causally insulated from the outer boundary
        self.base_steps = solver_cfg.max_steps
        sized = replace(solver_cfg, t_final=headroom * solver_cfg.t_final)
        self.solver = sized
        self.grid: RadialGrid = sized.make_grid()
        self.classifier = classifier_cfg
        self.c = 0.0 if c is None else c
        self.ground = ground if ground is not None \
            else compute_ground_state(ground_tol, self.grid)

    def classify(self, point: Point, max_steps: int, hook=None):
        u0, u1 = sample_data(self.fam, self.grid, self.ground.profile,
                             point[0], point[1], self.c)
        ccfg = replace(self.classifier, max_steps=max_steps)
        return classify_evolution(u0, u1, self.solver, ccfg, grid=self.grid,
                                  monitor_hook=hook)


def bisect_boundary(p_blow: Point, p_disp: Point, family,
                    solver_cfg: SolverConfig | None = None,
                    classifier_cfg: ClassifierConfig | None = None,
                    *, precision: float = 0.0, max_iter: int = 52,
                    c: Optional[float] = None,
                    ground: Optional[GroundState] = None,
                    ground_tol: float = 1e-12) -> BisectionTrace:
    """Bisect the segment [p_blow, p_disp] down to `precision`.

    Endpoint verdicts are verified first (a mismatch is an input error
    naming the offending endpoint). Indecisive midpoints are retried once
    with a doubled step cap; a midpoint indecisive even then is recorded
    and ends the refinement (the point sits on the boundary at the
    resolution this run can reach).
    """
    scfg = solver_cfg or SolverConfig()
    ccfg = classifier_cfg or ClassifierConfig()
    run = _Runner(family, scfg, ccfg, c, ground, ground_tol)
    base = run.base_steps if ccfg.max_steps is None \
        else min(ccfg.max_steps, run.base_steps)

    cb = run.classify(p_blow, base)
    if cb.verdict is not Verdict.BLOWUP:
        raise ValueError(f"endpoint {p_blow} expected BLOWUP, "
                         f"classified {cb.verdict.value}")
    cd = run.classify(p_disp, base)
    if cd.verdict is not Verdict.DISPERSIVE:
        raise ValueError(f"endpoint {p_disp} expected DISPERSIVE, "
                         f"classified {cd.verdict.value}")

    endpoints = (p_blow, p_disp)
    steps: list[BisectionStep] = []
    pb, pd = p_blow, p_disp
    for _ in range(max_iter):
        width = _dist(pb, pd)
        if width <= precision:
            break
        mid = (0.5 * (pb[0] + pd[0]), 0.5 * (pb[1] + pd[1]))
        cls = run.classify(mid, base)
        if cls.verdict is Verdict.INDECISIVE:
            cls = run.classify(mid, 2 * base)
        steps.append(BisectionStep(point=mid, verdict=cls.verdict,
                                   decision_time=cls.decision_time))
        if cls.verdict is Verdict.BLOWUP:
            pb = mid
        elif cls.verdict is Verdict.DISPERSIVE:
            pd = mid
        else:
            break  # on-boundary at this run's resolution
    return BisectionTrace(endpoints=endpoints, midpoints=tuple(steps),
                          final_width=_dist(pb, pd))


def ringing_trace(point: Point, family,
                  solver_cfg: SolverConfig | None = None,
                  classifier_cfg: ClassifierConfig | None = None,
                  *, r_probe: float = 0.0, c: Optional[float] = None,
                  ground: Optional[GroundState] = None,
                  ground_tol: float = 1e-12,
                  max_steps: Optional[int] = None) -> np.ndarray:
    """Metastability observables along one evolution.

    Returns rows (t, u(t, r_probe), min(||u - Q||, ||u + Q||)) at every
    monitor event, in the position-only seminorm on the monitored ball;
    runs to the step cap or the verdict, whichever comes first. r_probe
    defaults to the origin, where the soliton amplitude peaks.
    """
    scfg = solver_cfg or SolverConfig()
    ccfg = classifier_cfg or ClassifierConfig()
    run = _Runner(family, scfg, ccfg, c, ground, ground_tol, headroom=1.0)
    base = max_steps if max_steps is not None else run.base_steps
    if ccfg.max_steps is not None:
        base = min(base, ccfg.max_steps)

    grid = run.grid
    jp = int(round(r_probe / grid.dr))
    qp = run.ground.profile
    r_ball = ccfg.r_monitor
    rows: list[tuple] = []

    def hook(t, state, norm):
        u = field_u(state)
        probe = u[jp] if jp > 0 else state.v_curr[1] / grid.dr
        d = min(ball_h1_seminorm(u - qp, grid, r_ball),
                ball_h1_seminorm(u + qp, grid, r_ball))
        rows.append((t, probe, d))

    run.classify(point, base, hook=hook)
    return np.array(rows)
