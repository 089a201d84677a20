"""Ground state of -Lap(Q) + Q = Q^3 and the static functionals.

Q is the unique positive radial solution; it organizes the blowup/scattering
dichotomy through the Payne-Sattinger regions

    PS+ = { E(u0,u1) < J(Q), K(u0) >= 0 }   (global existence),
    PS- = { E(u0,u1) < J(Q), K(u0) <  0 }   (finite-time blowup),

where J is the static energy and K the scaling functional. Q is computed by
shooting on Q'' + (2/r) Q' = Q - Q^3: the central amplitude b = Q(0) is
bisected between profiles that cross zero and profiles that turn back up,
on the same grid the profile is later used on (the discrete critical
amplitude differs from the continuum one by the integrator's truncation
error, so reusing a fine-grid b on a coarse grid corrupts the tail).
Beyond the shooting range the profile is extended by the known asymptotic
decay c * exp(-r)/r matched at the splice radius.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .scheme import RadialGrid

# shooting is reliable well past the splice point; the tail replaces the
# exponentially unstable piece actually used in quadrature
SHOOT_RMAX = 20.0
SPLICE_RADIUS = 15.0
BRACKET_SCAN = [0.5 * k for k in range(1, 21)]  # b = 0.5, 1.0, ..., 10.0


class ShotOutcome(enum.Enum):
    CROSSES_ZERO = "CROSSES_ZERO"
    TURNS_UP = "TURNS_UP"
    PROFILE = "PROFILE"


@dataclass(frozen=True)
class ShotResult:
    outcome: ShotOutcome
    r_stop: float
    nonfinite: bool = False


@dataclass(frozen=True)
class GroundState:
    """Sampled ground-state profile on a RadialGrid."""

    profile: np.ndarray
    central_value: float
    energy_J: float
    grid: RadialGrid


class PsRegion(enum.Enum):
    PS_PLUS = "PS_PLUS"
    PS_MINUS = "PS_MINUS"
    ABOVE_THRESHOLD = "ABOVE_THRESHOLD"


@dataclass(frozen=True)
class PsMembership:
    energy: float
    j_of_q: float
    k_of_u0: float
    region: PsRegion


def _rk4_shot(b: float, dr: float, r_max: float, profile: np.ndarray | None = None):
    """Integrate outward from the series start at r = dr.

    Returns (outcome, r, nonfinite). When `profile` is given, stores Q at
    every grid radius reached and never stops early (used after bisection).
    """
    q = b + (b - b ** 3) * dr * dr / 6.0
    p = (b - b ** 3) * dr / 3.0
    r = dr
    record = profile is not None
    if record:
        profile[0] = b
        profile[1] = q
    elif q <= 0.0:
        return ShotOutcome.CROSSES_ZERO, r, False
    elif p >= 0.0:
        return ShotOutcome.TURNS_UP, r, False

    n_steps = int(round(r_max / dr)) - 1
    half = 0.5 * dr
    sixth = dr / 6.0
    for i in range(n_steps):
        k1q = p
        k1p = q - q * q * q - 2.0 * p / r
        q2 = q + half * k1q
        p2 = p + half * k1p
        rm = r + half
        k2q = p2
        k2p = q2 - q2 * q2 * q2 - 2.0 * p2 / rm
        q3 = q + half * k2q
        p3 = p + half * k2p
        k3q = p3
        k3p = q3 - q3 * q3 * q3 - 2.0 * p3 / rm
        q4 = q + dr * k3q
        p4 = p + dr * k3p
        rn = r + dr
        k4q = p4
        k4p = q4 - q4 * q4 * q4 - 2.0 * p4 / rn
        q += sixth * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        p += sixth * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        r = rn
        if record:
            profile[i + 2] = q
            continue
        if not (math.isfinite(q) and math.isfinite(p)):
            return ShotOutcome.CROSSES_ZERO, r, True
        if q <= 0.0:
            return ShotOutcome.CROSSES_ZERO, r, False
        if p >= 0.0:
            return ShotOutcome.TURNS_UP, r, False
    return ShotOutcome.PROFILE, r, False


def shoot(b: float, grid: RadialGrid, r_max: float | None = None) -> ShotResult:
    """Classify the trajectory with central amplitude b = Q(0).

    CROSSES_ZERO: Q hits zero before r_max (amplitude too large, or a
    non-finite escape, flagged); TURNS_UP: Q' reaches zero from below while
    Q > 0 (amplitude too small); PROFILE: neither happens before r_max.
    """
    if b <= 0:
        raise ValueError("central amplitude must be positive")
    if r_max is None:
        r_max = min(grid.r_extent, SHOOT_RMAX)
    if r_max < SPLICE_RADIUS:
        raise ValueError(f"grid must extend to at least r = {SPLICE_RADIUS}")
    outcome, r_stop, nonfinite = _rk4_shot(b, grid.dr, r_max)
    return ShotResult(outcome=outcome, r_stop=r_stop, nonfinite=nonfinite)


def compute_ground_state(tol: float, grid: RadialGrid) -> GroundState:
    """Bisect the central amplitude on this grid and return the profile.

    The bracket is found by scanning b = 0.5, 1.0, ..., 10.0 for the first
    crossing; bisection stops when the bracket width drops below tol. The
    returned profile is the shot at the bracket midpoint up to the splice
    radius and c*exp(-r)/r beyond it.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r_max = min(grid.r_extent, SHOOT_RMAX)
    if r_max < SPLICE_RADIUS:
        raise ValueError(f"grid must extend to at least r = {SPLICE_RADIUS}")

    lo = None
    hi = None
    for b in BRACKET_SCAN:
        out = _rk4_shot(b, grid.dr, r_max)[0]
        if out is ShotOutcome.CROSSES_ZERO:
            if lo is None:
                raise ValueError("no shooting bracket found in b <= 10 scan")
            hi = b
            break
        lo = b
    if hi is None:
        raise ValueError("no shooting bracket found in b <= 10 scan")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket at floating-point resolution
            break
        if _rk4_shot(mid, grid.dr, r_max)[0] is ShotOutcome.CROSSES_ZERO:
            hi = mid
        else:
            lo = mid
    b_star = 0.5 * (lo + hi)

    n_shot = int(round(r_max / grid.dr)) + 1
    profile = np.empty(grid.n_points)
    _rk4_shot(b_star, grid.dr, r_max, profile=profile[:n_shot])

    js = int(round(SPLICE_RADIUS / grid.dr))
    r = grid.r
    c = profile[js] * r[js] * math.exp(r[js])
    profile[js + 1:] = c * np.exp(-r[js + 1:]) / r[js + 1:]

    if not (profile > 0).all():
        raise RuntimeError("ground-state profile not positive; grid too coarse")
    if not (np.diff(profile) <= 0).all():
        raise RuntimeError("ground-state profile not monotone; grid too coarse")

    return GroundState(profile=profile, central_value=b_star,
                       energy_J=functional_J(profile, grid), grid=grid)


def radial_quadrature(values: np.ndarray, grid: RadialGrid) -> float:
    """4*pi * integral of values(r) r^2 dr by composite trapezoid."""
    return 4.0 * math.pi * float(np.trapezoid(values * grid.r ** 2, dx=grid.dr))


def functional_J(phi: np.ndarray, grid: RadialGrid) -> float:
    """Static energy: integral of (1/2)(|grad phi|^2 + phi^2) - (1/4) phi^4."""
    dphi = np.gradient(phi, grid.dr)
    return radial_quadrature(0.5 * (dphi ** 2 + phi ** 2) - 0.25 * phi ** 4, grid)


def functional_K(phi: np.ndarray, grid: RadialGrid) -> float:
    """Scaling functional: integral of |grad phi|^2 + phi^2 - phi^4."""
    dphi = np.gradient(phi, grid.dr)
    return radial_quadrature(dphi ** 2 + phi ** 2 - phi ** 4, grid)


def functional_E(u0: np.ndarray, u1: np.ndarray, grid: RadialGrid) -> float:
    """Conserved energy of the data pair; reduces exactly to J(u0) at u1 = 0."""
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    if u0.shape != grid.r.shape or u1.shape != grid.r.shape:
        raise ValueError("data not sampled on the given grid")
    return functional_J(u0, grid) + 0.5 * radial_quadrature(u1 ** 2, grid)


def ps_classify(u0: np.ndarray, u1: np.ndarray, ground: GroundState,
                grid: RadialGrid) -> PsMembership:
    """Payne-Sattinger membership of the data pair; K = 0 ties go to PS+."""
    energy = functional_E(u0, u1, grid)
    k = functional_K(np.asarray(u0, dtype=float), grid)
    if energy < ground.energy_J:
        region = PsRegion.PS_PLUS if k >= 0 else PsRegion.PS_MINUS
    else:
        region = PsRegion.ABOVE_THRESHOLD
    return PsMembership(energy=energy, j_of_q=ground.energy_J, k_of_u0=k,
                        region=region)
