"""Step kernels for the two difference schemes.

The hot loops are compiled with numba when available (the pure-numpy
fallback computes the same expressions in the same order, so results are
bit-identical either way; set NLKG_DISABLE_NUMBA=1 to force the fallback).
Kernels never raise: the implicit solver reports failure through a status
code that the caller converts into a blowup signal.

Status codes: 0 ok; 1 Newton derivative below its floor (degenerate);
2 no convergence within the iteration cap; 3 iterate left the trusted
range or became non-finite; 4 the max|u|*dr > 1 pre-check fired. The
second return is the grid index involved (-1 when not localized).
"""

import math
import os

import numpy as np

# iterates outside this window are treated as runaway Newton divergence
NEWTON_RANGE = 1e10
# relative floor for the Newton derivative; below it the solve is degenerate
DERIV_FLOOR = 1e-10

_EPS = float(np.finfo(float).eps)


def _explicit_kernel_py(v, vp, v_new, dr, dt, nonlinear):
    n = v.shape[0]
    dt2 = dt * dt
    dr2 = dr * dr
    inner = v[1:-1]
    with np.errstate(over="ignore", invalid="ignore"):
        rhs = (v[2:] - 2.0 * inner + v[:-2]) / dr2 - inner
        if nonlinear:
            r = np.arange(1, n - 1) * dr
            rhs = rhs + (inner * inner * inner) / (r * r)
        v_new[1:-1] = (2.0 * inner - vp[1:-1]) + dt2 * rhs
    v_new[0] = 0.0
    v_new[-1] = 0.0


def _implicit_kernel_py(v, vp, v_new, dr, dt, tol, max_iter, nonlinear):
    n = v.shape[0]
    dt2 = dt * dt
    dr2 = dr * dr
    alpha = 1.0 / dt2 + 0.5

    if nonlinear:
        r = np.arange(1, n) * dr
        m = np.max(np.abs(v[1:]) / r)
        if m * dr > 1.0:
            return 4, -1

    status = 0
    bad_j = -1
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for j in range(1, n - 1):
            vi = v[j]
            ai = vp[j]
            lap = (v[j + 1] - 2.0 * vi + v[j - 1]) / dr2
            w = 0.25 / (j * dr * j * dr) if nonlinear else 0.0
            beta = -(2.0 * vi - ai) / dt2 - lap + 0.5 * ai
            x = (2.0 * vi - ai) + dt2 * (lap - 0.5 * (vi + ai)
                                         + (vi + ai) * (vi * vi + ai * ai) * w)
            floor = DERIV_FLOOR * (1.0 + abs(alpha - ai * ai * w))
            ok = False
            for _ in range(max_iter):
                resid = alpha * x + beta - (x + ai) * (x * x + ai * ai) * w
                if abs(resid) <= tol:
                    ok = True
                    break
                deriv = alpha - (3.0 * x * x + 2.0 * ai * x + ai * ai) * w
                if abs(deriv) < floor:
                    return 1, j
                step = resid / deriv
                if abs(step) <= 4.0 * _EPS * (1.0 + abs(x)):
                    ok = True
                    break
                x = x - step
                if not math.isfinite(x) or abs(x) > NEWTON_RANGE:
                    return 3, j
            if not ok:
                status = 2
                bad_j = j
                break
            v_new[j] = x
    v_new[0] = 0.0
    v_new[-1] = 0.0
    return status, bad_j


if os.environ.get("NLKG_DISABLE_NUMBA"):
    HAVE_NUMBA = False
else:
    try:
        from numba import njit
        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(cache=True)
    def _explicit_kernel_nb(v, vp, v_new, dr, dt, nonlinear):  # pragma: no cover
        n = v.shape[0]
        dt2 = dt * dt
        dr2 = dr * dr
        v_new[0] = 0.0
        v_new[-1] = 0.0
        for j in range(1, n - 1):
            vi = v[j]
            rhs = (v[j + 1] - 2.0 * vi + v[j - 1]) / dr2 - vi
            if nonlinear:
                r = j * dr
                rhs = rhs + (vi * vi * vi) / (r * r)
            v_new[j] = (2.0 * vi - vp[j]) + dt2 * rhs

    @njit(cache=True)
    def _implicit_kernel_nb(v, vp, v_new, dr, dt, tol, max_iter, nonlinear):  # pragma: no cover
        n = v.shape[0]
        dt2 = dt * dt
        dr2 = dr * dr
        alpha = 1.0 / dt2 + 0.5

        if nonlinear:
            m = 0.0
            for j in range(1, n):
                a = abs(v[j]) / (j * dr)
                if a > m:
                    m = a
            if m * dr > 1.0:
                return 4, -1

        v_new[0] = 0.0
        v_new[-1] = 0.0
        for j in range(1, n - 1):
            vi = v[j]
            ai = vp[j]
            lap = (v[j + 1] - 2.0 * vi + v[j - 1]) / dr2
            w = 0.25 / (j * dr * j * dr) if nonlinear else 0.0
            beta = -(2.0 * vi - ai) / dt2 - lap + 0.5 * ai
            x = (2.0 * vi - ai) + dt2 * (lap - 0.5 * (vi + ai)
                                         + (vi + ai) * (vi * vi + ai * ai) * w)
            floor = DERIV_FLOOR * (1.0 + abs(alpha - ai * ai * w))
            ok = False
            for _ in range(max_iter):
                resid = alpha * x + beta - (x + ai) * (x * x + ai * ai) * w
                if abs(resid) <= tol:
                    ok = True
                    break
                deriv = alpha - (3.0 * x * x + 2.0 * ai * x + ai * ai) * w
                if abs(deriv) < floor:
                    return 1, j
                step = resid / deriv
                if abs(step) <= 4.0 * _EPS * (1.0 + abs(x)):
                    ok = True
                    break
                x = x - step
                if not math.isfinite(x) or abs(x) > NEWTON_RANGE:
                    return 3, j
            if not ok:
                return 2, j
            v_new[j] = x
        return 0, -1

    explicit_kernel = _explicit_kernel_nb
    implicit_kernel = _implicit_kernel_nb
else:
    explicit_kernel = _explicit_kernel_py
    implicit_kernel = _implicit_kernel_py


def warm_up() -> None:
    """Trigger JIT compilation once (cheap no-op for the numpy fallback).

    Call before forking worker pools so children inherit compiled code.
    """
    v = np.zeros(8)
    vp = np.zeros(8)
    out = np.empty(8)
    for nl in (True, False):
        explicit_kernel(v, vp, out, 0.1, 0.09, nl)
        implicit_kernel(v, vp, out, 0.1, 0.09, 1e-12, 5, nl)
