"""Adaptive Dormand-Prince 5(4) integrator with a post-step projection hook."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StiffnessError

MIN_STEP = 1e-14

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class IntegrationStats:
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    max_projection_drift: float = 0.0
    step_sizes: list = field(default_factory=list)


def _step(f, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(f(t + _C[i] * h, yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err, ks[-1]


def integrate(f, y0, t_out, tol=1e-9, max_step=np.inf, project=None, h0=None, atol=None):
    """Integrate ``y' = f(t, y)`` and return the solution at the times ``t_out``.

    The local error estimate of every accepted step satisfies
    ``|err_i| <= tol * (1 + |y_i|)`` componentwise, or
    ``|err_i| <= atol + tol * |y_i|`` when ``atol`` is given. ``project`` (optional) is
    applied to each accepted state; the size of the correction it makes is
    tracked in the returned stats.

    Args:
        f: right-hand side ``f(t, y) -> array`` (real or complex).
        y0: initial state at ``t_out[0]``.
        t_out: non-decreasing output times, the first one is the start time.
        tol: per-step absolute+relative error tolerance.
        max_step: upper bound on the step size.
        project: optional map applied after every accepted step.
        h0: initial step size.
        atol: absolute tolerance; switches ``tol`` to a purely relative role.

    Returns:
        ``(ys, stats)`` with ``ys[k]`` the state at ``t_out[k]``.

    Raises:
        StiffnessError: if the step size drops below ``1e-14``.
    """
    t_out = np.asarray(t_out, dtype=float)
    y = np.array(y0, dtype=np.result_type(np.asarray(y0).dtype, float))
    ys = np.empty((len(t_out),) + y.shape, dtype=y.dtype)
    ys[0] = y
    stats = IntegrationStats()
    t = float(t_out[0])
    k1 = f(t, y)
    stats.n_rhs += 1
    h = h0 if h0 is not None else min(max_step, 0.01)
    for j in range(1, len(t_out)):
        t_target = float(t_out[j])
        while t < t_target:
            h = min(h, max_step, t_target - t)
            # avoid a sliver of a final step
            if t_target - (t + h) < 1e-3 * h:
                h = t_target - t
            y_new, err, k_last = _step(f, t, y, h, k1)
            stats.n_rhs += 6
            ymag = np.maximum(np.abs(y), np.abs(y_new))
            scale = tol * (1.0 + ymag) if atol is None else atol + tol * ymag
            ratio = float(np.max(np.abs(err) / scale)) if err.size else 0.0
            if ratio <= 1.0:
                t = t + h if t_target - (t + h) > 1e-15 * max(1.0, abs(t_target)) else t_target
                if project is not None:
                    y_proj = project(y_new)
                    drift = float(np.max(np.abs(y_proj - y_new)))
                    stats.max_projection_drift = max(stats.max_projection_drift, drift)
                    if drift > 0.0:
                        y_new = y_proj
                        k_last = f(t, y_new)
                        stats.n_rhs += 1
                y, k1 = y_new, k_last
                stats.n_accepted += 1
                stats.step_sizes.append(h)
                fac = 5.0 if ratio == 0.0 else min(5.0, 0.9 * ratio ** -0.2)
                h = h * fac
            else:
                stats.n_rejected += 1
                h = h * max(0.1, 0.9 * ratio ** -0.25)
                if h < MIN_STEP:
                    raise StiffnessError(f"step size underflow at t={t:.6g}")
        ys[j] = y
    return ys, stats
