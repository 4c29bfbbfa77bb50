"""Speed of evolution (SOE) of pure states under the non-Hermitian dynamics.

For ``H = (A - iB).sigma`` the squared speed of a pure state splits into

    v^2 = Var(A.sigma) + Var(B.sigma) - i <[A.sigma, B.sigma]>
        = J^2 (1 - 4 S_x^2) + (gamma^2/4)(1 - 4 S_z^2) + 2 J gamma S_n,

where the last term changes sign with ``S_n = -S_y``. It is kept signed and
only the total is square-rooted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, InternalInconsistencyError
from .nhq import PTParams, Trajectory, evolve_state

#: negative v^2 above this value is treated as round-off and clamped to zero
ROUNDOFF_CLAMP = 1e-10
PURITY_TOL = 1e-7
FD_DELTA = 1e-5

SPEED_COLUMNS = ("t", "v", "v1_sq", "v2_sq", "v3_sq")
SCAN_COLUMNS = ("gamma", "v_max", "v_min")


@dataclass
class SpeedSample:
    t: float | None
    v1_sq: float
    v2_sq: float
    v3_sq: float
    v: float
    v_fd: float | None = None

    def row(self):
        return (self.t, self.v, self.v1_sq, self.v2_sq, self.v3_sq)


@dataclass
class SpeedExtremes:
    v_max: float
    v_min: float
    argmax_state: np.ndarray
    argmin_state: np.ndarray
    alpha_max: float | None = None
    alpha_min: float | None = None


def speed_components(S, p: PTParams, t: float | None = None) -> SpeedSample:
    """Split squared speed of the pure state with Bloch vector ``S``.

    Raises:
        DomainError: if ``|S|`` differs from 1/2 by more than 1e-7.
        InternalInconsistencyError: if ``v^2 < -1e-10``.
    """
    S = np.asarray(S, dtype=float)
    if abs(np.linalg.norm(S) - 0.5) > PURITY_TOL:
        raise DomainError("speed_components needs a pure state (|S| = 1/2)")
    J, g = p.J, p.gamma
    v1 = J * J * (1 - 4 * S[0] ** 2)
    v2 = 0.25 * g * g * (1 - 4 * S[2] ** 2)
    v3 = 2 * J * g * (-S[1])
    v_sq = v1 + v2 + v3
    if v_sq < -ROUNDOFF_CLAMP:
        raise InternalInconsistencyError(f"negative squared speed {v_sq:.3g}")
    return SpeedSample(t, float(v1), float(v2), float(v3), float(np.sqrt(max(0.0, v_sq))))


def _psi_from_bloch(S):
    """Amplitudes (any global phase) of the pure state with Bloch vector ``S``."""
    r = 2 * np.asarray(S, dtype=float)
    theta = np.arccos(np.clip(r[2], -1, 1))
    az = np.arctan2(r[1], r[0])
    return np.array([np.cos(theta / 2), np.exp(1j * az) * np.sin(theta / 2)])


def fidelity_speed(S, p: PTParams, delta: float = FD_DELTA) -> float:
    """Speed from the short-time fidelity ``|<psi(t)|psi(t+delta)>|^2 = 1 - v^2 delta^2``.

    ``1 - F`` is evaluated as the squared norm of the part of ``psi(t+delta)``
    orthogonal to ``psi(t)`` to avoid cancellation.
    """
    a = _psi_from_bloch(S)
    b = evolve_state(a, delta, p)
    perp = b - a * np.vdot(a, b)
    return float(np.linalg.norm(perp) / delta)


def speed_along_trajectory(traj: Trajectory, p: PTParams, cross_check: bool = False,
                           fd_tol: float = 1e-4) -> list[SpeedSample]:
    """Speed at every trajectory point.

    With ``cross_check`` the fidelity estimate is stored in ``v_fd`` and a
    disagreement above ``fd_tol`` raises :class:`InternalInconsistencyError`.
    """
    out = []
    for t, S in zip(traj.t, traj.S):
        s = speed_components(S, p, t=float(t))
        if cross_check:
            s.v_fd = fidelity_speed(S, p)
            if abs(s.v_fd - s.v) > fd_tol:
                raise InternalInconsistencyError(
                    f"fidelity speed {s.v_fd:.6g} != algebraic speed {s.v:.6g} at t={t:.6g}")
        out.append(s)
    return out


def geodesic_state(alpha) -> np.ndarray:
    """Point ``(0, -sin(alpha)/2, cos(alpha)/2)`` of the ``S_A = 0`` great circle."""
    alpha = np.asarray(alpha, dtype=float)
    return np.stack([np.zeros_like(alpha), -0.5 * np.sin(alpha), 0.5 * np.cos(alpha)], axis=-1)


def _polish(f, alphas, values, k, sign):
    n = len(alphas)
    a, b, c = alphas[(k - 1) % n], alphas[k], alphas[(k + 1) % n]
    if k == 0:
        a -= 2 * np.pi
    if k == n - 1:
        c += 2 * np.pi
    fb = sign * values[k]
    if not (fb < sign * f(a) and fb < sign * f(c)):
        # flat neighbourhood (e.g. gamma = 0): the sample is already extremal
        return float(alphas[k])
    res = minimize_scalar(lambda x: sign * f(x), bracket=(a, b, c), method="golden",
                          options={"xtol": 1e-12})
    x = float(res.x)
    if sign * f(x) > sign * values[k]:
        x = b
    return x % (2 * np.pi)


def geodesic_extremes(p: PTParams, n_samples: int = 10000,
                      full_sphere: bool = False) -> SpeedExtremes:
    """Largest and smallest speed over the ``S_A = 0`` circle.

    A uniform scan of ``n_samples`` angles is refined by golden-section search
    around the best samples. ``full_sphere=True`` scans a Fibonacci lattice on
    the whole Bloch sphere instead (no refinement).
    """
    if n_samples < 100:
        raise DomainError("n_samples must be at least 100")
    if full_sphere:
        k = np.arange(n_samples) + 0.5
        z = 1 - 2 * k / n_samples
        az = np.pi * (1 + 5 ** 0.5) * k
        r = np.sqrt(1 - z * z)
        pts = 0.5 * np.stack([r * np.cos(az), r * np.sin(az), z], axis=-1)
        v = np.array([speed_components(S, p).v for S in pts])
        i_max, i_min = int(np.argmax(v)), int(np.argmin(v))
        return SpeedExtremes(float(v[i_max]), float(v[i_min]), pts[i_max], pts[i_min])

    def speed(alpha):
        return speed_components(geodesic_state(alpha), p).v

    alphas = 2 * np.pi * np.arange(n_samples) / n_samples
    values = np.array([speed(a) for a in alphas])
    a_max = _polish(speed, alphas, values, int(np.argmax(values)), -1.0)
    a_min = _polish(speed, alphas, values, int(np.argmin(values)), 1.0)
    return SpeedExtremes(speed(a_max), speed(a_min), geodesic_state(a_max),
                         geodesic_state(a_min), a_max, a_min)


def order_parameter_scan(gammas, p_base: PTParams = PTParams(), n_samples: int = 10000):
    """Rows ``(gamma, v_max, v_min)`` of geodesic speed extremes, one per ``gamma``."""
    rows = []
    for g in gammas:
        if not np.isfinite(g) or g < 0:
            raise DomainError("gammas must be finite and non-negative")
        ext = geodesic_extremes(PTParams(p_base.J, float(g)), n_samples=n_samples)
        rows.append((float(g), ext.v_max, ext.v_min))
    return rows
