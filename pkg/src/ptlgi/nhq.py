"""Non-Hermitian two-level dynamics generated by ``H = J sigma_x - i (gamma/2) sigma_z``.

The state is propagated with the normalized (trace preserving, nonlinear) map

    rho(t) = U rho0 U^dagger / tr(U rho0 U^dagger),   U = exp(-i H t),

or equivalently through the nonlinear Bloch equation

    dS/dt = 2 A x S - B + 4 (B.S) S,   A = J x_hat,  B = (gamma/2) z_hat,

with ``rho = I/2 + S.sigma`` (pure states have ``|S| = 1/2``). Besides the
cartesian frame the module uses the frame ``(A_hat, B_hat, n_hat)`` with
``n_hat = A_hat x B_hat = -y_hat``, so ``S_A = S_x``, ``S_B = S_z`` and
``S_n = -S_y``.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import qmat
from ._ode import integrate
from .errors import DomainError, EvolutionDegenerateError, InternalInconsistencyError

#: relative width of the band around gamma = 2J classified as exceptional
REGIME_EPS = 1e-9
#: |Omega * tau| below which the analytic geodesic solution switches to series
ANALYTIC_SERIES_THRESHOLD = 1e-5
#: tolerance on the imaginary residue of the analytic geodesic solution
IMAG_RESIDUE_TOL = 1e-10
#: relative eigenvalue weight of rho treated as round-off in evolve_density
EIGEN_CUTOFF = 1e-13

N_HAT = np.array([0.0, -1.0, 0.0])


@dataclass(frozen=True)
class PTParams:
    """Hamiltonian parameters: coupling ``J > 0`` and gain/loss rate ``gamma >= 0``."""

    J: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.J) and np.isfinite(self.gamma)):
            raise DomainError("J and gamma must be finite")
        if self.J <= 0:
            raise DomainError(f"J must be positive, got {self.J}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be non-negative, got {self.gamma}")

    @property
    def A(self) -> float:
        return self.J

    @property
    def B(self) -> float:
        return 0.5 * self.gamma

    @property
    def A_vec(self) -> np.ndarray:
        return np.array([self.J, 0.0, 0.0])

    @property
    def B_vec(self) -> np.ndarray:
        return np.array([0.0, 0.0, 0.5 * self.gamma])

    @property
    def omega(self) -> complex:
        """``sqrt(J^2 - gamma^2/4)``: real below the exceptional point, imaginary above."""
        return cmath.sqrt(self.J ** 2 - 0.25 * self.gamma ** 2)


class Regime(enum.Enum):
    SYMMETRIC = "symmetric"
    EXCEPTIONAL = "exceptional"
    BROKEN = "broken"


def regime(p: PTParams, eps: float = REGIME_EPS) -> Regime:
    """Classify ``p`` with a band of half-width ``eps * J`` around ``gamma = 2J``."""
    delta = p.gamma - 2 * p.J
    if abs(delta) <= eps * p.J:
        return Regime.EXCEPTIONAL
    return Regime.SYMMETRIC if delta < 0 else Regime.BROKEN


def pure_state(theta: float, phi: float) -> np.ndarray:
    """Amplitudes ``[cos(theta/2) e^{i phi}, sin(theta/2)]``."""
    return np.array([np.cos(theta / 2) * np.exp(1j * phi), np.sin(theta / 2)], dtype=complex)


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def bloch_from_angles(theta: float, phi: float) -> np.ndarray:
    """Bloch vector (length 1/2) of :func:`pure_state` ``(theta, phi)``.

    Note the sign of ``S_y``: the phase sits on the first amplitude, so the
    azimuth of the Bloch vector is ``-phi``.
    """
    return 0.5 * np.array([np.sin(theta) * np.cos(phi),
                           -np.sin(theta) * np.sin(phi),
                           np.cos(theta)])


def to_frame(S) -> tuple[float, float, float]:
    """Cartesian ``S`` -> ``(S_A, S_B, S_n)``."""
    S = np.asarray(S, dtype=float)
    return S[..., 0], S[..., 2], -S[..., 1]


def from_frame(S_A, S_B, S_n) -> np.ndarray:
    return np.stack(np.broadcast_arrays(np.asarray(S_A, float), -np.asarray(S_n, float),
                                        np.asarray(S_B, float)), axis=-1)


def hamiltonian(p: PTParams) -> np.ndarray:
    return p.J * qmat.SIGMA_X - 0.5j * p.gamma * qmat.SIGMA_Z


def propagator(p: PTParams, t: float) -> np.ndarray:
    """``exp(-i H t)`` up to a positive factor (entries kept of order one).

    The overall scale is irrelevant for the normalized evolution and dropping
    it avoids overflow deep in the broken phase.
    """
    E, _ = qmat.expm2_scaled(-1j * t * hamiltonian(p))
    return E


def evolve_density(rho0, t: float, p: PTParams) -> np.ndarray:
    """Normalized non-Hermitian evolution of a density matrix.

    Raises:
        DomainError: for negative ``t``.
        EvolutionDegenerateError: if the unnormalized trace vanishes.
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    rho0 = np.asarray(rho0, dtype=complex)
    if t == 0:
        return rho0.copy()
    U = propagator(p, t)
    # Propagate the spectral decomposition rather than U rho U^dagger: near a
    # repelling fixed point the product form turns round-off in rho into a
    # spurious mixed component that the dynamics amplifies exponentially.
    w, V = np.linalg.eigh(0.5 * (rho0 + qmat.dagger(rho0)))
    w = np.where(w > EIGEN_CUTOFF * max(w.max(), 0.0), w, 0.0)
    UV = U @ V
    out = (UV * w) @ qmat.dagger(UV)
    tr = np.real(np.trace(out))
    if not tr > 1e-300:
        raise EvolutionDegenerateError("trace of the propagated state vanished")
    out = out / tr
    return 0.5 * (out + qmat.dagger(out))


def evolve_state(psi, t: float, p: PTParams) -> np.ndarray:
    """Normalized evolution of a pure-state amplitude vector."""
    v = propagator(p, t) @ np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(v)
    if not nrm > 1e-150:
        raise EvolutionDegenerateError("norm of the propagated state vanished")
    return v / nrm


def bloch_rhs(S, p: PTParams) -> np.ndarray:
    """Right-hand side ``2 A x S - B + 4 (B.S) S`` of the nonlinear Bloch equation."""
    S = np.asarray(S, dtype=float)
    A, B = p.A_vec, p.B_vec
    return 2 * np.cross(A, S) - B + 4 * np.dot(B, S) * S


def bloch_rhs_components(S_A, S_B, S_n, p: PTParams):
    """The same vector field written in the ``(A_hat, B_hat, n_hat)`` frame."""
    A, B = p.A, p.B
    dS_A = 4 * B * S_A * S_B
    dS_B = -2 * S_n * A - B + 4 * B * S_B ** 2
    dS_n = 2 * S_B * A + 4 * B * S_B * S_n
    return dS_A, dS_B, dS_n


@dataclass
class Trajectory:
    """Bloch vectors ``S[k]`` sampled at strictly increasing times ``t[k]``."""

    t: np.ndarray
    S: np.ndarray
    grid: str = "uniform"
    stats: object = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.S = np.asarray(self.S, dtype=float)
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise DomainError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.t)

    def rows(self):
        for t, S in zip(self.t, self.S):
            yield (t, S[0], S[1], S[2])


TRAJECTORY_COLUMNS = ("t", "S_x", "S_y", "S_z")


def evolve_bloch_numeric(S0, t_end: float, p: PTParams, tol: float = 1e-9,
                         dt_out: float | None = None, t_eval=None) -> Trajectory:
    """Integrate the nonlinear Bloch equation with adaptive RK45.

    Args:
        S0: initial Bloch vector with ``|S0| = 1/2``.
        t_end: final time.
        p: Hamiltonian parameters.
        tol: per-step error tolerance, between 1e-12 and 1e-6.
        dt_out: spacing of the output grid (default ``t_end / 200``).
        t_eval: explicit output times; overrides ``dt_out``.
    """
    S0 = np.asarray(S0, dtype=float)
    if abs(np.linalg.norm(S0) - 0.5) > 1e-9:
        raise DomainError("S0 must be a pure-state Bloch vector (|S0| = 1/2)")
    if not 1e-12 <= tol <= 1e-6:
        raise DomainError("tol must lie in [1e-12, 1e-6]")
    if t_end < 0:
        raise DomainError("t_end must be non-negative")
    if t_eval is None:
        dt = dt_out if dt_out is not None else max(t_end, 1e-300) / 200
        n = int(np.floor(t_end / dt + 1e-9))
        t_eval = dt * np.arange(n + 1)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval[0] != 0.0:
        t_eval = np.concatenate([[0.0], t_eval])
    max_step = 0.05 / max(p.J, p.gamma)
    A, B = p.A_vec, p.B_vec

    def rhs(_t, S):
        return 2 * np.cross(A, S) - B + 4 * np.dot(B, S) * S

    ys, stats = integrate(rhs, S0, t_eval, tol=tol, max_step=max_step)
    return Trajectory(t_eval, ys, grid="uniform", stats=stats)


# -- analytic solution on the S_A = 0 geodesic ------------------------------

def _sin_ratio(om, tau):
    """``sin(om*tau)/om`` with a series branch near ``om*tau = 0``."""
    z = om * tau
    small = np.abs(z) < ANALYTIC_SERIES_THRESHOLD
    z2 = z * z
    series = tau * (1 - z2 / 6 + z2 * z2 / 120)
    safe_om = om if om != 0 else 1.0
    return np.where(small, series, np.sin(np.where(small, 0.0, z)) / safe_om)


def _arcsin_ratio(om, s):
    """``arcsin(om*s)/om`` with a series branch near zero."""
    w = om * s
    if abs(w) < ANALYTIC_SERIES_THRESHOLD:
        return s * (1 + w * w / 6 + 3 * w ** 4 / 40)
    return complex(np.arcsin(complex(w))) / om


def _geodesic_eval(tau, p: PTParams):
    """Signed ``(S_B, S_n)`` at the (complex) phase ``tau = t + C``."""
    A, B, om = p.A, p.B, p.omega
    s = _sin_ratio(om, tau)
    c = np.cos(om * tau)
    D = 1 / (A + B) + 2 * B * s * s
    N = -1 / (A + B) + 2 * A * s * s
    return -s * c / D, -0.5 * N / D


def _is_fixed(Sn0: float, p: PTParams) -> bool:
    return regime(p) is not Regime.SYMMETRIC and abs(p.A + 2 * p.B * Sn0) < 1e-12


def integration_constant(SB0: float, Sn0: float, p: PTParams) -> complex:
    """Phase constant ``C`` of the geodesic solution fixed by ``(S_B(0), S_n(0))``.

    Solves the ``S_n`` relation for ``sin(Omega C)/Omega`` (up to sign) and
    picks the root reproducing ``S_B(0)`` and the sign of ``dS_B/dt``.

    Raises:
        DomainError: if the initial data are not on the geodesic or no root
            reproduces ``S_B(0)`` to 1e-8.
    """
    if abs(SB0 ** 2 + Sn0 ** 2 - 0.25) > 1e-9:
        raise DomainError("initial data must satisfy S_B^2 + S_n^2 = 1/4")
    A, B, om = p.A, p.B, p.omega
    if _is_fixed(Sn0, p):
        raise DomainError("initial state is a fixed point; C is infinite")
    s0_sq = (1 - 2 * Sn0) / (2 * (A + B) * (A + 2 * B * Sn0))
    s0 = cmath.sqrt(s0_sq)
    dSB_true = -2 * Sn0 * A - B + 4 * B * SB0 ** 2
    best = None
    h = 1e-6
    for cand in (s0, -s0):
        C = _arcsin_ratio(om, cand)
        sb, sn = _geodesic_eval(C, p)
        sb_p, _ = _geodesic_eval(C + h, p)
        sb_m, _ = _geodesic_eval(C - h, p)
        d = (sb_p - sb_m) / (2 * h)
        score = abs(sb - SB0) + abs(sn - Sn0) + 1e-3 * abs(d - dSB_true)
        if best is None or score < best[0]:
            best = (score, C, sb, sn)
    _, C, sb, sn = best
    if abs(sb - SB0) > 1e-8 or abs(sn - Sn0) > 1e-8:
        raise DomainError("no integration constant reproduces the initial data")
    return C


def analytic_SB_signed(SB0: float, Sn0: float, t, p: PTParams):
    """Signed ``(S_B(t), S_n(t))`` on the geodesic from the closed-form solution.

    This is the square-root-free form of the ``S_B`` expression, i.e. the
    branch obtained by continuity through the zeros of ``S_B``.
    """
    t = np.asarray(t, dtype=float)
    if _is_fixed(Sn0, p):
        return np.full(t.shape, float(SB0)), np.full(t.shape, float(Sn0))
    C = integration_constant(SB0, Sn0, p)
    sb, sn = _geodesic_eval(t + C, p)
    for v in (sb, sn):
        if np.max(np.abs(np.imag(v)), initial=0.0) > IMAG_RESIDUE_TOL:
            raise InternalInconsistencyError("imaginary residue in geodesic solution")
    return np.real(sb), np.real(sn)


def analytic_SB_Sn(SB0: float, Sn0: float, t, p: PTParams):
    """``(|S_B(t)|, S_n(t))`` on the ``S_A = 0`` geodesic.

    The closed form for ``S_B`` is a square root and therefore only fixes the
    magnitude; use :func:`analytic_SB_signed` when the sign is needed.
    """
    sb, sn = analytic_SB_signed(SB0, Sn0, t, p)
    return np.abs(sb), sn


def cosine_SB_Sn(t, C: complex, p: PTParams):
    """Cosine form ``(|S_B|, S_n)`` at constant ``C`` (reference only).

    Suffers from cancellation near the exceptional point; the production path
    is :func:`analytic_SB_Sn`.
    """
    A, B, om = p.A, p.B, p.omega
    x = np.cos(2 * om * (np.asarray(t) + C))
    sb_abs = 0.5 * np.sqrt((A * A - B * B) * np.sin(2 * om * (np.asarray(t) + C)) ** 2
                           / (A - B * x) ** 2)
    sn = -0.5 * (B - A * x) / (A - B * x)
    return np.abs(np.real(sb_abs)), np.real(sn)


def path_coefficient(Sn0: float, p: PTParams) -> float:
    """``S_n(0) (A + 2 B S_n(0))``.

    ``dS_B/dt`` at ``t = 0`` equals minus twice this value on the geodesic, so
    for a state on the ``S_B < 0`` half a negative coefficient means ``|S_B|``
    initially shrinks.
    """
    if abs(Sn0) > 0.5 + 1e-12:
        raise DomainError("|S_n(0)| must not exceed 1/2")
    return Sn0 * (p.A + 2 * p.B * Sn0)


class FixedPoints(NamedTuple):
    source: np.ndarray
    sink: np.ndarray
    degenerate: bool
    attracting: bool


def fixed_points(p: PTParams) -> FixedPoints:
    """Bloch vectors of the two right eigenstates of ``H``.

    The sink is the eigenstate whose eigenvalue has the larger imaginary part.
    Below the exceptional point both eigenvalues are real, the points are
    centres and ``attracting`` is False.
    """
    reg = regime(p)
    e = qmat.eig2(hamiltonian(p))
    blochs = [qmat.density_to_bloch(projector(e.vectors[:, k])) for k in range(2)]
    if reg is Regime.EXCEPTIONAL or e.degenerate:
        return FixedPoints(blochs[0], blochs[0].copy(), True, False)
    k_sink = 0 if e.values[0].imag >= e.values[1].imag else 1
    return FixedPoints(blochs[1 - k_sink], blochs[k_sink], False, reg is Regime.BROKEN)
