"""Three-level master equation whose no-decay sub-ensemble reproduces the qubit dynamics.

Levels are ordered ``(f, e, g)``. The Hamiltonian couples ``f`` and ``e``
with strength ``J`` and puts ``g`` at energy ``-eps_g``; the single jump
operator ``L = |g><f|`` with rate ``gamma1`` empties ``f`` into ``g``:

    d rho/dt = -i [H, rho] + gamma1 (L rho L^dag - {L^dag L, rho}/2).

Normalizing the ``f-e`` block of ``rho`` (post-selection on "no decay")
gives the qubit state evolved by ``H_PT`` with ``gamma = gamma1 / 2``.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import nhq, qmat
from ._ode import integrate as _integrate
from .errors import (DomainError, EquivalenceError, InternalInconsistencyError,
                     PostSelectionError)

log = logging.getLogger(__name__)

BASIS = ("f", "e", "g")
RHS_CHECK_TOL = 1e-12
IMAG_RESIDUE_TOL = 1e-10
DENSITY_TOL = 1e-8
#: |z| below which the r3 helpers switch to series
SERIES_THRESHOLD = 1e-3
#: reconstruction mismatch above which the secant/log angle expressions are rejected
SECANT_MISMATCH_TOL = 1e-5
EQUIVALENCE_TOL = 1e-6

TRAJECTORY_COLUMNS = ("t",) + tuple(f"{part}_{a}{b}" for a in BASIS for b in BASIS
                                    for part in ("re", "im"))


@dataclass(frozen=True)
class LindbladParams:
    J: float = 1.0
    gamma1: float = 0.0
    eps_g: float = 1.0

    def __post_init__(self):
        if not all(np.isfinite((self.J, self.gamma1, self.eps_g))):
            raise DomainError("J, gamma1 and eps_g must be finite")
        if self.J <= 0:
            raise DomainError(f"J must be positive, got {self.J}")
        if self.gamma1 < 0:
            raise DomainError(f"gamma1 must be non-negative, got {self.gamma1}")

    @property
    def qubit(self) -> nhq.PTParams:
        """Matching qubit parameters, ``gamma = gamma1 / 2``."""
        return nhq.PTParams(self.J, 0.5 * self.gamma1)


def check_density3(rho, tol: float = DENSITY_TOL) -> np.ndarray:
    """Return ``rho`` as a complex 3x3 array after validating it as a density matrix.

    Raises:
        DomainError: wrong shape, not Hermitian, not unit trace or not positive.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise DomainError(f"expected a 3x3 matrix, got shape {rho.shape}")
    if not (qmat.is_hermitian(rho, tol) and qmat.is_unit_trace(rho, tol)
            and qmat.is_positive_semidefinite(rho, tol)):
        raise DomainError("not a valid density matrix (Hermitian, unit trace, positive)")
    return rho


def hamiltonian(p: LindbladParams) -> np.ndarray:
    return np.array([[0, p.J, 0], [p.J, 0, 0], [0, 0, -p.eps_g]], dtype=complex)


def jump_operator() -> np.ndarray:
    """``L = |g><f|``."""
    L = np.zeros((3, 3), dtype=complex)
    L[2, 0] = 1.0
    return L


def heff(p: LindbladParams) -> np.ndarray:
    """No-jump Hamiltonian ``H - i (gamma1/2) L^dag L``.

    Its ``f-e`` block plus ``i gamma1/4`` times the identity is checked to be
    ``H_PT`` at ``gamma = gamma1/2``.
    """
    L = jump_operator()
    H = hamiltonian(p) - 0.5j * p.gamma1 * (L.conj().T @ L)
    shifted = H[:2, :2] + 0.25j * p.gamma1 * np.eye(2)
    if np.max(np.abs(shifted - nhq.hamiltonian(p.qubit))) > RHS_CHECK_TOL * (1 + p.gamma1):
        raise InternalInconsistencyError("f-e block of heff does not match H_PT")
    return H


def _rhs_elementwise(r, J, g1, eg):
    d = np.empty((3, 3), dtype=complex)
    d[0, 0] = 1j * J * (r[0, 1] - r[1, 0]) - g1 * r[0, 0]
    d[0, 1] = -0.5 * g1 * r[0, 1] + 1j * J * (r[0, 0] - r[1, 1])
    d[0, 2] = -1j * (eg * r[0, 2] + J * r[1, 2]) - 0.5 * g1 * r[0, 2]
    d[1, 0] = -0.5 * g1 * r[1, 0] - 1j * J * (r[0, 0] - r[1, 1])
    d[1, 1] = -1j * J * (r[0, 1] - r[1, 0])
    d[1, 2] = -1j * (J * r[0, 2] + eg * r[1, 2])
    d[2, 0] = 1j * (eg * r[2, 0] + J * r[2, 1]) - 0.5 * g1 * r[2, 0]
    d[2, 1] = 1j * (J * r[2, 0] + eg * r[2, 1])
    d[2, 2] = g1 * r[0, 0]
    return d


def lindblad_rhs_elementwise(rho3, p: LindbladParams) -> np.ndarray:
    """Right-hand side written out entry by entry."""
    return _rhs_elementwise(np.asarray(rho3, dtype=complex), p.J, p.gamma1, p.eps_g)


def lindblad_rhs_abstract(rho3, p: LindbladParams) -> np.ndarray:
    """Right-hand side from the commutator and dissipator."""
    rho = np.asarray(rho3, dtype=complex)
    H, L = hamiltonian(p), jump_operator()
    LdL = L.conj().T @ L
    return (-1j * (H @ rho - rho @ H)
            + p.gamma1 * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)))


def jump_form_rhs(rho3, p: LindbladParams) -> np.ndarray:
    """``-i (H_eff rho - rho H_eff^dag) + gamma1 L rho L^dag``."""
    rho = np.asarray(rho3, dtype=complex)
    He, L = heff(p), jump_operator()
    return -1j * (He @ rho - rho @ He.conj().T) + p.gamma1 * (L @ rho @ L.conj().T)


def lindblad_rhs(rho3, p: LindbladParams) -> np.ndarray:
    """``d rho/dt``; the elementwise and operator forms are both evaluated and compared.

    Raises:
        InternalInconsistencyError: if the two forms differ by more than 1e-12
            (relative to the size of ``rho`` and the rates).
    """
    a = lindblad_rhs_elementwise(rho3, p)
    b = lindblad_rhs_abstract(rho3, p)
    scale = (1 + np.max(np.abs(rho3))) * (1 + p.J + p.gamma1 + abs(p.eps_g))
    if np.max(np.abs(a - b)) > RHS_CHECK_TOL * scale:
        raise InternalInconsistencyError("elementwise and operator forms of the rhs disagree")
    return a


@dataclass
class Trajectory3:
    t: np.ndarray
    rho: np.ndarray
    stats: object = None

    def rows(self):
        for t, r in zip(self.t, self.rho):
            row = [t]
            for z in r.ravel():
                row += [z.real, z.imag]
            yield tuple(row)


def _symmetrize(r):
    return 0.5 * (r + r.conj().T)


def integrate_trajectory(rho3_0, times, p: LindbladParams, tol: float = 1e-10,
                         atol: float | None = None) -> Trajectory3:
    """Integrate the master equation, reporting the state at each of ``times``.

    Every accepted step is followed by ``rho <- (rho + rho^dag)/2``; the
    largest correction is kept in ``stats.max_projection_drift``.

    Args:
        rho3_0: initial density matrix in the ``(f, e, g)`` basis.
        times: non-decreasing output times starting at or after 0.
        p: model parameters.
        tol: per-step error tolerance of the adaptive integrator.
        atol: optional absolute tolerance; with it ``tol`` acts as a relative
            tolerance, which keeps the decaying ``f-e`` block accurate.
    """
    rho0 = check_density3(rho3_0)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or times[0] < 0 or np.any(np.diff(times) < 0):
        raise DomainError("times must be a non-empty, non-decreasing list of t >= 0")
    grid = times if times[0] == 0.0 else np.concatenate([[0.0], times])
    J, g1, eg = p.J, p.gamma1, p.eps_g
    ys, stats = _integrate(lambda _t, r: _rhs_elementwise(r, J, g1, eg), rho0, grid,
                           tol=tol, project=_symmetrize, atol=atol)
    if stats.max_projection_drift > 1e-12:
        log.info("symmetrization drift %.3g", stats.max_projection_drift)
    if grid is not times:
        ys = ys[1:]
    return Trajectory3(times, ys, stats)


def integrate(rho3_0, t: float, p: LindbladParams, tol: float = 1e-10,
              atol: float | None = None) -> np.ndarray:
    """State at time ``t`` (see :func:`integrate_trajectory`)."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        return check_density3(rho3_0).copy()
    return integrate_trajectory(rho3_0, [0.0, t], p, tol, atol).rho[-1]


def postselect(rho3) -> np.ndarray:
    """Normalized ``f-e`` block.

    Raises:
        PostSelectionError: if the block trace is not above 1e-300.
    """
    block = np.asarray(rho3, dtype=complex)[:2, :2]
    tr = float(np.real(np.trace(block)))
    if not tr > 1e-300:
        raise PostSelectionError("the f-e block carries no weight")
    return _symmetrize(block / tr)


def embed(theta: float, phi: float) -> np.ndarray:
    """Pure qubit state ``nhq.pure_state(theta, phi)`` placed in the ``f-e`` block."""
    rho = np.zeros((3, 3), dtype=complex)
    rho[:2, :2] = nhq.projector(nhq.pure_state(theta, phi))
    return rho


# -- closed forms ----------------------------------------------------------------

def initial_state_ep() -> np.ndarray:
    """``(1/2) [[1, -i, 0], [i, 1, 0], [0, 0, 0]]``, the coalesced eigenstate in the block."""
    return 0.5 * np.array([[1, -1j, 0], [1j, 1, 0], [0, 0, 0]], dtype=complex)


def _damped(z, a):
    """``(e^{-a} cosh z, e^{-a} sinh z)`` without overflow for large ``Re z`` and ``a``."""
    ep, em = cmath.exp(z - a), cmath.exp(-z - a)
    return 0.5 * (ep + em), 0.5 * (ep - em)


def _real(z, what):
    if abs(z.imag) > IMAG_RESIDUE_TOL * max(1.0, abs(z.real)):
        raise InternalInconsistencyError(f"imaginary residue {z.imag:.3g} in {what}")
    return z.real


def analytic_ep_state(t: float, gamma1: float) -> np.ndarray:
    """Closed-form state at time ``t`` for the initial state :func:`initial_state_ep`, ``J = 1``.

    ``sqrt(gamma1^2 - 16)`` is taken complex, so the oscillating
    (``gamma1 < 4``) and decaying (``gamma1 > 4``) cases share one formula.
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    if gamma1 < 0:
        raise DomainError("gamma1 must be non-negative")
    w = cmath.sqrt(gamma1 * gamma1 - 16)
    ch, sh = _damped(0.5 * t * w, 0.5 * gamma1 * t)
    e = math.exp(-0.5 * gamma1 * t)
    den = 4 + gamma1
    rff = _real(0.5 * (4 * e + gamma1 * ch - w * sh) / den, "rho_ff")
    ree = _real(0.5 * (4 * e + gamma1 * ch + w * sh) / den, "rho_ee")
    fe = _real(0.5 * (gamma1 * e + 4 * ch) / den, "rho_fe")
    rgg = _real(1 - (4 * e + gamma1 * ch) / den, "rho_gg")
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0], rho[1, 1], rho[2, 2] = rff, ree, rgg
    rho[0, 1], rho[1, 0] = -1j * fe, 1j * fe
    return rho


def rho2N_closed(t: float, gamma1: float) -> np.ndarray:
    """Normalized ``f-e`` block for the initial state :func:`initial_state_ep`, ``J = 1``."""
    if t < 0:
        raise DomainError("t must be non-negative")
    w = cmath.sqrt(gamma1 * gamma1 - 16)
    z = 0.5 * t * w
    a = abs(z.real)
    ch, sh = _damped(z, a)
    ratio = _real(w * sh / (4 * math.exp(-a) + gamma1 * ch), "rho2N_ff")
    # (gamma1^2 - 16) / (gamma1 + 4 cosh z), written with the damped cosh
    inner = (gamma1 * gamma1 - 16) * math.exp(-a) / (gamma1 * math.exp(-a) + 4 * ch)
    fe = 1j * _real(-2 / (gamma1 - inner), "rho2N_fe")
    return np.array([[0.5 * (1 - ratio), fe], [-fe, 0.5 * (1 + ratio)]], dtype=complex)


@dataclass(frozen=True)
class ParametricForm3:
    """``rho3 = 2 r3 rho_qubit(theta3, phi3) + (1 - 2 r3) |g><g|``."""

    r3: float
    theta3: float
    phi3: float

    def matrix(self) -> np.ndarray:
        return parametric_matrix(self.r3, self.theta3, self.phi3)


def parametric_matrix(r3: float, theta3: float, phi3: float) -> np.ndarray:
    """Block form with ``rho_fe = e^{-i phi3} r3 sin(theta3)``."""
    c, s = math.cos(theta3), math.sin(theta3)
    return np.array([[r3 * (1 + c), cmath.exp(-1j * phi3) * r3 * s, 0],
                     [cmath.exp(1j * phi3) * r3 * s, r3 * (1 - c), 0],
                     [0, 0, 1 - 2 * r3]], dtype=complex)


def parametric_embed(theta: float, phi: float) -> np.ndarray:
    """Initial state ``r3 = 1/2, theta3 = theta, phi3 = phi``.

    Equals :func:`embed` ``(theta, -phi)``: the phase convention of the
    parametric form is conjugate to :func:`nhq.pure_state`.
    """
    return parametric_matrix(0.5, theta, phi)


def gellmann_bloch_norm(rho3) -> float:
    """Length of ``b`` in ``rho = I/3 + sum_a b_a lambda_a`` (Gell-Mann matrices)."""
    rho = np.asarray(rho3, dtype=complex)
    purity = float(np.real(np.trace(rho @ rho)))
    return math.sqrt(max(0.0, 0.5 * (purity - 1.0 / 3.0)))


def parametric_bloch_norm(r3: float) -> float:
    return math.sqrt(1.0 / 3.0 - 2 * r3 + 4 * r3 * r3)


def _sinhc(z):
    return 1 + z * z / 6 * (1 + z * z / 20) if abs(z) < SERIES_THRESHOLD else cmath.sinh(z) / z


def _r3(t, gamma, s2, s3):
    # block weight / 2; the (gamma^2 - 4) denominator is cancelled analytically
    w = cmath.sqrt(gamma * gamma - 4)
    z = t * w
    if abs(z) < SERIES_THRESHOLD:
        e = math.exp(-gamma * t)
        F = 0.5 * t * t * (1 + z * z / 12)
        G = t * _sinhc(z)
        val = e * (1 + gamma * (gamma - 2 * s2) * F - gamma * s3 * G)
    else:
        ch, sh = _damped(z, gamma * t)
        e = math.exp(-gamma * t)
        val = e + (gamma * (gamma - 2 * s2) * (ch - e) - gamma * s3 * w * sh) / (w * w)
    return 0.5 * _real(complex(val), "r3")


def analytic_parametric(t: float, gamma: float, theta: float, phi: float,
                        form: str = "closed") -> ParametricForm3:
    """``(r3, theta3, phi3)`` at time ``t`` for the start ``(1/2, theta, phi)``, ``J = 1``.

    ``gamma`` is the qubit rate, ``gamma1 = 2 gamma``. ``r3`` always comes
    from its closed form. With ``form="closed"`` the two angles are read off
    the closed-form amplitudes ``exp(-i H_PT t) v0``; ``form="secant"`` uses
    the inverse-secant and logarithm expressions instead and checks the
    reconstructed matrix against the closed form.

    Raises:
        DomainError: if the secant/log angles reconstruct a state off by more than 1e-5.
    """
    if t < 0 or gamma < 0:
        raise DomainError("t and gamma must be non-negative")
    s2 = math.sin(theta) * math.sin(phi)
    s3 = math.cos(theta)
    r3 = _r3(t, gamma, s2, s3)
    v0 = np.array([math.cos(theta / 2) * cmath.exp(-1j * phi), math.sin(theta / 2)])
    w = nhq.propagator(nhq.PTParams(1.0, gamma), t) @ v0
    a0, a1 = abs(w[0]), abs(w[1])
    theta3 = 2 * math.atan2(a1, a0)
    phi3 = (cmath.phase(w[1]) - cmath.phase(w[0])) % (2 * math.pi) if a0 and a1 else phi
    closed = ParametricForm3(r3, theta3, phi3)
    if form == "closed":
        return closed
    if form != "secant":
        raise DomainError(f"form must be 'closed' or 'secant', got {form!r}")
    th_p, ph_p = secant_log_angles(t, gamma, theta, phi)
    alt = ParametricForm3(r3, th_p, ph_p)
    mismatch = float(np.max(np.abs(alt.matrix() - closed.matrix())))
    if mismatch > SECANT_MISMATCH_TOL:
        raise DomainError(f"secant/log parametric angles miss the dynamics by {mismatch:.3g}")
    return alt


def secant_log_angles(t: float, gamma: float, theta: float, phi: float):
    """Inverse-secant ``theta3`` and logarithm ``phi3`` expressions, principal branches."""
    g = gamma
    s1 = math.sin(theta) * math.cos(phi)
    s2 = math.sin(theta) * math.sin(phi)
    s3 = math.cos(theta)
    w = cmath.sqrt(g * g - 4)
    if abs(w) < 1e-12:
        raise DomainError("secant/log angle expressions are singular at gamma = 2")
    ch, sh = cmath.cosh(t * w), cmath.sinh(t * w)
    e2 = cmath.exp(2 * t * w)
    P = 2 * w * (g * s2 - 2) + g * w * (g - 2 * s2) * ch - g * (g * g - 4) * s3 * sh
    num = 2 * cmath.exp(t * w) * P
    den = (g * g - 4) * (g + 2 * s3 * (e2 - 1) + e2 * (s3 * w - g) + s3 * w)
    theta3 = -cmath.acos(den / num)
    root = cmath.sqrt(1 - (g * g - 4) ** 2 * ((2 * s2 - g) * sh + s3 * w * ch) ** 2 / P ** 2)
    A = 1j * cmath.exp(t * (g + w)) * P * root
    B = (w * (g * (g * s2 - 2) + 1j * (g * g - 4) * s1) + 2 * w * (g - 2 * s2) * ch
         - 2 * (g * g - 4) * s3 * sh)
    phi3 = 1j * (t * (g + w) - cmath.log(-A / B))
    return theta3.real, phi3.real


# -- equivalence with the qubit dynamics -----------------------------------------

@dataclass
class EquivalenceReport:
    gamma1s: list
    thetas: list
    phis: list
    times: list
    max_deviation: float
    argmax: dict
    tol: float = EQUIVALENCE_TOL
    deviations: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tol

    def to_dict(self) -> dict:
        return {
            "grid": {"gamma1": self.gamma1s, "theta": self.thetas, "phi": self.phis,
                     "t": self.times},
            "max_deviation": self.max_deviation,
            "argmax": self.argmax,
            "max_deviation_per_gamma1": self.deviations,
            "tol": self.tol,
            "passed": self.passed,
        }


def equivalence_sweep(gamma1s=(1.0, 3.0, 4.0, 6.0), n_theta: int = 8, n_phi: int = 8,
                      times=None, J: float = 1.0, tol: float = EQUIVALENCE_TOL,
                      integrator_tol: float = 1e-10, integrator_atol: float = 1e-20,
                      raise_on_fail: bool = False
                      ) -> EquivalenceReport:
    """Compare post-selected three-level states with ``nhq.evolve_density`` on a grid.

    ``theta`` spans ``[0, pi]`` and ``phi`` spans ``[0, 2 pi)``; ``times``
    defaults to 10 points on ``[0, 5]``. The deviation is the Frobenius norm
    of the difference of the two qubit density matrices. The integrator runs
    with relative error control because the post-selected block can carry
    very little weight.

    Raises:
        EquivalenceError: with ``raise_on_fail`` when the maximum deviation
            reaches ``tol``.
    """
    times = np.linspace(0.0, 5.0, 10) if times is None else np.asarray(times, dtype=float)
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = 2 * math.pi * np.arange(n_phi) / n_phi
    worst, where, per_gamma = -1.0, {}, {}
    for g1 in gamma1s:
        p = LindbladParams(J, float(g1))
        q = p.qubit
        g_worst = 0.0
        for th in thetas:
            for ph in phis:
                traj = integrate_trajectory(embed(th, ph), times, p, tol=integrator_tol,
                                            atol=integrator_atol)
                rho_q0 = nhq.projector(nhq.pure_state(th, ph))
                for t, r3 in zip(times, traj.rho):
                    dev = qmat.frobenius_distance(postselect(r3), nhq.evolve_density(rho_q0, t, q))
                    g_worst = max(g_worst, dev)
                    if dev > worst:
                        worst = dev
                        where = {"gamma1": float(g1), "theta": float(th), "phi": float(ph),
                                 "t": float(t)}
        per_gamma[str(float(g1))] = g_worst
    report = EquivalenceReport([float(g) for g in gamma1s], thetas.tolist(), phis.tolist(),
                               times.tolist(), float(worst), where, tol, per_gamma)
    if raise_on_fail and not report.passed:
        raise EquivalenceError(f"post-selection deviation {worst:.3g} at {where}")
    return report
