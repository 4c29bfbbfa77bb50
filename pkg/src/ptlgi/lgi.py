"""Leggett-Garg correlators for projective measurements of ``Q = n.sigma``.

Each two-time correlator ``C_ij`` is its own experiment: prepare ``rho0``,
evolve to ``t_i``, measure ``Q`` (Lueders collapse), evolve the collapsed state
for ``t_j - t_i`` and measure again. With ``t_1 = 0``,

    K3 = C12 + C23 - C13.

Three evaluation paths are provided. :func:`k3` builds all joint probability
tables from density matrices and is the reference. :func:`k3_value` is a
scalar pure-Python kernel used as the optimizer objective, and
:func:`k3_batch` a broadcasting numpy kernel for grid scans. The fast kernels
use that for a pure state and a +-1 observable
``sum_b b p(b|a) = n.r_a(tau)`` with ``r_a`` the unit Bloch vector of the
evolved eigenstate ``a``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import qmat
from .errors import DomainError
from .nhq import PTParams, evolve_density, projector, pure_state

#: collapse branches with probability below this contribute exactly zero
BRANCH_CUTOFF = 1e-14
#: default bound on measurement times, in units of 1/J
T_MAX_DEFAULT = 50.0

LUDERS_BOUND = 1.5
ALGEBRAIC_BOUND = 3.0


@dataclass(frozen=True)
class MeasurementDirection:
    theta_m: float
    phi_m: float

    @property
    def n(self) -> np.ndarray:
        st = math.sin(self.theta_m)
        return np.array([st * math.cos(self.phi_m), st * math.sin(self.phi_m),
                         math.cos(self.theta_m)])


@dataclass(frozen=True)
class LGIConfig:
    """Initial state angles, measurement direction and the times ``t2 < t3`` (``t1 = 0``)."""

    theta: float
    phi: float
    theta_m: float
    phi_m: float
    t2: float
    t3: float

    def __post_init__(self):
        vals = (self.theta, self.phi, self.theta_m, self.phi_m, self.t2, self.t3)
        if not all(np.isfinite(vals)):
            raise DomainError("configuration entries must be finite")
        if not 0 < self.t2 < self.t3:
            raise DomainError(f"need 0 < t2 < t3, got t2={self.t2}, t3={self.t3}")

    @property
    def direction(self) -> MeasurementDirection:
        return MeasurementDirection(self.theta_m, self.phi_m)

    def as_vector(self) -> np.ndarray:
        return np.array([self.theta, self.phi, self.theta_m, self.phi_m, self.t2, self.t3])


@dataclass
class JointProbabilityTable:
    p_uu: float
    p_ud: float
    p_du: float
    p_dd: float

    @property
    def total(self) -> float:
        return self.p_uu + self.p_ud + self.p_du + self.p_dd

    @property
    def correlation(self) -> float:
        return self.p_uu + self.p_dd - self.p_ud - self.p_du

    def as_list(self):
        return [self.p_uu, self.p_ud, self.p_du, self.p_dd]


@dataclass
class K3Result:
    c12: float
    c23: float
    c13: float
    k3: float
    config: LGIConfig
    tables: dict = field(default_factory=dict)

    def audit(self) -> dict:
        """JSON-ready record: config, the three tables, correlators and K3."""
        return {
            "config": asdict(self.config),
            "tables": {k: dict(zip(("p_uu", "p_ud", "p_du", "p_dd"), t.as_list()))
                       for k, t in self.tables.items()},
            "c12": self.c12,
            "c23": self.c23,
            "c13": self.c13,
            "k3": self.k3,
        }


def observable(direction: MeasurementDirection):
    """``(Q, Pi_up, Pi_down)`` with ``Q = n.sigma`` and ``Pi_pm = (I +- Q)/2``."""
    n = direction.n
    Q = np.tensordot(n, qmat.PAULI, axes=1)
    return Q, 0.5 * (qmat.IDENTITY2 + Q), 0.5 * (qmat.IDENTITY2 - Q)


def _projectors(Q):
    if isinstance(Q, MeasurementDirection):
        Q = observable(Q)[0]
    Q = np.asarray(Q, dtype=complex)
    return 0.5 * (qmat.IDENTITY2 + Q), 0.5 * (qmat.IDENTITY2 - Q)


def joint_probs(rho0, Q, ti: float, tj: float, p: PTParams) -> JointProbabilityTable:
    """Joint outcome probabilities of measuring ``Q`` at ``ti`` and again at ``tj``.

    ``Q`` is a 2x2 observable or a :class:`MeasurementDirection`.

    Raises:
        DomainError: unless ``0 <= ti < tj``.
    """
    if not 0 <= ti < tj:
        raise DomainError(f"need 0 <= ti < tj, got ti={ti}, tj={tj}")
    projs = _projectors(Q)
    rho_i = evolve_density(rho0, ti, p)
    table = np.zeros((2, 2))
    for a, Pa in enumerate(projs):
        pa = float(np.real(np.trace(Pa @ rho_i)))
        if pa < BRANCH_CUTOFF:
            continue
        collapsed = Pa @ rho_i @ Pa / pa
        rho_j = evolve_density(collapsed, tj - ti, p)
        for b, Pb in enumerate(projs):
            table[a, b] = pa * float(np.real(np.trace(Pb @ rho_j)))
    return JointProbabilityTable(table[0, 0], table[0, 1], table[1, 0], table[1, 1])


def correlation(rho0, Q, ti: float, tj: float, p: PTParams) -> float:
    return joint_probs(rho0, Q, ti, tj, p).correlation


def k3(config: LGIConfig, p: PTParams) -> K3Result:
    """K3 for the pure initial state ``(theta, phi)``, each correlator simulated separately."""
    rho0 = projector(pure_state(config.theta, config.phi))
    Q = observable(config.direction)[0]
    t12 = joint_probs(rho0, Q, 0.0, config.t2, p)
    t23 = joint_probs(rho0, Q, config.t2, config.t3, p)
    t13 = joint_probs(rho0, Q, 0.0, config.t3, p)
    c12, c23, c13 = t12.correlation, t23.correlation, t13.correlation
    return K3Result(c12, c23, c13, c12 + c23 - c13, config,
                    {"12": t12, "23": t23, "13": t13})


# -- fast kernels ------------------------------------------------------------

def _prop_coeffs(J, gamma, t):
    """Real ``(a, b, d)`` with ``exp(-iHt) ~ [[a, -ib], [-ib, d]]`` up to a positive factor."""
    om = cmath.sqrt(J * J - 0.25 * gamma * gamma)
    z = om * t
    if abs(z) < 1e-6:
        c = 1.0 - 0.5 * (z * z).real
        s = t * (1.0 - (z * z).real / 6.0)
    else:
        c = cmath.cos(z).real
        s = (cmath.sin(z) / om).real
    a, b, d = c - 0.5 * gamma * s, J * s, c + 0.5 * gamma * s
    m = max(abs(a), abs(b), abs(d))
    return a / m, b / m, d / m


def _nr(w0, w1, nx, ny, nz):
    """``<w|n.sigma|w> / <w|w>``."""
    n0 = w0.real * w0.real + w0.imag * w0.imag
    n1 = w1.real * w1.real + w1.imag * w1.imag
    cross = (w0.conjugate() * complex(nx, -ny) * w1).real
    return (nz * (n0 - n1) + 2.0 * cross) / (n0 + n1)


def k3_value(x, J: float = 1.0, gamma: float = 0.0) -> float:
    """K3 at ``x = (theta, phi, theta_m, phi_m, t2, t3)`` (scalar fast path)."""
    theta, phi, theta_m, phi_m, t2, t3 = x
    st, ct = math.sin(theta_m), math.cos(theta_m)
    nx, ny, nz = st * math.cos(phi_m), st * math.sin(phi_m), ct
    ch, sh = math.cos(0.5 * theta_m), math.sin(0.5 * theta_m)
    e = cmath.exp(1j * phi_m)
    up = (complex(ch), e * sh)
    dn = (complex(sh), -e * ch)
    psi = (cmath.exp(1j * phi) * math.cos(0.5 * theta), complex(math.sin(0.5 * theta)))

    def apply(U, v):
        a, b, d = U
        return (a * v[0] - 1j * b * v[1], -1j * b * v[0] + d * v[1])

    def corr(m_i, U):
        # sum over first outcome a of p_a * a * <n.r> of the evolved eigenstate
        total = 0.0
        pu, pd = 0.5 * (1.0 + m_i), 0.5 * (1.0 - m_i)
        if pu >= BRANCH_CUTOFF:
            total += pu * _nr(*apply(U, up), nx, ny, nz)
        if pd >= BRANCH_CUTOFF:
            total -= pd * _nr(*apply(U, dn), nx, ny, nz)
        return total

    U2 = _prop_coeffs(J, gamma, t2)
    U23 = _prop_coeffs(J, gamma, t3 - t2)
    U3 = _prop_coeffs(J, gamma, t3)
    m0 = _nr(*psi, nx, ny, nz)
    m2 = _nr(*apply(U2, psi), nx, ny, nz)
    return corr(m0, U2) + corr(m2, U23) - corr(m0, U3)


def k3_amplification(x, J: float = 1.0, gamma: float = 0.0) -> float:
    """Worst round-off amplification ``|U| |v| / |U v|`` over the propagations in K3.

    Relative errors of order machine epsilon in the propagated amplitudes are
    magnified by this factor; deep in the broken phase it grows like
    ``exp(2 kappa t)`` for states near the repelling fixed point.
    """
    theta, phi, theta_m, phi_m, t2, t3 = x
    ch, sh = math.cos(0.5 * theta_m), math.sin(0.5 * theta_m)
    e = cmath.exp(1j * phi_m)
    up, dn = (complex(ch), e * sh), (complex(sh), -e * ch)
    psi = (cmath.exp(1j * phi) * math.cos(0.5 * theta), complex(math.sin(0.5 * theta)))
    worst = 1.0
    for t, states in ((t2, (psi, up, dn)), (t3 - t2, (up, dn)), (t3, (psi, up, dn))):
        a, b, d = _prop_coeffs(J, gamma, t)
        norm_u = math.sqrt(a * a + 2 * b * b + d * d)
        for v in states:
            w = math.hypot(abs(a * v[0] - 1j * b * v[1]), abs(-1j * b * v[0] + d * v[1]))
            worst = max(worst, norm_u / w if w > 0 else math.inf)
    return worst


def _prop_coeffs_batch(J, gamma, t):
    om = np.sqrt(complex(J * J - 0.25 * gamma * gamma))
    t = np.asarray(t, dtype=float)
    z = om * t
    small = np.abs(z) < 1e-6
    zs = np.where(small, 0.0, z)
    c = np.where(small, 1.0 - 0.5 * (z * z).real, np.cos(zs).real)
    s = np.where(small, t * (1.0 - (z * z).real / 6.0),
                 (np.sin(zs) / (om if om != 0 else 1.0)).real)
    a, b, d = c - 0.5 * gamma * s, J * s, c + 0.5 * gamma * s
    m = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(d))
    return a / m, b / m, d / m


def k3_amplification_batch(theta, phi, theta_m, phi_m, t2, t3, p: PTParams) -> np.ndarray:
    """Vectorized :func:`k3_amplification`."""
    theta, phi, theta_m, phi_m, t2, t3 = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (theta, phi, theta_m, phi_m, t2, t3)))
    ch, sh = np.cos(0.5 * theta_m), np.sin(0.5 * theta_m)
    e = np.exp(1j * phi_m)
    up, dn = (ch + 0j, e * sh), (sh + 0j, -e * ch)
    psi = (np.exp(1j * phi) * np.cos(0.5 * theta), np.sin(0.5 * theta) + 0j)
    worst = np.ones(theta.shape)
    for t, states in ((t2, (psi, up, dn)), (t3 - t2, (up, dn)), (t3, (psi, up, dn))):
        a, b, d = _prop_coeffs_batch(p.J, p.gamma, t)
        norm_u = np.sqrt(a * a + 2 * b * b + d * d)
        for v in states:
            w = np.hypot(np.abs(a * v[0] - 1j * b * v[1]), np.abs(-1j * b * v[0] + d * v[1]))
            with np.errstate(divide="ignore"):
                worst = np.maximum(worst, np.where(w > 0, norm_u / np.where(w > 0, w, 1), np.inf))
    return worst


def k3_batch(theta, phi, theta_m, phi_m, t2, t3, p: PTParams) -> np.ndarray:
    """Vectorized K3; all arguments broadcast against each other."""
    theta, phi, theta_m, phi_m, t2, t3 = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (theta, phi, theta_m, phi_m, t2, t3)))
    nx = np.sin(theta_m) * np.cos(phi_m)
    ny = np.sin(theta_m) * np.sin(phi_m)
    nz = np.cos(theta_m)
    ch, sh = np.cos(0.5 * theta_m), np.sin(0.5 * theta_m)
    e = np.exp(1j * phi_m)
    up = (ch + 0j, e * sh)
    dn = (sh + 0j, -e * ch)
    psi = (np.exp(1j * phi) * np.cos(0.5 * theta), np.sin(0.5 * theta) + 0j)

    def nr(w):
        n0, n1 = np.abs(w[0]) ** 2, np.abs(w[1]) ** 2
        cross = np.real(np.conj(w[0]) * (nx - 1j * ny) * w[1])
        return (nz * (n0 - n1) + 2 * cross) / (n0 + n1)

    def apply(U, v):
        a, b, d = U
        return (a * v[0] - 1j * b * v[1], -1j * b * v[0] + d * v[1])

    def corr(m_i, U):
        pu, pd = 0.5 * (1 + m_i), 0.5 * (1 - m_i)
        return (np.where(pu >= BRANCH_CUTOFF, pu * nr(apply(U, up)), 0.0)
                - np.where(pd >= BRANCH_CUTOFF, pd * nr(apply(U, dn)), 0.0))

    J, g = p.J, p.gamma
    U2 = _prop_coeffs_batch(J, g, t2)
    U23 = _prop_coeffs_batch(J, g, t3 - t2)
    U3 = _prop_coeffs_batch(J, g, t3)
    m0 = nr(psi)
    m2 = nr(apply(U2, psi))
    return corr(m0, U2) + corr(m2, U23) - corr(m0, U3)
