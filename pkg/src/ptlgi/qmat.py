"""Small exact-size complex linear algebra (2x2 and 3x3).

Matrices are plain ``numpy`` complex arrays. The 2x2 exponential is evaluated
in closed form through the Pauli decomposition ``M = c I + d.sigma`` so that it
stays accurate when the two eigenvalues coalesce (exceptional points of a
non-Hermitian generator), where eigen-decomposition based routines break down.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError

#: |mu| below which sinh(mu)/mu is replaced by its Taylor series.
SERIES_THRESHOLD = 1e-6
#: |discriminant| below which the two eigenvalues are treated as coalesced.
DEGENERACY_THRESHOLD = 1e-12
#: default tolerance of the matrix predicates.
PREDICATE_TOL = 1e-10

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


def _check_finite(M):
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    return M


def pauli_decompose(M):
    """Return ``(c, d)`` with ``M = c I + d[0] X + d[1] Y + d[2] Z``.

    Works on a single 2x2 matrix or a stack of shape ``(..., 2, 2)``.
    """
    M = np.asarray(M, dtype=complex)
    m00, m01 = M[..., 0, 0], M[..., 0, 1]
    m10, m11 = M[..., 1, 0], M[..., 1, 1]
    c = 0.5 * (m00 + m11)
    d = np.stack([0.5 * (m01 + m10), 0.5j * (m01 - m10), 0.5 * (m00 - m11)], axis=-1)
    return c, d


def _sinhc(mu, threshold):
    """sinh(mu)/mu with the small-|mu| series branch."""
    mu = np.asarray(mu, dtype=complex)
    small = np.abs(mu) < threshold
    safe = np.where(small, 1.0, mu)
    mu2 = mu * mu
    series = 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(small, series, np.sinh(safe) / safe)


def expm2(M, threshold: float = SERIES_THRESHOLD):
    """Matrix exponential of a 2x2 complex matrix (or a stack of them).

    Uses ``exp(M) = exp(c) (cosh(mu) I + sinh(mu)/mu (M - c I))`` with
    ``mu = sqrt(d.d)``. Below ``|mu| < threshold`` the ratio ``sinh(mu)/mu`` is
    taken from its series ``1 + mu^2/6 + mu^4/120``.

    Raises:
        DomainError: if ``M`` contains NaN or Inf.
    """
    M = _check_finite(M)
    c, _ = pauli_decompose(M)
    mu2 = (0.25 * (M[..., 0, 0] - M[..., 1, 1]) ** 2 + M[..., 0, 1] * M[..., 1, 0])
    mu = np.sqrt(mu2)
    ch = np.cosh(mu)
    sc = _sinhc(mu, threshold)
    shifted = M - c[..., None, None] * IDENTITY2
    out = np.exp(c)[..., None, None] * (ch[..., None, None] * IDENTITY2
                                        + sc[..., None, None] * shifted)
    return out


def expm2_scaled(M, threshold: float = SERIES_THRESHOLD):
    """Overflow-safe 2x2 exponential.

    Returns ``(E, log_scale)`` with ``exp(M) = exp(log_scale) * E`` and the
    entries of ``E`` of order one. Useful when only the direction of the
    propagated state matters (normalized evolution) and ``|mu|`` is large.
    """
    M = _check_finite(M)
    c, _ = pauli_decompose(M)
    mu2 = (0.25 * (M[..., 0, 0] - M[..., 1, 1]) ** 2 + M[..., 0, 1] * M[..., 1, 0])
    mu = np.sqrt(mu2)
    # principal sqrt gives Re(mu) >= 0
    r = mu.real
    ch = 0.5 * (np.exp(mu - r) + np.exp(-mu - r))
    small = np.abs(mu) < threshold
    safe = np.where(small, 1.0, mu)
    sc = np.where(small, _sinhc(mu, threshold) * np.exp(-r),
                  0.5 * (np.exp(mu - r) - np.exp(-mu - r)) / safe)
    shifted = M - c[..., None, None] * IDENTITY2
    phase = np.exp(1j * c.imag)
    E = phase[..., None, None] * (ch[..., None, None] * IDENTITY2 + sc[..., None, None] * shifted)
    return E, c.real + r


class Eig2(NamedTuple):
    """Eigenpairs of a 2x2 matrix; ``vectors[:, k]`` belongs to ``values[k]``."""

    values: np.ndarray
    vectors: np.ndarray
    degenerate: bool


def _fix_phase(v):
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v) > np.abs(v).max() * (1 - 1e-12)))
    return v * (abs(v[k]) / v[k])


def eig2(M, tol: float = DEGENERACY_THRESHOLD) -> Eig2:
    """Eigenvalues and normalized right eigenvectors of a 2x2 matrix.

    Eigenvalues come from the quadratic formula, ordered ``c + mu, c - mu``.
    Eigenvectors have unit Euclidean norm and their first largest component
    made real positive. When ``|discriminant| < tol`` the coalesced
    eigenvector is returned twice and ``degenerate`` is set.
    """
    M = _check_finite(M)
    if M.shape != (2, 2):
        raise DomainError("eig2 expects a single 2x2 matrix")
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = tr * tr - 4 * det
    degenerate = abs(disc) < tol
    root = 0.0 if degenerate else np.sqrt(disc + 0j)
    values = np.array([0.5 * (tr + root), 0.5 * (tr - root)], dtype=complex)
    vecs = np.empty((2, 2), dtype=complex)
    for k, lam in enumerate(values):
        a = np.array([M[0, 1], lam - M[0, 0]])
        b = np.array([lam - M[1, 1], M[1, 0]])
        v = a if np.linalg.norm(a) >= np.linalg.norm(b) else b
        if np.linalg.norm(v) < 1e-300:
            # M is a multiple of the identity
            v = np.eye(2, dtype=complex)[k]
        vecs[:, k] = _fix_phase(v)
    if degenerate:
        vecs[:, 1] = vecs[:, 0]
    return Eig2(values, vecs, bool(degenerate))


def dagger(M):
    return np.conj(np.swapaxes(np.asarray(M), -1, -2))


def trace(M) -> complex:
    return complex(np.trace(M))


def matmul(A, B):
    return np.asarray(A) @ np.asarray(B)


def add(A, B):
    return np.asarray(A) + np.asarray(B)


def scale(a, M):
    return a * np.asarray(M)


def frobenius_distance(A, B) -> float:
    return float(np.linalg.norm(np.asarray(A) - np.asarray(B)))


def is_hermitian(M, tol: float = PREDICATE_TOL) -> bool:
    M = np.asarray(M)
    return bool(np.max(np.abs(M - dagger(M))) <= tol)


def is_unit_trace(M, tol: float = PREDICATE_TOL) -> bool:
    return abs(trace(M) - 1.0) <= tol


def is_positive_semidefinite(M, tol: float = PREDICATE_TOL) -> bool:
    """Hermitian with smallest eigenvalue above ``-tol``."""
    if not is_hermitian(M, tol):
        return False
    M = np.asarray(M)
    w = np.linalg.eigvalsh(0.5 * (M + dagger(M)))
    return bool(w.min() >= -tol)


def bloch_to_density(S):
    """``rho = I/2 + S.sigma`` (S is half the usual unit Bloch vector)."""
    S = np.asarray(S, dtype=float)
    return 0.5 * IDENTITY2 + np.tensordot(S, PAULI, axes=([-1], [0]))


def density_to_bloch(rho):
    """Inverse of :func:`bloch_to_density`, ``S_k = tr(rho sigma_k) / 2``."""
    rho = np.asarray(rho)
    return 0.5 * np.real(np.einsum("...ij,kji->...k", rho, PAULI))
