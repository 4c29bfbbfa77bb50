import math

import numpy as np
import pytest

from ptlgi._ode import integrate
from ptlgi.errors import StiffnessError


def test_exponential_decay():
    ts = np.linspace(0, 5, 11)
    ys, stats = integrate(lambda t, y: -y, np.array([1.0]), ts, tol=1e-10)
    assert np.allclose(ys[:, 0], np.exp(-ts), atol=1e-9)
    assert stats.n_accepted > 0


def test_harmonic_oscillator_complex():
    ts = np.linspace(0, 10, 21)
    ys, _ = integrate(lambda t, y: -1j * y, np.array([1.0 + 0j]), ts, tol=1e-11)
    assert np.allclose(ys[:, 0], np.exp(-1j * ts), atol=1e-8)


def test_projection_hook_tracks_drift():
    def project(y):
        return y / np.linalg.norm(y)

    ts = np.linspace(0, 3, 4)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    ys, stats = integrate(lambda t, y: rot @ y, np.array([1.0, 0.0]), ts, tol=1e-6,
                          project=project)
    assert np.allclose(np.linalg.norm(ys, axis=1), 1.0, atol=1e-14)
    assert 0 < stats.max_projection_drift < 1e-4


def test_relative_tolerance_mode():
    ts = np.array([0.0, 30.0])
    ys, _ = integrate(lambda t, y: -y, np.array([1.0]), ts, tol=1e-11, atol=1e-300)
    assert abs(ys[-1, 0] / math.exp(-30) - 1) < 1e-8


def test_step_underflow_raises():
    with pytest.raises(StiffnessError):
        integrate(lambda t, y: 1.0 / (1.0 - t) ** 3 * np.ones(1), np.array([0.0]),
                  np.array([0.0, 2.0]), tol=1e-12)
