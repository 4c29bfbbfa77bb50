import math

import numpy as np
import pytest

from ptlgi import nhq, soe
from ptlgi.errors import DomainError, InternalInconsistencyError
from ptlgi.nhq import PTParams


def test_hermitian_uniform_speed():
    s = soe.speed_components([0.0, 0.3, 0.4], PTParams(1, 0))
    assert s.v == pytest.approx(1.0)
    assert s.v3_sq == 0.0


@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0, 3.0])
def test_max_speed_state(gamma):
    s = soe.speed_components([0.0, -0.5, 0.0], PTParams(1, gamma))
    assert s.v == pytest.approx(1 + gamma / 2, abs=1e-12)


def test_signed_v3():
    s = soe.speed_components([0.0, 0.5, 0.0], PTParams(1, 1))
    assert s.v3_sq == pytest.approx(-1.0)
    assert s.v == pytest.approx(0.5)


def test_fixed_point_speed_zero():
    p = PTParams(1, 3)
    fp = nhq.fixed_points(p)
    for S in (fp.source, fp.sink):
        assert soe.speed_components(S, p).v < 1e-8


def test_errors():
    with pytest.raises(DomainError):
        soe.speed_components([0.1, 0, 0], PTParams())
    with pytest.raises(InternalInconsistencyError):
        # slightly off-sphere state with a large negative commutator term
        soe.speed_components([0.0, 0.5 + 5e-8, 0.0], PTParams(1, 2))


def test_geodesic_identity():
    for g in (0.0, 0.7, 2.0, 3.3):
        p = PTParams(1, g)
        for a in np.linspace(0, 2 * math.pi, 37):
            v = soe.speed_components(soe.geodesic_state(a), p).v
            assert v == pytest.approx(abs(1 + (g / 2) * math.sin(a)), abs=1e-10)


def test_fidelity_oracle(rng):
    for _ in range(30):
        v = rng.normal(size=3)
        S = 0.5 * v / np.linalg.norm(v)
        p = PTParams(1, rng.uniform(0, 4))
        assert soe.fidelity_speed(S, p) == pytest.approx(soe.speed_components(S, p).v, abs=1e-4)


def test_speed_along_trajectory_cross_check():
    p = PTParams(1, 1.5)
    traj = nhq.evolve_bloch_numeric(nhq.bloch_from_angles(1.0, 0.3), 5.0, p)
    samples = soe.speed_along_trajectory(traj, p, cross_check=True)
    assert len(samples) == len(traj)
    assert all(s.v >= 0 for s in samples)
    assert samples[3].row()[0] == traj.t[3]


def test_eigenstate_trajectory_zero_speed():
    p = PTParams(1, 3)
    sink = nhq.fixed_points(p).sink
    traj = nhq.evolve_bloch_numeric(sink, 5.0, p)
    assert max(s.v for s in soe.speed_along_trajectory(traj, p)) < 1e-7


@pytest.mark.parametrize("gamma,vmax,vmin", [(1.0, 1.5, 0.5), (3.0, 2.5, 0.0), (0.0, 1.0, 1.0)])
def test_geodesic_extremes(gamma, vmax, vmin):
    ext = soe.geodesic_extremes(PTParams(1, gamma))
    assert ext.v_max == pytest.approx(vmax, abs=1e-8)
    assert ext.v_min == pytest.approx(vmin, abs=1e-8)


def test_exceptional_minimum_location():
    ext = soe.geodesic_extremes(PTParams(1, 2))
    assert ext.v_min < 1e-8
    # v grows quadratically away from the minimum, so the location is ~sqrt(1e-8)
    assert np.allclose(ext.argmin_state, [0, 0.5, 0], atol=1e-3)
    assert ext.alpha_min == pytest.approx(3 * math.pi / 2, abs=1e-3)


def test_order_parameter_scan():
    gammas = [0, 0.5, 1, 1.5, 2, 2.5, 3]
    rows = soe.order_parameter_scan(gammas)
    assert np.allclose([r[2] for r in rows], [1, 0.75, 0.5, 0.25, 0, 0, 0], atol=1e-8)
    assert np.allclose([r[1] for r in rows], [1, 1.25, 1.5, 1.75, 2, 2.25, 2.5], atol=1e-8)
    assert all(np.diff([r[1] for r in rows]) > 0)
    with pytest.raises(DomainError):
        soe.order_parameter_scan([-1.0])


def test_vmin_kink_at_exceptional_point():
    gammas = np.linspace(0, 4, 41)
    rows = soe.order_parameter_scan(gammas, n_samples=2000)
    vmin = np.array([r[2] for r in rows])
    assert np.allclose(vmin, np.maximum(0, 1 - gammas / 2), atol=1e-8)
    assert gammas[np.argmax(vmin < 1e-8)] == pytest.approx(2.0)


def test_full_sphere_vmax_matches_geodesic():
    for g in (0.5, 3.0):
        full = soe.geodesic_extremes(PTParams(1, g), n_samples=20000, full_sphere=True)
        assert full.v_max == pytest.approx(1 + g / 2, abs=1e-2)
