import math

import numpy as np
import pytest
from scipy.linalg import expm

from ptlgi import nhq, qmat
from ptlgi.errors import DomainError, StiffnessError
from ptlgi.nhq import PTParams, Regime


def random_pure_bloch(rng):
    v = rng.normal(size=3)
    return 0.5 * v / np.linalg.norm(v)


def random_geodesic(rng):
    a = rng.uniform(0, 2 * math.pi)
    return 0.5 * math.cos(a), 0.5 * math.sin(a)


def density_bloch(S0, t, p):
    return qmat.density_to_bloch(nhq.evolve_density(qmat.bloch_to_density(S0), t, p))


def test_params_validation():
    with pytest.raises(DomainError):
        PTParams(J=0.0)
    with pytest.raises(DomainError):
        PTParams(gamma=-1.0)
    with pytest.raises(DomainError):
        PTParams(gamma=float("nan"))


def test_hamiltonian_examples():
    assert np.allclose(nhq.hamiltonian(PTParams(1, 0)), qmat.SIGMA_X)
    assert np.allclose(nhq.hamiltonian(PTParams(1, 2)), [[-1j, 1], [1, 1j]])


def test_eigenvalues_broken_and_exceptional():
    e = qmat.eig2(nhq.hamiltonian(PTParams(1, 3)))
    assert np.allclose(sorted(e.values.imag), [-math.sqrt(1.25), math.sqrt(1.25)])
    assert np.allclose(e.values.real, 0)
    assert qmat.eig2(nhq.hamiltonian(PTParams(1, 2))).degenerate


@pytest.mark.parametrize("gamma,expected", [(1.9, Regime.SYMMETRIC), (2.0, Regime.EXCEPTIONAL),
                                            (3.0, Regime.BROKEN), (0.0, Regime.SYMMETRIC)])
def test_regime(gamma, expected):
    assert nhq.regime(PTParams(1, gamma)) is expected


def test_bloch_from_angles_matches_state():
    for th, ph in [(0.3, 1.2), (2.0, 4.0), (math.pi / 2, math.pi / 2)]:
        rho = nhq.projector(nhq.pure_state(th, ph))
        assert np.allclose(qmat.density_to_bloch(rho), nhq.bloch_from_angles(th, ph))


def test_frame_roundtrip(rng):
    S = random_pure_bloch(rng)
    assert np.allclose(nhq.from_frame(*nhq.to_frame(S)), S)


def test_evolve_density_identity_and_rabi():
    rho0 = nhq.projector([1, 0])
    p = PTParams(1, 0.7)
    assert np.array_equal(nhq.evolve_density(rho0, 0.0, p), rho0)
    S = density_bloch([0, 0, 0.5], math.pi / 4, PTParams(1, 0))
    assert np.allclose(S, [0, -0.5, 0], atol=1e-14)
    with pytest.raises(DomainError):
        nhq.evolve_density(rho0, -1.0, p)


@pytest.mark.parametrize("gamma", [0.0, 1.0, 3.0])
def test_eigenstates_are_stationary(gamma):
    p = PTParams(1, gamma)
    fp = nhq.fixed_points(p)
    # round-off at a broken-phase source grows like exp(2 kappa t)
    times = {True: (0.5, 3.0), False: (0.5, 3.0, 10.0)}
    for S, is_source in ((fp.source, True), (fp.sink, False)):
        rho0 = qmat.bloch_to_density(S)
        for t in times[is_source and fp.attracting]:
            assert qmat.frobenius_distance(nhq.evolve_density(rho0, t, p), rho0) < 1e-9


def test_purity_preserved(rng):
    for _ in range(20):
        p = PTParams(1, rng.uniform(0, 4))
        rho0 = qmat.bloch_to_density(random_pure_bloch(rng))
        for t in np.linspace(0, 20, 9):
            w = np.linalg.eigvalsh(nhq.evolve_density(rho0, t, p))
            assert np.allclose(w, [0, 1], atol=1e-9)


def test_density_matches_bloch_ode(rng):
    worst = 0.0
    for _ in range(50):
        p = PTParams(1, rng.uniform(0, 4))
        S0 = random_pure_bloch(rng)
        t = rng.uniform(0, 10)
        traj = nhq.evolve_bloch_numeric(S0, t, p, tol=1e-10, t_eval=[t])
        worst = max(worst, np.abs(traj.S[-1] - density_bloch(S0, t, p)).max())
    assert worst < 1e-6


def test_bloch_ode_matches_density_20_times():
    p = PTParams(1, 1.5)
    S0 = nhq.bloch_from_angles(1.0, 0.4)
    ts = np.linspace(0, 10, 20)
    traj = nhq.evolve_bloch_numeric(S0, 10.0, p, t_eval=ts)
    ref = np.array([density_bloch(S0, t, p) for t in ts])
    assert np.abs(traj.S - ref).max() < 1e-7
    assert abs(np.linalg.norm(traj.S[-1]) - 0.5) < 100 * 1e-9


def test_bloch_ode_hermitian_precession():
    S0 = np.array([0.0, 0.3, 0.4])
    traj = nhq.evolve_bloch_numeric(S0, 10.0, PTParams(1, 0))
    assert np.allclose(np.linalg.norm(traj.S, axis=1), 0.5, atol=1e-8)
    assert np.abs(traj.S[:, 0]).max() < 1e-12


def test_bloch_ode_flows_to_sink():
    p = PTParams(1, 3)
    fp = nhq.fixed_points(p)
    S0 = fp.source + np.array([0.0, 1e-3, 0.0])
    S0 = 0.5 * S0 / np.linalg.norm(S0)
    traj = nhq.evolve_bloch_numeric(S0, 20.0, p)
    assert np.linalg.norm(traj.S[-1] - fp.sink) < 1e-4


def test_bloch_ode_validation():
    with pytest.raises(DomainError):
        nhq.evolve_bloch_numeric([0.1, 0, 0], 1.0, PTParams())
    with pytest.raises(DomainError):
        nhq.evolve_bloch_numeric([0.5, 0, 0], 1.0, PTParams(), tol=1e-3)


def test_stiffness_error_type_is_exported():
    assert issubclass(StiffnessError, Exception)


def test_S_A_plane_invariance(rng):
    for g in (0.5, 2.0, 3.5):
        SB0, Sn0 = random_geodesic(rng)
        traj = nhq.evolve_bloch_numeric(nhq.from_frame(0.0, SB0, Sn0), 15.0, PTParams(1, g))
        assert np.abs(traj.S[:, 0]).max() < 1e-7


def test_fixed_points_ode_stationary():
    for g in (0.0, 1.0, 3.0):
        p = PTParams(1, g)
        fp = nhq.fixed_points(p)
        for S0 in (fp.source, fp.sink):
            assert np.abs(nhq.bloch_rhs(S0, p)).max() < 1e-10
            traj = nhq.evolve_bloch_numeric(S0, 10.0, p)
            assert np.abs(traj.S - S0).max() < 1e-7


def test_fixed_points_examples():
    fp = nhq.fixed_points(PTParams(1, 0))
    assert np.allclose(sorted([fp.source[0], fp.sink[0]]), [-0.5, 0.5])
    assert not fp.attracting
    fp = nhq.fixed_points(PTParams(1, 2))
    assert fp.degenerate
    assert np.allclose(fp.source, [0, 0.5, 0]) and np.allclose(fp.sink, [0, 0.5, 0])
    fp = nhq.fixed_points(PTParams(1, 3))
    assert fp.attracting and not fp.degenerate


def test_gamma_zero_is_unitary(rng):
    p = PTParams(1.3, 0.0)
    rho0 = qmat.bloch_to_density(random_pure_bloch(rng))
    for t in (0.1, 1.0, 7.0):
        U = expm(-1j * t * 1.3 * qmat.SIGMA_X)
        assert np.allclose(nhq.evolve_density(rho0, t, p), U @ rho0 @ U.conj().T, atol=1e-10)


def test_continuity_across_exceptional_point(rng):
    rho0 = qmat.bloch_to_density(random_pure_bloch(rng))
    for t in (0.5, 2.0, 5.0):
        a = nhq.evolve_density(rho0, t, PTParams(1, 2 - 1e-7))
        b = nhq.evolve_density(rho0, t, PTParams(1, 2 + 1e-7))
        assert qmat.frobenius_distance(a, b) < 1e-5


def test_evolve_density_near_source_stable():
    # the product form U rho U^dagger lost purity here; drift is bounded by
    # the intrinsic exp(2 kappa t) amplification of a 1e-16 perturbation
    p = PTParams(1, 3)
    kappa = math.sqrt(1.25)
    src = nhq.fixed_points(p).source
    rho0 = qmat.bloch_to_density(src)
    for t in (2.0, 5.0, 10.0):
        drift = np.abs(density_bloch(src, t, p) - src).max()
        assert drift < 1e-15 * math.exp(2 * kappa * t)
    assert np.allclose(np.linalg.eigvalsh(nhq.evolve_density(rho0, 40.0, p)), [0, 1], atol=1e-9)


def test_bloch_rhs_frame_form(rng):
    p = PTParams(1, 2.7)
    S = random_pure_bloch(rng)
    d = nhq.bloch_rhs(S, p)
    dA, dB, dn = nhq.bloch_rhs_components(*nhq.to_frame(S), p)
    assert np.allclose(nhq.to_frame(d), (dA, dB, dn))
    assert np.allclose(nhq.bloch_rhs(S, PTParams(1, 0)), 2 * np.cross([1, 0, 0], S))


@pytest.mark.parametrize("gamma", [0.0, 1.0, 1.9, 2.0, 2.5, 3.0])
def test_analytic_geodesic_matches_ode(gamma, rng):
    p = PTParams(1, gamma)
    ts = np.linspace(0, 6, 25)
    for _ in range(4):
        SB0, Sn0 = random_geodesic(rng)
        sb, sn = nhq.analytic_SB_signed(SB0, Sn0, ts, p)
        traj = nhq.evolve_bloch_numeric(nhq.from_frame(0.0, SB0, Sn0), 6.0, p, tol=1e-11,
                                        t_eval=ts)
        _, SB, Sn = nhq.to_frame(traj.S)
        assert np.abs(sb - SB).max() < 1e-6
        assert np.abs(sn - Sn).max() < 1e-6
        sb_abs, _ = nhq.analytic_SB_Sn(SB0, Sn0, ts, p)
        assert np.allclose(sb_abs, np.abs(SB), atol=1e-6)


def test_analytic_initial_condition_and_fixed_point():
    p = PTParams(1, 1.2)
    sb, sn = nhq.analytic_SB_Sn(-0.3, 0.4, 0.0, p)
    assert sb == pytest.approx(0.3, abs=1e-10) and sn == pytest.approx(0.4, abs=1e-10)
    p = PTParams(1, 3)
    _, SB, Sn = nhq.to_frame(nhq.fixed_points(p).source)
    sb, sn = nhq.analytic_SB_Sn(SB, Sn, np.linspace(0, 10, 5), p)
    assert np.allclose(sb, abs(SB)) and np.allclose(sn, Sn)


def test_analytic_rejects_off_geodesic():
    with pytest.raises(DomainError):
        nhq.analytic_SB_Sn(0.1, 0.1, 1.0, PTParams(1, 1))


def test_cosine_form_agrees_away_from_ep():
    p = PTParams(1, 1.0)
    SB0, Sn0 = -0.2, -math.sqrt(0.25 - 0.04)
    C = nhq.integration_constant(SB0, Sn0, p)
    ts = np.linspace(0, 3, 7)
    sb, sn = nhq.cosine_SB_Sn(ts, C, p)
    sb_ref, sn_ref = nhq.analytic_SB_Sn(SB0, Sn0, ts, p)
    assert np.allclose(sb, sb_ref, atol=1e-9) and np.allclose(sn, sn_ref, atol=1e-9)


def test_path_coefficient_examples():
    assert nhq.path_coefficient(0.0, PTParams(1, 3)) == 0.0
    assert nhq.path_coefficient(-0.5, PTParams(1, 3)) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        nhq.path_coefficient(0.6, PTParams())


def test_path_coefficient_predicts_initial_motion(rng):
    # dS_B/dt(0) = -2 * coefficient on the geodesic
    for _ in range(100):
        p = PTParams(1, rng.uniform(0, 4))
        SB0, Sn0 = random_geodesic(rng)
        coef = nhq.path_coefficient(Sn0, p)
        h = 1e-6
        traj = nhq.evolve_bloch_numeric(nhq.from_frame(0.0, SB0, Sn0), h, p, tol=1e-12,
                                        t_eval=[h])
        dSB = (traj.S[-1, 2] - SB0) / h
        assert dSB == pytest.approx(-2 * coef, abs=1e-4)
        if SB0 < 0 and abs(coef) > 1e-3:
            shrinking = abs(traj.S[-1, 2]) < abs(SB0)
            assert shrinking == (coef < 0)


def test_trajectory_rows_and_validation():
    traj = nhq.Trajectory([0.0, 1.0], [[0.5, 0, 0], [0.5, 0, 0]])
    assert list(traj.rows())[1] == (1.0, 0.5, 0.0, 0.0)
    with pytest.raises(DomainError):
        nhq.Trajectory([1.0, 0.0], [[0.5, 0, 0], [0.5, 0, 0]])
