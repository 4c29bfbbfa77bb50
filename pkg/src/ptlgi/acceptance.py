"""Acceptance checks shared by the test suite and ``ptlgi verify``.

Each ``criterion_N`` function runs one check at its stated tolerance and
returns a :class:`CriterionResult`. Optimizer results are cached per
``gamma`` so criteria 3 to 7 share one set of runs.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import export, lgi, lindblad3, nhq, optimize, qmat, soe

SEED = 0
SCAN_GAMMAS = (0.0, 0.5, 1.0, 1.5, 1.99, 2.5, 3.0)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} {status}  {self.title}"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "seconds": self.seconds, "details": self.details}


def _timed(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run():
            t0 = time.perf_counter()
            passed, details = fn()
            return CriterionResult(number, title, bool(passed), details,
                                   time.perf_counter() - t0)
        run.number = number
        return run
    return wrap


@functools.lru_cache(maxsize=None)
def optimum(gamma: float, seed: int = SEED):
    """Cached ``maximize_k3`` at ``J = 1`` with default settings."""
    row, _ = optimize.maximize_k3(nhq.PTParams(1.0, gamma), optimize.SearchSpace(),
                                  optimize.OptimizerSettings(seed=seed))
    return row


@functools.lru_cache(maxsize=None)
def fixed_optimum(gamma: float):
    return optimize.fixed_measurement_scan(nhq.PTParams(1.0, gamma))


# -- speed of evolution ----------------------------------------------------------

@_timed(1, "speed extremes v_max = 1 + g/2, v_min = max(0, 1 - g/2)")
def criterion_1():
    worst = 0.0
    for g in (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0):
        ext = soe.geodesic_extremes(nhq.PTParams(1.0, g))
        worst = max(worst, abs(ext.v_max - (1 + g / 2)), abs(ext.v_min - max(0.0, 1 - g / 2)))
    return worst < 1e-6, {"max_error": worst}


@_timed(2, "order parameter kink at the exceptional point")
def criterion_2():
    gammas = np.round(np.linspace(0.0, 4.0, 41), 10)
    rows = soe.order_parameter_scan(gammas)
    vmin = np.array([r[2] for r in rows])
    below, above = gammas < 2, gammas > 2
    zero_above = bool(np.all(vmin[above] < 1e-6))
    pos_below = bool(np.all(vmin[below] > 1e-6))
    fit = gammas <= 1.8 + 1e-12
    slope = float(np.polyfit(gammas[fit], vmin[fit], 1)[0])
    ok = zero_above and pos_below and abs(slope + 0.5) <= 1e-3
    return ok, {"zero_above": zero_above, "positive_below": pos_below, "slope": slope}


# -- optimized K3 -----------------------------------------------------------------

@_timed(3, "Lueders bound recovered at gamma = 0")
def criterion_3():
    k = optimum(0.0).k3_max
    return abs(k - 1.5) <= 1e-3, {"k3_max": k}


@_timed(4, "K3 beyond the Lueders bound for gamma in {0.5, 1, 1.5}")
def criterion_4():
    vals = {g: optimum(g).k3_max for g in (0.5, 1.0, 1.5)}
    return all(v > 1.5 + 1e-3 for v in vals.values()), {"k3_max": vals}


@_timed(5, "near the exceptional point: K3(1.99) >= 2.5")
def criterion_5():
    k = optimum(1.99).k3_max
    return k >= 2.5, {"k3_max": k}


def _pattern_ok(res: lgi.K3Result, eps: float = 0.05) -> bool:
    t12, t23, t13 = res.tables["12"], res.tables["23"], res.tables["13"]
    return (max(t12.p_ud, t12.p_du, t23.p_ud, t23.p_du) < eps
            and max(t13.p_uu, t13.p_dd) < eps)


@_timed(6, "broken phase: K3 >= 2.9, theta* = theta_m*, joint-probability pattern")
def criterion_6():
    details, ok = {}, True
    for g in (2.5, 3.0):
        row = optimum(g)
        res = lgi.k3(row.config(), nhq.PTParams(1.0, g))
        dtheta = abs(row.theta_star - row.theta_m_star)
        pattern = _pattern_ok(res)
        details[str(g)] = {"k3_max": row.k3_max, "theta_minus_theta_m": dtheta,
                           "pattern": pattern}
        ok &= row.k3_max >= 2.9 and dtheta < 0.05 and pattern
    return ok, details


@_timed(7, "optimal phases phi* = 3pi/2, phi_m* = pi/2")
def criterion_7():
    details, ok = {}, True
    for g in SCAN_GAMMAS[1:]:
        row = optimum(g)
        e1 = abs(row.phi_star - 1.5 * math.pi)
        e2 = abs(row.phi_m_star - 0.5 * math.pi)
        details[str(g)] = {"phi": row.phi_star, "phi_m": row.phi_m_star}
        ok &= e1 < 0.05 and e2 < 0.05
    return ok, details


@_timed(8, "fixed Q = sigma_y: max >= 2.5 at 1.99, <= 1.51 at 2.01")
def criterion_8():
    a, b = fixed_optimum(1.99).k3_max, fixed_optimum(2.01).k3_max
    return a >= 2.5 and b <= 1.5 + 1e-2, {"k3_max_1.99": a, "k3_max_2.01": b}


# -- oracles ----------------------------------------------------------------------

@_timed(9, "propagator, Bloch ODE and analytic geodesic solution agree")
def criterion_9():
    rng = np.random.default_rng(9)
    worst_prop = 0.0
    for _ in range(50):
        u = rng.normal(size=3)
        S0 = 0.5 * u / np.linalg.norm(u)
        p = nhq.PTParams(1.0, float(rng.uniform(0, 4)))
        t = float(rng.uniform(0, 10))
        S_ode = nhq.evolve_bloch_numeric(S0, t, p, t_eval=[0.0, t]).S[-1]
        S_rho = qmat.density_to_bloch(nhq.evolve_density(qmat.bloch_to_density(S0), t, p))
        worst_prop = max(worst_prop, float(np.max(np.abs(S_ode - S_rho))))
    worst_an = 0.0
    for _ in range(50):
        alpha = float(rng.uniform(0, 2 * math.pi))
        p = nhq.PTParams(1.0, float(rng.uniform(0, 4)))
        S0 = soe.geodesic_state(alpha)
        ts = np.linspace(0.0, float(rng.uniform(1, 10)), 40)
        traj = nhq.evolve_bloch_numeric(S0, ts[-1], p, t_eval=ts)
        _, SB0, Sn0 = nhq.to_frame(S0)
        sb, sn = nhq.analytic_SB_signed(float(SB0), float(Sn0), ts, p)
        _, SB, Sn = nhq.to_frame(traj.S)
        worst_an = max(worst_an, float(np.max(np.abs(sb - SB))), float(np.max(np.abs(sn - Sn))))
    ok = worst_prop < 1e-6 and worst_an < 1e-6
    return ok, {"propagator_vs_ode": worst_prop, "analytic_vs_ode": worst_an}


@_timed(10, "eigenstates are stationary over t in [0, 20]")
def criterion_10():
    details, ok = {}, True
    ts = np.linspace(0.0, 20.0, 201)
    for g in (1.0, 3.0):
        p = nhq.PTParams(1.0, g)
        fp = nhq.fixed_points(p)
        for name, S in (("source", fp.source), ("sink", fp.sink)):
            traj = nhq.evolve_bloch_numeric(S, 20.0, p, t_eval=ts)
            drift = float(np.max(np.abs(traj.S - S)))
            details[f"{g}/{name}"] = drift
            ok &= drift < 1e-7
    return ok, details


def anticommutator_correlation(psi, Q, ti, tj, J=1.0):
    """``(1/2) <psi|{Q(ti), Q(tj)}|psi>`` with Heisenberg operators under ``J sigma_x``."""
    def heis(t):
        U = expm(-1j * J * t * qmat.SIGMA_X)
        return U.conj().T @ Q @ U
    Qi, Qj = heis(ti), heis(tj)
    return float(np.real(np.vdot(psi, (Qi @ Qj + Qj @ Qi) @ psi))) / 2


@_timed(11, "gamma = 0 correlators match the anticommutator form")
def criterion_11():
    rng = np.random.default_rng(11)
    p = nhq.PTParams(1.0, 0.0)
    worst = 0.0
    for _ in range(50):
        th, ph, thm, phm = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi), \
            rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
        t2, t3 = np.sort(rng.uniform(0, 10, size=2))
        psi = nhq.pure_state(th, ph)
        Q = lgi.observable(lgi.MeasurementDirection(thm, phm))[0]
        rho0 = nhq.projector(psi)
        for ti, tj in ((0.0, t2), (t2, t3), (0.0, t3)):
            c = lgi.correlation(rho0, Q, ti, tj, p)
            worst = max(worst, abs(c - anticommutator_correlation(psi, Q, ti, tj)))
    return worst < 1e-9, {"max_error": float(worst)}


# -- three-level model --------------------------------------------------------------

LINDBLAD_GAMMAS = (1.0, 3.9, 4.0, 4.1, 8.0)


@_timed(12, "three-level closed forms and decay to the ground state")
def criterion_12():
    rho0 = lindblad3.initial_state_ep()
    ts = np.linspace(0.0, 5.0, 11)
    closed, r2n, gg = {}, {}, {}
    for g1 in LINDBLAD_GAMMAS:
        p = lindblad3.LindbladParams(1.0, g1)
        traj = lindblad3.integrate_trajectory(rho0, ts, p)
        closed[str(g1)] = max(float(np.max(np.abs(r - lindblad3.analytic_ep_state(t, g1))))
                              for t, r in zip(ts, traj.rho))
        rel = lindblad3.integrate_trajectory(rho0, ts, p, tol=1e-12, atol=1e-20)
        r2n[str(g1)] = max(float(np.max(np.abs(lindblad3.postselect(r)
                                               - lindblad3.rho2N_closed(t, g1))))
                           for t, r in zip(ts, rel.rho))
        T = 50.0 / g1
        gg[str(g1)] = 1.0 - float(np.real(lindblad3.integrate(rho0, T, p)[2, 2]))
    ok_closed = max(closed.values()) < 1e-7
    ok_r2n = max(r2n.values()) < 1e-9
    ok_gg = max(gg.values()) < 1e-4
    return ok_closed and ok_r2n and ok_gg, {
        "closed_form_vs_integrator": closed, "rho2N_vs_postselected": r2n,
        "one_minus_rho_gg_at_50_over_gamma1": gg,
        "parts_passed": {"closed_form": ok_closed, "rho2N": ok_r2n, "rho_gg": ok_gg}}


@_timed(13, "post-selected three-level dynamics equals the qubit dynamics")
def criterion_13():
    rep = lindblad3.equivalence_sweep()
    return rep.max_deviation < 1e-6, {"max_deviation": rep.max_deviation, "argmax": rep.argmax}


@_timed(14, "seeded scans are byte-identical")
def criterion_14():
    settings = optimize.OptimizerSettings(n_starts=8, broken_starts=None, seed=7)
    gammas = (0.5, 2.5)
    texts = []
    for _ in range(2):
        rows = optimize.gamma_scan(gammas, settings=settings)
        texts.append(export.csv_text(optimize.SCAN_COLUMNS, [r.row() for r in rows]))
    return texts[0] == texts[1], {"bytes": len(texts[0])}


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
            criterion_12, criterion_13, criterion_14)


def run_all(selected=None, echo=None) -> list[CriterionResult]:
    """Run the criteria (all, or the numbers in ``selected``) in order."""
    out = []
    for fn in CRITERIA:
        if selected and fn.number not in selected:
            continue
        res = fn()
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
