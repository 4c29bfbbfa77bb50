#!/usr/bin/env python3
"""Normalized non-Hermitian flow on the Bloch sphere.

Normalizing rho(t) = U rho U^dag / tr(...) gives a nonlinear Bloch equation
whose fixed points are the right eigenstates of H. Below the exceptional
point they are centres and states circulate. Above it one eigenstate repels
(the source) and the other attracts (the sink).

This script integrates the Bloch equation from a point of the S_x = 0 circle
and compares it with the closed-form S_B(t), S_n(t). It then shows the flow
from the source to the sink at gamma = 3.

Usage:
    python demos/geodesic_flow.py
"""

import numpy as np

from ptlgi import nhq
from ptlgi.nhq import PTParams


def compare_with_closed_form(gamma, alpha=2.0):
    p = PTParams(1.0, gamma)
    SB0, Sn0 = 0.5 * np.cos(alpha), 0.5 * np.sin(alpha)
    ts = np.linspace(0.0, 8.0, 9)
    traj = nhq.evolve_bloch_numeric(nhq.from_frame(0.0, SB0, Sn0), ts[-1], p, tol=1e-11,
                                    t_eval=ts)
    sb, sn = nhq.analytic_SB_signed(SB0, Sn0, ts, p)
    _, SB, Sn = nhq.to_frame(traj.S)
    err = max(np.abs(sb - SB).max(), np.abs(sn - Sn).max())
    coef = nhq.path_coefficient(Sn0, p)
    print(f"gamma={gamma:4.2f}  path coefficient={coef:+.4f}  "
          f"max |closed form - ODE| = {err:.2e}")


def source_to_sink():
    p = PTParams(1.0, 3.0)
    fp = nhq.fixed_points(p)
    S0 = fp.source + np.array([0.0, 0.0, -0.01])
    S0 = 0.5 * S0 / np.linalg.norm(S0)
    traj = nhq.evolve_bloch_numeric(S0, 12.0, p, dt_out=2.0)
    print("\nsource", np.round(fp.source, 4), " sink", np.round(fp.sink, 4))
    for t, S in zip(traj.t, traj.S):
        print(f"t={t:5.1f}  distance to sink {np.linalg.norm(S - fp.sink):.2e}")


def main():
    for g in (0.5, 1.9, 2.0, 3.0):
        compare_with_closed_form(g)
    source_to_sink()


if __name__ == "__main__":
    main()
