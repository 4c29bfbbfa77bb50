#!/usr/bin/env python3
"""Speed of evolution across the PT transition.

For H = J sigma_x - i (gamma/2) sigma_z the squared speed of a pure state is

    v^2 = J^2 (1 - 4 S_x^2) + (gamma^2/4)(1 - 4 S_z^2) + 2 J gamma S_n.

On the S_x = 0 great circle this collapses to v = |J + (gamma/2) sin(alpha)|.
Its maximum 1 + gamma/2 keeps growing with gamma. Its minimum 1 - gamma/2
hits zero at the exceptional point and stays there, because the eigenstates
of H become fixed points of the normalized flow. The minimum therefore acts
as an order parameter.

Usage:
    python demos/speed_of_evolution.py
"""

import numpy as np

from ptlgi import nhq, soe
from ptlgi.nhq import PTParams


def main():
    print(f"{'gamma':>6} {'v_max':>8} {'v_min':>8} {'regime':>12}")
    for g in np.arange(0.0, 3.01, 0.25):
        ext = soe.geodesic_extremes(PTParams(1.0, g), n_samples=2000)
        print(f"{g:6.2f} {ext.v_max:8.4f} {ext.v_min:8.4f} "
              f"{nhq.regime(PTParams(1.0, g)).value:>12}")

    # speed along one trajectory, with the fidelity estimate as a cross-check
    p = PTParams(1.0, 1.9)
    traj = nhq.evolve_bloch_numeric(nhq.bloch_from_angles(np.pi / 2, 1.5 * np.pi), 6.0, p,
                                    dt_out=1.0)
    print("\nt      v      v3^2 (signed)")
    for s in soe.speed_along_trajectory(traj, p, cross_check=True):
        print(f"{s.t:4.1f} {s.v:7.4f} {s.v3_sq:8.4f}")


if __name__ == "__main__":
    main()
