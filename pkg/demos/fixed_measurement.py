#!/usr/bin/env python3
"""Time-optimized K3 with the measurement axis fixed to y.

With Q = sigma_y only the initial state and the two times remain free. Just
below the exceptional point values near 3 are still reachable. Just above it
no cell of the grid exceeds the unitary bound 3/2.

Usage:
    python demos/fixed_measurement.py
"""

import numpy as np

from ptlgi import optimize
from ptlgi.nhq import PTParams


def main():
    for g in (1.99, 2.01):
        res = optimize.fixed_measurement_scan(PTParams(1.0, g), n_theta=50, n_phi=50)
        k = np.array([r[2] for r in res.rows])
        print(f"gamma={g}: max K3 = {res.k3_max:.4f} at theta={res.theta_star:.3f}, "
              f"phi={res.phi_star:.3f}, t2={res.t2_star:.3f}, t3={res.t3_star:.3f}; "
              f"cells above 3/2: {np.mean(k > 1.5 + 1e-9):.1%}")


if __name__ == "__main__":
    main()
