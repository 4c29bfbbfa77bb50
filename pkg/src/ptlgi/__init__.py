"""Non-Hermitian qubit dynamics, speed of evolution and Leggett-Garg K3.

Modules:
    qmat: 2x2 complex matrix helpers (closed-form exponential, eigenpairs).
    nhq: normalized non-Hermitian evolution, Bloch equation, fixed points.
    soe: speed of evolution and its extremes on the geodesic.
    lgi: projective-measurement correlators and K3.
    optimize: multi-start maximization of K3 and parameter scans.
    lindblad3: three-level master equation and post-selection.
    cli: command line front end.
"""

__version__ = "0.1.0"
