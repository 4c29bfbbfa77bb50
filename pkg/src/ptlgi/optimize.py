"""Multi-start Nelder-Mead maximization of K3 and the gamma / fixed-measurement scans.

Search coordinates are ``(theta, phi, theta_m, phi_m, t2, dt)`` with
``t3 = t2 + dt``. Points leaving the box are folded back before evaluation:
each polar/azimuth pair is mapped to the same Bloch direction in
``[0, pi] x [0, 2pi)`` and the times are mirrored into ``(0, T_max]``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import DomainError, InternalInconsistencyError
from .lgi import (T_MAX_DEFAULT, LGIConfig, k3, k3_amplification, k3_amplification_batch,
                  k3_batch, k3_value)
from .nhq import PTParams, Regime, regime

COORDS = ("theta", "phi", "theta_m", "phi_m", "t2", "dt")
SCAN_COLUMNS = ("gamma", "k3_max", "theta", "phi", "theta_m", "phi_m", "t2", "t3")
HEATMAP_COLUMNS = ("theta", "phi", "k3")
TIE_TOL = 1e-9
REEVAL_TOL = 1e-10
MIN_TIME = 1e-12
TWO_PI = 2 * math.pi
#: configurations whose round-off amplification exceeds this are penalized
MAX_AMPLIFICATION = 1e6


@dataclass(frozen=True)
class SearchSpace:
    """Box of the six coordinates; ``frozen`` pins coordinates to given values."""

    T_max: float = T_MAX_DEFAULT
    frozen: tuple = ()

    def __post_init__(self):
        if not self.T_max > 0:
            raise DomainError("T_max must be positive")
        for name, _ in self.frozen:
            if name not in COORDS:
                raise DomainError(f"unknown coordinate {name!r}")

    @classmethod
    def with_frozen(cls, T_max: float = T_MAX_DEFAULT, **values):
        unknown = set(values) - set(COORDS)
        if unknown:
            raise DomainError(f"unknown coordinates {sorted(unknown)}")
        return cls(T_max, tuple(sorted(values.items(), key=lambda kv: COORDS.index(kv[0]))))

    @property
    def frozen_map(self) -> dict:
        return dict(self.frozen)

    @property
    def active(self) -> list[int]:
        fm = self.frozen_map
        return [i for i, c in enumerate(COORDS) if c not in fm]

    def bounds(self):
        lo = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        hi = np.array([math.pi, TWO_PI, math.pi, TWO_PI, self.T_max, self.T_max])
        return lo, hi


@dataclass(frozen=True)
class OptimizerSettings:
    n_starts: int = 64
    seed: int = 0
    tol: float = 1e-8
    max_evals: int = 20000
    broken_starts: int | None = 128
    jobs: int = 1

    def __post_init__(self):
        if self.n_starts < 1:
            raise DomainError("n_starts must be at least 1")

    def starts_for(self, p: PTParams) -> int:
        if self.broken_starts is not None and regime(p) is Regime.BROKEN:
            return max(self.n_starts, self.broken_starts)
        return self.n_starts


@dataclass
class ScanRow:
    gamma: float
    k3_max: float
    theta_star: float
    phi_star: float
    theta_m_star: float
    phi_m_star: float
    t2_star: float
    t3_star: float

    def row(self):
        return (self.gamma, self.k3_max, self.theta_star, self.phi_star,
                self.theta_m_star, self.phi_m_star, self.t2_star, self.t3_star)

    def config(self) -> LGIConfig:
        return LGIConfig(self.theta_star, self.phi_star, self.theta_m_star,
                         self.phi_m_star, self.t2_star, self.t3_star)


@dataclass
class NMResult:
    x: np.ndarray
    f: float
    evaluations: int
    converged: bool
    history: list = field(default_factory=list)


def _fold_angles(theta, phi):
    theta = theta % TWO_PI
    if theta > math.pi:
        theta = TWO_PI - theta
        phi = phi + math.pi
    return theta, phi % TWO_PI


def _fold_time(t, T):
    t = abs(t) % (2 * T)
    if t > T:
        t = 2 * T - t
    return max(t, MIN_TIME)


def fold(x, T_max: float) -> np.ndarray:
    """Map a full coordinate vector back into the search box."""
    th, ph = _fold_angles(x[0], x[1])
    thm, phm = _fold_angles(x[2], x[3])
    return np.array([th, ph, thm, phm, _fold_time(x[4], T_max), _fold_time(x[5], T_max)])


def canonical(x) -> np.ndarray:
    """Pick the representative with ``sin(phi_m) >= 0`` (``n`` and ``-n`` give equal K3)."""
    x = np.array(x, dtype=float)
    if math.sin(x[3]) < 0:
        x[2] = math.pi - x[2]
        x[3] = (x[3] - math.pi) % TWO_PI
    return x


def to_times(x) -> tuple[float, float]:
    return float(x[4]), float(x[4] + x[5])


def nelder_mead(objective, x0, tol: float = 1e-8, max_evals: int = 20000,
                step=None, fold_fn=None) -> NMResult:
    """Maximize ``objective`` with the Nelder-Mead simplex method.

    Stops when every vertex is within ``tol`` of the best one (simplex
    diameter) or after ``max_evals`` evaluations; ``converged`` is False in
    the latter case and the best point so far is returned. ``fold_fn`` maps
    raw simplex points into the feasible box before evaluation. ``history``
    holds the best value after each iteration.
    """
    x0 = np.asarray(x0, dtype=float)
    fold_fn = fold_fn or (lambda x: x)
    step = np.full(x0.shape, 0.1) if step is None else np.broadcast_to(step, x0.shape)
    simplex = np.vstack([x0] + [x0 + np.eye(len(x0))[i] * step[i] for i in range(len(x0))])
    cache = {}
    count = [0]

    def neg(x):
        key = x.tobytes()
        if key not in cache:
            count[0] += 1
            cache[key] = -float(objective(fold_fn(x)))
        return cache[key]

    history = []

    def callback(xk):
        history.append(-neg(np.asarray(xk, dtype=float)))

    res = minimize(neg, x0, method="Nelder-Mead", callback=callback,
                   options={"xatol": tol, "fatol": np.inf, "maxfev": max_evals,
                            "maxiter": 10 * max_evals, "initial_simplex": simplex})
    x_star = fold_fn(np.asarray(res.x, dtype=float))
    return NMResult(x_star, -float(res.fun), count[0], bool(res.status == 0), history)


def guarded_k3(x, J: float, gamma: float) -> float:
    """K3 at ``x = (theta, phi, theta_m, phi_m, t2, t3)`` for numerically trustworthy configs.

    Where :func:`ptlgi.lgi.k3_amplification` exceeds ``MAX_AMPLIFICATION``
    the value returned lies below -3 and decreases with the amplification,
    steering the simplex back to configurations whose K3 is resolved to
    about 1e-10.
    """
    amp = k3_amplification(x, J, gamma)
    if amp > MAX_AMPLIFICATION:
        return -3.0 - math.log10(amp / MAX_AMPLIFICATION)
    return k3_value(x, J, gamma)


def _initial_points(n: int, space: SearchSpace, seed: int) -> np.ndarray:
    active = space.active
    sampler = qmc.Sobol(d=len(active), scramble=True, seed=seed)
    m = int(math.ceil(math.log2(max(n, 1))))
    u = sampler.random_base2(m)[:n]
    lo, hi = space.bounds()
    fm = space.frozen_map
    pts = np.empty((n, 6))
    for j, c in enumerate(COORDS):
        if c in fm:
            pts[:, j] = fm[c]
    t_lo = space.T_max * 1e-3
    for k, i in enumerate(active):
        if i >= 4:
            # log-uniform times: short intervals matter deep in the broken phase
            pts[:, i] = t_lo * (space.T_max / t_lo) ** u[:, k]
        else:
            pts[:, i] = lo[i] + (hi[i] - lo[i]) * u[:, k]
    return pts


def _run_start(args):
    x_full0, p, space, settings = args
    active = space.active
    T = space.T_max

    def expand(y):
        x = x_full0.copy()
        x[active] = y
        return x

    def objective(y):
        x = fold(expand(y), T)
        return guarded_k3((x[0], x[1], x[2], x[3], x[4], x[4] + x[5]), p.J, p.gamma)

    y0 = x_full0[active]
    step = np.array([0.25 if i < 4 else 0.25 * x_full0[i] + 0.05 for i in active])
    res = nelder_mead(objective, y0, tol=settings.tol, max_evals=settings.max_evals, step=step)
    x_star = fold(expand(res.x), T)
    return {"x0": x_full0, "x_star": x_star, "f_star": res.f,
            "evaluations": res.evaluations, "converged": res.converged}


def _pick_best(results):
    best = None
    for r in results:
        if best is None:
            best = r
            continue
        if r["f_star"] > best["f_star"] + TIE_TOL:
            best = r
        elif abs(r["f_star"] - best["f_star"]) <= TIE_TOL and \
                to_times(r["x_star"])[1] < to_times(best["x_star"])[1]:
            best = r
    return best


def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(it) for it in items]


def _row_from(x, p: PTParams, space: SearchSpace) -> ScanRow:
    if not space.frozen_map.keys() & {"theta_m", "phi_m"}:
        x = canonical(x)
    t2, t3 = to_times(x)
    cfg = LGIConfig(x[0], x[1], x[2], x[3], t2, t3)
    return ScanRow(p.gamma, k3(cfg, p).k3, x[0], x[1], x[2], x[3], t2, t3)


def maximize_k3(p: PTParams, space: SearchSpace = SearchSpace(),
                settings: OptimizerSettings = OptimizerSettings()):
    """Best K3 over the search space from quasi-random multi-start Nelder-Mead.

    Returns ``(best, all_starts)``. The reported ``k3_max`` is recomputed with
    the reference density-matrix path of :func:`ptlgi.lgi.k3`.

    Raises:
        InternalInconsistencyError: if the reference value differs from the
            optimizer's by more than 1e-10.
    """
    n = settings.starts_for(p)
    starts = _initial_points(n, space, settings.seed)
    results = _map(_run_start, [(x, p, space, settings) for x in starts], settings.jobs)
    best = _pick_best(results)
    row = _row_from(best["x_star"], p, space)
    if abs(row.k3_max - best["f_star"]) > REEVAL_TOL:
        raise InternalInconsistencyError(
            f"re-evaluated K3 {row.k3_max!r} differs from optimizer value {best['f_star']!r}")
    return row, results


def _scan_one(args):
    g, J, space, settings = args
    return maximize_k3(PTParams(J, g), space, replace(settings, jobs=1))[0]


def gamma_scan(gammas, space: SearchSpace = SearchSpace(),
               settings: OptimizerSettings = OptimizerSettings(), J: float = 1.0):
    """One :class:`ScanRow` per ``gamma``, sorted by ``gamma``."""
    gammas = sorted(float(g) for g in gammas)
    if settings.jobs > 1 and len(gammas) > 1:
        rows = _map(_scan_one, [(g, J, space, settings) for g in gammas], settings.jobs)
    else:
        rows = [maximize_k3(PTParams(J, g), space, settings)[0] for g in gammas]
    return rows


@dataclass
class FixedScanResult:
    k3_max: float
    theta_star: float
    phi_star: float
    t2_star: float
    t3_star: float
    rows: list
    theta_m: float
    phi_m: float


def default_time_grid(T_max: float, n: int = 48) -> np.ndarray:
    return np.geomspace(T_max * 2e-4, T_max, n)


def _time_optimize_row(args):
    theta, phis, theta_m, phi_m, p, T_max, tgrid, tol = args
    t2g, dtg = np.meshgrid(tgrid, tgrid, indexing="ij")
    out = []
    for phi in phis:
        vals = k3_batch(theta, phi, theta_m, phi_m, t2g, t2g + dtg, p)
        amp = k3_amplification_batch(theta, phi, theta_m, phi_m, t2g, t2g + dtg, p)
        vals = np.where(amp > MAX_AMPLIFICATION, -np.inf, vals)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        y0 = np.array([tgrid[i], tgrid[j]])

        def objective(y):
            t2, dt = _fold_time(y[0], T_max), _fold_time(y[1], T_max)
            return guarded_k3((theta, phi, theta_m, phi_m, t2, t2 + dt), p.J, p.gamma)

        res = nelder_mead(objective, y0, tol=tol, max_evals=2000, step=0.1 * y0 + 1e-3)
        t2, dt = _fold_time(res.x[0], T_max), _fold_time(res.x[1], T_max)
        f = res.f
        if vals[i, j] > f:
            t2, dt, f = tgrid[i], tgrid[j], float(vals[i, j])
        out.append((theta, phi, f, t2, t2 + dt))
    return out


def fixed_measurement_scan(p: PTParams, theta_m: float = math.pi / 2,
                           phi_m: float = math.pi / 2, n_theta: int = 64, n_phi: int = 64,
                           T_max: float = T_MAX_DEFAULT, tol: float = 1e-8, jobs: int = 1,
                           time_grid=None) -> FixedScanResult:
    """Time-optimized K3 on a ``theta x phi`` grid for a fixed measurement axis.

    The default axis is ``y_hat``. For each grid point ``(t2, t3 - t2)`` is
    maximized (log-spaced coarse grid, then Nelder-Mead from the best cell).
    ``theta`` runs over ``[0, pi]`` inclusive and ``phi`` over ``[0, 2pi)``.
    """
    if n_theta < 50 or n_phi < 50:
        raise DomainError("grid resolution must be at least 50 x 50")
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = TWO_PI * np.arange(n_phi) / n_phi
    tgrid = default_time_grid(T_max) if time_grid is None else np.asarray(time_grid, float)
    tasks = [(float(th), phis, theta_m, phi_m, p, T_max, tgrid, tol) for th in thetas]
    chunks = _map(_time_optimize_row, tasks, jobs)
    cells = [c for chunk in chunks for c in chunk]
    best = max(cells, key=lambda c: c[2])
    theta, phi, f, t2, t3 = best
    ref = k3(LGIConfig(theta, phi, theta_m, phi_m, t2, t3), p).k3
    if abs(ref - f) > REEVAL_TOL:
        raise InternalInconsistencyError("re-evaluated heatmap maximum disagrees")
    rows = [(c[0], c[1], c[2]) for c in cells]
    return FixedScanResult(ref, theta, phi, t2, t3, rows, theta_m, phi_m)
