"""Mass distributions that extremize the critical follower load.

The search is derivative-free (bounded Nelder-Mead from low-discrepancy
starts) because the objective is non-smooth exactly where the interesting
extrema sit: cusps, vertical tangents and mass-zero corners.

Undamped critical loads are invariant under ``masses -> t * masses`` (the
eigenvalues only rescale), so with all lower bounds at zero the search runs
over mass directions alone, ``m - 1`` angles in the positive orthant.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .critload import BoundaryTracker, SearchSettings, boundary_candidates, critical_load_numeric, \
    critical_value_algebraic
from .errors import ConfigError, NumericError
from .model import PendulumConfig
from .stability import STABLE_CODES
from .sweep import azimuth_pair, default_jobs

HALF_PI = math.pi / 2


class Sense(str, enum.Enum):
    MIN = "MIN"
    MAX = "MAX"


class ExtremumKind(str, enum.Enum):
    INTERIOR_SMOOTH = "INTERIOR_SMOOTH"
    BOUNDARY_MASS_ZERO = "BOUNDARY_MASS_ZERO"
    SINGULAR_CUSP = "SINGULAR_CUSP"
    UNBOUNDED_DIRECTION = "UNBOUNDED_DIRECTION"
    # non-smooth interior extremum without a triple root nearby
    VERTICAL_TANGENT = "VERTICAL_TANGENT"


@dataclass(frozen=True)
class ExtremumReport:
    masses: tuple[float, ...]
    objective: float  # normalized load; inf for UNBOUNDED_DIRECTION
    sense: Sense
    kind: ExtremumKind
    certificate: dict = field(default_factory=dict)
    coords: tuple[float, ...] = ()  # search coordinates (angles or free masses)

    def to_dict(self) -> dict:
        return {
            "masses": list(self.masses),
            "objective": None if math.isinf(self.objective) else self.objective,
            "sense": self.sense.value,
            "kind": self.kind.value,
            "certificate": self.certificate,
        }


@dataclass(frozen=True)
class OptimizeSettings:
    starts: int = 32
    seed: int = 0
    objective: str = "critical"  # or "stable_top": highest load with a stable state
    xatol: float = 1e-8
    fatol: float = 1e-12
    max_evals: int = 600
    merge_tol: float = 1e-4
    zero_tol: float = 1e-6  # relative distance to a zero lower bound counted as m_i = 0

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be at least 1")
        if self.objective not in ("critical", "stable_top"):
            raise ValueError("objective must be 'critical' or 'stable_top'")


# ----------------------------------------------------------------------------
# objectives


def stable_top(config: PendulumConfig, s: SearchSettings) -> float:
    """Highest normalized load in [0, p_max] at which ``config`` is stable.

    ``p_max`` when the band reaching the cap is stable; 0 when no load is.
    """
    tracker = BoundaryTracker(config, s)
    cands = boundary_candidates(config, s.p_max, tracker.scanner.tensor)
    edges = np.concatenate([[0.0], cands, [s.p_max]])
    mids = 0.5 * (edges[:-1] + edges[1:])
    codes = tracker.codes(mids)
    stable = np.isin(codes, STABLE_CODES)
    if not np.any(stable):
        return 0.0
    k = int(np.flatnonzero(stable)[-1])
    if k == len(mids) - 1:
        return float(s.p_max)
    lo, hi = tracker.refine(float(mids[k]), float(mids[k + 1]), int(codes[k]))
    return 0.5 * (lo + hi)


def objective_value(config: PendulumConfig, s: SearchSettings, kind: str = "critical") -> float:
    """Normalized objective capped at ``p_max``; unstable-at-rest designs score 0."""
    if kind == "stable_top":
        return stable_top(config, s)
    try:
        if config.is_damped:
            value = critical_load_numeric(config, s).normalized
        else:
            value = critical_value_algebraic(config, s)
    except NumericError:
        return 0.0
    return float(min(value, s.p_max))


# ----------------------------------------------------------------------------
# coordinates


class _Coords:
    """Maps search coordinates in a box to configurations."""

    def __init__(self, config, bounds, plane, r):
        m = config.link_count
        self.config = config
        if plane is not None:
            if r is None or not r > 0:
                raise ConfigError("plane search needs a positive radius r")
            i, j = plane
            if i == j or not (1 <= i <= m and 1 <= j <= m):
                raise ConfigError(f"plane must name two distinct masses in 1..{m}")
            self.mode, self.plane, self.r = "plane", (i, j), float(r)
            self.lo, self.hi = np.array([0.0]), np.array([HALF_PI])
            return
        if bounds is None:
            bounds = [(0.0, 10.0)] * m
        b = np.asarray(bounds, dtype=float)
        if b.shape != (m, 2) or np.any(b[:, 0] < 0) or np.any(b[:, 1] < b[:, 0]) or not np.all(np.isfinite(b)):
            raise ConfigError("bounds must be m pairs [lo, hi] with 0 <= lo <= hi < inf")
        self.bounds = b
        self.free = np.flatnonzero(b[:, 1] > b[:, 0])
        if len(self.free) == 0:
            raise ConfigError("no free mass to optimize")
        if not config.is_damped and np.all(b[:, 0] == 0) and len(self.free) == m and m >= 2:
            self.mode = "ruled"
            self.lo, self.hi = np.zeros(m - 1), np.full(m - 1, HALF_PI)
        else:
            self.mode = "box"
            self.lo, self.hi = b[self.free, 0], b[self.free, 1]

    @property
    def dim(self) -> int:
        return len(self.lo)

    def masses(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        if self.mode == "plane":
            out = np.array(self.config.masses, dtype=float)
            out[self.plane[0] - 1], out[self.plane[1] - 1] = azimuth_pair(float(x[0]), self.r)
            return out
        if self.mode == "box":
            out = self.bounds[:, 0].copy()
            out[self.free] = x
            return out
        d = _direction(x)
        # largest multiple of the direction inside the box
        with np.errstate(divide="ignore"):
            t = np.min(np.where(d > 0, self.bounds[:, 1] / d, np.inf))
        return t * d

    def config_at(self, x) -> PendulumConfig:
        return self.config.with_masses(tuple(float(v) for v in self.masses(x)))


def _direction(angles) -> np.ndarray:
    """Unit vector in the positive orthant from m - 1 spherical angles; exact zeros at the ends."""
    m = len(angles) + 1
    d = np.ones(m)
    for k, a in enumerate(angles):
        c, s = azimuth_pair(float(a))
        d[k] *= c
        d[k + 1:] *= s
    return d


# ----------------------------------------------------------------------------
# search


def _local_search(args):
    coords, s, opt, sense, x0 = args
    sign = -1.0 if sense is Sense.MAX else 1.0
    cache = {}

    def fun(x):
        key = tuple(np.clip(x, coords.lo, coords.hi))
        if key not in cache:
            cache[key] = objective_value(coords.config_at(key), s, opt.objective)
        return sign * cache[key]

    span = coords.hi - coords.lo
    simplex = [x0]
    for k in range(coords.dim):
        v = x0.copy()
        step = 0.05 * span[k]
        v[k] = v[k] + step if v[k] + step <= coords.hi[k] else v[k] - step
        simplex.append(v)
    res = minimize(fun, x0, method="Nelder-Mead", bounds=list(zip(coords.lo, coords.hi)),
                   options={"initial_simplex": np.array(simplex), "xatol": opt.xatol,
                            "fatol": opt.fatol, "maxfev": opt.max_evals})
    x = np.clip(res.x, coords.lo, coords.hi)
    return x, float(sign * res.fun), int(res.nfev)


def _starts(coords: _Coords, n: int, seed: int) -> np.ndarray:
    sampler = qmc.Sobol(d=coords.dim, scramble=True, seed=seed)
    u = sampler.random(n)
    return coords.lo + u * (coords.hi - coords.lo)


def _merge(found, coords: _Coords, sense: Sense, tol: float):
    # best objective first, then location, so the survivor of a merge is deterministic
    order = sorted(found, key=lambda t: ((-t[1] if sense is Sense.MAX else t[1]), tuple(t[0])))
    kept = []
    for x, val, nfev in order:
        m = coords.masses(x)
        u = m / (np.linalg.norm(m) or 1.0)
        dup = False
        for y, wval, _ in kept:
            w = coords.masses(y)
            w = w / (np.linalg.norm(w) or 1.0)
            same_val = abs(val - wval) <= tol * max(1.0, abs(val))
            if np.linalg.norm(u - w) <= tol and same_val:
                dup = True
                break
        if not dup:
            kept.append((x, val, nfev))
    return kept


def optimize_masses(config: PendulumConfig, bounds=None, sense: Sense | str = Sense.MIN,
                    starts: int | None = None, s: SearchSettings = SearchSettings(p_max=50.0),
                    opt: OptimizeSettings = OptimizeSettings(), plane=None, r: float | None = None,
                    jobs: int | None = None) -> list[ExtremumReport]:
    """Local extrema of the critical load over the mass vector.

    Parameters
    ----------
    config : PendulumConfig
        Supplies stiffnesses, dampings, length and any fixed masses.
    bounds : sequence of (lo, hi), optional
        Per-mass box, default ``[0, 10]`` each; ``lo == hi`` fixes a mass.
    sense : Sense or {"MIN", "MAX"}
    starts : int, optional
        Number of low-discrepancy starts (overrides ``opt.starts``).
    s : SearchSettings
        Critical-load settings; ``p_max`` caps the objective.
    plane, r : optional
        Restrict to masses ``(m_i, m_j) = r (cos a, sin a)``, a in [0, pi/2].

    Returns
    -------
    list of ExtremumReport
        Merged and classified, best objective first. Completeness of the
        enumeration is not claimed.
    """
    sense = Sense(sense)
    if starts is not None:
        opt = OptimizeSettings(**{**opt.__dict__, "starts": starts})
    coords = _Coords(config, bounds, plane, r)
    x0s = _starts(coords, opt.starts, opt.seed)
    tasks = [(coords, s, opt, sense, x0) for x0 in x0s]
    jobs = default_jobs() if jobs is None else jobs
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            found = list(pool.map(_local_search, tasks))
    else:
        found = [_local_search(t) for t in tasks]
    kept = _merge(found, coords, sense, opt.merge_tol)
    reports = []
    for x, val, nfev in kept:
        rep = ExtremumReport(tuple(float(v) for v in coords.masses(x)), val, sense,
                             ExtremumKind.INTERIOR_SMOOTH, {"evaluations": nfev},
                             tuple(float(v) for v in x))
        reports.append(_classify(rep, coords, s, opt))
    # distinct unbounded rays collapse into one report per vanishing-mass pattern
    out, seen_rays = [], set()
    for rep in reports:
        if rep.kind is ExtremumKind.UNBOUNDED_DIRECTION:
            key = tuple(rep.certificate["vanishing"])
            if key in seen_rays:
                continue
            seen_rays.add(key)
        out.append(rep)
    return out


# ----------------------------------------------------------------------------
# classification


def _gradient(coords: _Coords, x, s, opt, h: float = 1e-6) -> np.ndarray:
    g = np.zeros(coords.dim)
    for k in range(coords.dim):
        lo = max(coords.lo[k], x[k] - h)
        hi = min(coords.hi[k], x[k] + h)
        if hi <= lo:
            continue
        xl, xh = x.copy(), x.copy()
        xl[k], xh[k] = lo, hi
        g[k] = (objective_value(coords.config_at(xh), s, opt.objective)
                - objective_value(coords.config_at(xl), s, opt.objective)) / (hi - lo)
    return g


def _nearby_cusp(coords: _Coords, x, value, s):
    """Certified triple root within reach of a plane-search optimum, or None."""
    from .singular import MassPlaneFamily, find_cusps

    if coords.mode != "plane" or coords.config.is_damped or coords.config.link_count < 3:
        return None
    fam = MassPlaneFamily(coords.config, coords.plane, coords.r)
    a = float(x[0])
    grid = np.linspace(max(0.0, a - 0.02), min(HALF_PI, a + 0.02), 41)
    scale = coords.config_at(x).load_scale
    for pt in find_cusps(fam, grid, (0.0, 2 * s.p_max * scale)):
        p_cusp = pt.location["P"] / fam.config_at(pt.location["alpha"]).load_scale
        if abs(pt.location["alpha"] - a) < 1e-2 and abs(p_cusp - value) < 2e-2 * max(1.0, value):
            return pt
    return None


def _classify(rep: ExtremumReport, coords: _Coords, s: SearchSettings, opt: OptimizeSettings) -> ExtremumReport:
    x = np.array(rep.coords)
    masses = np.array(rep.masses)
    zero = masses <= opt.zero_tol * max(1.0, float(np.max(masses)))
    if coords.mode == "box":
        zero &= coords.bounds[:, 0] == 0
    vanishing = [int(i) + 1 for i in np.flatnonzero(zero)]
    cert = dict(rep.certificate)
    if rep.objective >= s.p_max:
        # follow the ray towards the vanishing masses and check the objective exceeds the cap
        ray = []
        for eps in (1e-2, 1e-4, 1e-6):
            probe = np.where(zero | (masses <= 1e-3 * np.max(masses)), eps * np.max(masses), masses)
            cfg = coords.config.with_masses(tuple(float(v) for v in probe))
            ray.append(objective_value(cfg, SearchSettings(**{**s.__dict__, "p_max": 1e6}), opt.objective))
        small = [int(i) + 1 for i in np.flatnonzero(masses <= 1e-3 * np.max(masses))]
        if small and ray[-1] > s.p_max and ray[-1] >= ray[0]:
            cert.update({"vanishing": small, "ray_objective": ray, "cap": s.p_max})
            return ExtremumReport(rep.masses, math.inf, rep.sense, ExtremumKind.UNBOUNDED_DIRECTION,
                                  cert, rep.coords)
    cusp = _nearby_cusp(coords, x, rep.objective, s)
    if cusp is not None:
        cert.update({"cusp": cusp.to_dict(), "jordan_order": cusp.jordan_order})
        return ExtremumReport(rep.masses, rep.objective, rep.sense, ExtremumKind.SINGULAR_CUSP, cert, rep.coords)
    if vanishing:
        cert.update({"vanishing": vanishing})
        return ExtremumReport(rep.masses, rep.objective, rep.sense, ExtremumKind.BOUNDARY_MASS_ZERO,
                              cert, rep.coords)
    g = _gradient(coords, x, s, opt)
    cert.update({"gradient_norm": float(np.linalg.norm(g))})
    steep = _one_sided_slopes(coords, x, s, opt)
    if steep is not None:
        cert.update({"one_sided_slopes": steep})
        return ExtremumReport(rep.masses, rep.objective, rep.sense, ExtremumKind.VERTICAL_TANGENT, cert, rep.coords)
    return ExtremumReport(rep.masses, rep.objective, rep.sense, ExtremumKind.INTERIOR_SMOOTH, cert, rep.coords)


def _one_sided_slopes(coords: _Coords, x, s, opt, steps=(1e-4, 1e-6), growth: float = 3.0):
    """Largest one-sided secant slopes at two offsets if they blow up, else None.

    Along a smooth objective the slopes settle as the offset shrinks; at a
    vertical tangent they grow like ``h**-1/2`` or faster.
    """
    f0 = objective_value(coords.config_at(x), s, opt.objective)
    out = []
    for h in steps:
        best = 0.0
        for k in range(coords.dim):
            for sgn in (-1.0, 1.0):
                y = x.copy()
                y[k] = np.clip(y[k] + sgn * h, coords.lo[k], coords.hi[k])
                if y[k] == x[k]:
                    continue
                fy = objective_value(coords.config_at(y), s, opt.objective)
                best = max(best, abs(fy - f0) / abs(y[k] - x[k]))
        out.append(float(best))
    if out[-1] > 1e3 * max(1.0, abs(f0)) and out[-1] >= growth * out[0]:
        return out
    return None


def classify_extremum(report: ExtremumReport, config: PendulumConfig, bounds=None,
                      s: SearchSettings = SearchSettings(p_max=50.0), opt: OptimizeSettings = OptimizeSettings(),
                      plane=None, r: float | None = None) -> ExtremumReport:
    """Refine the kind of a converged report by probing around it.

    Unbounded rays are checked first, then a certified cusp nearby (plane
    searches), then vanishing masses, and otherwise the finite-difference
    gradient norm is attached as evidence of a smooth interior extremum.
    """
    coords = _Coords(config, bounds, plane, r)
    if report.coords:
        return _classify(report, coords, s, opt)
    # recover search coordinates from the masses
    m = np.asarray(report.masses, dtype=float)
    if coords.mode == "plane":
        x = np.array([math.atan2(m[coords.plane[1] - 1], m[coords.plane[0] - 1])])
    elif coords.mode == "box":
        x = m[coords.free]
    else:
        u = m / np.linalg.norm(m)
        x = np.array([math.atan2(np.linalg.norm(u[k + 1:]), u[k]) for k in range(len(u) - 1)])
    rep = ExtremumReport(report.masses, report.objective, report.sense, report.kind, report.certificate,
                         tuple(float(v) for v in x))
    return _classify(rep, coords, s, opt)
