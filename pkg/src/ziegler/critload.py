"""Critical follower loads: two-link closed forms and a scan-and-bisect solver for any m."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateDamping, InfiniteLoad, UnstableAtZeroLoad
from .model import PendulumConfig
from .stability import (
    BD,
    DEFAULT_TOL,
    DV,
    FD,
    FL,
    STABLE_CODES,
    UD,
    LoadScanner,
    StabilityClass,
    ToleranceSet,
    class_of_code,
)


class Transition(str, enum.Enum):
    FLUTTER_ONSET = "FLUTTER_ONSET"
    FLUTTER_TO_DIVERGENCE = "FLUTTER_TO_DIVERGENCE"
    DIVERGENCE_ONSET = "DIVERGENCE_ONSET"
    UNBOUNDED = "UNBOUNDED"
    # only produced by full sweeps, which report every class change
    RESTABILIZATION = "RESTABILIZATION"
    CLASS_CHANGE = "CLASS_CHANGE"


@dataclass(frozen=True)
class SearchSettings:
    """Scan-then-bisect parameters; loads in normalized units ``p = P l / c_m``."""

    p_max: float = 1e3
    scan_step: float = 0.01
    bisect_tol: float = 1e-10
    tol: ToleranceSet = field(default_factory=lambda: DEFAULT_TOL)
    chunk: int = 512

    def __post_init__(self):
        if not (self.p_max > self.scan_step > 0):
            raise ValueError("need p_max > scan_step > 0")
        if not self.bisect_tol > 0:
            raise ValueError("bisect_tol must be positive")


@dataclass(frozen=True)
class CriticalLoad:
    value: float  # raw load P; inf when unbounded
    normalized: float  # P l / c_m
    transition: Transition
    critical_frequency: float | None = None
    from_class: StabilityClass | None = None
    to_class: StabilityClass | None = None

    @property
    def unbounded(self) -> bool:
        return self.transition is Transition.UNBOUNDED

    def to_dict(self) -> dict:
        return {
            "P": None if self.unbounded else self.value,
            "p": None if self.unbounded else self.normalized,
            "transition": self.transition.value,
            "critical_frequency": self.critical_frequency,
            "from_class": self.from_class.value if self.from_class else None,
            "to_class": self.to_class.value if self.to_class else None,
        }


# ----------------------------------------------------------------------------
# closed forms for two links


def _require_m2(config: PendulumConfig):
    if config.link_count != 2:
        raise ConfigError("closed forms are for two-link pendulums only")


def critical_loads_closed_undamped_m2(config: PendulumConfig) -> tuple[float, float]:
    """Normalized flutter-onset and flutter-to-divergence loads ``p = P l / c2``.

    ``p = 2 + (sqrt(m1/m2) -+ sqrt(c1/c2))**2 / 2``.
    """
    _require_m2(config)
    m1, m2 = config.masses
    c1, c2 = config.stiffnesses
    if m2 == 0:
        raise InfiniteLoad("free-end mass vanishes: the critical load is infinite")
    a = math.sqrt(m1 / m2)
    b = math.sqrt(c1 / c2)
    return 2 + 0.5 * (a - b) ** 2, 2 + 0.5 * (a + b) ** 2


def critical_load_closed_damped_m2(config: PendulumConfig) -> float:
    """Routh-Hurwitz flutter load of the damped two-link pendulum (raw units)."""
    _require_m2(config)
    m1, m2 = config.masses
    c1, c2 = config.stiffnesses
    d1, d2 = config.dampings
    l = config.link_length
    if m2 == 0:
        raise InfiniteLoad("free-end mass vanishes")
    num = (4 * m2**2 * (d2**2 * c1**2 + d1**2 * c2**2)
           + d1 * d2 * (8 * m2 * (m1 + 2 * m2) * c2**2 + (c1 * m2 - m1 * c2) ** 2))
    den = 2 * m2 * l * (4 * m2 * d2 + d1 * m2 + m1 * d2) * (c1 * d2 + d1 * c2)
    if den == 0:
        raise DegenerateDamping("d1*c2 + c1*d2 must be positive")
    return num / den + 0.5 * d1 * d2 / (m2 * l**3)


def ziegler_damped_load(d1: float, d2: float) -> float:
    """Damped flutter load for c1 = c2 = 1, l = 1, m1 = 2, m2 = 1."""
    return (4 * d1**2 + 33 * d1 * d2 + 4 * d2**2) / (2 * (6 * d2 + d1) * (d2 + d1)) + 0.5 * d1 * d2


def zero_damping_limit_m2(config: PendulumConfig, beta: float) -> float:
    """Limit of the damped flutter load along ``d1 = beta * d2`` as ``d2 -> 0`` (raw units).

    Both parts of the damped formula are homogeneous of degree zero in the
    dampings except the ``d1 d2`` term, which vanishes in the limit.
    """
    _require_m2(config)
    if beta < 0:
        raise ValueError("beta must be non-negative")
    m1, m2 = config.masses
    c1, c2 = config.stiffnesses
    l = config.link_length
    if m2 == 0:
        raise InfiniteLoad("free-end mass vanishes")
    num = 4 * m2**2 * (c1**2 + beta**2 * c2**2) + beta * (
        8 * m2 * (m1 + 2 * m2) * c2**2 + (c1 * m2 - m1 * c2) ** 2)
    den = 2 * m2 * l * (m1 + (4 + beta) * m2) * (c1 + beta * c2)
    return num / den


# ----------------------------------------------------------------------------
# numeric solver


def transition_between(a: int, b: int, crossing_real: bool = False) -> Transition:
    """Transition label for a class change from code ``a`` to code ``b``."""
    if a in STABLE_CODES:
        if b in (FL, FD):
            return Transition.FLUTTER_ONSET
        if b == DV:
            return Transition.DIVERGENCE_ONSET
        if b == UD:
            return Transition.DIVERGENCE_ONSET if crossing_real else Transition.FLUTTER_ONSET
        return Transition.CLASS_CHANGE
    if b in STABLE_CODES:
        return Transition.RESTABILIZATION
    if a == FL and b == DV:
        return Transition.FLUTTER_TO_DIVERGENCE
    return Transition.CLASS_CHANGE


def _fill_boundary_codes(codes: np.ndarray) -> np.ndarray:
    """Replace isolated BOUNDARY grid verdicts by the class that follows them.

    A grid point landing exactly on a boundary must not register as a band of
    its own; the refinement step still stops at it.
    """
    out = codes.copy()
    for k in range(len(out) - 2, -1, -1):
        if out[k] == BD:
            out[k] = out[k + 1]
    return out


class BoundaryTracker:
    """Locates class changes of one configuration along the load axis."""

    def __init__(self, config: PendulumConfig, settings: SearchSettings = SearchSettings()):
        self.config = config
        self.settings = settings
        self.scale = config.load_scale
        self.scanner = LoadScanner(config, settings.tol.strict())
        # coefficients that vanish for every load are eigenvalues at infinity for good
        lead = np.abs(self.scanner.tensor[::-1]).max(axis=1)
        self._structural = int(np.argmax(lead > 0)) if np.any(lead > 0) else 0

    def codes(self, p) -> np.ndarray:
        return self.scanner.codes(np.asarray(p, dtype=float) * self.scale)

    def refine(self, p_lo: float, p_hi: float, code_lo: int, sections: int = 48) -> tuple[float, float]:
        """Shrink [p_lo, p_hi] around the first change away from ``code_lo``."""
        tol = self.settings.bisect_tol
        while p_hi - p_lo > tol:
            grid = np.linspace(p_lo, p_hi, sections + 2)[1:-1]
            codes = self.codes(grid)
            off = np.flatnonzero(codes != code_lo)
            if len(off) == 0:
                p_lo = grid[-1]
            else:
                k = off[0]
                p_hi = grid[k]
                if k > 0:
                    p_lo = grid[k - 1]
            if sections > 2 and p_hi - p_lo < 64 * tol:
                sections = 2
        return p_lo, p_hi

    def destination(self, p_hi: float, p_next: float) -> int:
        """Class just above a boundary, stepping past a BOUNDARY verdict if needed."""
        code = int(self.codes([p_hi])[0])
        if code != BD:
            return code
        for frac in (1e-9, 1e-6, 1e-3, 0.5):
            probe = p_hi + frac * (p_next - p_hi)
            code = int(self.codes([probe])[0])
            if code != BD:
                return code
        return BD

    def _coeffs(self, p):
        c = self.scanner.coeffs([p * self.scale])[0]
        return c[self._structural:]

    def frequency(self, p_lo: float, p_hi: float) -> tuple[float, bool]:
        """Critical frequency |Im lambda| of the merging pair and whether the crossing is real."""
        lo, hi = self._coeffs(p_lo), self._coeffs(p_hi)
        if np.sign(lo[0]) != np.sign(hi[0]) or hi[0] == 0 or lo[0] == 0:
            return math.inf, not self.scanner.damped
        if np.sign(lo[-1]) != np.sign(hi[-1]) or hi[-1] == 0:
            return 0.0, True
        mid = 0.5 * (p_lo + p_hi)
        c = self._coeffs(mid)
        nz = np.flatnonzero(c)
        c = c[nz[0]:]
        z = np.roots(c)
        if len(z) == 0:
            return math.inf, True
        if self.scanner.damped:
            r = z[np.argmax(z.real)]
            w = abs(r.imag)
            return w, w <= 1e-6 * max(1.0, abs(r))
        if len(z) == 1:
            mu = z[0]
        else:
            d = np.abs(z[:, None] - z[None, :]) + np.diag(np.full(len(z), np.inf))
            i, j = np.unravel_index(np.argmin(d), d.shape)
            mu = 0.5 * (z[i] + z[j])
        return math.sqrt(max(0.0, -mu.real)), mu.real >= 0

    def scan_grid(self) -> np.ndarray:
        """Uniform scan loads plus one load inside every gap between boundary candidates.

        Classes can only change at real roots of the boundary polynomials, so
        the extra midpoints catch bands narrower than the scan step.
        """
        s = self.settings
        n_total = int(math.floor(s.p_max / s.scan_step + 1e-9))
        grid = np.arange(1, n_total + 1) * s.scan_step
        try:
            cands = boundary_candidates(self.config, s.p_max, self.scanner.tensor)
        except (ValueError, np.linalg.LinAlgError):
            cands = np.zeros(0)
        self.candidates = cands
        if len(cands):
            edges = np.concatenate([[0.0], cands, [s.p_max]])
            grid = np.union1d(grid, 0.5 * (edges[:-1] + edges[1:]))
        return grid

    def _bracket(self, p_lo: float, p_hi: float, code_lo: int) -> tuple[float, float]:
        """Bracket of width ``bisect_tol`` around the first change in (p_lo, p_hi].

        A boundary candidate inside the interval is accepted when the classes
        just below and above it confirm the change; otherwise bisect.
        """
        cands = getattr(self, "candidates", np.zeros(0))
        inside = cands[(cands > p_lo) & (cands <= p_hi)]
        if len(inside):
            half = 0.5 * self.settings.bisect_tol
            c = float(inside[0])
            lo, hi = max(c - half, p_lo), min(c + half, p_hi)
            below, above = self.codes([lo, hi])
            if int(below) == code_lo and int(above) != code_lo:
                return lo, hi
        return self.refine(p_lo, p_hi, code_lo)

    def boundaries(self, stop_at_first_instability: bool = False):
        """All class changes in (0, p_max] as (p_lo, p_hi, code_before, code_after)."""
        s = self.settings
        full = self.scan_grid()
        prev_p = 0.0
        prev_code = int(self.codes([0.0])[0])
        out = []
        for k in range(0, len(full), s.chunk):
            grid = full[k:k + s.chunk]
            codes = _fill_boundary_codes(self.codes(grid))
            ps = np.concatenate([[prev_p], grid])
            cs = np.concatenate([[prev_code], codes])
            changes = np.flatnonzero(cs[1:] != cs[:-1])
            for idx in changes:
                a, b = int(cs[idx]), int(cs[idx + 1])
                p_lo, p_hi = self._bracket(ps[idx], ps[idx + 1], a)
                nxt = ps[idx + 2] if idx + 2 < len(ps) else ps[idx + 1] + s.scan_step
                # the refined bracket may sit on a narrower feature than the scan saw
                b_actual = self.destination(p_hi, nxt)
                out.append((p_lo, p_hi, a, b_actual if b_actual != BD else b))
                if stop_at_first_instability and a in STABLE_CODES:
                    return out
            prev_p, prev_code = ps[-1], int(cs[-1])
        return out

    def boundary_record(self, p_lo, p_hi, a, b) -> CriticalLoad:
        w, real_crossing = self.frequency(p_lo, p_hi)
        p_star = 0.5 * (p_lo + p_hi)
        return CriticalLoad(
            value=p_star * self.scale,
            normalized=p_star,
            transition=transition_between(a, b, real_crossing),
            critical_frequency=w,
            from_class=class_of_code(a),
            to_class=class_of_code(b),
        )


def critical_load_numeric(config: PendulumConfig, s: SearchSettings = SearchSettings()) -> CriticalLoad:
    """Smallest load in (0, p_max] at which ``config`` stops being stable.

    Coarse scan at ``scan_step`` followed by bracket refinement to ``bisect_tol``
    (both in normalized units). Returns an UNBOUNDED result when nothing is
    found below the cap.
    """
    tracker = BoundaryTracker(config, s)
    code0 = int(tracker.codes([0.0])[0])
    if code0 not in STABLE_CODES:
        raise UnstableAtZeroLoad(f"configuration is {class_of_code(code0).value} at zero load")
    found = tracker.boundaries(stop_at_first_instability=True)
    for p_lo, p_hi, a, b in found:
        if a in STABLE_CODES:
            return tracker.boundary_record(p_lo, p_hi, a, b)
    return CriticalLoad(math.inf, math.inf, Transition.UNBOUNDED, None, class_of_code(code0), None)


def _real_roots_in(asc: np.ndarray, lo: float, hi: float) -> np.ndarray:
    asc = np.trim_zeros(np.asarray(asc, dtype=float), "b")
    if len(asc) < 2:
        return np.zeros(0)
    z = np.roots(asc[::-1])
    real = z[np.abs(z.imag) <= 1e-8 * np.maximum(1.0, np.abs(z))].real
    return real[(real > lo) & (real < hi)]


def boundary_candidates(config: PendulumConfig, p_max: float, tensor: np.ndarray | None = None) -> np.ndarray:
    """Normalized loads in (0, p_max) where the stability class can change.

    Class changes need a root crossing the imaginary axis, a root through
    infinity or through zero. In the load these are zeros of the leading
    coefficient, the constant coefficient, and the resultant of ``f`` and
    ``f_mu`` (undamped) or the penultimate Hurwitz minor (damped); all are
    polynomials in P.
    """
    from . import polyalg
    from .charpoly import load_tensor

    T = load_tensor(config) if tensor is None else tensor
    rows = np.flatnonzero(np.abs(T).max(axis=1) > 0)
    T = T[: rows[-1] + 1] if len(rows) else T
    n = T.shape[0] - 1
    polys = [T[0], T[-1]]
    if n >= 2:
        if config.is_damped:
            polys.append(polyalg.hurwitz_polynomial_minor(T, n - 1))
        else:
            polys.append(polyalg.sylvester_resultant(T))
    scale = config.load_scale
    found = np.concatenate([_real_roots_in(q, 0.0, p_max * scale) for q in polys]) / scale
    return np.unique(found)


def _first_loss(config: PendulumConfig, s: SearchSettings):
    """Tracker, bracket and codes of the first stable-to-unstable change, or None when unbounded."""
    tracker = BoundaryTracker(config, s)
    cands = boundary_candidates(config, s.p_max, tracker.scanner.tensor)
    edges = np.concatenate([[0.0], cands, [s.p_max]])
    mids = 0.5 * (edges[:-1] + edges[1:])
    codes = tracker.codes(np.concatenate([[0.0], mids]))
    code0, codes = int(codes[0]), codes[1:]
    if code0 not in STABLE_CODES:
        raise UnstableAtZeroLoad(f"configuration is {class_of_code(code0).value} at zero load")
    unstable = np.flatnonzero(~np.isin(codes, STABLE_CODES))
    if len(unstable) == 0:
        return tracker, code0, None
    k = int(unstable[0])
    prev = int(codes[k - 1]) if k > 0 else code0
    code = int(codes[k])
    p_star = float(edges[k])
    delta = max(s.bisect_tol, 1e-9 * p_star)
    lo, hi = p_star - delta, p_star + delta
    probe = tracker.codes([max(lo, 0.0), hi]) if k > 0 else None
    if probe is None or int(probe[0]) != prev or int(probe[1]) != code:
        # roots of high-degree boundary polynomials can be ill-conditioned
        lo_start = float(mids[k - 1]) if k > 0 else 0.0
        lo, hi = tracker.refine(lo_start, float(mids[k]), prev)
    return tracker, code0, (lo, hi, prev, code)


def critical_value_algebraic(config: PendulumConfig, s: SearchSettings = SearchSettings()) -> float:
    """Normalized critical load only (inf when unbounded); the optimizer's hot path."""
    _, _, found = _first_loss(config, s)
    return math.inf if found is None else 0.5 * (found[0] + found[1])


def critical_load_algebraic(config: PendulumConfig, s: SearchSettings = SearchSettings()) -> CriticalLoad:
    """Smallest destabilizing load from the real roots of the boundary polynomials.

    Same contract as :func:`critical_load_numeric`; classes are decided by
    one batched classification at the midpoints between candidate loads, so
    no scan step can skip a narrow band.
    """
    tracker, code0, found = _first_loss(config, s)
    if found is None:
        return CriticalLoad(math.inf, math.inf, Transition.UNBOUNDED, None, class_of_code(code0), None)
    return tracker.boundary_record(*found)
