"""Singular points of the stability boundary.

Triple imaginary eigenvalues (cusps) are solved for in ``mu = lambda**2``
space: the three equations ``f = f_mu = f_mumu = 0`` in the unknowns
``(mu, alpha, P)``. Coefficients of ``f`` are polynomial in ``(u, v, P)`` with
``u = r cos(alpha)``, ``v = r sin(alpha)``, so every Jacobian entry is exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import polyalg
from .charpoly import CharPoly, MuPoly
from .critload import SearchSettings, critical_loads_closed_undamped_m2
from .errors import ConfigError, ConvergedToLowerOrder, InfiniteLoad, NoConvergence, NotARoot
from .model import PendulumConfig, follower_matrix, joint_matrix, mass_block

CERTIFY_TOL = 1e-9


class SingularKind(str, enum.Enum):
    DOUBLE_IMAGINARY = "DOUBLE_IMAGINARY"
    DOUBLE_REAL = "DOUBLE_REAL"
    TRIPLE_IMAGINARY_CUSP = "TRIPLE_IMAGINARY_CUSP"
    VERTICAL_TANGENT = "VERTICAL_TANGENT"
    UMBRELLA_APEX = "UMBRELLA_APEX"


@dataclass(frozen=True)
class SingularPoint:
    location: dict
    mu_value: complex | float | None
    lambda_value: tuple[complex, complex] | None
    jordan_order: int | None
    kind: SingularKind
    residuals: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        vals = [abs(v) for v in self.residuals.values() if v is not None]
        return max(vals) if vals else 0.0

    def to_dict(self) -> dict:
        def num(z):
            if z is None:
                return None
            z = complex(z)
            return z.real if z.imag == 0 else {"re": z.real, "im": z.imag}

        return {
            "kind": self.kind.value,
            "location": {k: float(v) for k, v in self.location.items()},
            "mu": num(self.mu_value),
            "lambda": None if self.lambda_value is None else [num(z) for z in self.lambda_value],
            "jordan_order": self.jordan_order,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


def _lambda_pair(mu: complex) -> tuple[complex, complex]:
    lam = np.sqrt(complex(mu))
    return complex(lam), complex(-lam)


# ----------------------------------------------------------------------------
# one-parameter families f(mu; alpha, P)


class _Family:
    """Polynomial ``f(mu; alpha, P)`` with exact partial derivatives."""

    degree: int

    def partials(self, mu: float, alpha: float, P: float) -> np.ndarray:
        """``D[k, w]``: k-th mu-derivative (k = 0..3); w = value, d/dalpha, d/dP."""
        raise NotImplementedError

    def mu_coeffs(self, alpha: float, P: float) -> np.ndarray:
        """Descending coefficients in mu."""
        raise NotImplementedError

    def load_coeffs(self, alpha: float) -> np.ndarray:
        """``C[mu power, P power]`` (both ascending) at fixed alpha."""
        raise NotImplementedError

    def mu_poly(self, alpha: float, P: float) -> MuPoly:
        return MuPoly(tuple(float(x) for x in self.mu_coeffs(alpha, P)))

    def residual_scale(self, mu: float, alpha: float, P: float) -> np.ndarray:
        """Magnitude scales for f, f', f'' from the absolute coefficients."""
        c = np.abs(self.mu_coeffs(alpha, P))
        out = []
        for _ in range(3):
            out.append(max(np.polyval(c, abs(mu)), np.finfo(float).tiny))
            c = np.polyder(c) if len(c) > 1 else np.zeros(1)
        return np.array(out)


class ExplicitFamily(_Family):
    """Family given directly as ``T[mu power, alpha power, P power]`` (ascending)."""

    def __init__(self, tensor):
        t = np.asarray(tensor, dtype=float)
        if t.ndim != 3:
            raise ValueError("tensor must have axes (mu, alpha, P)")
        self.tensor = t
        self.degree = t.shape[0] - 1
        self._d = [t]
        for _ in range(3):
            self._d.append(polyalg.derivative(self._d[-1], 0))

    def partials(self, mu, alpha, P):
        out = np.empty((4, 3))
        for k, g in enumerate(self._d):
            out[k, 0] = polyalg.evaluate(g, (mu, alpha, P))
            out[k, 1] = polyalg.evaluate(polyalg.derivative(g, 1), (mu, alpha, P))
            out[k, 2] = polyalg.evaluate(polyalg.derivative(g, 2), (mu, alpha, P))
        return out

    def load_coeffs(self, alpha):
        t = self.tensor
        return np.array([np.polynomial.polynomial.polyval(alpha, t[k]) for k in range(t.shape[0])])

    def mu_coeffs(self, alpha, P):
        t = self.tensor
        asc = [polyalg.evaluate(t[k], (alpha, P)) for k in range(t.shape[0])]
        return np.array(asc[::-1], dtype=float)


class MassPlaneFamily(_Family):
    """Undamped pendulum with masses ``(m_i, m_j) = r (cos alpha, sin alpha)``.

    The characteristic polynomial is expanded once as a dense polynomial in
    ``(mu, P, u, v)``; the mass matrix is linear in the masses so every entry
    has degree one in each variable.
    """

    def __init__(self, base: PendulumConfig, plane: tuple[int, int], r: float = 1.0):
        if base.is_damped:
            raise ConfigError("mass-plane families are undamped")
        m = base.link_count
        i, j = plane
        if i == j or not (1 <= i <= m and 1 <= j <= m):
            raise ConfigError(f"plane must name two distinct masses in 1..{m}")
        if not r > 0:
            raise ConfigError("r must be positive")
        self.base, self.plane, self.r = base, (i, j), float(r)
        self.degree = m
        l = base.link_length
        fixed = [0.0 if k + 1 in (i, j) else mk for k, mk in enumerate(base.masses)]
        M0 = sum(mk * mass_block(m, k + 1, l) for k, mk in enumerate(fixed))
        Mu, Mv = mass_block(m, i, l), mass_block(m, j, l)
        K0 = joint_matrix(base.stiffnesses)
        K1 = follower_matrix(m, l)
        entries = []
        for a in range(m):
            row = []
            for b in range(m):
                e = np.zeros((2, 2, 2, 2))
                e[0, 0, 0, 0] = K0[a, b]
                e[0, 1, 0, 0] = K1[a, b]
                e[1, 0, 0, 0] = M0[a, b]
                e[1, 0, 1, 0] = Mu[a, b]
                e[1, 0, 0, 1] = Mv[a, b]
                row.append(e)
            entries.append(row)
        self.tensor = polyalg._pad_to(polyalg.poly_det(entries), (m + 1,) * 4)
        n = m + 1
        d = [self.tensor]
        for _ in range(3):
            d.append(polyalg._pad_to(polyalg.derivative(d[-1], 0), (n,) * 4))
        # stacked[k, w]: k-th mu-derivative; w = value, d/dP, d/du, d/dv
        self._stacked = np.array([[g] + [polyalg._pad_to(polyalg.derivative(g, ax), (n,) * 4)
                                         for ax in (1, 2, 3)] for g in d])
        self._pw = np.arange(n)

    def uv(self, alpha: float) -> tuple[float, float]:
        return self.r * math.cos(alpha), self.r * math.sin(alpha)

    def config_at(self, alpha: float) -> PendulumConfig:
        masses = list(self.base.masses)
        masses[self.plane[0] - 1], masses[self.plane[1] - 1] = self.uv(alpha)
        return self.base.with_masses(masses)

    def partials(self, mu, alpha, P):
        u, v = self.uv(alpha)
        pw = self._pw
        vals = np.einsum("kwabcd,a,b,c,d->kw", self._stacked, mu**pw, P**pw, u**pw, v**pw)
        out = np.empty((4, 3))
        out[:, 0] = vals[:, 0]
        # d/dalpha (u, v) = (-v, u)
        out[:, 1] = -v * vals[:, 2] + u * vals[:, 3]
        out[:, 2] = vals[:, 1]
        return out

    def load_coeffs(self, alpha):
        u, v = self.uv(alpha)
        return np.einsum("abcd,c,d->ab", self.tensor, u**self._pw, v**self._pw)

    def mu_coeffs(self, alpha, P):
        u, v = self.uv(alpha)
        asc = [polyalg.evaluate(self.tensor[k], (P, u, v)) for k in range(self.degree + 1)]
        return np.array(asc[::-1], dtype=float)


def manufactured_cusp_family(alpha0: float, P0: float, mu0: float = -1.0, scale: float = 1.0) -> ExplicitFamily:
    """``scale * ((mu - mu0)**3 + (alpha - alpha0)(mu - mu0) + (P - P0))``.

    Has a triple root ``mu0`` exactly at ``(alpha0, P0)``.
    """
    # expand in powers of mu, alpha, P
    t = np.zeros((4, 2, 2))
    t[3, 0, 0] = 1.0
    t[2, 0, 0] = -3 * mu0
    t[1, 0, 0] = 3 * mu0**2 - alpha0
    t[1, 1, 0] = 1.0
    t[0, 0, 0] = -mu0**3 + alpha0 * mu0 - P0
    t[0, 1, 0] = -mu0
    t[0, 0, 1] = 1.0
    return ExplicitFamily(scale * t)


# ----------------------------------------------------------------------------
# Jordan order


def jordan_order_at(p: MuPoly | CharPoly | np.ndarray, root: complex, tol: float = 1e-6) -> int:
    """Multiplicity of ``root`` judged by normalized Taylor coefficients.

    The j-th Taylor coefficient is compared against
    ``sum_k |c_k| binom(k, j) |root|**(k-j)``; the order is the first j whose
    coefficient clears ``tol`` times that scale. For the pencil, a single
    Jordan chain is assumed, so multiplicity equals block size.
    """
    c = np.asarray(p.coeffs if hasattr(p, "coeffs") else p, dtype=float)
    asc = c[::-1]
    n = len(asc) - 1
    z = complex(root)
    az = abs(z)
    for j in range(n + 1):
        ks = np.arange(j, n + 1)
        binom = np.array([math.comb(int(k), j) for k in ks], dtype=float)
        taylor = np.sum(asc[j:] * binom * z ** (ks - j))
        scale = np.sum(np.abs(asc[j:]) * binom * az ** (ks - j))
        if scale == 0:
            continue
        if abs(taylor) > tol * scale:
            if j == 0:
                raise NotARoot(f"|f(root)| / scale = {abs(taylor) / scale:.3g} exceeds {tol:g}")
            return j
    return n


# ----------------------------------------------------------------------------
# triple roots


@dataclass(frozen=True)
class NewtonSettings:
    tol: float = 1e-12
    max_iter: int = 80
    min_step: float = 1.0 / 1024


def _triple_system(family: _Family, x: np.ndarray):
    mu, alpha, P = x
    D = family.partials(mu, alpha, P)
    F = D[:3, 0]
    # rows f, f', f''; columns mu, alpha, P
    J = np.empty((3, 3))
    J[:, 0] = D[1:4, 0]
    J[:, 1] = D[:3, 1]
    J[:, 2] = D[:3, 2]
    scale = family.residual_scale(mu, alpha, P)
    return F, J, scale


def _newton_triple(family: _Family, x: np.ndarray, settings: NewtonSettings):
    F, J, scale = _triple_system(family, x)
    norm = np.linalg.norm(F / scale)
    for _ in range(settings.max_iter):
        if np.all(np.abs(F / scale) < settings.tol):
            break
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        while t >= settings.min_step:
            x_new = x + t * step
            F_new, J_new, scale_new = _triple_system(family, x_new)
            norm_new = np.linalg.norm(F_new / scale_new)
            if norm_new < norm:
                break
            t *= 0.5
        else:
            break
        done = np.max(np.abs(x_new - x) / np.maximum(1.0, np.abs(x))) < 1e-15
        x, F, J, scale, norm = x_new, F_new, J_new, scale_new, norm_new
        if done:
            break
    return x, F, scale


def _double_root_seed(family: _Family, alpha: float, P: float):
    """``(mu, alpha, P*)`` on the double-root curve with ``P*`` nearest to ``P``."""
    try:
        loads = double_root_loads(family, alpha)
    except (ValueError, np.linalg.LinAlgError):
        return None
    loads = loads[np.isfinite(loads)]
    if len(loads) == 0:
        return None
    P_star = float(loads[np.argmin(np.abs(loads - P))])
    mu, _ = _inflection_gap(family, alpha, P_star)
    return None if mu is None else np.array([mu, alpha, P_star])


def find_triple_root_cusp(family: _Family, guess, tol: float = CERTIFY_TOL,
                          settings: NewtonSettings = NewtonSettings(), local_scan: bool = True) -> SingularPoint:
    """Solve ``f = f_mu = f_mumu = 0`` for ``(alpha, P, mu)`` from ``guess = (alpha0, P0, mu0)``.

    Damped Newton: the full step is halved until the scaled residual norm
    decreases. If that stalls, Newton restarts from the double root whose
    load is nearest ``P0`` at ``alpha0``, and then (with ``local_scan``) from
    the seeds of :func:`find_cusps` over ``alpha0 +- alpha0 / 2`` and
    ``P0 / 2 .. 2 P0``, keeping the cusp nearest the guess. Certified when
    every scaled residual is below ``tol``.

    Raises
    ------
    NoConvergence
        Iteration budget exhausted or the step cannot reduce the residual.
    ConvergedToLowerOrder
        Iterates settle on a double root: ``f`` and ``f_mu`` vanish but
        ``f_mumu`` does not.
    """
    alpha0, P0, mu0 = (float(g) for g in guess)
    x, F, scale = _newton_triple(family, np.array([mu0, alpha0, P0]), settings)
    rel = np.abs(F / scale)
    if not np.all(rel < tol):
        # restart from the nearest double root at the guessed alpha
        seed = _double_root_seed(family, alpha0, P0)
        if seed is not None:
            x2, F2, scale2 = _newton_triple(family, seed, settings)
            rel2 = np.abs(F2 / scale2)
            if np.linalg.norm(rel2) < np.linalg.norm(rel):
                x, F, scale, rel = x2, F2, scale2, rel2
    if not np.all(rel < tol) and local_scan:
        near = _nearest_local_cusp(family, alpha0, P0, tol, settings)
        if near is not None:
            return near
    if not np.all(rel < tol):
        if rel[0] < tol and rel[1] < tol:
            raise ConvergedToLowerOrder(
                f"double root at alpha={x[1]:.6g}, P={x[2]:.6g}; |f''|/scale = {rel[2]:.3g}")
        raise NoConvergence(f"scaled residuals {rel.tolist()} after Newton")
    mu, alpha, P = (float(v) for v in x)
    order = jordan_order_at(family.mu_coeffs(alpha, P), mu, tol=max(1e-6, tol))
    if order < 3:
        raise ConvergedToLowerOrder(f"root order {order} at the solution")
    return SingularPoint(
        location={"alpha": alpha, "P": P},
        mu_value=mu,
        lambda_value=_lambda_pair(mu),
        jordan_order=order,
        kind=SingularKind.TRIPLE_IMAGINARY_CUSP if mu < 0 else SingularKind.DOUBLE_REAL,
        residuals={"f": F[0] / scale[0], "f_mu": F[1] / scale[1], "f_mumu": F[2] / scale[2]},
    )


def double_root_loads(family: _Family, alpha: float, p_range=(0.0, math.inf)) -> np.ndarray:
    """Real loads at which ``f(.; alpha, P)`` has a multiple root in mu.

    Roots of the resultant of ``f`` and ``f_mu`` in the load: the Sylvester
    matrix has polynomial-in-P entries and its determinant is expanded
    without division.
    """
    C = family.load_coeffs(alpha)
    C = C[: np.flatnonzero(np.abs(C).max(axis=1) > 0)[-1] + 1]
    if C.shape[0] < 3:
        return np.zeros(0)
    res = polyalg.trim_trailing(polyalg.sylvester_resultant(C))
    if not np.any(res):
        return np.zeros(0)
    z = np.roots(res[::-1])
    real = z[np.abs(z.imag) <= 1e-9 * np.maximum(1.0, np.abs(z))].real
    return np.sort(real[(real >= p_range[0]) & (real <= p_range[1])])


def _inflection_gap(family: _Family, alpha: float, P: float):
    """Double root mu at (alpha, P) and the scaled f'' there."""
    c = family.mu_coeffs(alpha, P)
    nz = np.flatnonzero(c)
    c = c[nz[0]:] if len(nz) else c
    z = np.roots(c)
    if len(z) < 2:
        return None, None
    d = np.abs(z[:, None] - z[None, :]) + np.diag(np.full(len(z), np.inf))
    i, j = np.unravel_index(np.argmin(d), d.shape)
    mu = 0.5 * (z[i] + z[j])
    if abs(mu.imag) > 1e-6 * max(1.0, abs(mu)):
        return None, None
    mu = mu.real
    scale = family.residual_scale(mu, alpha, P)[2]
    return mu, float(np.polyval(np.polyder(c, 2), mu)) / scale


def _nearest_local_cusp(family: _Family, alpha0: float, P0: float, tol: float, settings: NewtonSettings):
    w = 0.5 * max(abs(alpha0), 1e-2)
    alphas = np.linspace(alpha0 - w, alpha0 + w, 41)
    pts = find_cusps(family, alphas, (0.5 * P0, 2.0 * P0) if P0 > 0 else (2.0 * P0, 0.5 * P0), tol)
    if not pts:
        return None
    dist = [abs(p.location["alpha"] - alpha0) / w + abs(p.location["P"] - P0) / max(abs(P0), 1.0) for p in pts]
    return pts[int(np.argmin(dist))]


def find_cusps(family: _Family, alphas, p_range=(0.0, 100.0), tol: float = CERTIFY_TOL,
               merge_tol: float = 1e-6) -> list[SingularPoint]:
    """All triple imaginary roots of ``family`` with alpha inside the grid span.

    Along each branch of double-root loads the scaled ``f_mumu`` at the double
    root is tracked; a sign change between neighbouring alphas brackets a
    triple root and seeds :func:`find_triple_root_cusp`. Certified points
    are merged within ``merge_tol``, smallest residual first, and returned
    ordered by alpha.
    """
    alphas = np.asarray(alphas, dtype=float)
    rows = []
    for a in alphas:
        cur = []
        for P in double_root_loads(family, a, p_range):
            mu, g = _inflection_gap(family, a, P)
            if mu is not None:
                cur.append((P, mu, g))
        rows.append(cur)
    seeds = []
    for k in range(1, len(alphas)):
        a0, a1 = alphas[k - 1], alphas[k]
        pts0, pts1 = rows[k - 1], rows[k]
        # a branch crossing f'' = 0 between neighbouring alphas
        if pts0:
            for P1, mu1, g1 in pts1:
                P0, mu0, g0 = min(pts0, key=lambda t: abs(t[0] - P1))
                if np.sign(g0) != np.sign(g1) and abs(P1 - P0) < 0.1 * max(1.0, abs(P1)):
                    w = abs(g0) / (abs(g0) + abs(g1))
                    seeds.append((a0 + w * (a1 - a0), P0 + w * (P1 - P0), mu0 + w * (mu1 - mu0)))
        # two branches with opposite f'' meeting and ending together
        if len(pts0) != len(pts1):
            for a, pts in ((a0, pts0), (a1, pts1)):
                for (P0, mu0, g0), (P1, mu1, g1) in zip(pts, pts[1:]):
                    if np.sign(g0) != np.sign(g1):
                        seeds.append((a, 0.5 * (P0 + P1), 0.5 * (mu0 + mu1)))
    found: list[SingularPoint] = []
    for guess in seeds:
        try:
            found.append(find_triple_root_cusp(family, guess, tol, local_scan=False))
        except (NoConvergence, ConvergedToLowerOrder, NotARoot):
            pass
    lo, hi = alphas.min(), alphas.max()
    found = [f for f in found if f.kind is SingularKind.TRIPLE_IMAGINARY_CUSP
             and lo <= f.location["alpha"] <= hi]
    found.sort(key=lambda s: s.max_residual)
    merged: list[SingularPoint] = []
    for pt in found:
        key = np.array([pt.location["alpha"], pt.location["P"]])
        if all(np.linalg.norm(key - [q.location["alpha"], q.location["P"]]) > merge_tol * max(1.0, np.linalg.norm(key))
               for q in merged):
            merged.append(pt)
    return sorted(merged, key=lambda s: (s.location["alpha"], s.location["P"]))


# ----------------------------------------------------------------------------
# vertical tangents


@dataclass(frozen=True)
class TangentSettings:
    threshold: float = 1e3  # multiple of the median branch slope
    halvings: int = 30
    growth: float = 1.1  # minimum slope ratio over the last three halvings
    shrink: float = 0.5  # maximum load-jump ratio over the last three halvings


def _finite_loads(row) -> np.ndarray:
    return np.array([b.normalized for b in row.boundaries if math.isfinite(b.normalized)])


def _nearest(ps: np.ndarray, p_ref: float):
    return None if len(ps) == 0 else float(ps[np.argmin(np.abs(ps - p_ref))])


def _median_slope(sweep) -> float:
    slopes = []
    n_branches = max((len(r.boundaries) for r in sweep.rows), default=0)
    for k in range(n_branches):
        br = sweep.branch(k)
        if len(br) >= 2:
            slopes.extend(np.abs(np.diff(br[:, 1])) / np.diff(br[:, 0]))
    slopes = np.asarray(slopes)
    slopes = slopes[np.isfinite(slopes)]
    med = float(np.median(slopes)) if len(slopes) else 0.0
    return max(med, 1e-12)


def _vanishing_pair(with_ps: np.ndarray, without_ps: np.ndarray):
    """Adjacent pair of ``with_ps`` whose removal best matches ``without_ps``."""
    best, best_err = None, math.inf
    for i in range(len(with_ps) - 1):
        rest = np.delete(with_ps, [i, i + 1])
        err = np.max(np.abs(rest - without_ps)) if len(rest) else 0.0
        if err < best_err:
            best, best_err = i, err
    return best


def _refine_fold(spec, s, a_with, pair, a_without, n_with, ts, row_fn):
    """Bisect towards the alpha where two boundaries annihilate.

    Returns the final bracket end that still has the pair, the pair there,
    and the history ``(alpha, half-gap)`` of every update of that end.
    """
    history = [(a_with, 0.5 * abs(pair[1] - pair[0]))]
    for _ in range(ts.halvings):
        am = 0.5 * (a_with + a_without)
        if am in (a_with, a_without):
            break
        ps = _finite_loads(row_fn(spec, am, s))
        if len(ps) == n_with:
            center = 0.5 * (pair[0] + pair[1])
            i = int(np.argmin(np.abs(0.5 * (ps[:-1] + ps[1:]) - center)))
            pair = (ps[i], ps[i + 1])
            a_with = am
            history.append((a_with, 0.5 * abs(pair[1] - pair[0])))
        else:
            a_without = am
    return a_with, pair, np.array(history), abs(a_with - a_without)


def _refine_steep(spec, s, a0, p0, a1, p1, ts: TangentSettings, row_fn):
    """Halve [a0, a1] towards the steeper half; returns slopes, jumps and the final interval."""
    slopes, jumps = [], []
    for _ in range(ts.halvings):
        am = 0.5 * (a0 + a1)
        if not (a0 < am < a1):
            break
        pm = _nearest(_finite_loads(row_fn(spec, am, s)), 0.5 * (p0 + p1))
        if pm is None:
            break
        left = abs(pm - p0) / (am - a0)
        right = abs(p1 - pm) / (a1 - am)
        if left >= right:
            a1, p1 = am, pm
        else:
            a0, p0 = am, pm
        slopes.append(max(left, right))
        jumps.append(abs(p1 - p0))
    return slopes, jumps, (a0, p0, a1, p1)


def _tangent_point(spec, alpha, p, k, inv_slope, width, origin):
    return SingularPoint(
        location={"alpha": alpha, "p": p, "P": p * spec.config_at(alpha).load_scale, "branch": float(k)},
        mu_value=None, lambda_value=None, jordan_order=None,
        kind=SingularKind.VERTICAL_TANGENT,
        residuals={"inverse_slope": inv_slope, "interval": width, "fold": 1.0 if origin == "fold" else 0.0},
    )


def find_vertical_tangent(sweep, ts: TangentSettings = TangentSettings(), row_fn=None) -> list[SingularPoint]:
    """Points where a boundary branch of ``sweep`` has unbounded dp/dalpha.

    Two sources of candidates:

    * folds, where neighbouring rows differ by a pair of boundaries; the
      alpha of annihilation is bisected and the half-gap of the pair over the
      distance to the fold must diverge;
    * steep secants (branch ends and local slope maxima) between
      neighbouring rows; the interval is halved towards the steeper
      half, and the slope must keep growing while the load jump shrinks,
      which rules out jumps between unrelated branches and asymptotes.

    Either way a point is accepted only when its final slope exceeds
    ``threshold`` times the median secant slope of the sweep.

    ``row_fn(spec, alpha, settings)`` recomputes a row during refinement; it
    defaults to :func:`ziegler.sweep.sweep_row`.
    """
    from .sweep import sweep_row

    row_fn = row_fn or sweep_row

    spec, s = sweep.spec, sweep.settings
    rows = [r for r in sweep.rows if r.error is None]
    if len(rows) < 3:
        return []
    limit = ts.threshold * _median_slope(sweep)
    out: list[SingularPoint] = []

    def keep(pt):
        a, p = pt.location["alpha"], pt.location["p"]
        for q in out:
            if abs(q.location["alpha"] - a) < 1e-6 and abs(q.location["p"] - p) < 1e-4 * max(1.0, abs(p)):
                return
        out.append(pt)

    loads = [_finite_loads(r) for r in rows]
    for k in range(len(rows) - 1):
        n0, n1 = len(loads[k]), len(loads[k + 1])
        if abs(n0 - n1) != 2:
            continue
        if n0 > n1:
            a_with, ps_with, a_without, ps_without = rows[k].alpha, loads[k], rows[k + 1].alpha, loads[k + 1]
        else:
            a_with, ps_with, a_without, ps_without = rows[k + 1].alpha, loads[k + 1], rows[k].alpha, loads[k]
        i = _vanishing_pair(ps_with, ps_without)
        a_f, pair, hist, width = _refine_fold(spec, s, a_with, (ps_with[i], ps_with[i + 1]),
                                              a_without, len(ps_with), ts, row_fn)
        if len(hist) < 5:
            continue
        # secant slopes of the half-gap between successive updates diverge at a fold
        slope = np.abs(np.diff(hist[:, 1])) / np.abs(np.diff(hist[:, 0]))
        gaps = hist[:, 1]
        if slope[-1] > limit and slope[-1] >= ts.growth * slope[-3] and gaps[-1] < ts.shrink * gaps[0]:
            keep(_tangent_point(spec, float(a_f), float(0.5 * (pair[0] + pair[1])), i,
                                float(1.0 / slope[-1]), float(width), "fold"))

    n_branches = max(len(p) for p in loads)
    alphas = np.array([r.alpha for r in rows])
    for k in range(n_branches):
        idx = [j for j, p in enumerate(loads) if len(p) > k]
        br = np.array([(alphas[j], loads[j][k]) for j in idx])
        if len(br) < 3:
            continue
        da = np.diff(br[:, 0])
        slope = np.abs(np.diff(br[:, 1])) / da
        cand = {0, len(slope) - 1}
        for i in range(1, len(slope) - 1):
            if slope[i] >= slope[i - 1] and slope[i] >= slope[i + 1]:
                cand.add(i)
        for i in sorted(cand, key=lambda i: -slope[i])[:6]:
            j_a, j_b = idx[i], idx[i + 1]
            if j_b != j_a + 1:
                continue
            (a0, p0), (a1, p1) = br[i], br[i + 1]
            slopes, jumps, (b0, q0, b1, q1) = _refine_steep(spec, s, a0, p0, a1, p1, ts, row_fn)
            if len(slopes) < 4:
                continue
            growing = slopes[-1] >= ts.growth * slopes[-4]
            settling = jumps[-1] < ts.shrink * jumps[-4]
            if not (slopes[-1] > limit and growing and settling):
                continue
            # an end pinned through every halving is the singular point itself
            if b1 == a1:
                alpha, p = float(b1), float(q1)
            elif b0 == a0:
                alpha, p = float(b0), float(q0)
            else:
                alpha, p = float(0.5 * (b0 + b1)), float(0.5 * (q0 + q1))
            keep(_tangent_point(spec, alpha, p, k, float(1.0 / slopes[-1]), float(b1 - b0), "steep"))
    return sorted(out, key=lambda sp: (sp.location["alpha"], sp.location["p"]))


# ----------------------------------------------------------------------------
# Whitney umbrella of the two-link pendulum


def certify_umbrella_apex_m2(config: PendulumConfig, n_rays: int = 2001,
                             scales=(1.0, 1e-2, 1e-4), settings: SearchSettings = SearchSettings(p_max=50.0)
                             ) -> SingularPoint:
    """Certify the apex of the two-link critical-load surface over ``(m1, m2)``.

    Checks, with residuals reported:

    * ``min_ratio p_lower = 2``, attained on the ray ``m1 c2 = m2 c1``
      (closed form and the numeric solver at that ray);
    * the surface is ruled: p is unchanged along ``t (m1, m2)`` as ``t -> 0``;
      ``scales`` should keep ``t**2 m1 m2 l**4`` above the deflation
      tolerance, below which the free-end mass is treated as zero;
    * self-intersection over the p-axis: every sampled ``p > 2`` is the
      boundary load of two different mass directions.
    """
    from .critload import critical_load_numeric

    if config.link_count != 2 or config.is_damped:
        raise ConfigError("umbrella certification needs an undamped two-link pendulum")
    c1, c2 = config.stiffnesses
    l = config.link_length
    alphas = np.linspace(0.0, math.pi / 2, n_rays)[1:]
    lower = []
    for a in alphas:
        cfg = config.with_masses((math.cos(a), math.sin(a)))
        try:
            lower.append(critical_loads_closed_undamped_m2(cfg)[0])
        except InfiniteLoad:
            lower.append(math.inf)
    lower = np.array(lower)
    k = int(np.argmin(lower))
    alpha_star = math.atan2(c2, c1)  # m1 : m2 = c1 : c2
    m_star = (math.cos(alpha_star), math.sin(alpha_star))
    at_ray = config.with_masses(m_star)
    p_closed = critical_loads_closed_undamped_m2(at_ray)[0]
    ruled = []
    for t in scales:
        cfg = config.with_masses((t * m_star[0], t * m_star[1]))
        ruled.append(critical_load_numeric(cfg, settings).normalized)
    # two directions for each p > 2: x = sqrt(m1/m2) solves (x -+ b)^2 = 2 (p - 2)
    b = math.sqrt(c1 / c2)
    pair_gap = []
    for p in np.linspace(2.05, 8.0, 12):
        xs = sorted({x for x in (b - math.sqrt(2 * (p - 2)), b + math.sqrt(2 * (p - 2)),
                                 math.sqrt(2 * (p - 2)) - b) if x > 0})
        vals = []
        for x in xs[:2]:
            lo, hi = critical_loads_closed_undamped_m2(config.with_masses((x * x, 1.0)))
            vals.append(min(abs(lo - p), abs(hi - p)))
        pair_gap.append(max(vals) if len(xs) >= 2 else math.inf)
    # double root at the apex ray: mu = -(trace term) / (2 det M)
    from .charpoly import mu_poly

    mp = mu_poly(at_ray, 2.0 * at_ray.load_scale)
    mu_double = -mp.coeffs[1] / (2 * mp.coeffs[0])
    return SingularPoint(
        location={"m1": 0.0, "m2": 0.0, "p": 2.0, "P": 2.0 * c2 / l,
                  "ray_alpha": alpha_star, "ray_m1_over_m2": c1 / c2},
        mu_value=float(mu_double),
        lambda_value=_lambda_pair(mu_double),
        jordan_order=jordan_order_at(mp, mu_double),
        kind=SingularKind.UMBRELLA_APEX,
        residuals={
            "min_over_rays": float(lower[k] - 2.0),
            "argmin_alpha": float(alphas[k] - alpha_star),
            "closed_at_ray": p_closed - 2.0,
            "ruled": max(abs(r - ruled[0]) for r in ruled),
            "numeric_at_ray": ruled[0] - 2.0,
            "self_intersection": float(max(pair_gap)),
        },
    )
