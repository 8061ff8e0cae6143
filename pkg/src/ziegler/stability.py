"""Stability classification of undamped (root/discriminant) and damped (Hurwitz) pendulums.

Undamped systems are classified from the roots ``mu = lambda**2``:

* all mu real, simple, negative  -> marginal stability (lambda on the imaginary axis)
* a non-real mu                  -> flutter (lambda quartet off the axis)
* a real positive mu             -> divergence
* both of the above              -> flutter and divergence

The discriminant sequence of the mu-polynomial is attached as an independent
witness. Damped systems use the Hurwitz determinants of the lambda-polynomial.

Every scan over loads goes through :func:`classify_coeff_rows`, the same code
path as the scalar classifiers, so a grid and a single evaluation never disagree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .charpoly import (
    CLUSTER_RADIUS,
    DEFLATION_TOL,
    CharPoly,
    MuPoly,
    Spectrum,
    char_poly,
    cluster_roots,
    coeffs_at_loads,
    load_tensor,
    roots,
    to_mu_poly,
)
from .errors import ZeroPolynomial
from .model import PendulumConfig, assemble


class StabilityClass(str, enum.Enum):
    MARGINALLY_STABLE = "MARGINALLY_STABLE"
    FLUTTER = "FLUTTER"
    DIVERGENCE = "DIVERGENCE"
    FLUTTER_AND_DIVERGENCE = "FLUTTER_AND_DIVERGENCE"
    BOUNDARY = "BOUNDARY"
    ASYMPTOTICALLY_STABLE = "ASYMPTOTICALLY_STABLE"
    UNSTABLE_DAMPED = "UNSTABLE_DAMPED"

    @property
    def is_stable(self) -> bool:
        return self in (StabilityClass.MARGINALLY_STABLE, StabilityClass.ASYMPTOTICALLY_STABLE)


_CLASSES = list(StabilityClass)
_CODE = {c: i for i, c in enumerate(_CLASSES)}
MS, FL, DV, FD, BD, AS, UD = (_CODE[c] for c in _CLASSES)
STABLE_CODES = (MS, AS)


@dataclass(frozen=True)
class ToleranceSet:
    """Numerical tolerances for classification.

    boundary_band
        Relative band around zero for the deciding quantities (normalized
        discriminant, Hurwitz determinants, root at the origin). Zero gives a
        strict classification used when bisecting for boundaries.
    imag_tol
        A root is real when ``|Im z| <= imag_tol * |z|``.
    cluster_radius
        Relative radius within which roots count as coincident.
    deflation_tol
        Leading coefficients below ``deflation_tol * max|a|`` are dropped
        (eigenvalues at infinity).
    """

    boundary_band: float = 1e-9
    imag_tol: float = 1e-8
    cluster_radius: float = CLUSTER_RADIUS
    deflation_tol: float = DEFLATION_TOL

    def strict(self) -> "ToleranceSet":
        return replace(self, boundary_band=0.0)


DEFAULT_TOL = ToleranceSet()


@dataclass(frozen=True)
class StabilityReport:
    classification: StabilityClass
    spectrum: Spectrum
    variable: str  # "mu" or "lambda"
    discriminants: tuple[float, ...] = ()
    hurwitz: tuple[float, ...] = ()
    boundary_distance: float = float("inf")
    load: float | None = None

    @property
    def infinite_count(self) -> int:
        return self.spectrum.infinite_count

    @property
    def lambda_roots(self) -> tuple[complex, ...]:
        if self.variable == "lambda":
            return self.spectrum.roots
        out = []
        for mu in self.spectrum.roots:
            r = np.sqrt(complex(mu))
            out.extend((r, -r))
        return tuple(out)

    def to_dict(self) -> dict:
        def cplx(z):
            return [float(z.real), float(z.imag)]

        return {
            "class": self.classification.value,
            "load": self.load,
            "variable": self.variable,
            "roots": [cplx(z) for z in self.spectrum.roots],
            "clusters": [{"center": cplx(c), "multiplicity": k} for c, k in self.spectrum.clusters],
            "infinite_count": self.spectrum.infinite_count,
            "discriminants": list(self.discriminants),
            "hurwitz": list(self.hurwitz),
            "boundary_distance": self.boundary_distance,
        }


# ----------------------------------------------------------------------------
# discrimination matrix and discriminant sequence


@dataclass(frozen=True)
class DiscriminationMatrix:
    entries: np.ndarray

    @property
    def order(self) -> int:
        return self.entries.shape[0] // 2


def _discrimination_entries(a: np.ndarray) -> np.ndarray:
    """Batched discrimination matrices; ``a`` has shape (..., n+1), descending."""
    n = a.shape[-1] - 1
    deriv = a[..., :-1] * np.arange(n, 0, -1)
    S = np.zeros(a.shape[:-1] + (2 * n, 2 * n))
    for k in range(n):
        S[..., 2 * k, k:k + n + 1] = a
        S[..., 2 * k + 1, k + 1:k + 1 + n] = deriv
    return S


def discrimination_matrix(p: MuPoly) -> DiscriminationMatrix:
    """Interleaved rows of f and f' coefficients, each pair shifted one column right."""
    a = np.asarray(p.deflated, dtype=float)
    if len(a) < 2:
        raise ValueError("discrimination matrix needs degree >= 1")
    return DiscriminationMatrix(_discrimination_entries(a))


def discriminant_sequence(p: MuPoly) -> list[float]:
    """Leading principal minors of even order 2, 4, ..., 2n of the discrimination matrix."""
    S = discrimination_matrix(p).entries
    return [float(np.linalg.det(S[:2 * k, :2 * k])) for k in range(1, S.shape[0] // 2 + 1)]


def _balance(c: np.ndarray) -> np.ndarray:
    """Rescale rows so the leading coefficient is 1 and root magnitudes are O(1).

    With b = c / c0 and s = max_i |b_i|**(1/i), the polynomial in ``x/s`` has
    coefficients b_i / s**i, all of modulus <= 1. Signs of discriminants and
    Hurwitz determinants are unchanged by this transformation.
    """
    b = c / c[:, :1]
    n = c.shape[1] - 1
    if n == 0:
        return b
    i = np.arange(1, n + 1)
    s = np.max(np.abs(b[:, 1:]) ** (1.0 / i), axis=1)
    s = np.where(s > 0, s, 1.0)
    return b * s[:, None] ** -np.arange(n + 1)


def normalized_discriminant(coeffs) -> float:
    c = np.asarray(coeffs, dtype=float)[None, :]
    if c.shape[1] < 2:
        return float("inf")
    return float(_top_discriminant(_balance(c))[0])


def _top_discriminant(b: np.ndarray) -> np.ndarray:
    if b.shape[1] == 2:
        # linear: discrimination matrix [[b0, b1], [0, b0]]
        return b[:, 0] ** 2
    return np.linalg.det(_discrimination_entries(b))


# ----------------------------------------------------------------------------
# Hurwitz determinants


def _hurwitz_entries(a: np.ndarray) -> np.ndarray:
    """Batched Hurwitz matrices H[i, j] = a[2j - i + 1] (0-based), shape (..., n, n)."""
    n = a.shape[-1] - 1
    H = np.zeros(a.shape[:-1] + (n, n))
    for i in range(n):
        for j in range(n):
            k = 2 * j - i + 1
            if 0 <= k <= n:
                H[..., i, j] = a[..., k]
    return H


def hurwitz_determinants(coeffs) -> list[float]:
    a = np.asarray(coeffs, dtype=float)
    H = _hurwitz_entries(a)
    return [float(np.linalg.det(H[:k, :k])) for k in range(1, len(a))]


def _batched_hurwitz(b: np.ndarray) -> np.ndarray:
    """Deciding Hurwitz quantities of each row, as relative Routh pivots, then a_n.

    The k-th Routh first-column entry equals H_k / H_{k-1}, so its sign is the
    sign pattern of the Hurwitz minors. Each entry is divided by the magnitude
    of the two products it was formed from, giving a number in [-1, 1] that
    measures the cancellation at that elimination step.
    """
    N, width = b.shape
    n = width - 1
    cols = (n + 2) // 2
    prev = np.zeros((N, cols))
    cur = np.zeros((N, cols))
    prev[:, :len(b[0, 0::2])] = b[:, 0::2]
    cur[:, :len(b[0, 1::2])] = b[:, 1::2]
    out = [cur[:, 0] / np.max(np.abs(b), axis=1)]
    dead = cur[:, 0] == 0
    for _ in range(2, n):
        piv = np.where(dead, 1.0, cur[:, 0])
        left = piv[:, None] * prev[:, 1:]
        right = prev[:, :1] * cur[:, 1:]
        nxt = np.zeros_like(cur)
        nxt[:, :-1] = (left - right) / piv[:, None]
        mag = (np.abs(left) + np.abs(right)) / np.abs(piv)[:, None]
        rel = np.where(mag[:, 0] > 0, nxt[:, 0] / np.where(mag[:, 0] > 0, mag[:, 0], 1.0), 0.0)
        rel = np.where(dead, 0.0, rel)
        out.append(rel)
        dead = dead | (nxt[:, 0] == 0)
        prev, cur = cur, nxt
    # the last pivot is a_n itself; its size relative to the coefficients decides
    out.append(b[:, n] / np.max(np.abs(b), axis=1))
    return np.stack(out[:n], axis=1) if n > 1 else np.stack(out[-1:], axis=1)


# ----------------------------------------------------------------------------
# batched roots


def _horner(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    v = np.broadcast_to(c[:, :1], z.shape).astype(complex)
    for k in range(1, c.shape[1]):
        v = v * z + c[:, k:k + 1]
    return v


def _quadratic_roots(c: np.ndarray) -> np.ndarray:
    # cancellation-free form: q = -(b + sign(b) sqrt(b^2 - 4ac)) / 2, roots q/a and c/q
    a, b, k = c[:, 0], c[:, 1], c[:, 2]
    sq = np.sqrt((b * b - 4 * a * k).astype(complex))
    sgn = np.where(b >= 0, 1.0, -1.0)
    q = -0.5 * (b + sgn * sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = q / a
        r2 = np.where(q != 0, k / q, 0.0)
    return np.stack([r1, r2], axis=1)


def _batched_roots(c: np.ndarray) -> np.ndarray:
    """Roots of each row (leading coefficient nonzero), one Newton polish step each."""
    n = c.shape[1] - 1
    if n == 0:
        return np.zeros((c.shape[0], 0), dtype=complex)
    if n == 1:
        return (-c[:, 1] / c[:, 0])[:, None].astype(complex)
    if n == 2:
        return _quadratic_roots(c)
    comp = np.zeros((c.shape[0], n, n))
    comp[:, 0, :] = -c[:, 1:] / c[:, :1]
    comp[:, np.arange(1, n), np.arange(n - 1)] = 1.0
    z = np.linalg.eigvals(comp).astype(complex)
    d = c[:, :-1] * np.arange(n, 0, -1)
    f = _horner(c, z)
    fp = _horner(d, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        z1 = np.where(fp != 0, z - f / fp, z)
    better = np.abs(_horner(c, z1)) < np.abs(f)
    return np.where(better, z1, z)


# ----------------------------------------------------------------------------
# core rules


@dataclass
class _RowEvidence:
    codes: np.ndarray
    roots: list = field(default_factory=list)
    lost: np.ndarray | None = None
    deciding: list = field(default_factory=list)
    distance: np.ndarray | None = None


def _undamped_rules(z: np.ndarray, dhat: np.ndarray, tol: ToleranceSet):
    """Vectorized class decision from mu-roots ``z`` (N, n) and normalized discriminant."""
    N, n = z.shape
    codes = np.full(N, MS)
    if n == 0:
        return np.full(N, BD), np.zeros(N)
    mag = np.abs(z)
    scale = np.max(mag, axis=1, keepdims=True)
    nonreal = np.abs(z.imag) > tol.imag_tol * mag
    positive = ~nonreal & (z.real > 0)
    flutter = nonreal.any(axis=1)
    diverg = positive.any(axis=1)
    codes[flutter & diverg] = FD
    codes[flutter & ~diverg] = FL
    codes[~flutter & diverg] = DV
    zero_gap = np.min(np.where(scale > 0, mag / np.where(scale > 0, scale, 1.0), 0.0), axis=1)
    distance = np.minimum(np.abs(dhat), zero_gap)
    on_boundary = (distance <= tol.boundary_band) | (zero_gap == 0)
    if tol.boundary_band > 0 and n > 1:
        # coincident negative roots are not simple: marginal stability is lost there
        for i in np.flatnonzero(codes == MS):
            if any(k > 1 for _, k in cluster_roots(z[i], tol.cluster_radius)):
                on_boundary[i] = True
    codes[on_boundary] = BD
    return codes, distance


def _damped_rules(h: np.ndarray, z: np.ndarray | None, tol: ToleranceSet):
    N = h.shape[0]
    if h.shape[1] == 0:
        return np.full(N, BD), np.zeros(N)
    low = np.min(h, axis=1)
    codes = np.where(low > tol.boundary_band, AS, np.where(low < -tol.boundary_band, UD, BD))
    if tol.boundary_band == 0:
        codes = np.where(low == 0, BD, codes)
    distance = np.min(np.abs(h), axis=1)
    return codes, distance


def classify_coeff_rows(C: np.ndarray, damped: bool, tol: ToleranceSet = DEFAULT_TOL,
                        want_roots: bool = False, evidence: bool = True) -> _RowEvidence:
    """Classify every row of descending coefficients ``C`` (shape (N, n+1)).

    Rows may deflate differently (a leading coefficient can vanish at an
    isolated load); rows are grouped by effective degree. With
    ``evidence=False`` only codes and distances are filled in.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    N, width = C.shape
    scale = np.max(np.abs(C), axis=1)
    if np.any(scale == 0):
        raise ZeroPolynomial("all coefficients vanish")
    small = np.abs(C) <= tol.deflation_tol * scale[:, None]
    lost = np.where(small.all(axis=1), width - 1, np.argmin(small, axis=1))
    lost = np.minimum(lost, width - 1)
    codes = np.empty(N, dtype=int)
    distance = np.empty(N)
    deciding = [None] * N
    root_rows = [None] * N
    for k in np.unique(lost):
        idx = np.flatnonzero(lost == k)
        c = C[idx, k:]
        c = c * np.sign(c[:, :1])
        n = c.shape[1] - 1
        b = _balance(c)
        if damped:
            h = _batched_hurwitz(b) if n else np.zeros((len(idx), 0))
            cc, dd = _damped_rules(h, None, tol)
            z = _batched_roots(c) if want_roots else None
            dec = h
        else:
            z = _batched_roots(c)
            dh = _top_discriminant(b) if n else np.zeros(len(idx))
            cc, dd = _undamped_rules(z, dh, tol)
            dec = dh[:, None]
        codes[idx] = cc
        distance[idx] = dd
        if not evidence:
            continue
        for j, i in enumerate(idx):
            deciding[i] = dec[j]
            if z is not None:
                root_rows[i] = z[j]
    return _RowEvidence(codes=codes, roots=root_rows, lost=lost, deciding=deciding, distance=distance)


# ----------------------------------------------------------------------------
# public classifiers


def _spectrum(p, tol: ToleranceSet) -> Spectrum:
    return roots(type(p)(p.coeffs, tol.deflation_tol), tol.cluster_radius)


def classify_undamped(p: MuPoly, tol: ToleranceSet = DEFAULT_TOL, load=None) -> StabilityReport:
    ev = classify_coeff_rows(np.asarray(p.coeffs)[None, :], damped=False, tol=tol)
    q = MuPoly(p.coeffs, tol.deflation_tol)
    discs = tuple(discriminant_sequence(q)) if q.effective_degree >= 1 else ()
    return StabilityReport(
        classification=_CLASSES[ev.codes[0]],
        spectrum=_spectrum(p, tol),
        variable="mu",
        discriminants=discs,
        boundary_distance=float(ev.distance[0]),
        load=load,
    )


def _raw_hurwitz(p: CharPoly, tol: ToleranceSet) -> tuple[float, ...]:
    c = CharPoly(p.coeffs, tol.deflation_tol).deflated
    if len(c) < 2:
        return ()
    return tuple(hurwitz_determinants(c * np.sign(c[0])))


def hurwitz_classify(p: CharPoly, tol: ToleranceSet = DEFAULT_TOL, load=None) -> StabilityReport:
    ev = classify_coeff_rows(np.asarray(p.coeffs)[None, :], damped=True, tol=tol)
    return StabilityReport(
        classification=_CLASSES[ev.codes[0]],
        spectrum=_spectrum(p, tol),
        variable="lambda",
        hurwitz=_raw_hurwitz(p, tol),
        boundary_distance=float(ev.distance[0]),
        load=load,
    )


def classify(config: PendulumConfig, load: float, tol: ToleranceSet = DEFAULT_TOL) -> StabilityReport:
    """Classify ``config`` at follower load ``load`` (undamped mu-path or damped Hurwitz path)."""
    p = char_poly(assemble(config, load))
    if config.is_damped:
        return hurwitz_classify(p, tol, load=float(load))
    return classify_undamped(to_mu_poly(p), tol, load=float(load))


class LoadScanner:
    """Classifies one configuration at many loads using its load-polynomial tensor."""

    def __init__(self, config: PendulumConfig, tol: ToleranceSet = DEFAULT_TOL):
        self.config = config
        self.tol = tol
        self.damped = config.is_damped
        self.tensor = load_tensor(config, in_mu=not self.damped)

    def coeffs(self, loads) -> np.ndarray:
        return coeffs_at_loads(self.tensor, loads)

    def codes(self, loads, tol: ToleranceSet | None = None) -> np.ndarray:
        return classify_coeff_rows(self.coeffs(loads), self.damped, tol or self.tol, evidence=False).codes

    def classes(self, loads, tol: ToleranceSet | None = None) -> list[StabilityClass]:
        return [_CLASSES[c] for c in self.codes(loads, tol)]

    def report(self, load: float, tol: ToleranceSet | None = None) -> StabilityReport:
        c = self.coeffs([load])[0]
        tol = tol or self.tol
        if self.damped:
            return hurwitz_classify(CharPoly(tuple(c)), tol, load=float(load))
        return classify_undamped(MuPoly(tuple(c)), tol, load=float(load))


def class_of_code(code: int) -> StabilityClass:
    return _CLASSES[int(code)]


def code_of_class(cls: StabilityClass) -> int:
    return _CODE[cls]
