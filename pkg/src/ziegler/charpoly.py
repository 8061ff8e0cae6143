"""Characteristic polynomials of the pencil ``lambda**2 M + lambda D + K`` and their roots.

Coefficient lists are degree-descending throughout (``coeffs[0]`` multiplies the
highest power), matching ``numpy.polyval``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import polyalg
from .errors import OddCoefficientsPresent, ZeroPolynomial
from .model import MatrixTriple, PendulumConfig, assemble, follower_matrix, joint_matrix, mass_matrix

DEFLATION_TOL = 1e-13
CLUSTER_RADIUS = 1e-6


def _deflate(coeffs, tol):
    c = np.asarray(coeffs, dtype=float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0:
        return c, 0
    k = 0
    while k < len(c) - 1 and abs(c[k]) <= tol * scale:
        k += 1
    return c[k:], k


class _Poly:
    coeffs: tuple[float, ...]
    deflation_tol: float

    @property
    def nominal_degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def deflated(self) -> np.ndarray:
        return _deflate(self.coeffs, self.deflation_tol)[0]

    @property
    def effective_degree(self) -> int:
        return len(self.deflated) - 1

    @property
    def infinite_count(self) -> int:
        return self.nominal_degree - self.effective_degree

    def __call__(self, x):
        return np.polyval(self.coeffs, x)


@dataclass(frozen=True)
class CharPoly(_Poly):
    """det(lambda**2 M + lambda D + K) as a polynomial in lambda (nominal degree 2m)."""

    coeffs: tuple[float, ...]
    deflation_tol: float = DEFLATION_TOL

    @property
    def is_even(self) -> bool:
        return not any(self.coeffs[-2::-2])


@dataclass(frozen=True)
class MuPoly(_Poly):
    """Undamped characteristic polynomial in ``mu = lambda**2`` (nominal degree m)."""

    coeffs: tuple[float, ...]
    deflation_tol: float = DEFLATION_TOL


@dataclass(frozen=True)
class Spectrum:
    """Finite roots of a polynomial plus the count of roots lost at infinity.

    ``clusters`` groups numerically coincident roots as ``(center, multiplicity)``.
    """

    roots: tuple[complex, ...]
    infinite_count: int
    clusters: tuple[tuple[complex, int], ...]

    @property
    def nominal_degree(self) -> int:
        return len(self.roots) + self.infinite_count


def pencil_entries(triple: MatrixTriple):
    """Entries of the pencil as ascending coefficient arrays ``[K, D, M]`` in lambda."""
    m = triple.size
    return [[np.array([triple.K[i, j], triple.D[i, j], triple.M[i, j]]) for j in range(m)]
            for i in range(m)]


def char_poly(triple: MatrixTriple) -> CharPoly:
    """Coefficients of det(lambda**2 M + lambda D + K), never inverting M."""
    asc = polyalg.poly_det(pencil_entries(triple))
    asc = polyalg._pad_to(asc, (2 * triple.size + 1,))
    return CharPoly(tuple(float(x) for x in asc[::-1]))


def char_poly_2dof_trace(triple: MatrixTriple) -> CharPoly:
    """Two-dof undamped characteristic polynomial from traces and determinants.

    ``det M lambda**4 + (tr M tr K - tr(MK)) lambda**2 + det K``; an independent
    path used to cross-check :func:`char_poly`.
    """
    if triple.size != 2:
        raise ValueError("trace formula only applies to two degrees of freedom")
    if triple.is_damped:
        raise ValueError("trace formula only applies to the undamped pencil")
    M, K = triple.M, triple.K
    det_m = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    det_k = K[0, 0] * K[1, 1] - K[0, 1] * K[1, 0]
    mid = np.trace(M) * np.trace(K) - np.trace(M @ K)
    return CharPoly((float(det_m), 0.0, float(mid), 0.0, float(det_k)))


def to_mu_poly(p: CharPoly, tol: float = 1e-12) -> MuPoly:
    c = np.asarray(p.coeffs, dtype=float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    odd = c[-2::-2]
    if np.any(np.abs(odd) > tol * scale):
        raise OddCoefficientsPresent("polynomial has odd powers of lambda; use the damped path")
    return MuPoly(tuple(float(x) for x in c[::2]), p.deflation_tol)


def mu_poly(config: PendulumConfig, load: float) -> MuPoly:
    return to_mu_poly(char_poly(assemble(config, load)))


def _companion_roots(c: np.ndarray) -> np.ndarray:
    # c: deflated, descending, c[0] != 0, trailing zeros removed
    n = len(c) - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return np.array([-c[1] / c[0]], dtype=complex)
    comp = np.zeros((n, n))
    comp[0, :] = -c[1:] / c[0]
    comp[1:, :-1] = np.eye(n - 1)
    # LAPACK geev balances the matrix before the QR iteration
    return np.linalg.eigvals(comp).astype(complex)


def _newton_polish(c: np.ndarray, z: complex) -> complex:
    d = np.polyder(c)
    f = np.polyval(c, z)
    fp = np.polyval(d, z)
    if fp == 0:
        return z
    z1 = z - f / fp
    return z1 if abs(np.polyval(c, z1)) < abs(f) else z


def cluster_roots(roots, radius: float = CLUSTER_RADIUS):
    """Group roots closer than ``radius * max(1, |root|)``; returns (center, multiplicity)."""
    roots = list(roots)
    used = [False] * len(roots)
    out = []
    for i, z in enumerate(roots):
        if used[i]:
            continue
        group = [z]
        used[i] = True
        for j in range(i + 1, len(roots)):
            w = roots[j]
            if not used[j] and abs(w - z) <= radius * max(1.0, abs(z), abs(w)):
                group.append(w)
                used[j] = True
        out.append((complex(np.mean(group)), len(group)))
    return tuple(out)


def polynomial_roots(coeffs, deflation_tol: float = DEFLATION_TOL, polish: bool = True) -> tuple[np.ndarray, int]:
    """Finite roots of a descending coefficient list and the number lost at infinity."""
    c, lost = _deflate(coeffs, deflation_tol)
    if not np.any(c):
        raise ZeroPolynomial("all coefficients vanish")
    nz = np.flatnonzero(c)
    zeros = len(c) - 1 - nz[-1]
    core = c[: len(c) - zeros]
    r = _companion_roots(core)
    if polish:
        r = np.array([_newton_polish(core, z) for z in r], dtype=complex)
    r = np.concatenate([r, np.zeros(zeros, dtype=complex)])
    return r, lost


def roots(p: CharPoly | MuPoly, cluster_radius: float = CLUSTER_RADIUS) -> Spectrum:
    """Roots of the deflated polynomial; eigenvalues at infinity are counted, not returned."""
    r, lost = polynomial_roots(p.coeffs, p.deflation_tol)
    order = np.lexsort((r.imag, r.real))
    r = r[order]
    return Spectrum(tuple(complex(z) for z in r), lost, cluster_roots(r, cluster_radius))


# ----------------------------------------------------------------------------
# Coefficients as polynomials in the load, for fast scans over P.

def load_tensor(config: PendulumConfig, in_mu: bool | None = None) -> np.ndarray:
    """Characteristic polynomial as a bivariate polynomial ``T[power, P-power]``.

    The first axis is powers of mu (undamped, ``in_mu`` true) or lambda;
    ascending on both axes.
    """
    if in_mu is None:
        in_mu = not config.is_damped
    m, l = config.link_count, config.link_length
    M = mass_matrix(config.masses, l)
    D = joint_matrix(config.dampings)
    K0 = joint_matrix(config.stiffnesses)
    K1 = follower_matrix(m, l)
    entries = []
    for i in range(m):
        row = []
        for j in range(m):
            if in_mu:
                e = np.array([[K0[i, j], K1[i, j]], [M[i, j], 0.0]])
            else:
                e = np.array([[K0[i, j], K1[i, j]], [D[i, j], 0.0], [M[i, j], 0.0]])
            row.append(e)
        entries.append(row)
    t = polyalg.poly_det(entries)
    return polyalg._pad_to(t, ((m if in_mu else 2 * m) + 1, m + 1))


def coeffs_at_loads(tensor: np.ndarray, loads) -> np.ndarray:
    """Descending coefficient rows, one per load: shape ``(len(loads), degree + 1)``."""
    loads = np.atleast_1d(np.asarray(loads, dtype=float))
    powers = loads[:, None] ** np.arange(tensor.shape[1])[None, :]
    asc = powers @ tensor.T
    return asc[:, ::-1]


def root_residual_scale(coeffs, z) -> float:
    c = np.abs(np.asarray(coeffs, dtype=float))
    return float(np.polyval(c, abs(z)))


def relative_residual(coeffs, z) -> float:
    scale = root_residual_scale(coeffs, z)
    return abs(np.polyval(coeffs, z)) / scale if scale else math.inf
