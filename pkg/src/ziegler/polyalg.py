"""Dense multivariate polynomials and division-free determinants of polynomial matrices.

A polynomial in ``k`` variables is an ``ndarray`` with ``k`` axes; entry
``[i, j, ...]`` is the coefficient of ``x**i * y**j * ...`` (ascending powers).
"""

from __future__ import annotations

import math
from functools import reduce
from itertools import combinations

import numpy as np
from scipy.signal import convolve


def polymul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 1 and b.ndim == 1:
        return np.convolve(a, b)  # far less call overhead for short vectors
    return convolve(a, b, method="direct")


def _pad_to(a: np.ndarray, shape) -> np.ndarray:
    if a.shape == tuple(shape):
        return a
    out = np.zeros(shape)
    out[tuple(slice(0, s) for s in a.shape)] = a
    return out


def _fsum_terms(terms: list[np.ndarray]) -> np.ndarray:
    shape = tuple(max(t.shape[k] for t in terms) for k in range(terms[0].ndim))
    stack = np.stack([_pad_to(t, shape) for t in terms])
    flat = stack.reshape(len(terms), -1)
    return np.array([math.fsum(col) for col in flat.T]).reshape(shape)


def poly_det(entries) -> np.ndarray:
    """Determinant of a square matrix of polynomials.

    Laplace expansion along rows with memoization over column subsets, so no
    division is ever performed (singular leading matrices are fine). Each
    coefficient of a minor is accumulated with ``math.fsum``.
    Cost is O(2**m * m) polynomial products, fine for the m <= 10 used here.
    """
    m = len(entries)
    ndim = np.asarray(entries[0][0]).ndim
    one = np.ones((1,) * ndim)
    # minors[cols] = det of rows 0..len(cols)-1 restricted to columns `cols`
    minors: dict[tuple[int, ...], np.ndarray] = {(): one}
    for row in range(m):
        nxt = {}
        for cols in combinations(range(m), row + 1):
            terms = []
            for pos, j in enumerate(cols):
                e = np.asarray(entries[row][j], dtype=float)
                if not np.any(e):
                    continue
                sub = cols[:pos] + cols[pos + 1:]
                t = polymul(minors[sub], e)
                # column j is the last row's pick; its sign is set by its position in cols
                if (row - pos) % 2:
                    t = -t
                terms.append(t)
            nxt[cols] = _fsum_terms(terms) if terms else np.zeros((1,) * ndim)
        minors = nxt
    return minors[tuple(range(m))]


def derivative(a: np.ndarray, axis: int) -> np.ndarray:
    n = a.shape[axis]
    if n == 1:
        return np.zeros_like(a)
    powers = np.arange(1, n).reshape([-1 if k == axis else 1 for k in range(a.ndim)])
    return np.take(a, np.arange(1, n), axis=axis) * powers


def evaluate(a: np.ndarray, point) -> complex | float:
    """Evaluate a multivariate polynomial at ``point`` (one value per axis)."""
    out = a
    for x in reversed(point):
        out = np.polynomial.polynomial.polyval(x, np.moveaxis(out, -1, 0))
    return out[()] if isinstance(out, np.ndarray) else out


def trim_trailing(a: np.ndarray, axis: int = 0) -> np.ndarray:
    """Drop all-zero highest-power slices along ``axis``."""
    n = a.shape[axis]
    while n > 1 and not np.any(np.take(a, [n - 1], axis=axis)):
        n -= 1
    return np.take(a, np.arange(n), axis=axis)


def product(polys) -> np.ndarray:
    return reduce(polymul, polys)


def sylvester_resultant(C: np.ndarray) -> np.ndarray:
    """Resultant of ``f`` and ``df/dx`` where ``f = sum_k C[k] x**k``.

    ``C[k]`` is itself a polynomial (any number of further axes); the result
    is a polynomial in those remaining variables. It vanishes exactly where
    ``f`` has a multiple root or loses degree twice.
    """
    C = np.asarray(C, dtype=float)
    n = C.shape[0] - 1
    D = derivative(C, 0)[:n]
    zero = np.zeros(C.shape[1:])
    rows = []
    # n-1 shifted copies of f and n shifted copies of f', columns descending in x
    for k in range(n - 1):
        rows.append([zero] * k + [C[n - i] for i in range(n + 1)] + [zero] * (n - 2 - k))
    for k in range(n):
        rows.append([zero] * k + [D[n - 1 - i] for i in range(n)] + [zero] * (n - 1 - k))
    return poly_det(rows)


def hurwitz_polynomial_minor(C: np.ndarray, order: int) -> np.ndarray:
    """Leading ``order`` Hurwitz minor of ``sum_k C[k] x**k`` with polynomial coefficients.

    ``C`` is ascending in x; the Hurwitz matrix uses the descending
    coefficients ``a_0 .. a_n`` with ``H[i, j] = a[2 j - i + 1]``.
    """
    C = np.asarray(C, dtype=float)
    n = C.shape[0] - 1
    a = C[::-1]
    zero = np.zeros(C.shape[1:])
    rows = []
    for i in range(order):
        row = []
        for j in range(order):
            k = 2 * j - i + 1
            row.append(a[k] if 0 <= k <= n else zero)
        rows.append(row)
    return poly_det(rows)
