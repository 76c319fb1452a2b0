"""Sparse polynomials and degree-exact integration over simplices.

Integration uses Gauss-Legendre nodes through the collapsed (Duffy) map of
the reference simplex; the Jacobian is polynomial, so the rule is exact for
polynomial integrands up to the requested degree.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class Poly:
    """Polynomial sum(c_t * x^e_t) with integer exponent rows e_t."""

    def __init__(self, exponents, coeffs, dim: int | None = None):
        e = np.atleast_2d(np.asarray(exponents, dtype=np.int64))
        c = np.asarray(coeffs, dtype=float).ravel()
        if e.shape[0] != c.shape[0]:
            raise ValueError("exponent/coefficient length mismatch")
        self.dim = e.shape[1] if dim is None else dim
        if e.size == 0:
            e = np.zeros((0, self.dim), dtype=np.int64)
        self.exponents, self.coeffs = _collect(e, c)

    @classmethod
    def constant(cls, value: float, dim: int) -> "Poly":
        return cls(np.zeros((1, dim), dtype=np.int64), [value], dim)

    @classmethod
    def coordinate(cls, k: int, dim: int) -> "Poly":
        e = np.zeros((1, dim), dtype=np.int64)
        e[0, k] = 1
        return cls(e, [1.0], dim)

    @property
    def degree(self) -> int:
        if self.exponents.shape[0] == 0:
            return 0
        return int(self.exponents.sum(axis=1).max())

    def __add__(self, other):
        other = self._coerce(other)
        return Poly(np.vstack([self.exponents, other.exponents]),
                    np.concatenate([self.coeffs, other.coeffs]), self.dim)

    def __sub__(self, other):
        other = self._coerce(other)
        return Poly(np.vstack([self.exponents, other.exponents]),
                    np.concatenate([self.coeffs, -other.coeffs]), self.dim)

    def __mul__(self, other):
        if np.isscalar(other):
            return Poly(self.exponents, self.coeffs * float(other), self.dim)
        e = (self.exponents[:, None, :] + other.exponents[None, :, :])
        c = np.outer(self.coeffs, other.coeffs)
        return Poly(e.reshape(-1, self.dim), c.ravel(), self.dim)

    __rmul__ = __mul__

    def _coerce(self, other):
        if np.isscalar(other):
            return Poly.constant(float(other), self.dim)
        return other

    def grad(self) -> list["Poly"]:
        out = []
        for k in range(self.dim):
            mask = self.exponents[:, k] > 0
            e = self.exponents[mask].copy()
            c = self.coeffs[mask] * e[:, k]
            e[:, k] -= 1
            out.append(Poly(e, c, self.dim))
        return out

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.exponents.shape[0] == 0:
            return np.zeros(pts.shape[0])
        powers = pts[:, None, :] ** self.exponents[None, :, :]
        return powers.prod(axis=2) @ self.coeffs

    def abs_coeff_bound(self, box_lo, box_hi) -> float:
        """sup |p| upper bound on the box via per-monomial maxima."""
        lo = np.asarray(box_lo, float)
        hi = np.asarray(box_hi, float)
        mx = np.maximum(np.abs(lo), np.abs(hi))
        if self.exponents.shape[0] == 0:
            return 0.0
        mono = (mx[None, :] ** self.exponents).prod(axis=1)
        return float(np.abs(self.coeffs) @ mono)


def _collect(e, c):
    if e.shape[0] == 0:
        return e, c
    order = np.lexsort(e.T)
    e, c = e[order], c[order]
    keep_rows = [0]
    for i in range(1, e.shape[0]):
        if np.array_equal(e[i], e[keep_rows[-1]]):
            c[keep_rows[-1]] += c[i]
        else:
            keep_rows.append(i)
    e, c = e[keep_rows], c[keep_rows]
    nz = np.abs(c) > 0.0
    return e[nz], c[nz]


@lru_cache(maxsize=64)
def _reference_rule(dim: int, degree: int):
    """Nodes/weights exact for polynomials of total degree <= degree."""
    m = max(1, (degree + dim + 2) // 2 + 1)
    x, w = np.polynomial.legendre.leggauss(m)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    wgts = np.ones(u.shape[0])
    for g in wgrids:
        wgts = wgts * g.ravel()
    t = np.empty_like(u)
    jac = np.ones(u.shape[0])
    prod = np.ones(u.shape[0])
    for i in range(dim):
        t[:, i] = u[:, i] * prod
        jac *= (1.0 - u[:, i]) ** (dim - 1 - i)
        prod = prod * (1.0 - u[:, i])
    return t, wgts * jac


def simplex_quadrature(vertices: np.ndarray, degree: int):
    """Global nodes and weights on simplices, exact to total degree."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim == 2:
        v = v[None]
    dim = v.shape[2]
    t, w = _reference_rule(dim, degree)
    v0 = v[:, 0, :]
    jac = v[:, 1:, :] - v0[:, None, :]
    dets = np.abs(np.linalg.det(jac))
    pts = v0[:, None, :] + np.einsum("qk,skd->sqd", t, jac)
    wgts = dets[:, None] * w[None, :]
    return pts, wgts


def integrate_poly_over_simplices(vertices: np.ndarray, poly: Poly) -> float:
    pts, wgts = simplex_quadrature(vertices, poly.degree)
    vals = poly(pts.reshape(-1, pts.shape[-1])).reshape(pts.shape[:2])
    return float(np.sum(vals * wgts))


def monomial_integrals_over_simplices(vertices: np.ndarray,
                                      exponents: np.ndarray) -> np.ndarray:
    """Vector of integrals of x^e over the union of simplices."""
    exponents = np.atleast_2d(np.asarray(exponents, dtype=np.int64))
    degree = int(exponents.sum(axis=1).max()) if exponents.size else 0
    pts, wgts = simplex_quadrature(vertices, degree)
    flat = pts.reshape(-1, pts.shape[-1])
    powers = flat[:, None, :] ** exponents[None, :, :]
    vals = powers.prod(axis=2)  # (S*Q, M)
    return vals.T @ wgts.ravel()


def exact_simplex_moment(vertices: np.ndarray, exponent) -> float:
    """Closed-form barycentric oracle for one monomial (test reference)."""
    from math import factorial
    from itertools import product

    v = np.asarray(vertices, dtype=float)
    n = v.shape[1]
    vol = abs(np.linalg.det(v[1:] - v[0])) / factorial(n)
    exponent = tuple(int(e) for e in exponent)
    terms = [[(v[a, j], a) for a in range(n + 1)] for j in range(n)
             for _ in range(exponent[j])]
    total = 0.0
    for combo in product(*terms):
        alpha = np.zeros(n + 1, dtype=np.int64)
        coeff = 1.0
        for val, a in combo:
            coeff *= val
            alpha[a] += 1
        num = 1.0
        for a in alpha:
            num *= factorial(int(a))
        total += coeff * num / factorial(int(alpha.sum()) + n) * factorial(n)
    return vol * total
