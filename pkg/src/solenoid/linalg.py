"""Small dense linear algebra and a deterministic LP for hull membership.

The LP is a phase-1 simplex on the standard membership formulation (d+1
equality rows, one column per atom) with Bland's rule, so identical inputs
always produce identical weights.  Dimensions stay tiny (d <= 16) while atom
counts may reach ~1e5, so the tableau is kept as one dense array and row
operations are vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOL = 1e-10


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError("matrix must be 2-d and nonempty")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def rank_with_tol(m, tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank by row reduction with pivot threshold tol*max|entry|."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = as_matrix(m).copy()
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return 0
    thresh = tol * scale
    rows, cols = a.shape
    rank = 0
    row = 0
    for col in range(cols):
        if row >= rows:
            break
        piv = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[piv, col]) <= thresh:
            continue
        if piv != row:
            a[[row, piv]] = a[[piv, row]]
        a[row + 1:] -= np.outer(a[row + 1:, col] / a[row, col], a[row])
        row += 1
        rank += 1
    return rank


def null_direction(m, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Unit vector v with m @ v = 0; errors on full column rank."""
    a = as_matrix(m)
    n = a.shape[1]
    if rank_with_tol(a, tol) > n - 1:
        raise ValueError("no null direction: matrix has full column rank")
    # smallest right singular vector; deterministic up to sign, which we fix
    _, s, vt = np.linalg.svd(a)
    v = vt[-1]
    k = int(np.argmax(np.abs(v)))
    if v[k] < 0:
        v = -v
    v = v / np.linalg.norm(v)
    scale = np.linalg.norm(a)
    if scale > 0 and np.linalg.norm(a @ v) > 1e-10 * scale:
        raise ValueError("no null direction within tolerance")
    return v


def wedge(u, v) -> np.ndarray:
    """Cross product on R^3."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (3,) or v.shape != (3,):
        raise ValueError("wedge takes 3-vectors")
    return np.array([
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ])


@dataclass
class LPResult:
    feasible: bool
    weights: np.ndarray | None
    residual: float
    margin: float | None = None
    witness: tuple[np.ndarray, float] | None = None  # (direction, gap)
    flag: str = ""


def _phase1_simplex(m_eq: np.ndarray, b_eq: np.ndarray, piv_tol: float):
    """min sum(artificials) s.t. m_eq @ x + s = b_eq, x,s >= 0 (Bland's rule).

    Returns (objective, x, y) with y the simplex multipliers of the final
    basis (the dual certificate when the objective is positive).
    """
    rows, n = m_eq.shape
    sign = np.where(b_eq < 0, -1.0, 1.0)
    t = np.empty((rows, n + rows + 1))
    t[:, :n] = m_eq * sign[:, None]
    t[:, n:n + rows] = np.eye(rows)
    t[:, -1] = b_eq * sign
    basis = np.arange(n, n + rows)
    # cost vector: 1 on artificials
    for _ in range(20000):
        is_art = basis >= n
        # reduced costs r = c - c_B . B^-1 A; c_B is the artificial indicator
        r = -t[is_art, :n + rows].sum(axis=0)
        r[n:] += 1.0
        neg = r < -piv_tol
        if not np.any(neg):
            break
        enter = int(np.argmax(neg))  # Bland: smallest improving index
        col = t[:, enter]
        pos = col > piv_tol
        if not np.any(pos):
            break  # unbounded cannot happen in phase 1; bail defensively
        ratios = np.full(rows, np.inf)
        ratios[pos] = t[pos, -1] / col[pos]
        best = np.min(ratios)
        ties = np.where(ratios <= best * (1 + 1e-12) + 1e-300)[0]
        leave = ties[int(np.argmin(basis[ties]))]
        piv = t[leave, enter]
        t[leave] /= piv
        other = np.arange(rows) != leave
        t[other] -= np.outer(t[other, enter], t[leave])
        basis[leave] = enter
    x = np.zeros(n)
    art = 0.0
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = t[i, -1]
        else:
            art += t[i, -1]
    # multipliers for the original (unflipped) rows: y = c_B . B^-1
    is_art = basis >= n
    y = t[is_art, n:n + rows].sum(axis=0) * sign
    return art, x, y


def hull_membership(p, atoms, tol: float = 1e-9) -> LPResult:
    """Decide p in conv(atoms) with reconstruction weights or a separator."""
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    p = np.asarray(p, dtype=float).ravel()
    if atoms.shape[0] == 0:
        raise ValueError("atom list must be nonempty")
    d = p.shape[0]
    if atoms.shape[1] != d:
        raise ValueError("atom dimension mismatch")
    scale = max(1.0, float(np.max(np.abs(atoms))), float(np.max(np.abs(p))))
    m_eq = np.vstack([atoms.T, np.ones((1, atoms.shape[0]))])
    b_eq = np.concatenate([p, [1.0]])
    art, lam, y = _phase1_simplex(m_eq / scale, b_eq / scale,
                                  piv_tol=1e-12)
    recon = atoms.T @ lam
    residual = float(np.linalg.norm(np.concatenate(
        [recon - p, [lam.sum() - 1.0]])))
    if residual <= tol * max(1.0, np.linalg.norm(p)):
        return LPResult(True, lam, residual)
    # infeasible: y separates (y.[a;1] <= 0 for all atoms, y.[p;1] > 0)
    w = y[:d]
    nw = np.linalg.norm(w)
    if nw > 0:
        gap = float(w @ p - np.max(atoms @ w))
    else:
        gap = 0.0
    return LPResult(False, None, residual, witness=(w, gap))


def caratheodory_prune(atoms, weights, tol: float = 1e-12):
    """Reduce a convex combination to affinely independent support (<= d+1).

    Preserves the barycenter exactly up to rounding; returns (indices, weights).
    """
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    weights = np.asarray(weights, dtype=float).copy()
    d = atoms.shape[1]
    idx = np.where(weights > tol)[0]
    while idx.size > d + 1:
        sub = atoms[idx]
        hom = np.vstack([sub.T, np.ones(idx.size)])
        _, _, vt = np.linalg.svd(hom)
        mu = vt[-1]
        # direction along which some weight can be driven to zero
        pos = mu > 1e-14
        if not np.any(pos):
            mu = -mu
            pos = mu > 1e-14
        steps = weights[idx[pos]] / mu[pos]
        tstar = np.min(steps)
        weights[idx] -= tstar * mu
        weights[weights < tol] = 0.0
        idx = np.where(weights > tol)[0]
    w = weights[idx]
    w = w / w.sum()
    return idx, w


def margin_at_least(p, atoms, t: float, tol: float = 1e-9) -> bool:
    """Certify that the 2d axis probes p +- t e_k all lie in conv(atoms)."""
    p = np.asarray(p, dtype=float).ravel()
    d = p.shape[0]
    for k in range(d):
        for s in (1.0, -1.0):
            q = p.copy()
            q[k] += s * t
            if not hull_membership(q, atoms, tol).feasible:
                return False
    return True


def interior_margin(p, atoms, tol: float = 1e-9, iters: int = 60) -> float:
    """Certified inradius lower bound at p via axis probing and bisection.

    Returns the largest t (up to bisection resolution) with all probes
    p +- t e_k inside the hull, divided by sqrt(d).  0 means boundary or
    outside (hull possibly degenerate along some axis).
    """
    p = np.asarray(p, dtype=float).ravel()
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    d = p.shape[0]
    if not hull_membership(p, atoms, tol).feasible:
        return 0.0
    hi = float(np.max(np.abs(atoms - p[None, :]))) if atoms.size else 0.0
    if hi == 0.0:
        return 0.0
    if margin_at_least(p, atoms, hi, tol):
        return hi / np.sqrt(d)
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if margin_at_least(p, atoms, mid, tol):
            lo = mid
        else:
            hi = mid
    scale = max(1.0, float(np.max(np.abs(atoms))), float(np.max(np.abs(p))))
    if lo <= 10.0 * tol * scale:
        return 0.0  # below LP resolution: boundary or outside
    return lo / np.sqrt(d)
