"""The energy-momentum manifold in R^10: lifts, defects, hull bounds, and
the constructive <=8-atom decomposition of interior points.

A state is a flat 10-vector (D, B, P, h) with D, B, P in R^3.  The manifold
consists of states with P = D x B and h = sqrt(1 + |D|^2 + |B|^2 + |P|^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import wedge

D_SL = slice(0, 3)
B_SL = slice(3, 6)
P_SL = slice(6, 9)
H_IX = 9


def pack(d, b, p, h) -> np.ndarray:
    v = np.empty(10)
    v[D_SL] = d
    v[B_SL] = b
    v[P_SL] = p
    v[H_IX] = h
    return v


def unpack(v):
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (10,):
        raise ValueError("state must be a 10-vector")
    return v[D_SL], v[B_SL], v[P_SL], v[H_IX]


def db_block(v) -> np.ndarray:
    """The differentially constrained 2x3 block (rows D, B)."""
    v = np.asarray(v, dtype=float)
    return np.vstack([v[D_SL], v[B_SL]])


def lift(d, b) -> np.ndarray:
    """Manifold point over (D, B): P = D x B, h closes the energy relation."""
    d = np.asarray(d, dtype=float)
    b = np.asarray(b, dtype=float)
    p = wedge(d, b)
    h = np.sqrt(1.0 + d @ d + b @ b + p @ p)
    return pack(d, b, p, h)


def defect(v) -> tuple[float, float]:
    """(|P - D x B|, |h - sqrt(1+|D|^2+|B|^2+|P|^2)|); (0,0) iff on-manifold."""
    d, b, p, h = unpack(v)
    d_p = float(np.linalg.norm(p - wedge(d, b)))
    d_h = float(abs(h - np.sqrt(1.0 + d @ d + b @ b + p @ p)))
    return d_p, d_h


@dataclass
class HullFlags:
    inner: bool        # h >= 1+|D|+|B|+|P|  => certified inside the hull
    outer: bool        # h >= sqrt(1+|D|^2+|B|^2+|P|^2)  (necessary)
    serre: bool        # improved necessary bound
    inner_slack: float
    outer_slack: float
    serre_slack: float

    @property
    def verdict(self) -> str:
        if self.inner:
            return "inside"
        if not (self.outer and self.serre):
            return "outside"
        return "indeterminate"


def check_hull_bounds(v) -> HullFlags:
    d, b, p, h = unpack(v)
    nd, nb, np_ = (np.linalg.norm(d), np.linalg.norm(b), np.linalg.norm(p))
    inner_slack = h - (1.0 + nd + nb + np_)
    outer_slack = h - np.sqrt(1.0 + nd ** 2 + nb ** 2 + np_ ** 2)
    serre_rhs = 1.0 + nd ** 2 + nb ** 2 + np_ ** 2 + 2.0 * np.sqrt(
        np.linalg.norm(p - wedge(d, b)) ** 2
        + float(p @ d) ** 2 + float(p @ b) ** 2)
    serre_slack = h ** 2 - serre_rhs
    return HullFlags(inner=bool(inner_slack >= 0),
                     outer=bool(outer_slack >= -1e-12),
                     serre=bool(serre_slack >= -1e-12),
                     inner_slack=float(inner_slack),
                     outer_slack=float(outer_slack),
                     serre_slack=float(serre_slack))


@dataclass
class MDecomposition:
    atoms: np.ndarray     # (k, 10), each on the manifold
    weights: np.ndarray   # (k,), simplex weights

    def barycenter(self) -> np.ndarray:
        return self.weights @ self.atoms

    def verify(self, target, tol: float = 1e-9) -> None:
        target = np.asarray(target, dtype=float)
        if self.atoms.shape[0] > 8:
            raise AssertionError("more than 8 atoms")
        if np.any(self.weights < -1e-15):
            raise AssertionError("negative weight")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise AssertionError("weights do not sum to 1")
        for a in self.atoms:
            dp, dh = defect(a)
            if dp > tol or dh > tol:
                raise AssertionError(f"atom off-manifold: defect ({dp},{dh})")
        err = np.linalg.norm(self.barycenter() - target)
        if err > tol * (1.0 + np.linalg.norm(target)):
            raise AssertionError(f"barycenter error {err}")


def _orthonormal_completion(p_hat: np.ndarray):
    """Deterministic (d, b) with (d, b, p_hat) positively oriented."""
    if abs(p_hat[0]) < 0.9:
        seed = np.array([1.0, 0.0, 0.0])
    else:
        seed = np.array([0.0, 1.0, 0.0])
    d = seed - (seed @ p_hat) * p_hat
    d = d / np.linalg.norm(d)
    b = wedge(p_hat, d)  # then d x b = p_hat
    return d, b


def decompose_axis_point(axis: str, v, s: float) -> MDecomposition:
    """Two-atom split of an extreme slice point with a single nonzero block.

    axis 'D': (v, 0, 0, s) = avg of (v, +-alpha v, 0, s);
    axis 'B': symmetric; axis 'P': (0, 0, v, s) via an oriented orthonormal
    frame.  Requires |v| = s-1.
    """
    v = np.asarray(v, dtype=float)
    if s <= 1.0:
        raise ValueError("s must exceed 1")
    nv = float(np.linalg.norm(v))
    if abs(nv - (s - 1.0)) > 1e-10 * max(1.0, s):
        raise ValueError("|v| must equal s-1")
    if axis in ("D", "B"):
        alpha_sq = (s * s - 1.0 - nv * nv) / (nv * nv)
        if alpha_sq <= 0:
            raise ValueError("no admissible oscillation amplitude")
        alpha = np.sqrt(alpha_sq)
        if axis == "D":
            a1 = pack(v, alpha * v, np.zeros(3), s)
            a2 = pack(v, -alpha * v, np.zeros(3), s)
        else:
            a1 = pack(alpha * v, v, np.zeros(3), s)
            a2 = pack(-alpha * v, v, np.zeros(3), s)
    elif axis == "P":
        p_hat = v / nv
        d, b = _orthonormal_completion(p_hat)
        lam = np.sqrt(s - 1.0)
        a1 = pack(lam * d, lam * b, v, s)
        a2 = pack(-lam * d, -lam * b, v, s)
    else:
        raise ValueError("axis must be one of D, B, P")
    return MDecomposition(np.vstack([a1, a2]), np.array([0.5, 0.5]))


def _center_pair(s: float) -> MDecomposition:
    """(0,0,0,s) as the average of two parallel-field states."""
    if s < 1.0:
        raise ValueError("s must be at least 1")
    lam = np.sqrt((s * s - 1.0) / 2.0)
    e1 = np.array([1.0, 0.0, 0.0])
    a1 = pack(lam * e1, lam * e1, np.zeros(3), s)
    a2 = pack(-lam * e1, -lam * e1, np.zeros(3), s)
    return MDecomposition(np.vstack([a1, a2]), np.array([0.5, 0.5]))


def decompose_to_M(v, tol: float = 1e-9) -> MDecomposition:
    """Constructive <=8-atom decomposition of a point within the inner bound.

    Splits into per-axis extreme points plus the centered remainder, then
    expands each through its two-atom manifold pair.  Errors when
    h < 1 + |D| + |B| + |P| (no guarantee outside the inner bound).
    """
    d, b, p, h = unpack(v)
    s = float(h)
    sigma = float(np.linalg.norm(d) + np.linalg.norm(b) + np.linalg.norm(p))
    if s - (1.0 + sigma) < -1e-12 * max(1.0, s):
        raise ValueError(
            "decomposition not guaranteed outside the inner hull bound")
    if s <= 1.0 + 1e-14:
        atoms = pack(np.zeros(3), np.zeros(3), np.zeros(3), 1.0)[None, :]
        out = MDecomposition(atoms, np.array([1.0]))
        out.verify(v, tol)
        return out
    atoms = []
    weights = []
    for axis, block in (("D", d), ("B", b), ("P", p)):
        nb_ = float(np.linalg.norm(block))
        if nb_ <= 1e-14:
            continue
        w = nb_ / (s - 1.0)
        part = decompose_axis_point(axis, block / nb_ * (s - 1.0), s)
        atoms.append(part.atoms)
        weights.append(w * part.weights)
    w0 = 1.0 - sigma / (s - 1.0)
    if w0 > 1e-14:
        center = _center_pair(s)
        atoms.append(center.atoms)
        weights.append(w0 * center.weights)
    out = MDecomposition(np.vstack(atoms), np.concatenate(weights))
    out.verify(v, tol)
    return out
