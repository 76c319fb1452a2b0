"""Convex polytope cells, the diamond prototype, and greedy Vitali packing.

Polytopes carry both representations (vertices and unit-normal half-spaces)
and are kept consistent.  Volumes and moments are exact: the polytope is
triangulated by coning facet triangulations from the centroid, recursively
over dimension.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .polynomials import Poly, integrate_poly_over_simplices, \
    monomial_integrals_over_simplices

GEOM_TOL = 1e-10


class VitaliError(RuntimeError):
    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


def _dedup_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    if rows.shape[0] == 0:
        return rows
    out = [rows[0]]
    for r in rows[1:]:
        if all(np.max(np.abs(r - o)) > tol for o in out):
            out.append(r)
    return np.array(out)


class Polytope:
    """Bounded convex polytope with consistent V- and H-representations.

    lattice_basis, when set, holds column vectors of a translation lattice
    under which copies of the polytope pack densely; the packing code uses
    it to propose candidate centers (disjointness is always re-certified).
    """

    def __init__(self, vertices, normals, offsets, check: bool = True,
                 lattice_basis=None):
        self.vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        offsets = np.asarray(offsets, dtype=float).ravel()
        norms = np.linalg.norm(normals, axis=1)
        self.normals = normals / norms[:, None]
        self.offsets = offsets / norms
        self.dim = self.vertices.shape[1]
        self.lattice_basis = lattice_basis
        self._volume = None
        self._simplices = None
        if check:
            self.validate()

    # -- constructors ------------------------------------------------------

    @classmethod
    def box(cls, lo, hi) -> "Polytope":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        n = lo.shape[0]
        if np.any(hi <= lo):
            raise ValueError("box needs hi > lo")
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        normals = np.vstack([np.eye(n), -np.eye(n)])
        offsets = np.concatenate([hi, -lo])
        return cls(corners, normals, offsets)

    @classmethod
    def simplex(cls, n: int) -> "Polytope":
        verts = np.vstack([np.zeros(n), np.eye(n)])
        normals = np.vstack([-np.eye(n), np.ones((1, n))])
        offsets = np.concatenate([np.zeros(n), [1.0]])
        return cls(verts, normals, offsets)

    @classmethod
    def from_halfspaces(cls, normals, offsets, check: bool = True) -> "Polytope":
        verts = enumerate_vertices(np.atleast_2d(np.asarray(normals, float)),
                                   np.asarray(offsets, float).ravel())
        if verts.shape[0] == 0:
            raise ValueError("empty polytope")
        return cls(verts, normals, offsets, check=check)

    # -- consistency -------------------------------------------------------

    def validate(self, tol: float = GEOM_TOL):
        scale = max(1.0, float(np.max(np.abs(self.vertices))))
        viol = self.vertices @ self.normals.T - self.offsets[None, :]
        if np.max(viol) > tol * scale:
            raise ValueError("vertex violates a half-space")
        tight = np.abs(viol) <= 10 * tol * scale
        if np.any(tight.sum(axis=0) < self.dim):
            # redundant planes are allowed only if they never get tight;
            # planes tight at < dim vertices indicate an inconsistent H-rep
            bad = (tight.sum(axis=0) > 0) & (tight.sum(axis=0) < self.dim)
            if np.any(bad):
                raise ValueError("half-space tight at fewer than dim vertices")

    # -- geometry ----------------------------------------------------------

    def contains(self, pts, tol: float = GEOM_TOL) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        vals = pts @ self.normals.T - self.offsets[None, :]
        return np.all(vals <= tol, axis=1)

    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def support(self, directions) -> np.ndarray:
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        return (d @ self.vertices.T).max(axis=1)

    def affine_image(self, scale: float = 1.0, rotation=None,
                     shift=None) -> "Polytope":
        """Image under x -> shift + scale * rotation @ x (rotation orthogonal)."""
        q = np.eye(self.dim) if rotation is None else np.asarray(rotation, float)
        c = np.zeros(self.dim) if shift is None else np.asarray(shift, float)
        verts = c[None, :] + scale * (self.vertices @ q.T)
        normals = self.normals @ q.T
        offsets = scale * self.offsets + normals @ c
        basis = None if self.lattice_basis is None \
            else scale * (q @ self.lattice_basis)
        return Polytope(verts, normals, offsets, check=False,
                        lattice_basis=basis)

    def clip(self, normals, offsets) -> "Polytope | None":
        """Intersection with extra half-spaces; None when (nearly) empty."""
        n_all = np.vstack([self.normals, np.atleast_2d(normals)])
        b_all = np.concatenate([self.offsets, np.ravel(offsets)])
        verts = enumerate_vertices(n_all, b_all)
        if verts.shape[0] <= self.dim:
            return None
        return Polytope(verts, n_all, b_all, check=False)

    def triangulate(self) -> np.ndarray:
        """(S, dim+1, dim) array of simplices partitioning the polytope."""
        if self._simplices is None:
            self._simplices = _triangulate_full(self.vertices, self.normals,
                                                self.offsets)
        return self._simplices

    def volume(self) -> float:
        if self._volume is None:
            simps = self.triangulate()
            if simps.shape[0] == 0:
                self._volume = 0.0
            else:
                d = simps[:, 1:, :] - simps[:, :1, :]
                self._volume = float(
                    np.abs(np.linalg.det(d)).sum() / math.factorial(self.dim))
        return self._volume

    def facet_areas(self) -> np.ndarray:
        """(n-1)-measure of each facet, by recursive triangulation."""
        n_ded, b_ded = _dedup_halfspaces(self.normals, self.offsets)
        areas = []
        for f in range(self.normals.shape[0]):
            fi = _hs_index(n_ded, b_ded, self.normals[f], self.offsets[f])
            simps = _facet_simplex_list(self.vertices, n_ded, b_ded, fi)
            a = 0.0
            for s in simps:
                e = s[1:] - s[0]
                g = e @ e.T
                a += math.sqrt(max(np.linalg.det(g), 0.0)) \
                    / math.factorial(self.dim - 1)
            areas.append(a)
        return np.array(areas)

    def _facet_vertices(self, f: int, tol: float = 1e-8) -> np.ndarray:
        scale = max(1.0, float(np.max(np.abs(self.vertices))))
        vals = self.vertices @ self.normals[f] - self.offsets[f]
        return self.vertices[np.abs(vals) <= tol * scale]

    def integrate(self, poly: Poly) -> float:
        simps = self.triangulate()
        if simps.shape[0] == 0:
            return 0.0
        return integrate_poly_over_simplices(simps, poly)

    def monomial_integrals(self, exponents) -> np.ndarray:
        simps = self.triangulate()
        if simps.shape[0] == 0:
            return np.zeros(np.atleast_2d(exponents).shape[0])
        return monomial_integrals_over_simplices(simps, exponents)

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


def enumerate_vertices(normals: np.ndarray, offsets: np.ndarray,
                       tol: float = 1e-9) -> np.ndarray:
    """Brute-force vertex enumeration for small H-reps (dim <= ~5)."""
    f, n = normals.shape
    scale = max(1.0, float(np.max(np.abs(offsets))))
    combos = list(itertools.combinations(range(f), n))
    mats = normals[np.array(combos)]
    rhss = offsets[np.array(combos)]
    dets = np.abs(np.linalg.det(mats))
    good = dets > 1e-12
    verts = []
    for mat, rhs in zip(mats[good], rhss[good]):
        x = np.linalg.solve(mat, rhs)
        if np.all(normals @ x - offsets <= tol * max(scale, np.abs(x).max(initial=1.0))):
            verts.append(x)
    if not verts:
        return np.zeros((0, n))
    return _dedup_rows(np.array(verts), 1e-8 * scale)


def _dedup_halfspaces(normals, offsets):
    rows = np.hstack([normals, offsets[:, None]])
    rows = _dedup_rows(rows, 1e-9 * max(1.0, float(np.max(np.abs(rows)))))
    return rows[:, :-1], rows[:, -1]


def _hs_index(normals, offsets, n, b):
    d = np.abs(normals - n[None, :]).max(axis=1) + np.abs(offsets - b)
    return int(np.argmin(d))


def _facet_simplex_list(vertices, normals, offsets, f):
    """(k)-point simplices triangulating facet f, in the ambient coords."""
    k = vertices.shape[1]
    scale = max(1.0, float(np.max(np.abs(vertices))))
    vals = vertices @ normals[f] - offsets[f]
    fverts = vertices[np.abs(vals) <= 1e-8 * scale]
    if fverts.shape[0] < k:
        return []
    p0 = fverts.mean(axis=0)
    _, s, vt = np.linalg.svd(fverts - p0, full_matrices=False)
    rank = int(np.sum(s > 1e-9 * max(1.0, s.max(initial=0.0))))
    if rank < k - 1:
        return []
    basis = vt[:k - 1]
    coords = (fverts - p0) @ basis.T
    sub_n, sub_b = [], []
    for i in range(normals.shape[0]):
        if i == f:
            continue
        nn = basis @ normals[i]
        mag = np.linalg.norm(nn)
        if mag > 1e-10:
            sub_n.append(nn / mag)
            sub_b.append((offsets[i] - normals[i] @ p0) / mag)
    sub = _triangulate_hrep(coords, np.array(sub_n), np.array(sub_b))
    return [p0 + s @ basis for s in sub]


def _triangulate_hrep(vertices, normals, offsets) -> list[np.ndarray]:
    """Recursive centroid-cone triangulation from a consistent V/H pair."""
    k = vertices.shape[1]
    if vertices.shape[0] < k + 1:
        return []
    normals, offsets = _dedup_halfspaces(normals, offsets)
    if k == 1:
        lo, hi = vertices.min(), vertices.max()
        if hi - lo <= 0:
            return []
        return [np.array([[lo], [hi]])]
    center = vertices.mean(axis=0)
    scale = max(1.0, float(np.max(np.abs(vertices))))
    simps = []
    for f in range(normals.shape[0]):
        for fs in _facet_simplex_list(vertices, normals, offsets, f):
            simp = np.vstack([fs, center])
            d = simp[1:] - simp[0]
            if abs(np.linalg.det(d)) > 1e-14 * scale ** k:
                simps.append(simp)
    return simps


def _triangulate_full(vertices, normals, offsets) -> np.ndarray:
    n = vertices.shape[1]
    simps = _triangulate_hrep(vertices, normals, offsets)
    if not simps:
        return np.zeros((0, n + 1, n))
    return np.array(simps)


def intersection_volume(p: Polytope, q: Polytope) -> float:
    """Exact volume of the intersection of two polytopes."""
    clipped = p.clip(q.normals, q.offsets)
    return 0.0 if clipped is None else clipped.volume()


# ---------------------------------------------------------------------------
# diamond prototype


def diamond(n: int, eps: float, theta: float) -> Polytope:
    """Bipyramid {theta-weighted tent of x_n exceeds eps*th*(1-th)*|x'|_1}.

    Apexes 0 and eps*e_n, waist vertices +-e_i + eps*theta*e_n.
    """
    if n < 2:
        raise ValueError("diamond needs n >= 2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0,1)")
    c = eps * theta * (1.0 - theta)
    normals = []
    offsets = []
    for signs in itertools.product((-1.0, 1.0), repeat=n - 1):
        s = np.array(signs)
        lower = np.concatenate([c * s, [-(1.0 - theta)]])
        normals.append(lower)
        offsets.append(0.0)
        upper = np.concatenate([c * s, [theta]])
        normals.append(upper)
        offsets.append(eps * theta)
    verts = [np.zeros(n), eps * _unit(n, n - 1)]
    for i in range(n - 1):
        for s in (1.0, -1.0):
            v = eps * theta * _unit(n, n - 1)
            v[i] = s
            verts.append(v)
    basis = _diamond_lattice(n, eps, theta)
    return Polytope(np.array(verts), np.array(normals), np.array(offsets),
                    lattice_basis=basis)


def _diamond_lattice(n: int, eps: float, theta: float):
    """Dense packing lattice: waist cross-polytopes tile each layer and
    consecutive layers nest at pitch eps*max(theta, 1-theta)."""
    h = eps * max(theta, 1.0 - theta)
    if n == 2:
        return np.array([[2.0, 1.0], [0.0, h]])
    if n == 3:
        return np.array([[1.0, 1.0, 1.0],
                         [1.0, -1.0, 0.0],
                         [0.0, 0.0, h]])
    return None


def _unit(n, k):
    e = np.zeros(n)
    e[k] = 1.0
    return e


def diamond_regions(n: int, eps: float, theta: float):
    """Constancy regions of the diamond laminate: strip x sign orthant.

    Returns a list of (strip, signs, Polytope) in diamond coordinates.
    """
    base = diamond(n, eps, theta)
    out = []
    for strip in (0, 1):
        if strip == 0:
            extra_n = [_unit(n, n - 1)]
            extra_b = [eps * theta]
        else:
            extra_n = [-_unit(n, n - 1)]
            extra_b = [-eps * theta]
        for signs in itertools.product((1.0, -1.0), repeat=n - 1):
            nn = list(extra_n)
            bb = list(extra_b)
            for i, s in enumerate(signs):
                v = np.zeros(n)
                v[i] = -s
                nn.append(v)
                bb.append(0.0)
            reg = base.clip(np.array(nn), np.array(bb))
            if reg is not None and reg.volume() > 0:
                out.append((strip, np.array(signs), reg))
    return out


# ---------------------------------------------------------------------------
# Vitali packing


@dataclass
class CellComplex:
    target: Polytope
    proto: Polytope
    centers: np.ndarray      # (P, n)
    radii: np.ndarray        # (P,)
    covered_volume: float
    uncovered_volume: float
    meta: dict = field(default_factory=dict)

    @property
    def n_placements(self) -> int:
        return self.centers.shape[0]

    def placement_polytope(self, i: int) -> Polytope:
        return self.proto.affine_image(scale=self.radii[i],
                                       shift=self.centers[i])

    def locate(self, pts, band: float = 1e-12) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if not np.all(self.target.contains(pts, tol=1e-9)):
            raise ValueError("point outside target")
        if self.n_placements == 0:
            return np.full(pts.shape[0], -1)
        return _kernels.locate_batch(
            np.ascontiguousarray(pts), np.ascontiguousarray(self.centers),
            np.ascontiguousarray(self.radii),
            np.ascontiguousarray(self.proto.normals),
            np.ascontiguousarray(self.proto.offsets), band)


def locate(x, complex_: CellComplex):
    """Placement index containing x, or 'residual' (ties go to the residual)."""
    idx = complex_.locate(np.asarray(x, dtype=float)[None, :])[0]
    return "residual" if idx < 0 else int(idx)


def _separation_directions(proto: Polytope) -> np.ndarray:
    v = proto.vertices
    diffs = (v[:, None, :] - v[None, :, :]).reshape(-1, v.shape[1])
    norms = np.linalg.norm(diffs, axis=1)
    good = diffs[norms > 1e-12] / norms[norms > 1e-12][:, None]
    all_d = np.vstack([proto.normals, good])
    canon = []
    for d in all_d:
        for x in d:
            if abs(x) > 1e-12:
                canon.append(d if x > 0 else -d)
                break
    return _dedup_rows(np.array(canon), 1e-9)


def vitali_fill(target: Polytope, proto: Polytope, tau: float,
                scale_floor_factor: float = 2.0 ** -12,
                grid_factor: float = 0.5,
                max_placements: int = 60000,
                scale_ratio: float = 2.0 ** -0.5,
                strict: bool = True) -> CellComplex:
    """Greedy multi-scale packing of scaled proto translates.

    Scans candidate centers on per-scale aligned lattices and grids,
    accepts copies that sit inside the target and are disjoint from
    everything accepted so far, and shrinks the scale until the uncovered
    fraction drops below tau.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0,1)")
    n = target.dim
    vol_t = target.volume()
    vol_p = proto.volume()
    if vol_p <= 0:
        raise ValueError("prototype must have nonempty interior")
    dirs = _separation_directions(proto)
    h_pos = proto.support(dirs)
    h_neg = proto.support(-dirs)
    rho = float(np.linalg.norm(proto.vertices, axis=1).max())
    p_lo, p_hi = proto.bbox()
    extent = p_hi - p_lo

    r_max = _fit_radius(target, proto)
    if r_max <= 0:
        raise VitaliError("prototype does not fit in target at any scale", 0.0)

    cap = max_placements
    acc_x = np.zeros((cap, n))
    acc_r = np.zeros(cap)
    n_acc = 0
    covered = 0.0
    budget = (1.0 - tau) * vol_t
    r = r_max
    floor = r_max * scale_floor_factor
    raster = _Raster(target, proto)
    while covered < budget - 1e-15 and r >= floor and n_acc < cap:
        cands = _candidate_centers(target, proto, r, grid_factor * r * extent,
                                   raster=raster)
        if cands.shape[0]:
            cands = raster.filter_candidates(cands, r)
        if cands.shape[0]:
            n0 = n_acc
            n_acc, covered, _ = _accept_all(
                cands, r, acc_x, acc_r, n_acc, dirs, h_pos, h_neg, rho,
                vol_p * r ** n, covered, budget)
            raster.mark(acc_x[n0:n_acc], r, proto)
        r *= scale_ratio
    uncovered = vol_t - covered
    if covered < budget - 1e-12 * vol_t and strict:
        raise VitaliError(
            f"vitali_fill reached scale floor at covered fraction "
            f"{covered / vol_t:.6f} < {1 - tau:.6f}", covered / vol_t)
    return CellComplex(target, proto, acc_x[:n_acc].copy(),
                       acc_r[:n_acc].copy(), covered, uncovered,
                       meta={"r_max": r_max, "tau": tau})


class _Raster:
    """Coarse occupancy grid over the target: cells whose centers fall in
    an accepted copy are marked, and candidates whose copies would land
    entirely in marked area are dropped before the exact disjointness pass.
    Purely an accelerator; never affects which accepted copies are valid.
    """

    BUDGET = 2 ** 21

    def __init__(self, target: Polytope, proto: Polytope):
        lo, hi = target.bbox()
        self.lo, self.hi = lo, hi
        n = lo.shape[0]
        ext_t = hi - lo
        p_lo, p_hi = proto.bbox()
        ext_p = np.maximum(p_hi - p_lo, 1e-12)
        weight = ext_t / ext_p
        weight = weight / np.prod(weight) ** (1.0 / n)
        base = self.BUDGET ** (1.0 / n)
        counts = np.maximum(4, (base * weight).astype(np.int64))
        while np.prod(counts.astype(float)) > self.BUDGET:
            counts = np.maximum(
                4, counts - np.ceil(counts * 0.1).astype(np.int64))
        self.counts = counts
        self.h = ext_t / counts
        self.unmarked = np.ones(tuple(counts), dtype=np.float64)
        self._integral = None
        self.p_lo, self.p_hi = p_lo, p_hi
        self.proto_normals = proto.normals
        self.proto_offsets = proto.offsets

    def _index(self, pts):
        ix = ((pts - self.lo[None, :]) / self.h[None, :]).astype(np.int64)
        return np.clip(ix, 0, self.counts[None, :] - 1)

    def mark(self, centers, r, proto):
        for c in centers:
            lo_i = self._index((c + r * self.p_lo)[None, :])[0]
            hi_i = self._index((c + r * self.p_hi)[None, :])[0] + 1
            axes = [self.lo[k] + self.h[k] * (np.arange(lo_i[k], hi_i[k]) + 0.5)
                    for k in range(len(self.counts))]
            if any(len(a) == 0 for a in axes):
                continue
            grids = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([g.ravel() for g in grids], axis=1)
            local = (pts - c[None, :]) / r
            inside = np.all(local @ self.proto_normals.T
                            <= self.proto_offsets[None, :], axis=1)
            sl = tuple(slice(lo_i[k], hi_i[k]) for k in range(len(self.counts)))
            block = self.unmarked[sl]
            flat = block.ravel()
            flat[inside] = 0.0
            self.unmarked[sl] = flat.reshape(block.shape)
        self._integral = None

    def filter_candidates(self, cands, r):
        if self._integral is None:
            s = self.unmarked
            for ax in range(s.ndim):
                s = np.cumsum(s, axis=ax)
            self._integral = np.pad(s, [(1, 0)] * s.ndim)
        lo_i = self._index(cands + r * self.p_lo[None, :])
        hi_i = self._index(cands + r * self.p_hi[None, :]) + 1
        free = _box_sums(self._integral, lo_i, hi_i)
        return cands[free > 0.5]

    def subcell_candidates(self, lo, hi, spacing, cap) -> np.ndarray:
        """Grid candidates generated only inside still-unmarked cells."""
        n = len(self.counts)
        cells = np.argwhere(self.unmarked > 0.5)
        if cells.shape[0] == 0:
            return np.zeros((0, n))
        subs = np.minimum(8, np.maximum(
            1, np.ceil(self.h / spacing).astype(np.int64)))
        per_cell = int(np.prod(subs.astype(float)))
        total = cells.shape[0] * per_cell
        stride = 1
        while total > cap:
            stride *= 2
            total = (cells.shape[0] // stride + 1) * per_cell
        cells = cells[::stride]
        offs_axes = [(np.arange(subs[k]) + 0.5) * self.h[k] / subs[k]
                     for k in range(n)]
        grids = np.meshgrid(*offs_axes, indexing="ij")
        offs = np.stack([g.ravel() for g in grids], axis=1)
        base = self.lo[None, :] + cells.astype(float) * self.h[None, :]
        pts = (base[:, None, :] + offs[None, :, :]).reshape(-1, n)
        keep = np.all((pts >= lo[None, :] - 1e-12)
                      & (pts <= hi[None, :] + 1e-12), axis=1)
        return pts[keep]


def _box_sums(integral, lo_i, hi_i):
    n = lo_i.shape[1]
    total = np.zeros(lo_i.shape[0])
    for corner in itertools.product((0, 1), repeat=n):
        sign = (-1) ** (n - sum(corner))
        idx = tuple(np.where(corner[k], hi_i[:, k], lo_i[:, k])
                    for k in range(n))
        total += sign * integral[idx]
    return total


def _accept_all(cands, r, acc_x, acc_r, n_acc, dirs, h_pos, h_neg, rho,
                vol_cand, covered, budget):
    n_acc, got, taken = _kernels.accept_loop(
        np.ascontiguousarray(cands), float(r), acc_x, acc_r, int(n_acc),
        np.ascontiguousarray(dirs), np.ascontiguousarray(h_pos),
        np.ascontiguousarray(h_neg), float(rho), float(vol_cand),
        float(budget - covered), 1e-12)
    return n_acc, covered + got, taken


def _fit_radius(target: Polytope, proto: Polytope) -> float:
    """Largest r (up to bisection) admitting one placement x + r*proto."""
    h = proto.support(target.normals)
    lo_t, hi_t = target.bbox()
    lo_p, hi_p = proto.bbox()
    span_t = hi_t - lo_t
    span_p = hi_p - lo_p
    r_ub = float(np.min(span_t / span_p))
    lo, hi = 0.0, r_ub * 1.0000001
    if _eroded_center(target, h, r_ub) is not None:
        return r_ub
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _eroded_center(target, h, mid) is not None:
            lo = mid
        else:
            hi = mid
    return lo * 0.999


def _eroded_center(target: Polytope, h: np.ndarray, r: float):
    b = target.offsets - r * h
    verts = enumerate_vertices(target.normals, b)
    if verts.shape[0] == 0:
        return None
    return verts.mean(axis=0)


def _candidate_centers(target: Polytope, proto: Polytope, r: float,
                       spacing: np.ndarray, cap: int = 400000,
                       raster: "_Raster | None" = None) -> np.ndarray:
    h = proto.support(target.normals)
    b = target.offsets - r * h
    lo_t, hi_t = target.bbox()
    p_lo, p_hi = proto.bbox()
    lo = lo_t - r * p_lo
    hi = hi_t - r * p_hi
    if np.any(hi < lo):
        return np.zeros((0, target.dim))
    blocks = []
    if proto.lattice_basis is not None:
        blocks.append(_lattice_candidates(proto.lattice_basis * r,
                                          target.centroid(), lo, hi, cap))
    full_count = np.prod([max(1, int((hi[k] - lo[k]) / spacing[k]) + 1)
                          for k in range(lo.shape[0])])
    if raster is None or full_count <= cap:
        blocks.append(_axis_grid_candidates(lo, hi, spacing, cap))
    else:
        blocks.append(raster.subcell_candidates(lo, hi, spacing, cap))
    allp = np.vstack(blocks)
    if allp.shape[0] == 0:
        return allp
    ok = _kernels.points_in_halfspaces(
        np.ascontiguousarray(allp), np.ascontiguousarray(target.normals),
        np.ascontiguousarray(b), -1e-12)
    return allp[ok]


def _axis_grid_candidates(lo, hi, spacing, cap) -> np.ndarray:
    axes = []
    for k in range(lo.shape[0]):
        cnt = int(np.floor((hi[k] - lo[k]) / spacing[k])) + 1
        axes.append(lo[k] + spacing[k] * np.arange(cnt) +
                    0.5 * ((hi[k] - lo[k]) - spacing[k] * (cnt - 1)))
    total = np.prod([len(a) for a in axes])
    while total > cap:
        axes = [a[::2] for a in axes]
        total = np.prod([len(a) for a in axes])
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return np.vstack([pts, pts + 0.5 * np.asarray(spacing)[None, :]])


def _lattice_candidates(basis, base, lo, hi, cap) -> np.ndarray:
    """Integer (and half-offset) combinations of the basis columns in range.

    The half-offset families target the periodic pockets left by the
    primary lattice at coarser scales.
    """
    n = lo.shape[0]
    inv = np.linalg.inv(basis)
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    kc = (corners - base[None, :]) @ inv.T
    k_lo = np.floor(kc.min(axis=0)).astype(np.int64) - 1
    k_hi = np.ceil(kc.max(axis=0)).astype(np.int64) + 1
    counts = k_hi - k_lo + 1
    total = int(np.prod(counts.astype(float)))
    if total > 2 * cap or total <= 0:
        return np.zeros((0, n))
    axes = [np.arange(a, bb + 1) for a, bb in zip(k_lo, k_hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=1).astype(float)
    offsets = np.array(list(itertools.product((0.0, 0.5), repeat=n)))
    blocks = []
    for off in offsets:
        pts = base[None, :] + (ks + off[None, :]) @ basis.T
        keep = np.all((pts >= lo - 1e-12) & (pts <= hi + 1e-12), axis=1)
        blocks.append(pts[keep])
    return np.vstack(blocks)


def volume(p: Polytope) -> float:
    """Exact polytope volume (0 for degenerate input)."""
    try:
        return p.volume()
    except Exception:
        return 0.0


def verify_complex(complex_: CellComplex, rng: np.random.Generator,
                   n_random_pairs: int = 100) -> dict:
    """Disjointness and volume-additivity certificates for a packing."""
    vol_t = complex_.target.volume()
    p = complex_.n_placements
    report = {"n_placements": p}
    vols = complex_.proto.volume() * complex_.radii ** complex_.target.dim
    add_err = abs(vols.sum() + complex_.uncovered_volume - vol_t)
    report["additivity_error"] = add_err
    report["additivity_ok"] = bool(add_err <= 1e-9 * max(vol_t, 1.0))
    worst = 0.0
    pairs = set()
    if p > 1:
        rho = float(np.linalg.norm(complex_.proto.vertices, axis=1).max())
        lim = (complex_.radii[:, None] + complex_.radii[None, :]) * rho
        d2 = np.linalg.norm(complex_.centers[:, None, :]
                            - complex_.centers[None, :, :], axis=2)
        close = np.argwhere((d2 < lim) & ~np.eye(p, dtype=bool))
        close = {tuple(sorted(t)) for t in close}
        close = sorted(close)
        idx = rng.permutation(len(close))[:n_random_pairs] \
            if len(close) > n_random_pairs else range(len(close))
        pairs = [close[i] for i in idx]
        for i, j in pairs:
            pi = complex_.placement_polytope(i)
            pj = complex_.placement_polytope(j)
            worst = max(worst, intersection_volume(pi, pj))
    report["max_pair_intersection"] = worst
    report["disjoint_ok"] = bool(worst <= 1e-12 * max(vol_t, 1.0))
    report["pairs_checked"] = len(list(pairs))
    return report
