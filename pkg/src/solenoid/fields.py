"""Piecewise-affine skew potentials, the potential-to-field operator, exact
cellwise integrals, weak-divergence residuals, mollification gaps, and
empirical value histograms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domains import Polytope
from .polynomials import Poly

DEFAULT_BOUNDARY_SAMPLES = 10


def skew_stack(m: int, n: int) -> np.ndarray:
    return np.zeros((m, n, n))


def validate_skew_stack(stack: np.ndarray, tol: float = 0.0) -> None:
    s = np.asarray(stack, dtype=float)
    if s.ndim != 3 or s.shape[1] != s.shape[2]:
        raise ValueError("stack must have shape (m, n, n)")
    err = np.max(np.abs(s + np.transpose(s, (0, 2, 1))))
    if err > tol:
        raise ValueError(f"stack not skew-symmetric (error {err})")


def stack_norm(stack: np.ndarray) -> float:
    """max_k |G^k|_F / sqrt(2): the size of the row-n potential vector."""
    s = np.asarray(stack, dtype=float)
    return float(np.sqrt((s ** 2).sum(axis=(1, 2)).max() / 2.0))


@dataclass
class AffineStack:
    """G(x) = const + sum_k x_k * lin[k], each entry a skew stack."""

    const: np.ndarray          # (m, n, n)
    lin: np.ndarray            # (n, m, n, n)

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.const + np.tensordot(x, self.lin, axes=(0, 0))

    def divergence(self) -> np.ndarray:
        """(L(G))_{kj} = sum_i d G^k_{ij} / d x_i, constant for affine G."""
        n = self.lin.shape[0]
        return sum(self.lin[i][:, i, :] for i in range(n))


@dataclass
class PotentialCell:
    stack: AffineStack
    volume: float
    poly_factory: object       # () -> Polytope

    _poly: Polytope | None = None

    def polytope(self) -> Polytope:
        if self._poly is None:
            self._poly = self.poly_factory()
        return self._poly


class PiecewisePotential:
    """Skew potential stack, affine per cell, zero outside the cells."""

    def __init__(self, domain: Polytope, m: int, n: int,
                 cells: list[PotentialCell], meta: dict | None = None):
        self.domain = domain
        self.m = m
        self.n = n
        self.cells = cells
        self.meta = meta or {}

    def sup_norm(self) -> float:
        """Exact: affine stacks attain extrema at cell vertices."""
        best = 0.0
        for c in self.cells:
            for v in c.polytope().vertices:
                best = max(best, stack_norm(c.stack.value(v)))
        return best

    def boundary_max(self, rng: np.random.Generator,
                     samples_per_facet: int = DEFAULT_BOUNDARY_SAMPLES) -> float:
        """Max |G| over cell-boundary samples (vertices, centroids, random)."""
        worst = 0.0
        for c in self.cells:
            poly = c.polytope()
            for f in range(poly.normals.shape[0]):
                fverts = poly._facet_vertices(f)
                if fverts.shape[0] == 0:
                    continue
                pts = [fverts.mean(axis=0)]
                pts.extend(fverts)
                w = rng.uniform(0, 1, size=(samples_per_facet, fverts.shape[0]))
                w /= w.sum(axis=1, keepdims=True)
                pts.extend(w @ fverts)
                for x in pts:
                    worst = max(worst, stack_norm(c.stack.value(x)))
        return worst


@dataclass
class FieldCell:
    value: np.ndarray
    volume: float
    poly_factory: object

    _poly: Polytope | None = None

    def polytope(self) -> Polytope:
        if self._poly is None:
            self._poly = self.poly_factory()
        return self._poly


class PiecewiseConstantField:
    """Constant per cell, a declared background value on the residual set."""

    def __init__(self, domain: Polytope, cells: list[FieldCell],
                 background: np.ndarray, locate_fn=None,
                 to_matrix=None, meta: dict | None = None):
        self.domain = domain
        self.cells = cells
        self.background = np.asarray(background, dtype=float)
        self._locate_fn = locate_fn
        self.to_matrix = to_matrix or (lambda v: np.atleast_2d(v))
        self.meta = meta or {}

    @classmethod
    def from_cell_list(cls, domain, polys_values, background, **kw):
        cells = [FieldCell(np.asarray(v, float), p.volume(),
                           (lambda p=p: p)) for p, v in polys_values]
        return cls(domain, cells, background, **kw)

    @property
    def covered_volume(self) -> float:
        return float(sum(c.volume for c in self.cells))

    @property
    def residual_volume(self) -> float:
        return self.domain.volume() - self.covered_volume

    def cell_index(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self._locate_fn is not None:
            return self._locate_fn(pts)
        out = np.full(pts.shape[0], -1, dtype=np.int64)
        for i, c in enumerate(self.cells):
            mask = out < 0
            if not np.any(mask):
                break
            inside = c.polytope().contains(pts[mask], tol=-1e-12)
            out[np.where(mask)[0][inside]] = i
        return out

    def evaluate(self, pts) -> np.ndarray:
        idx = self.cell_index(pts)
        vals = np.empty((idx.shape[0],) + self.background.shape)
        vals[:] = self.background
        for i in np.unique(idx[idx >= 0]):
            vals[idx == i] = self.cells[i].value
        return vals

    def average(self) -> np.ndarray:
        """Exact cellwise sum over the exact cell volumes."""
        total = self.background * self.residual_volume
        for c in self.cells:
            total = total + c.value * c.volume
        return total / self.domain.volume()

    def sup_norm(self) -> float:
        vals = [np.linalg.norm(self.background)]
        vals += [np.linalg.norm(c.value) for c in self.cells]
        return float(max(vals))

    def interface_area_bound(self) -> float:
        """Upper bound on the jump-set area: total cell surface."""
        return float(sum(c.polytope().facet_areas().sum() for c in self.cells))

    def value_table(self):
        """(values, volumes) with exact per-distinct-value volumes."""
        seen = {}
        for c in self.cells:
            key = c.value.tobytes()
            if key not in seen:
                seen[key] = [c.value, 0.0]
            seen[key][1] += c.volume
        vals = np.array([v for v, _ in seen.values()])
        vols = np.array([w for _, w in seen.values()])
        return vals, vols


def apply_L(pot: PiecewisePotential) -> PiecewiseConstantField:
    """Row-divergence of the skew stack, cell by cell; zero on the residual."""
    cells = [FieldCell(c.stack.divergence(), c.volume, c.poly_factory)
             for c in pot.cells]
    bg = np.zeros((pot.m, pot.n))
    return PiecewiseConstantField(pot.domain, cells, bg,
                                  meta=dict(pot.meta))


# ---------------------------------------------------------------------------
# weak divergence residuals


def boundary_test_suite(domain: Polytope, extra_linear: bool = True):
    """Polynomial test functions vanishing on the domain boundary.

    For a box, the product bubble prod (x_i-lo_i)(hi_i-x_i); general
    polytopes use the facet-barrier product.  Normalized to sup ~ 1.
    """
    n = domain.dim
    lo, hi = domain.bbox()
    phi = Poly.constant(1.0, n)
    is_box = domain.normals.shape[0] == 2 * n and np.allclose(
        np.abs(domain.normals).sum(axis=1), 1.0)
    if is_box:
        for k in range(n):
            a = Poly.coordinate(k, n) - Poly.constant(lo[k], n)
            b = Poly.constant(hi[k], n) - Poly.coordinate(k, n)
            phi = phi * a * b
    else:
        nrm, off = domain.normals, domain.offsets
        for f in range(nrm.shape[0]):
            lin = Poly.constant(off[f], n)
            for k in range(n):
                if abs(nrm[f, k]) > 0:
                    lin = lin - nrm[f, k] * Poly.coordinate(k, n)
            phi = phi * lin
    center_val = phi(domain.centroid()[None, :])[0]
    if abs(center_val) > 0:
        phi = phi * (1.0 / center_val)
    suite = [phi]
    if extra_linear:
        mid = 0.5 * (lo + hi)
        width = hi - lo
        for k in range(n):
            mod = (Poly.coordinate(k, n) - Poly.constant(mid[k], n)) \
                * (2.0 / width[k])
            suite.append(phi * mod)
    return suite


def weak_div_residual(fld: PiecewiseConstantField, phi: Poly) -> np.ndarray:
    """(int_Omega V_k . grad(phi) dx)_k, exact cellwise."""
    grads = phi.grad()
    exps = np.vstack([g.exponents for g in grads])
    if exps.shape[0] == 0:
        bg = fld.to_matrix(fld.background)
        return np.zeros(bg.shape[0])
    bg = fld.to_matrix(fld.background)
    m, n = bg.shape
    if len(grads) != n:
        raise ValueError("test function dimension mismatch")
    total = np.zeros(m)
    grad_domain = np.array([fld.domain.integrate(g) for g in grads])
    total += bg @ grad_domain
    for c in fld.cells:
        poly = c.polytope()
        gi = np.array([poly.integrate(g) for g in grads])
        total += (fld.to_matrix(c.value) - bg) @ gi
    return total


# ---------------------------------------------------------------------------
# mollification


@dataclass
class MollificationGap:
    value: float
    grid_error_bound: float
    eps: float
    grid_h: float

    def __float__(self):
        return self.value


def hat_kernel_taps(eps: float, h: float) -> np.ndarray:
    """Cellwise-exact discretization of the 1-d hat (1-|t|/eps)+/eps."""
    k = int(np.ceil(eps / h + 0.5))
    edges = (np.arange(-k, k + 1 + 1) - 0.5) * h
    def antider(t):
        t = np.clip(t, -eps, eps)
        return np.where(t < 0, t / eps + t ** 2 / (2 * eps ** 2),
                        t / eps - t ** 2 / (2 * eps ** 2))
    taps = antider(edges[1:]) - antider(edges[:-1])
    taps = np.maximum(taps, 0.0)
    return taps / taps.sum()


def mollification_gap(source, eps: float, grid_h: float,
                      omega: Polytope) -> MollificationGap:
    """Grid estimate of ||rho_eps * f - f||_L1(omega) for f = L(H).

    Samples f on a regular grid over omega padded by eps (the padding must
    stay inside the field domain), convolves with the tensor-product hat
    kernel, and sums |difference| over grid cells inside omega.  The
    attached bound covers the grid-refinement error through the
    perimeter-strip volume of the jump set.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if grid_h > eps / 8 + 1e-15:
        raise ValueError("grid too coarse: need grid_h <= eps/8")
    fld = apply_L(source) if isinstance(source, PiecewisePotential) else source
    lo, hi = omega.bbox()
    n = lo.shape[0]
    dlo, dhi = fld.domain.bbox()
    if np.any(lo - eps < dlo - 1e-9) or np.any(hi + eps > dhi + 1e-9):
        raise ValueError("omega padded by eps leaves the field domain")
    taps = hat_kernel_taps(eps, grid_h)
    k = (taps.shape[0] - 1) // 2
    axes = [np.arange(lo[i] - k * grid_h + grid_h / 2, hi[i] + k * grid_h,
                      grid_h) for i in range(n)]
    shape = tuple(len(a) for a in axes)
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    vals = fld.evaluate(pts)
    comps = vals.reshape(shape + (-1,))
    sm = comps.copy()
    for ax in range(n):
        sm = _conv_axis(sm, taps, ax)
    diff = np.abs(sm - comps).sum(axis=-1)
    inside = omega.contains(pts, tol=-1e-12).reshape(shape)
    gap = float(diff[inside].sum() * grid_h ** n)
    area = fld.interface_area_bound()
    bound = 2.0 * fld.sup_norm() * area * np.sqrt(n) * grid_h
    return MollificationGap(gap, bound, eps, grid_h)


def _conv_axis(arr: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(arr, axis, 0)
    out = np.zeros_like(moved)
    k = (taps.shape[0] - 1) // 2
    n0 = moved.shape[0]
    for j, t in enumerate(taps):
        off = j - k
        src_lo, src_hi = max(0, -off), min(n0, n0 - off)
        dst_lo, dst_hi = max(0, off), min(n0, n0 + off)
        # nearest-extension at the borders keeps mass, borders unread anyway
        out[dst_lo:dst_hi] += t * moved[src_lo:src_hi]
        if off > 0:
            out[:dst_lo] += t * moved[0]
        elif off < 0:
            out[dst_hi:] += t * moved[-1]
    return np.moveaxis(out, 0, axis)


# ---------------------------------------------------------------------------
# empirical measures


@dataclass
class EmpiricalMeasure:
    atoms: np.ndarray
    weights: np.ndarray
    unassigned: float


def empirical_measure(fld: PiecewiseConstantField, atoms, radius: float
                      ) -> EmpiricalMeasure:
    """Volume fractions of cells whose value lies within radius of an atom."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    flat = atoms.reshape(atoms.shape[0], -1)
    dists = np.linalg.norm(flat[:, None, :] - flat[None, :, :], axis=2)
    np.fill_diagonal(dists, np.inf)
    if np.min(dists) < 2 * radius:
        raise ValueError("overlapping atom balls: assignment ambiguous")
    vol_omega = fld.domain.volume()
    weights = np.zeros(atoms.shape[0])
    unassigned = fld.residual_volume
    bg = fld.background.ravel()
    d_bg = np.linalg.norm(flat - bg[None, :], axis=1)
    if np.min(d_bg) < radius:
        unassigned -= fld.residual_volume
        weights[int(np.argmin(d_bg))] += fld.residual_volume
    for c in fld.cells:
        d = np.linalg.norm(flat - c.value.ravel()[None, :], axis=1)
        j = int(np.argmin(d))
        if d[j] < radius:
            weights[j] += c.volume
        else:
            unassigned += c.volume
    return EmpiricalMeasure(atoms, weights / vol_omega,
                            unassigned / vol_omega)
