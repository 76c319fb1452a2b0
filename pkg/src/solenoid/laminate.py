"""Two-value laminates with explicit boundary-killing skew potentials, and
their ten-dimensional lift where the unconstrained block is assigned per
strip with an exact average correction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import born_infeld as bi
from .domains import CellComplex, Polytope, diamond, diamond_regions, \
    vitali_fill
from .fields import AffineStack, FieldCell, PiecewiseConstantField, \
    PiecewisePotential, PotentialCell, stack_norm
from .linalg import null_direction, rank_with_tol

THETA_MIN = 1e-3


def split_frame(a, b, tol: float = 1e-10) -> np.ndarray:
    """Rotation Q (det +1) with (A-B) Q e_n = 0; identity when already so."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    c = a - b
    n = c.shape[1]
    scale = max(np.abs(c).max(), 1e-300)
    if np.linalg.norm(c[:, -1]) <= tol * scale:
        return np.eye(n)
    if rank_with_tol(c) > n - 1:
        raise ValueError("no admissible splitting direction: full rank")
    nu = null_direction(c)
    q = _rotation_to_last_axis(nu)
    if np.linalg.norm(c @ q[:, -1]) > tol * scale:
        raise ValueError("frame construction failed the residual check")
    return q


def _rotation_to_last_axis(nu: np.ndarray) -> np.ndarray:
    """Orthogonal Q, det +1, with Q e_n = nu (Householder pair)."""
    n = nu.shape[0]
    e = np.zeros(n)
    e[-1] = 1.0
    v = nu - e
    if np.linalg.norm(v) < 1e-14:
        return np.eye(n)
    h = np.eye(n) - 2.0 * np.outer(v, v) / (v @ v)
    # the single reflection has det -1; flip one orthogonal column
    q = h.copy()
    q[:, 0] = -q[:, 0]
    return q


@dataclass
class LaminateSpec:
    a: np.ndarray
    b: np.ndarray
    theta: float
    delta: float
    frame: np.ndarray | None = None

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if self.a.shape != self.b.shape:
            raise ValueError("A and B must share a shape")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        t = self.theta
        if not (0.0 < t < 1.0) or t * (1 - t) < THETA_MIN * (1 - THETA_MIN):
            raise ValueError("theta too extreme: theta(1-theta) below floor")
        c = self.a - self.b
        n = c.shape[1]
        if np.abs(c).max() > 0 and rank_with_tol(c) > n - 1:
            raise ValueError("rank(A-B) must be at most n-1")
        if self.frame is None:
            self.frame = split_frame(self.a, self.b) \
                if np.abs(c).max() > 0 else np.eye(n)
        resid = np.linalg.norm(c @ self.frame[:, -1])
        if resid > 1e-10 * max(np.abs(c).max(), 1e-300):
            raise ValueError("frame does not annihilate A-B on e_n")

    @property
    def average(self) -> np.ndarray:
        return self.theta * self.a + (1 - self.theta) * self.b


def _orthant_corrections(c_loc: np.ndarray, eps: float, theta: float):
    """Column-n correction vector per sign orthant of the waist coords."""
    m, n = c_loc.shape
    corr = {}
    import itertools
    for signs in itertools.product((1.0, -1.0), repeat=n - 1):
        s = np.array(signs)
        corr[signs] = eps * theta * (1 - theta) * (c_loc[:, :n - 1] @ s)
    return corr


def internal_scale(delta: float, theta: float, c: np.ndarray,
                   thickness: float) -> float:
    """Default diamond height: half of delta over theta(1-theta)|A-B|,
    with a dimension safety factor and a domain-thickness cap."""
    n = c.shape[1]
    denom = theta * (1 - theta) * (np.linalg.norm(c) *
                                   max(1.0, np.sqrt((n - 1) / 2.0)) + 1e-300)
    return min(0.5 * delta / denom, thickness)


def build_laminate(spec: LaminateSpec, omega: Polytope, tau: float,
                   eps_override: float | None = None,
                   max_placements: int = 60000,
                   strict: bool = True):
    """Divergence-free field within delta of {A, B} on >= (1-tau) of omega.

    Returns (potential, field, complex).  The potential is piecewise affine,
    vanishes on every cell boundary and on the domain boundary, and
    generates the field increment exactly.
    """
    a, b, theta, delta, q = spec.a, spec.b, spec.theta, spec.delta, spec.frame
    m, n = a.shape
    f = spec.average
    c = a - b
    if np.abs(c).max() == 0.0:
        fld = PiecewiseConstantField(omega, [], f.copy())
        pot = PiecewisePotential(omega, m, n, [])
        return pot, fld, None
    lo, hi = omega.bbox()
    thickness = float(np.min(hi - lo))
    eps = eps_override if eps_override is not None else \
        internal_scale(delta, theta, c, thickness)
    if eps >= delta / (theta * (1 - theta) * np.linalg.norm(c)):
        raise ValueError("internal scale violates the smallness precondition")
    c_loc = c @ q
    c_eff = c_loc.copy()
    c_eff[:, -1] = 0.0
    proto = diamond(n, eps, theta).affine_image(rotation=q)
    cx = vitali_fill(omega, proto, tau, max_placements=max_placements,
                     strict=strict)
    regions = diamond_regions(n, eps, theta)
    corr = _orthant_corrections(c_eff, eps, theta)

    s_pat = np.zeros((m, n, n))
    for k in range(m):
        s_pat[k, n - 1, :] = c_eff[k]
        s_pat[k, :, n - 1] = -c_eff[k]
        s_pat[k, n - 1, n - 1] = 0.0
    s_glob = np.einsum("ip,kpq,jq->kij", q, s_pat, q)

    fcells, pcells = [], []
    values, stacks = [], []
    for strip, signs, reg in regions:
        # value exactly as generated by the potential (c_eff-based slopes)
        v_loc = (1.0 - theta) * c_eff if strip == 0 else -theta * c_eff
        v_loc = v_loc.copy()
        v_loc[:, -1] += corr[tuple(signs)]
        values.append(f + v_loc @ q.T)
        if strip == 0:
            rho_grad = np.concatenate(
                [-eps * theta * (1 - theta) * signs, [1.0 - theta]])
            rho_const = 0.0
        else:
            rho_grad = np.concatenate(
                [-eps * theta * (1 - theta) * signs, [-theta]])
            rho_const = theta * eps
        stacks.append((q @ rho_grad, rho_const))

    vol_regions = [reg.volume() for _, _, reg in regions]
    for i in range(cx.n_placements):
        cc, r = cx.centers[i], cx.radii[i]
        for j, (strip, signs, reg) in enumerate(regions):
            vol = vol_regions[j] * r ** n
            factory = _region_factory(reg, r, q, cc)
            fcells.append(FieldCell(values[j].copy(), vol, factory))
            g_grad, g_const = stacks[j]
            lin = np.einsum("i,kpq->ikpq", g_grad, s_glob)
            const = (r * g_const - g_grad @ cc) * s_glob
            pcells.append(PotentialCell(AffineStack(const, lin), vol, factory))

    locate_fn = _laminate_locator(cx, q, eps, theta, len(regions), regions)
    meta = {"eps": eps, "theta": theta, "delta": delta,
            "covered_fraction": cx.covered_volume / omega.volume()}
    fld = PiecewiseConstantField(omega, fcells, f.copy(),
                                 locate_fn=locate_fn, meta=meta)
    pot = PiecewisePotential(omega, m, n, pcells, meta=meta)
    sup = pot_sup_bound(eps, theta, s_pat, cx)
    if sup >= delta:
        raise ValueError("potential bound exceeds delta; shrink eps")
    meta["potential_sup_bound"] = sup
    return pot, fld, cx


def pot_sup_bound(eps, theta, s_pat, cx: CellComplex) -> float:
    rmax = float(cx.radii.max()) if cx.n_placements else 0.0
    return eps * theta * (1 - theta) * stack_norm(s_pat) * rmax


def _region_factory(reg: Polytope, r: float, q: np.ndarray, c: np.ndarray):
    def make(reg=reg, r=r, q=q, c=c):
        return reg.affine_image(scale=r, rotation=q, shift=c)
    return make


def _laminate_locator(cx: CellComplex, q, eps, theta, n_regions, regions):
    n = q.shape[0]
    strip_of = {}
    bits_of = {}
    for j, (strip, signs, _) in enumerate(regions):
        key = (strip,) + tuple(int(s > 0) for s in signs)
        strip_of[key] = j
    del bits_of

    def locate_fn(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        pl = cx.locate(pts)
        out = np.full(pts.shape[0], -1, dtype=np.int64)
        hit = pl >= 0
        if not np.any(hit):
            return out
        idx = np.where(hit)[0]
        local = np.einsum("pk,ki->pi",
                          pts[idx] - cx.centers[pl[idx]], q) \
            / cx.radii[pl[idx]][:, None]
        strip = (local[:, -1] > eps * theta).astype(int)
        region = np.empty(idx.shape[0], dtype=np.int64)
        for row in range(idx.shape[0]):
            key = (int(strip[row]),) + tuple(
                int(v > 0) for v in local[row, :n - 1])
            region[row] = strip_of[key]
        out[idx] = pl[idx] * n_regions + region
        return out
    return locate_fn


# ---------------------------------------------------------------------------
# ten-dimensional lift


@dataclass
class BILaminateSpec:
    m_point: np.ndarray
    n_point: np.ndarray
    theta: float
    delta: float

    def __post_init__(self):
        self.m_point = np.asarray(self.m_point, dtype=float).ravel()
        self.n_point = np.asarray(self.n_point, dtype=float).ravel()
        if self.m_point.shape != (10,) or self.n_point.shape != (10,):
            raise ValueError("endpoints must be 10-vectors")
        if np.array_equal(self.m_point, self.n_point):
            raise ValueError("endpoints must differ")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0,1)")
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    @property
    def db_pair(self):
        return bi.db_block(self.m_point), bi.db_block(self.n_point)

    @property
    def delta_prime(self) -> float:
        a, b = self.db_pair
        gap = np.linalg.norm(self.m_point - self.n_point)
        return 0.5 * self.delta * np.linalg.norm(a - b) / gap


def build_bi_laminate(spec: BILaminateSpec, omega: Polytope, tau: float,
                      eps_override: float | None = None,
                      max_placements: int = 60000, strict: bool = True):
    """Field over R^10 oscillating near {M, N} with exact average.

    The (D,B) rows come from the matrix laminate at tolerance delta'; the
    unconstrained (P,h) block follows the nearest-endpoint strips plus an
    exact average correction spread over the covered cells.
    """
    mp, np_, theta = spec.m_point, spec.n_point, spec.theta
    a, b = spec.db_pair
    if np.linalg.norm(a - b) <= 1e-14 * max(1.0, np.linalg.norm(a)):
        return _slab_field(spec, omega)
    dprime = spec.delta_prime
    lam = LaminateSpec(a, b, theta, dprime)
    pot, fld2, cx = build_laminate(lam, omega, tau,
                                   eps_override=eps_override,
                                   max_placements=max_placements,
                                   strict=strict)
    f10 = theta * mp + (1 - theta) * np_
    vol_omega = omega.volume()
    tau_frac = fld2.residual_volume / vol_omega
    lower_vol = sum(c.volume for c in fld2.cells
                    if _closer_to_a(c.value, a, b))
    eta_eff = lower_vol / vol_omega + theta * tau_frac
    dxph = mp[6:] - np_[6:]
    corr = (theta - eta_eff) * dxph / max(1.0 - tau_frac, 1e-300)
    cells10 = []
    for c in fld2.cells:
        v = np.empty(10)
        v[:3] = c.value[0]
        v[3:6] = c.value[1]
        if _closer_to_a(c.value, a, b):
            v[6:] = mp[6:] + corr
        else:
            v[6:] = np_[6:] + corr
        cells10.append(FieldCell(v, c.volume, c.poly_factory))
    meta = dict(fld2.meta)
    meta.update({"delta_prime": dprime, "eta_eff": eta_eff,
                 "eta_gap_bound": abs(theta - eta_eff)
                 * np.linalg.norm(a - b)})
    fld = PiecewiseConstantField(omega, cells10, f10,
                                 locate_fn=fld2._locate_fn,
                                 to_matrix=bi.db_block, meta=meta)
    return pot, fld, cx


def _closer_to_a(value, a, b) -> bool:
    da = np.linalg.norm(value - a)
    db = np.linalg.norm(value - b)
    return da < db  # ties go to the N side


def _slab_field(spec: BILaminateSpec, omega: Polytope):
    """Degenerate equal-(D,B) case: two flat slabs, no potential needed."""
    mp, np_, theta = spec.m_point, spec.n_point, spec.theta
    lo, hi = omega.bbox()
    axis = int(np.argmax(hi - lo))
    e = np.zeros(omega.dim)
    e[axis] = 1.0
    lo_s, hi_s = lo[axis], hi[axis]
    target = theta * omega.volume()
    for _ in range(200):
        mid = 0.5 * (lo_s + hi_s)
        lower = omega.clip(e[None, :], np.array([mid]))
        v = lower.volume() if lower is not None else 0.0
        if abs(v - target) <= 1e-14 * omega.volume():
            break
        if v < target:
            lo_s = mid
        else:
            hi_s = mid
    lower = omega.clip(e[None, :], np.array([mid]))
    upper = omega.clip(-e[None, :], np.array([-mid]))
    vol_l = lower.volume()
    th_eff = vol_l / omega.volume()
    # uniform (P,h) shift makes the average exact despite bisection residue
    corr = (theta - th_eff) * (mp[6:] - np_[6:])
    cells = [FieldCell(mp.copy(), vol_l, (lambda p=lower: p)),
             FieldCell(np_.copy(),
                       omega.volume() - vol_l, (lambda p=upper: p))]
    cells[0].value[6:] += corr
    cells[1].value[6:] += corr
    f10 = theta * mp + (1 - theta) * np_
    fld = PiecewiseConstantField(omega, cells, f10, to_matrix=bi.db_block,
                                 meta={"slab": True, "theta_eff": th_eff})
    pot = PiecewisePotential(omega, 2, 3, [])
    return pot, fld, None
