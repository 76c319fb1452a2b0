"""Hot numeric kernels: numba @njit versions with pure-numpy fallbacks.

Set SOLENOID_DISABLE_NUMBA=1 to force the numpy path (same results, slower).
The greedy packing loop is sequential by nature, so the fallback mirrors the
loop structure instead of vectorizing the accept decision.
"""

import os

import numpy as np

_DISABLE = os.environ.get("SOLENOID_DISABLE_NUMBA", "") not in ("", "0")

try:
    if _DISABLE:
        raise ImportError("numba disabled by SOLENOID_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# greedy disjoint placement
#
# Candidates are centers for scaled copies r*K of a convex prototype K.
# Overlap is tested against every accepted copy with a separating-direction
# certificate: copies (x1, r1*K), (x2, r2*K) are certified disjoint when some
# test direction u has  u.(x1 - x2) >= r1*h_K(u) + r2*h_K(-u).  The test set
# contains the facet normals of K - K, so same-scale pairs are decided
# exactly; across scales the test is conservative (never accepts an overlap).


def _accept_loop_py(cand, r_cand, acc_x, acc_r, n_acc, dirs, h_pos, h_neg,
                    rho, vol_cand, budget, eps):
    n = cand.shape[0]
    taken = np.zeros(n, dtype=np.bool_)
    covered = 0.0
    if n_acc >= acc_x.shape[0]:
        return n_acc, covered, taken
    for c in range(n):
        if covered >= budget - 1e-15:
            break
        ok = True
        for a in range(n_acc):
            dx = cand[c] - acc_x[a]
            dist2 = float(np.dot(dx, dx))
            rr = (r_cand + acc_r[a]) * rho
            if dist2 >= rr * rr:
                continue
            sep = False
            for d in range(dirs.shape[0]):
                s = float(np.dot(dirs[d], dx))
                if s >= r_cand * h_neg[d] + acc_r[a] * h_pos[d] - eps:
                    sep = True
                    break
                if -s >= r_cand * h_pos[d] + acc_r[a] * h_neg[d] - eps:
                    sep = True
                    break
            if not sep:
                ok = False
                break
        if ok:
            acc_x[n_acc] = cand[c]
            acc_r[n_acc] = r_cand
            n_acc += 1
            taken[c] = True
            covered += vol_cand
            if n_acc >= acc_x.shape[0]:
                break
    return n_acc, covered, taken


def _points_in_halfspaces_py(pts, normals, offsets, margin):
    # strict interior test with a safety band
    vals = pts @ normals.T - offsets[None, :]
    return np.all(vals <= -margin, axis=1)


def _locate_batch_py(pts, centers, radii, normals, offsets, band):
    n_pts = pts.shape[0]
    out = np.full(n_pts, -1, dtype=np.int64)
    for i in range(n_pts):
        for j in range(centers.shape[0]):
            r = radii[j]
            y = (pts[i] - centers[j]) / r
            inside = True
            for f in range(normals.shape[0]):
                v = float(np.dot(normals[f], y)) - offsets[f]
                if v > -band / r:
                    inside = False
                    break
            if inside:
                out[i] = j
                break
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _accept_loop_nb(cand, r_cand, acc_x, acc_r, n_acc, dirs, h_pos, h_neg,
                        rho, vol_cand, budget, eps):
        n = cand.shape[0]
        dim = cand.shape[1]
        taken = np.zeros(n, dtype=np.bool_)
        covered = 0.0
        if n_acc >= acc_x.shape[0]:
            return n_acc, covered, taken
        for c in range(n):
            if covered >= budget - 1e-15:
                break
            ok = True
            for a in range(n_acc):
                dist2 = 0.0
                for k in range(dim):
                    dxk = cand[c, k] - acc_x[a, k]
                    dist2 += dxk * dxk
                rr = (r_cand + acc_r[a]) * rho
                if dist2 >= rr * rr:
                    continue
                sep = False
                for d in range(dirs.shape[0]):
                    s = 0.0
                    for k in range(dim):
                        s += dirs[d, k] * (cand[c, k] - acc_x[a, k])
                    if s >= r_cand * h_neg[d] + acc_r[a] * h_pos[d] - eps:
                        sep = True
                        break
                    if -s >= r_cand * h_pos[d] + acc_r[a] * h_neg[d] - eps:
                        sep = True
                        break
                if not sep:
                    ok = False
                    break
            if ok:
                for k in range(dim):
                    acc_x[n_acc, k] = cand[c, k]
                acc_r[n_acc] = r_cand
                n_acc += 1
                taken[c] = True
                covered += vol_cand
                if n_acc >= acc_x.shape[0]:
                    break
        return n_acc, covered, taken

    @njit(cache=True)
    def _points_in_halfspaces_nb(pts, normals, offsets, margin):
        n = pts.shape[0]
        out = np.ones(n, dtype=np.bool_)
        for i in range(n):
            for f in range(normals.shape[0]):
                v = 0.0
                for k in range(pts.shape[1]):
                    v += normals[f, k] * pts[i, k]
                if v - offsets[f] > -margin:
                    out[i] = False
                    break
        return out

    @njit(cache=True)
    def _locate_batch_nb(pts, centers, radii, normals, offsets, band):
        n_pts = pts.shape[0]
        dim = pts.shape[1]
        out = np.full(n_pts, -1, dtype=np.int64)
        for i in range(n_pts):
            for j in range(centers.shape[0]):
                r = radii[j]
                inside = True
                for f in range(normals.shape[0]):
                    v = 0.0
                    for k in range(dim):
                        v += normals[f, k] * (pts[i, k] - centers[j, k]) / r
                    if v - offsets[f] > -band / r:
                        inside = False
                        break
                if inside:
                    out[i] = j
                    break
        return out

    accept_loop = _accept_loop_nb
    points_in_halfspaces = _points_in_halfspaces_nb
    locate_batch = _locate_batch_nb
else:
    accept_loop = _accept_loop_py
    points_in_halfspaces = _points_in_halfspaces_py
    locate_batch = _locate_batch_py
