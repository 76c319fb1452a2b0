import numpy as np
import pytest

from solenoid.linalg import (caratheodory_prune, hull_membership,
                             interior_margin, margin_at_least, null_direction,
                             rank_with_tol, wedge)


def minor_rank_oracle(m, tol=1e-10):
    """Rank via exhaustive minor enumeration (small matrices only)."""
    from itertools import combinations
    m = np.asarray(m, dtype=float)
    scale = max(1.0, np.abs(m).max())
    best = 0
    for k in range(1, min(m.shape) + 1):
        for rows in combinations(range(m.shape[0]), k):
            for cols in combinations(range(m.shape[1]), k):
                if abs(np.linalg.det(m[np.ix_(rows, cols)])) > tol * scale ** k:
                    best = max(best, k)
    return best


class TestRank:
    def test_identity(self):
        assert rank_with_tol(np.eye(3), 1e-10) == 3

    def test_parallel_rows(self):
        m = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        assert rank_with_tol(m) == 1

    def test_sum_of_outer_products(self):
        rng = np.random.default_rng(7)
        u, w = rng.normal(size=2), rng.normal(size=2)
        v, z = rng.normal(size=3), rng.normal(size=3)
        while abs(np.cross(v, z)).max() < 0.1:
            z = rng.normal(size=3)
        m = np.outer(u, v) + np.outer(w, z)
        assert rank_with_tol(m) == minor_rank_oracle(m) == 2

    def test_zero(self):
        assert rank_with_tol(np.zeros((2, 2))) == 0

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            rank_with_tol(np.eye(2), 0.0)


class TestNullDirection:
    def test_zero_column(self):
        m = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0]])
        v = null_direction(m)
        assert np.allclose(np.abs(v), [0, 0, 1])

    def test_1x2(self):
        v = null_direction(np.array([[2.0, 0.0]]))
        assert np.allclose(np.abs(v), [0, 1])

    def test_cross_product_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            m = rng.normal(size=(2, 3))
            if rank_with_tol(m) != 2:
                continue
            v = null_direction(m)
            oracle = np.cross(m[0], m[1])
            oracle /= np.linalg.norm(oracle)
            assert min(np.linalg.norm(v - oracle),
                       np.linalg.norm(v + oracle)) < 1e-10
            assert np.linalg.norm(m @ v) <= 1e-12 * np.linalg.norm(m)

    def test_full_rank_errors(self):
        with pytest.raises(ValueError):
            null_direction(np.eye(3))


class TestWedge:
    def test_orientation(self):
        assert np.allclose(wedge([1, 0, 0], [0, 1, 0]), [0, 0, 1])

    def test_self(self):
        u = np.array([0.3, -2.0, 1.1])
        assert np.allclose(wedge(u, u), 0.0)

    def test_cofactor(self):
        assert np.allclose(wedge([1, 2, 3], [4, 5, 6]), [-3, 6, -3])

    def test_orthogonality(self):
        rng = np.random.default_rng(3)
        u, v = rng.normal(size=3), rng.normal(size=3)
        w = wedge(u, v)
        assert abs(u @ w) < 1e-12 and abs(v @ w) < 1e-12


class TestHullMembership:
    def test_single_atom(self):
        atoms = np.array([[1.0, 2.0], [3.0, 4.0]])
        res = hull_membership(atoms[0], atoms)
        assert res.feasible
        assert abs(res.weights[0] - 1.0) < 1e-9

    def test_midpoint(self):
        atoms = np.array([[0.0, 0.0], [2.0, 0.0]])
        res = hull_membership([1.0, 0.0], atoms)
        assert res.feasible
        assert np.allclose(np.sort(res.weights), [0.5, 0.5], atol=1e-9)

    def test_outside_bbox_separates(self):
        rng = np.random.default_rng(5)
        atoms = rng.uniform(-1, 1, size=(20, 3))
        p = np.array([5.0, 0.0, 0.0])
        res = hull_membership(p, atoms, tol=1e-9)
        assert not res.feasible
        w, gap = res.witness
        assert gap > 0
        assert w @ p > np.max(atoms @ w) + 1e-9 / 2

    def test_round_trip_property(self):
        rng = np.random.default_rng(17)
        for _ in range(60):
            d = rng.integers(2, 7)
            k = rng.integers(d + 1, d + 6)
            atoms = rng.normal(size=(k, d))
            lam = rng.uniform(0, 1, size=k)
            lam /= lam.sum()
            p = lam @ atoms
            res = hull_membership(p, atoms)
            assert res.feasible
            assert res.residual <= 1e-9

    def test_determinism(self):
        rng = np.random.default_rng(23)
        atoms = rng.normal(size=(30, 4))
        p = atoms[:5].mean(axis=0)
        r1 = hull_membership(p, atoms)
        r2 = hull_membership(p, atoms)
        assert np.array_equal(r1.weights, r2.weights)

    def test_empty_atoms(self):
        with pytest.raises(ValueError):
            hull_membership([0.0], np.zeros((0, 1)))


class TestCaratheodory:
    def test_prunes_to_d_plus_one(self):
        rng = np.random.default_rng(31)
        atoms = rng.normal(size=(40, 3))
        lam = rng.uniform(0, 1, size=40)
        lam /= lam.sum()
        p = lam @ atoms
        idx, w = caratheodory_prune(atoms, lam)
        assert idx.size <= 4
        assert np.all(w >= -1e-12)
        assert abs(w.sum() - 1) < 1e-9
        assert np.linalg.norm(w @ atoms[idx] - p) < 1e-8


class TestInteriorMargin:
    def test_cube_center(self):
        for d, a in ((2, 0.5), (3, 1.25)):
            import itertools
            corners = np.array(list(itertools.product(*[[-a, a]] * d)))
            m = interior_margin(np.zeros(d), corners)
            assert abs(m - a / np.sqrt(d)) < 1e-6 * max(a, 1)

    def test_vertex_atom(self):
        atoms = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert interior_margin(atoms[0], atoms) == 0.0

    def test_degenerate_segment(self):
        atoms = np.array([[0.0, 0.0], [2.0, 0.0]])
        assert interior_margin([1.0, 0.0], atoms) == 0.0

    def test_outside(self):
        atoms = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert interior_margin([5.0, 5.0], atoms) == 0.0

    def test_monotonicity_under_atoms(self):
        rng = np.random.default_rng(41)
        for d in (3, 10):
            for _ in range(12):
                atoms = rng.normal(size=(2 * d + 4, d))
                p = atoms.mean(axis=0)
                m1 = interior_margin(p, atoms, iters=30)
                more = np.vstack([atoms, rng.normal(size=(4, d)) * 2])
                m2 = interior_margin(p, more, iters=30)
                assert m2 >= m1 - 1e-7

    def test_margin_at_least_consistent(self):
        atoms = np.array([[-1.0, -1], [1, -1], [1, 1], [-1, 1]])
        assert margin_at_least([0.0, 0.0], atoms, 0.9)
        assert not margin_at_least([0.0, 0.0], atoms, 1.1)
