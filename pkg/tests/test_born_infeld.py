import numpy as np
import pytest

from solenoid.born_infeld import (check_hull_bounds, decompose_axis_point,
                                  decompose_to_M, defect, lift, pack, unpack)

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


class TestLift:
    def test_zero(self):
        assert np.allclose(lift(np.zeros(3), np.zeros(3)),
                           pack(np.zeros(3), np.zeros(3), np.zeros(3), 1.0))

    def test_orthogonal_pair(self):
        v = lift(E1, E2)
        assert np.allclose(v, pack(E1, E2, E3, 2.0))

    def test_parallel_pair(self):
        v = lift(E1, np.sqrt(2) * E1)
        assert np.allclose(v, pack(E1, np.sqrt(2) * E1, np.zeros(3), 2.0))

    def test_defect_of_lift_property(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            d, b = rng.normal(size=3), rng.normal(size=3)
            dp, dh = defect(lift(d, b))
            assert dp <= 1e-14 and dh <= 1e-13


class TestDefect:
    def test_wrong_p(self):
        dp, dh = defect(pack(np.zeros(3), np.zeros(3), 2 * E3, np.sqrt(5)))
        assert abs(dp - 2.0) < 1e-14 and dh < 1e-14

    def test_wrong_h(self):
        dp, dh = defect(pack(E1, E2, E3, 3.0))
        assert dp < 1e-14 and abs(dh - 1.0) < 1e-14


class TestHullBounds:
    def test_inner_point(self):
        f = check_hull_bounds(pack(np.zeros(3), np.zeros(3), np.zeros(3), 1.5))
        assert f.inner and f.verdict == "inside"

    def test_serre_excluded(self):
        f = check_hull_bounds(pack(np.zeros(3), np.zeros(3), 2 * E3,
                                   np.sqrt(5)))
        assert f.outer          # h^2 = 5 = 1 + |P|^2 holds with equality
        assert not f.serre      # needs h^2 >= 9
        assert f.verdict == "outside"

    def test_manifold_point_equalities(self):
        v = lift(E1, E2)
        f = check_hull_bounds(v)
        assert f.outer and f.serre
        assert abs(f.outer_slack) < 1e-12 and abs(f.serre_slack) < 1e-12

    def test_necessity_on_random_combinations(self):
        rng = np.random.default_rng(77)
        for _ in range(500):
            k = rng.integers(2, 6)
            atoms = np.array([lift(rng.uniform(-3, 3, 3),
                                   rng.uniform(-3, 3, 3)) for _ in range(k)])
            w = rng.uniform(0, 1, k)
            w /= w.sum()
            f = check_hull_bounds(w @ atoms)
            assert f.outer and f.serre


class TestAxisPoints:
    def test_d_axis_spec_case(self):
        dec = decompose_axis_point("D", E1, 2.0)
        alpha = np.sqrt(2.0)
        assert np.allclose(dec.atoms[0], pack(E1, alpha * E1, np.zeros(3), 2))
        assert np.allclose(dec.atoms[1], pack(E1, -alpha * E1, np.zeros(3), 2))
        dec.verify(pack(E1, np.zeros(3), np.zeros(3), 2.0))

    def test_p_axis_spec_case(self):
        dec = decompose_axis_point("P", E3, 2.0)
        assert np.allclose(dec.atoms[0], pack(E1, E2, E3, 2.0))
        assert np.allclose(dec.atoms[1], pack(-E1, -E2, E3, 2.0))
        dec.verify(pack(np.zeros(3), np.zeros(3), E3, 2.0))

    def test_b_axis_mirrors_d(self):
        dec = decompose_axis_point("B", 2 * E2, 3.0)
        dec.verify(pack(np.zeros(3), 2 * E2, np.zeros(3), 3.0))
        for a in dec.atoms:
            d, b, p, h = unpack(a)
            assert np.allclose(b, 2 * E2) and h == 3.0

    def test_s_too_small(self):
        with pytest.raises(ValueError):
            decompose_axis_point("D", np.zeros(3), 0.5)

    def test_wrong_norm(self):
        with pytest.raises(ValueError):
            decompose_axis_point("D", 3 * E1, 2.0)


class TestDecomposeToM:
    def test_center_two_atoms(self):
        v = pack(np.zeros(3), np.zeros(3), np.zeros(3), 2.0)
        dec = decompose_to_M(v)
        lam = np.sqrt(1.5)
        assert dec.atoms.shape[0] == 2
        assert np.allclose(dec.atoms[0], pack(lam * E1, lam * E1,
                                              np.zeros(3), 2.0))
        dec.verify(v)

    def test_mixed_eight_atoms(self):
        v = pack(0.3 * E1, 0.2 * E2, 0.1 * E3, 2.0)
        dec = decompose_to_M(v)
        assert dec.atoms.shape[0] == 8
        dec.verify(v)

    def test_boundary_sigma(self):
        v = pack(E1, np.zeros(3), np.zeros(3), 2.0)
        dec = decompose_to_M(v)
        assert dec.atoms.shape[0] == 2
        dec.verify(v)

    def test_degenerate_s1(self):
        v = pack(np.zeros(3), np.zeros(3), np.zeros(3), 1.0)
        dec = decompose_to_M(v)
        assert dec.atoms.shape[0] == 1

    def test_outside_inner_bound_errors(self):
        with pytest.raises(ValueError):
            decompose_to_M(pack(2 * E1, np.zeros(3), np.zeros(3), 2.0))

    def test_random_reconstruction(self):
        rng = np.random.default_rng(101)
        for _ in range(300):
            s = rng.uniform(1.05, 5.0)
            parts = rng.uniform(0, 1, 3)
            parts *= rng.uniform(0, 0.98) * (s - 1) / parts.sum()
            dirs = rng.normal(size=(3, 3))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            v = pack(parts[0] * dirs[0], parts[1] * dirs[1],
                     parts[2] * dirs[2], s)
            dec = decompose_to_M(v)
            assert dec.atoms.shape[0] <= 8
            dec.verify(v)

    def test_perturbation_defect_scaling(self):
        # off-manifold perturbations of size eta have defect O(eta); the
        # observed constant on a bounded sample is logged, not assumed
        rng = np.random.default_rng(55)
        worst = 0.0
        for _ in range(200):
            v = lift(rng.uniform(-2, 2, 3), rng.uniform(-2, 2, 3))
            eta = 10.0 ** rng.uniform(-8, -2)
            pert = rng.normal(size=10)
            pert /= np.linalg.norm(pert)
            dp, dh = defect(v + eta * pert)
            worst = max(worst, (dp + dh) / eta)
        assert worst < 50.0
        print(f"empirical defect/dist constant C(R<=2): {worst:.3f}")
