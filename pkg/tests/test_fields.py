import numpy as np
import pytest

from solenoid.domains import Polytope, diamond
from solenoid.fields import (AffineStack, FieldCell, PiecewiseConstantField,
                             PiecewisePotential, PotentialCell, apply_L,
                             boundary_test_suite, empirical_measure,
                             hat_kernel_taps, mollification_gap,
                             weak_div_residual)
from solenoid.laminate import LaminateSpec, build_laminate
from solenoid.polynomials import Poly


def make_constant_field(domain, value):
    return PiecewiseConstantField.from_cell_list(
        domain, [(domain, np.asarray(value, float))], np.asarray(value, float))


class TestApplyL:
    def test_linear_in_xn_gives_last_row(self):
        # G^k(x) = x_n * S  =>  row k of L(G) is the n-th row of S
        rng = np.random.default_rng(5)
        n, m = 3, 2
        s = rng.normal(size=(n, n))
        s = s - s.T
        lin = np.zeros((n, m, n, n))
        for k in range(m):
            lin[n - 1, k] = s
        box = Polytope.box(np.zeros(n), np.ones(n))
        cell = PotentialCell(AffineStack(np.zeros((m, n, n)), lin), 1.0,
                             lambda: box)
        pot = PiecewisePotential(box, m, n, [cell])
        fld = apply_L(pot)
        for k in range(m):
            assert np.allclose(fld.cells[0].value[k], s[n - 1])

    def test_zero_potential(self):
        box = Polytope.box([0, 0], [1, 1])
        pot = PiecewisePotential(box, 1, 2, [])
        fld = apply_L(pot)
        assert np.allclose(fld.background, 0.0)

    def test_strip_profile_reproduces_two_values(self):
        # the explicit two-slope profile generates chi*A + (1-chi)*B
        theta = 0.4
        a = np.array([[1.0, 0.0]])
        b = np.array([[-1.0, 0.0]])
        c = a - b
        box = Polytope.box([0, 0], [1, theta])  # lower strip of Omega_eps
        lin = np.zeros((2, 1, 2, 2))
        s = np.array([[[0.0, -1.0], [1.0, 0.0]]]) * c[0, 0]
        lin[1, 0] = (1 - theta) * s[0]
        cell = PotentialCell(AffineStack(np.zeros((1, 2, 2)), lin), box.volume(),
                             lambda: box)
        pot = PiecewisePotential(box, 1, 2, [cell])
        fld = apply_L(pot)
        f = theta * a + (1 - theta) * b
        assert np.allclose(fld.cells[0].value, a - f)


class TestWeakDivResidual:
    def test_constant_field(self):
        box = Polytope.box([0, 0, 0], [1, 1, 1])
        fld = make_constant_field(box, np.array([[1.0, 2.0, 3.0]]))
        for phi in boundary_test_suite(box):
            r = weak_div_residual(fld, phi)
            assert np.max(np.abs(r)) < 1e-12

    def test_laminate_field_is_divergence_free(self):
        spec = LaminateSpec(np.array([[1.0, 0.0]]), np.array([[-1.0, 0.0]]),
                            0.5, 0.1)
        box = Polytope.box([0, 0], [1, 1])
        pot, fld, cx = build_laminate(spec, box, 0.2)
        scale = fld.sup_norm() * box.volume()
        for phi in boundary_test_suite(box):
            grad_sup = max(g.abs_coeff_bound(*box.bbox()) for g in phi.grad())
            r = weak_div_residual(fld, phi)
            assert np.max(np.abs(r)) <= 1e-10 * scale * grad_sup

    def test_broken_field_interface_jump(self):
        # two half-cells with a jump whose normal component is nonzero
        a = np.array([[1.0, 0.0]])
        b = np.array([[0.0, 0.0]])
        box = Polytope.box([0, 0], [1, 1])
        left = Polytope.box([0, 0], [0.5, 1])
        right = Polytope.box([0.5, 0], [1, 1])
        fld = PiecewiseConstantField.from_cell_list(
            box, [(left, a), (right, b)], np.zeros((1, 2)))
        phi = boundary_test_suite(box)[0]
        r = weak_div_residual(fld, phi)
        # oracle: (A-B) nu * int_{facet} phi, facet x=1/2, nu = e1
        ys = np.linspace(0, 1, 20001)
        pts = np.column_stack([np.full_like(ys, 0.5), ys])
        line = np.trapezoid(phi(pts), ys)
        want = (a - b)[0, 0] * line
        assert abs(r[0] - want) < 1e-8 * max(1.0, abs(want))


class TestAverage:
    def test_constant(self):
        box = Polytope.box([0, 0], [2, 2])
        fld = make_constant_field(box, np.array([[3.0, -1.0]]))
        assert np.allclose(fld.average(), [[3.0, -1.0]])

    def test_two_equal_cells(self):
        box = Polytope.box([0, 0], [2, 1])
        l = Polytope.box([0, 0], [1, 1])
        r = Polytope.box([1, 0], [2, 1])
        a, b = np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])
        fld = PiecewiseConstantField.from_cell_list(
            box, [(l, a), (r, b)], 0.5 * (a + b))
        assert np.allclose(fld.average(), 0.5 * (a + b))

    def test_laminate_average_is_exact(self):
        spec = LaminateSpec(np.array([[1.0, 0.0]]), np.array([[-1.0, 0.0]]),
                            0.3, 0.1)
        box = Polytope.box([0, 0], [1, 1])
        _, fld, _ = build_laminate(spec, box, 0.2)
        f = spec.average
        err = np.abs(fld.average() - f).max()
        assert err <= 1e-10 * max(1.0, np.abs(f).max())


class TestMollification:
    def test_kernel_taps_sum_to_one(self):
        taps = hat_kernel_taps(0.25, 0.25 / 16)
        assert abs(taps.sum() - 1.0) < 1e-14
        assert np.all(taps >= 0)

    def test_constant_field_zero_gap(self):
        box = Polytope.box([0, 0], [1, 1])
        fld = make_constant_field(box, np.array([[1.0, 2.0]]))
        omega = Polytope.box([0.3, 0.3], [0.7, 0.7])
        gap = mollification_gap(fld, 0.1, 0.1 / 16, omega)
        assert gap.value < 1e-12

    def test_grid_too_coarse_errors(self):
        box = Polytope.box([0, 0], [1, 1])
        fld = make_constant_field(box, np.array([[1.0, 2.0]]))
        with pytest.raises(ValueError):
            mollification_gap(fld, 0.1, 0.1 / 4, Polytope.box([0.3, 0.3],
                                                              [0.7, 0.7]))

    def test_one_interface_strip_bound(self):
        # analytic: gap <= 2 |jump| * strip volume around the interface
        box = Polytope.box([0, 0], [1, 1])
        left = Polytope.box([0, 0], [0.5, 1])
        right = Polytope.box([0.5, 0], [1, 1])
        a, b = np.array([[1.0, 0.0]]), np.array([[-1.0, 0.0]])
        fld = PiecewiseConstantField.from_cell_list(
            box, [(left, a), (right, b)], np.zeros((1, 2)))
        omega = Polytope.box([0.25, 0.25], [0.75, 0.75])
        eps = 0.1
        gap = mollification_gap(fld, eps, eps / 16, omega)
        jump = np.linalg.norm(a - b)
        strip = 2 * eps * 0.5  # width 2eps, interface length 1/2 in omega
        assert gap.value <= jump * strip * 1.05
        assert gap.value > 0.1 * jump * strip

    def test_gap_decreases_with_eps(self):
        spec = LaminateSpec(np.array([[1.0, 0.0]]), np.array([[-1.0, 0.0]]),
                            0.5, 0.4)
        box = Polytope.box([0, 0], [1, 1])
        _, fld, _ = build_laminate(spec, box, 0.3)
        omega = Polytope.box([0.3, 0.3], [0.7, 0.7])
        gaps = [mollification_gap(fld, 2.0 ** -k, 2.0 ** -k / 16, omega).value
                for k in range(2, 7)]
        assert all(g1 >= g2 - 1e-3 for g1, g2 in zip(gaps, gaps[1:]))
        assert gaps[-1] < gaps[0]


class TestEmpiricalMeasure:
    def test_constant_field(self):
        box = Polytope.box([0, 0], [1, 1])
        v = np.array([[1.0, 0.0]])
        fld = make_constant_field(box, v)
        em = empirical_measure(fld, np.array([v.ravel(), [-1.0, 0.0]]), 0.3)
        assert np.allclose(em.weights, [1.0, 0.0])
        assert em.unassigned < 1e-12

    def test_theta_laminate_weights(self):
        theta, tau = 0.3, 0.1
        spec = LaminateSpec(np.array([[1.0, 0.0]]), np.array([[-1.0, 0.0]]),
                            theta, 0.05)
        box = Polytope.box([0, 0], [1, 1])
        _, fld, _ = build_laminate(spec, box, tau)
        atoms = np.array([[1.0, 0.0], [-1.0, 0.0]])
        em = empirical_measure(fld, atoms, 0.2)
        assert abs(em.weights[0] - theta) <= tau + 1e-9
        assert abs(em.weights[1] - (1 - theta)) <= tau + 1e-9

    def test_radius_below_spread_unassigned(self):
        theta, tau = 0.5, 0.2
        spec = LaminateSpec(np.array([[1.0, 0.0]]), np.array([[-1.0, 0.0]]),
                            theta, 0.2)
        box = Polytope.box([0, 0], [1, 1])
        _, fld, _ = build_laminate(spec, box, tau)
        atoms = np.array([[1.0, 0.0], [-1.0, 0.0]])
        em = empirical_measure(fld, atoms, 1e-9)
        assert em.unassigned > 0

    def test_overlapping_atoms_error(self):
        box = Polytope.box([0, 0], [1, 1])
        fld = make_constant_field(box, np.array([[0.0, 0.0]]))
        with pytest.raises(ValueError):
            empirical_measure(fld, np.array([[0.0, 0.0], [0.1, 0.0]]), 0.3)


class TestSuiteProperties:
    def test_bubbles_vanish_on_boundary(self):
        box = Polytope.box([0, 0, 0], [1, 2, 1])
        rng = np.random.default_rng(3)
        for phi in boundary_test_suite(box):
            for f in range(box.normals.shape[0]):
                verts = box._facet_vertices(f)
                w = rng.uniform(0, 1, size=(50, verts.shape[0]))
                w /= w.sum(axis=1, keepdims=True)
                vals = phi(w @ verts)
                assert np.max(np.abs(vals)) < 1e-12

    def test_barrier_on_diamond(self):
        d = diamond(2, 1.0, 0.5)
        phi = boundary_test_suite(d)[0]
        assert np.max(np.abs(phi(d.vertices))) < 1e-12
        assert abs(phi(d.centroid()[None])[0] - 1.0) < 1e-12
