#!/usr/bin/env python3
"""
Unit tests for the cyclic condition, eigenstructure, Killing-field and properness analyses
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from atensor import jet
from atensor.analysis import (
    FLOOR, ProperStatus, a_condition_residual, conformal_unitize, construct_S_from_killing,
    distribution_checks, eigen_from_matrices, eigen_identity_residuals, eigenstructure,
    eigenvalue_constancy, killing_and_T, mixed_derivative_residual, normalized,
    properness_certificate,
)
from atensor.chart import EndoField, VectorField
from atensor.constructions import (
    berger_bundle, coordinate_field, flat_patch, perturbed_sphere_patch, round_sphere_patch, surface_base,
)
from atensor.curvature import deformation_tensor, ricci_endomorphism
from atensor.errors import PreconditionViolation, VanishingFieldError
from atensor.geodesics import conserved_quantity_drift, integrate_batch, quadratic_form, sample_geodesic_starts
from atensor.suites import EXAMPLES, build_example


def constant_endo(matrix):
    matrix = [list(map(float, row)) for row in matrix]
    return EndoField(len(matrix), lambda x: matrix, name="constant")


class TestNormalization(unittest.TestCase):
    """Relative residuals with an absolute floor"""

    def test_normalized(self):
        """Divide by the scale unless it is below the floor"""
        self.assertEqual(normalized(2.0, 4.0), 0.5)
        self.assertEqual(normalized(3e-13, 0.0), 3e-13)
        self.assertEqual(normalized(1e-13, FLOOR / 2), 1e-13)


class TestACondition(unittest.TestCase):
    """Cyclic sum of nabla Phi"""

    def setUp(self):
        self.sphere = round_sphere_patch(2)
        self.points = self.sphere.sample_points(8)

    def test_identity_passes(self):
        """A constant multiple of the identity is parallel"""
        report = a_condition_residual(self.sphere, constant_endo(2 * np.eye(2)), self.points)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.max_cyclic_residual, 1e-10)
        self.assertEqual(len(report.per_point), 8)
        self.assertEqual(len(report.to_dict()["worst"]), 5)

    def test_round_sphere_ricci_passes(self):
        """Ricci of a round sphere is a constant multiple of the identity"""
        S = ricci_endomorphism(self.sphere)
        report = a_condition_residual(self.sphere, S, self.points)
        self.assertLessEqual(report.max_cyclic_residual, 1e-8)

    def test_perturbed_ricci_fails(self):
        """Non-constant Gauss curvature breaks the cyclic condition"""
        patch = perturbed_sphere_patch(0.3)
        report = a_condition_residual(patch, ricci_endomorphism(patch), patch.sample_points(8))
        self.assertFalse(report.passed)
        self.assertGreater(report.max_cyclic_residual, 0.01)
        worst_point, worst_value = report.worst(1)[0]
        self.assertEqual(worst_value, report.max_cyclic_residual)
        self.assertEqual(len(worst_point), 2)

    def test_non_symmetric_rejected(self):
        """A rotation is not g-symmetric"""
        with self.assertRaises(PreconditionViolation):
            a_condition_residual(flat_patch(2), constant_endo([[0, -1], [1, 0]]), [[0.5, 0.5]])


class TestEigenstructure(unittest.TestCase):
    """Generalized eigenproblem with clustering"""

    def test_clustering(self):
        """diag(1, 2, 2) has a simple and a double eigenvalue"""
        es = eigen_from_matrices(np.zeros(3), np.eye(3), np.diag([1.0, 2.0, 2.0]))
        self.assertEqual(es.count, 2)
        np.testing.assert_allclose(es.eigenvalues, [1.0, 2.0])
        self.assertEqual(es.pattern, (1, 2))
        self.assertFalse(es.borderline)
        P = es.projector(1, np.eye(3))
        np.testing.assert_allclose(P, np.diag([0.0, 1.0, 1.0]), atol=1e-14)

    def test_borderline_gap(self):
        """A gap within a decade of the cluster tolerance is flagged and merged"""
        es = eigen_from_matrices(np.zeros(2), np.eye(2), np.diag([1.0, 1.0 + 5e-7]))
        self.assertTrue(es.borderline)
        self.assertEqual(es.count, 1)
        self.assertEqual(es.multiplicities, [2])

    def test_g_orthonormal_eigenbasis(self):
        """Eigenvectors are orthonormal for a non-trivial metric"""
        patch = round_sphere_patch(2)
        x = [1.0, 0.0]
        S = constant_endo([[1.0, 0.0], [0.0, 3.0]])
        es = eigenstructure(patch, S, x)
        G = patch.metric(x)
        V = np.column_stack([es.basis_matrix(0), es.basis_matrix(1)])
        np.testing.assert_allclose(V.T @ G @ V, np.eye(2), atol=1e-12)

    def test_non_constant_eigenvalue(self):
        """(1 + x1) Id varies along its own eigenspace"""
        patch = flat_patch(2)
        S = EndoField(2, lambda x: [[1.0 + x[0], 0.0], [0.0, 1.0 + x[0]]])
        report = eigenvalue_constancy(patch, S, patch.sample_points(6))
        self.assertEqual(report.multiplicities, [2])
        self.assertTrue(report.consistent)
        self.assertGreater(report.max_deviation[0], 0.1)
        self.assertGreater(report.max_directional_derivative[0], 0.7)

    def test_parallel_tensor_constancy(self):
        """A constant diagonal tensor has constant eigenvalues"""
        patch = flat_patch(3)
        S = constant_endo(np.diag([1.0, 2.0, 2.0]))
        points = patch.sample_points(5)
        report = eigenvalue_constancy(patch, S, points)
        np.testing.assert_allclose(report.eigenvalues, [1.0, 2.0])
        self.assertEqual(max(report.max_deviation), 0.0)
        self.assertLess(max(report.max_directional_derivative), 1e-14)
        self.assertIn("consistent", report.to_dict())

        identities = eigen_identity_residuals(patch, S, points)
        self.assertTrue(identities.passed)
        self.assertEqual(identities.checked_pairs, 2 * len(points))

        for index in (0, 1):
            dist = distribution_checks(patch, S, index, points)
            self.assertEqual(dist.vanishing(), [True, True, True])
        self.assertEqual(mixed_derivative_residual(patch, S, points), 0.0)

    def test_distribution_index_out_of_range(self):
        """Asking for a third eigenvalue of a two-eigenvalue tensor is an error"""
        patch = flat_patch(2)
        with self.assertRaises(PreconditionViolation):
            distribution_checks(patch, constant_endo([[1, 0], [0, 2]]), 2, [[0.5, 0.5]])

    def test_mixed_derivative_needs_simple_eigenvalue(self):
        """Three distinct eigenvalues give no mixed residual"""
        patch = flat_patch(3)
        self.assertIsNone(mixed_derivative_residual(patch, constant_endo(np.diag([1, 2, 3])), [[0.5] * 3]))


class TestBergerRicciEigenstructure(unittest.TestCase):
    """Ricci of the circle bundle over the unit sphere, c = 0.8"""

    @classmethod
    def setUpClass(cls):
        spec = berger_bundle(surface_base(1.0, 10), 0.8, 10)
        cls.patch = spec.patch
        cls.S = ricci_endomorphism(spec.patch)
        cls.points = spec.patch.sample_points(6)

    def test_eigen_identities(self):
        """Gradient and eigenfield identities hold for both eigenvalues"""
        report = eigen_identity_residuals(self.patch, self.S, self.points)
        self.assertTrue(report.passed)
        self.assertEqual(report.skipped_pairs, 0)
        self.assertEqual(report.checked_pairs, 2 * len(self.points))
        self.assertLess(report.gradient_identity_residual, 1e-8)
        self.assertLess(report.eigenfield_identity_residual, 1e-8)

    def test_fiber_distribution_vanishes(self):
        """The fibers are integrable, geodesic and S-parallel"""
        report = distribution_checks(self.patch, self.S, 0, self.points)
        self.assertAlmostEqual(report.eigenvalue, 0.32, places=8)
        self.assertEqual(report.multiplicity, 1)
        self.assertEqual(report.vanishing(), [True, True, True])

    def test_horizontal_distribution_does_not(self):
        """The horizontal distribution fails all three properties together"""
        report = distribution_checks(self.patch, self.S, 1, self.points)
        self.assertAlmostEqual(report.eigenvalue, 0.68, places=8)
        self.assertEqual(report.multiplicity, 2)
        self.assertEqual(report.vanishing(), [False, False, False])
        self.assertLess(mixed_derivative_residual(self.patch, self.S, self.points), 1e-8)


class TestCyclicConditionAndFirstIntegral(unittest.TestCase):
    """The cyclic condition holds exactly when Phi(v, v) is a first integral"""

    def test_every_example(self):
        """Cyclic residual below 1e-8 iff the Phi drift stays below 1e-6"""
        outcomes = {}
        for name in EXAMPLES:
            with self.subTest(example=name):
                example = build_example(name)
                cyclic = a_condition_residual(example.patch, example.S, example.patch.sample_points(8))
                phi = quadratic_form(example.patch, example.S)
                trajectories = integrate_batch(example.patch, sample_geodesic_starts(example.patch, 4), 2.0)
                self.assertTrue(trajectories)
                drift = max(conserved_quantity_drift(example.patch, t, phi).relative_drift for t in trajectories)
                outcomes[name] = cyclic.max_cyclic_residual <= 1e-8
                self.assertEqual(outcomes[name], drift <= 1e-6)
        self.assertFalse(outcomes['perturbed'])
        self.assertTrue(outcomes['berger'])


class TestKillingFields(unittest.TestCase):
    """Killing residual, T = nabla xi and unit rescaling"""

    def setUp(self):
        self.sphere = round_sphere_patch(2)
        self.points = self.sphere.sample_points(6)

    def test_flat_translation(self):
        """A coordinate translation is a parallel unit Killing field"""
        patch = flat_patch(2)
        report = killing_and_T(patch, coordinate_field(2, 0), patch.sample_points(4))
        self.assertEqual(report.killing_residual, 0.0)
        self.assertEqual(report.norm_T_squared, 0.0)
        self.assertEqual(report.T_xi_zero, 0.0)
        self.assertNotIn("T", report.to_dict())

    def test_non_unit_field_rejected(self):
        """d/dphi is not unit on the round sphere"""
        with self.assertRaises(PreconditionViolation):
            killing_and_T(self.sphere, coordinate_field(2, 1), self.points)

    def test_conformal_unitize(self):
        """After dividing the metric by |d/dphi|^2 the field is unit and Killing"""
        xi = coordinate_field(2, 1)
        unit = conformal_unitize(self.sphere, xi, self.points)
        self.assertEqual(unit.invariant_axes, ())
        report = killing_and_T(unit, xi, self.points)
        self.assertLess(report.killing_residual, 1e-10)
        # g / sin^2 is a flat cylinder metric, so the field is parallel there
        self.assertLess(report.norm_T_squared, 1e-20)
        self.assertLess(report.lie_preserves_Dmu, 1e-12)

    def test_vanishing_field(self):
        """The zero field cannot be rescaled to unit length"""
        zero = VectorField(2, lambda x: [0.0, 0.0], name="zero")
        with self.assertRaises(VanishingFieldError):
            conformal_unitize(flat_patch(2), zero, [[0.5, 0.5]])

    def test_unitize_rejects_non_killing(self):
        """A radial field is not Killing"""
        radial = VectorField(2, lambda x: [x[0], x[1]], name="radial")
        with self.assertRaises(PreconditionViolation):
            conformal_unitize(flat_patch(2, 0.5, 1.5), radial, [[1.0, 1.0]])

    def test_deformation_tensor_rotation(self):
        """nabla of the plane rotation field is the constant rotation"""
        patch = flat_patch(2, -1.0, 1.0)
        rotation = VectorField(2, lambda x: [-x[1], x[0]])
        T = deformation_tensor(patch, rotation).at([0.2, 0.3])
        np.testing.assert_allclose(T, [[0.0, -1.0], [1.0, 0.0]])


class TestKillingConstruction(unittest.TestCase):
    """S = mu Id + (lam - mu) xi (x) xi^flat"""

    def setUp(self):
        self.patch = flat_patch(2)
        self.points = self.patch.sample_points(5)

    def test_construct_parallel(self):
        """A translation gives a constant tensor that is parallel"""
        S = construct_S_from_killing(self.patch, coordinate_field(2, 0), 3.0, 7.0, self.points)
        np.testing.assert_allclose(S.at([0.5, 0.5]), np.diag([3.0, 7.0]))
        self.assertTrue(a_condition_residual(self.patch, S, self.points).passed)
        report = properness_certificate(self.patch, S, self.points, xi=coordinate_field(2, 0))
        self.assertEqual(report.status, ProperStatus.PARALLEL)
        self.assertTrue(report.parallel)
        self.assertTrue(report.consistent)
        self.assertEqual(report.to_dict()["status"], "parallel")

    def test_properness_from_projector(self):
        """Without xi the unit eigenfield is taken from the spectral projector"""
        S = construct_S_from_killing(self.patch, coordinate_field(2, 1), 1.0, 4.0, self.points)
        report = properness_certificate(self.patch, S, self.points)
        self.assertEqual(report.status, ProperStatus.PARALLEL)
        self.assertLess(report.codifferential_theta, 1e-12)

    def test_non_killing_rejected(self):
        """A unit field that is not Killing cannot build S"""
        field = VectorField(2, lambda x: [jet.cos(x[1]), jet.sin(x[1])], name="twisted")
        with self.assertRaises(PreconditionViolation):
            construct_S_from_killing(self.patch, field, 1.0, 2.0, self.points)

    def test_computed_field_rejected(self):
        """S is built over jets, so xi needs a jet evaluator"""
        rotation = VectorField(2, lambda x: [-x[1], x[0]])
        with self.assertRaises(PreconditionViolation):
            construct_S_from_killing(self.patch, deformation_tensor(self.patch, rotation), 1.0, 2.0)

    def test_properness_needs_simple_eigenvalue(self):
        """A multiple of the identity has no simple eigenvalue"""
        with self.assertRaises(PreconditionViolation):
            properness_certificate(self.patch, constant_endo(np.eye(2)), self.points)

    def test_unit_sphere_field_construction(self):
        """d/dphi on the unitized sphere builds an S that satisfies the cyclic condition"""
        sphere = round_sphere_patch(2)
        points = sphere.sample_points(5)
        xi = coordinate_field(2, 1)
        unit = conformal_unitize(sphere, xi, points)
        S = construct_S_from_killing(unit, xi, 2.0, 5.0, points)
        G = unit.metric(points[0])
        self.assertAlmostEqual(float(xi.at(points[0]) @ G @ xi.at(points[0])), 1.0)
        self.assertLess(a_condition_residual(unit, S, points).max_cyclic_residual, 1e-8)
        self.assertAlmostEqual(math.fsum(S.at(points[0]).diagonal()), 7.0)


if __name__ == '__main__':
    unittest.main()
