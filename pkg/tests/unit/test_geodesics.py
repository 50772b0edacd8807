#!/usr/bin/env python3
"""
Unit tests for geodesic integration and conservation-law drift
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from atensor.analysis import construct_S_from_killing
from atensor.chart import EndoField
from atensor.constructions import (
    berger_bundle, coordinate_field, flat_patch, perturbed_sphere_patch, round_sphere_patch, surface_base,
)
from atensor.curvature import ricci_endomorphism
from atensor.errors import DegenerateTrajectoryError, PreconditionViolation, StiffnessError
from atensor.geodesics import (
    Trajectory, conserved_quantity_drift, energy, horizontal_speed, integrate_batch,
    integrate_geodesic, killing_momentum_drift, momentum_drift, quadratic_form, reverse, sample_geodesic_starts,
)
from atensor.suites import NEGATIVE_DRIFT


def tilted_start():
    """Equator of the unit sphere, heading north-east"""
    v = np.array([0.3, 0.9])
    return np.array([math.pi / 2, 0.0]), v / np.linalg.norm(v)


class TestIntegrator(unittest.TestCase):
    """Dormand-Prince integration of the geodesic equation"""

    def setUp(self):
        self.sphere = round_sphere_patch(2)

    def test_flat_straight_line(self):
        """Geodesics of a flat patch are straight lines"""
        patch = flat_patch(2)
        x0, v0 = np.array([0.5, 0.5]), np.array([0.6, -0.8])
        traj = integrate_geodesic(patch, x0, v0, 5.0)
        self.assertFalse(traj.exited)
        self.assertAlmostEqual(traj.duration, 5.0)
        for state in traj.states:
            np.testing.assert_allclose(state.x, x0 + state.t * v0, atol=1e-12)
            np.testing.assert_allclose(state.v, v0, atol=1e-12)

    def test_equator(self):
        """The equator is a unit-speed great circle"""
        traj = integrate_geodesic(self.sphere, [math.pi / 2, 0.0], [0.0, 1.0], 2 * math.pi)
        final = traj.states[-1]
        self.assertAlmostEqual(final.x[0], math.pi / 2, places=9)
        self.assertAlmostEqual(final.x[1], 2 * math.pi, places=8)
        positions = traj.positions()
        self.assertLess(np.max(np.abs(positions[:, 0] - math.pi / 2)), 1e-9)

    def test_energy_conserved(self):
        """g(v, v) stays constant along a tilted great circle"""
        x0, v0 = tilted_start()
        traj = integrate_geodesic(self.sphere, x0, v0, 5.0)
        report = conserved_quantity_drift(self.sphere, traj, energy(self.sphere))
        self.assertAlmostEqual(report.initial_value, 1.0)
        self.assertLess(report.max_drift, 1e-8)
        self.assertEqual(report.n_states, len(traj.states))
        self.assertGreater(traj.stats.accepted, 10)

    def test_clairaut_momentum(self):
        """g(d/dphi, v) is conserved on the sphere"""
        x0, v0 = tilted_start()
        traj = integrate_geodesic(self.sphere, x0, v0, 3.0)
        report = momentum_drift(self.sphere, coordinate_field(2, 1), traj)
        self.assertAlmostEqual(report.initial_value, v0[1])
        self.assertLess(report.max_drift, 1e-8)

    def test_fifth_order_convergence(self):
        """Halving a fixed step cuts the global error by at least eight"""
        x0, v0 = tilted_start()
        t_end = 4.0
        reference = integrate_geodesic(self.sphere, x0, v0, t_end, tol=1e-12).states[-1].x
        errors = []
        for h in (0.4, 0.2):
            traj = integrate_geodesic(self.sphere, x0, v0, t_end, fixed_step=h)
            self.assertAlmostEqual(traj.duration, t_end)
            errors.append(np.linalg.norm(traj.states[-1].x - reference))
        self.assertGreaterEqual(errors[0] / errors[1], 8.0)

    def test_time_reversal(self):
        """Integrating back from the end point returns to the start"""
        x0, v0 = tilted_start()
        forward = integrate_geodesic(self.sphere, x0, v0, 3.0)
        x1, v1 = reverse(forward)
        backward = integrate_geodesic(self.sphere, x1, v1, 3.0)
        np.testing.assert_allclose(backward.states[-1].x, x0, atol=1e-8)
        np.testing.assert_allclose(-backward.states[-1].v, v0, atol=1e-8)

    def test_exit_at_margin(self):
        """Heading for the pole stops the trajectory at the domain margin"""
        traj = integrate_geodesic(self.sphere, [0.5, 1.0], [-1.0, 0.0], 5.0)
        self.assertTrue(traj.exited)
        self.assertLess(traj.duration, 5.0)
        for state in traj.states:
            self.assertTrue(self.sphere.contains(state.x, 0.5 * self.sphere.margin))

    def test_start_outside_box(self):
        """Starts between the domain edge and the exit box are degenerate"""
        with self.assertRaises(DegenerateTrajectoryError):
            integrate_geodesic(self.sphere, [0.21, 1.0], [1.0, 0.0], 1.0)

    def test_invalid_arguments(self):
        """Tolerance, duration and step must be in range"""
        x0, v0 = tilted_start()
        with self.assertRaises(PreconditionViolation):
            integrate_geodesic(self.sphere, x0, v0, 1.0, tol=1e-3)
        with self.assertRaises(PreconditionViolation):
            integrate_geodesic(self.sphere, x0, v0, 0.0)
        with self.assertRaises(PreconditionViolation):
            integrate_geodesic(self.sphere, x0, v0, 1.0, fixed_step=-0.1)
        with self.assertRaises(PreconditionViolation):
            integrate_geodesic(self.sphere, x0, [1.0, 0.0, 0.0], 1.0)

    def test_step_budget(self):
        """Running out of steps is reported as stiffness"""
        x0, v0 = tilted_start()
        with self.assertRaises(StiffnessError):
            integrate_geodesic(self.sphere, x0, v0, 100.0, max_steps=3)

    def test_empty_trajectory_drift(self):
        """Drift of an empty trajectory is undefined"""
        with self.assertRaises(PreconditionViolation):
            conserved_quantity_drift(self.sphere, Trajectory(states=[]), energy(self.sphere))


class TestBatches(unittest.TestCase):
    """Random starts and batch integration"""

    def test_unit_speed_starts(self):
        """Sampled velocities have unit length"""
        sphere = round_sphere_patch(2)
        starts = sample_geodesic_starts(sphere, 5, seed=3)
        self.assertEqual(len(starts), 5)
        for x, v in starts:
            G = sphere.metric(x)
            self.assertAlmostEqual(float(v @ G @ v), 1.0)
        again = sample_geodesic_starts(sphere, 5, seed=3)
        np.testing.assert_array_equal(starts[0][1], again[0][1])

    def test_batch_skips_degenerate_starts(self):
        """Starts outside the exit box are dropped with a warning"""
        sphere = round_sphere_patch(2)
        starts = [tilted_start(), (np.array([0.21, 1.0]), np.array([1.0, 0.0]))]
        trajectories = integrate_batch(sphere, starts, 1.0)
        self.assertEqual(len(trajectories), 1)


class TestConservationLaws(unittest.TestCase):
    """Quadratic first integrals from the cyclic condition"""

    @classmethod
    def setUpClass(cls):
        cls.spec = berger_bundle(surface_base(1.0, 10), 0.8, 10)
        cls.patch = cls.spec.patch
        cls.trajectories = integrate_batch(cls.patch, sample_geodesic_starts(cls.patch, 3), 2.0)

    def test_killing_tensor_quadratic_integral(self):
        """g(S v, v) is conserved for S built from the fiber field"""
        S = construct_S_from_killing(self.patch, self.spec.xi, 3.0, 7.0, self.patch.sample_points(4))
        phi = quadratic_form(self.patch, S)
        for traj in self.trajectories:
            self.assertLess(conserved_quantity_drift(self.patch, traj, phi).max_drift, 1e-6)

    def test_energy_and_momentum(self):
        """Energy and the fiber momentum are conserved"""
        for traj in self.trajectories:
            self.assertLess(conserved_quantity_drift(self.patch, traj, energy(self.patch)).max_drift, 1e-8)
            self.assertLess(killing_momentum_drift(self.spec, traj).max_drift, 1e-8)

    def test_fiber_geodesic(self):
        """A geodesic starting along xi stays vertical"""
        x0 = np.array([1.2, 0.5, 0.5])
        traj = integrate_geodesic(self.patch, x0, self.spec.xi.at(x0), 2.0)
        self.assertLess(horizontal_speed(self.patch, self.spec.xi, traj), 1e-9)

    def test_perturbed_sphere_breaks_ricci_integral(self):
        """The Ricci form of the perturbed sphere is not a first integral"""
        patch = perturbed_sphere_patch(0.3)
        phi = quadratic_form(patch, ricci_endomorphism(patch))
        traj = integrate_geodesic(patch, [math.pi / 2, 0.0], [0.6, 0.8], 2.0)
        self.assertGreater(conserved_quantity_drift(patch, traj, phi).max_drift, 1e-3)

    def test_constant_tensor_on_sphere(self):
        """Phi = g is the energy itself"""
        sphere = round_sphere_patch(2)
        identity = EndoField(2, lambda x: [[1.0, 0.0], [0.0, 1.0]])
        x0, v0 = tilted_start()
        traj = integrate_geodesic(sphere, x0, v0, 3.0)
        self.assertLess(conserved_quantity_drift(sphere, traj, quadratic_form(sphere, identity)).max_drift, 1e-9)



class TestBatchDrift(unittest.TestCase):
    """Phi drift over fifty random geodesics"""

    def test_berger_ricci_is_first_integral(self):
        """The Ricci form of the circle bundle drifts by at most 1e-6"""
        spec = berger_bundle(surface_base(1.0, 10), 0.8, 10)
        phi = quadratic_form(spec.patch, ricci_endomorphism(spec.patch))
        trajectories = integrate_batch(spec.patch, sample_geodesic_starts(spec.patch, 50), 3.0)
        self.assertGreaterEqual(len(trajectories), 45)
        drift = [conserved_quantity_drift(spec.patch, t, phi).relative_drift for t in trajectories]
        self.assertLessEqual(max(drift), 1e-6)

    def test_perturbed_ricci_drifts(self):
        """Most geodesics of the perturbed sphere change Phi by more than 1e-3"""
        patch = perturbed_sphere_patch(0.3)
        phi = quadratic_form(patch, ricci_endomorphism(patch))
        trajectories = integrate_batch(patch, sample_geodesic_starts(patch, 50), 10.0)
        drift = [conserved_quantity_drift(patch, t, phi).relative_drift for t in trajectories]
        self.assertGreaterEqual(sum(d > NEGATIVE_DRIFT for d in drift), 40)


if __name__ == '__main__':
    unittest.main()
