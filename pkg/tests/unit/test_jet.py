#!/usr/bin/env python3
"""
Unit tests for forward-mode jets
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from atensor import jet
from atensor.errors import EvaluationError
from atensor.jet import Jet, TensorJet, jet_array, seed


def finite_hessian(f, x, h=1e-4):
    """Central-difference Hessian of a float function"""
    n = len(x)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.eye(n)[i] * h
            ej = np.eye(n)[j] * h
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
    return H


class TestJetArithmetic(unittest.TestCase):
    """Sum, product and quotient rules"""

    def setUp(self):
        self.x, self.y = seed([2.0, 3.0], 3)

    def test_variable_seed(self):
        """A coordinate variable has a unit gradient and vanishing higher parts"""
        self.assertEqual(self.x.value, 2.0)
        np.testing.assert_array_equal(self.x.grad, [1.0, 0.0])
        np.testing.assert_array_equal(self.y.hess, np.zeros((2, 2)))
        self.assertEqual(self.x.order, 3)
        self.assertEqual(self.x.dim, 2)

    def test_product_rule(self):
        """x*y has gradient (y, x) and a constant off-diagonal Hessian"""
        f = self.x * self.y
        self.assertEqual(f.value, 6.0)
        np.testing.assert_allclose(f.grad, [3.0, 2.0])
        np.testing.assert_allclose(f.hess, [[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(f.third, np.zeros((2, 2, 2)))

    def test_cubic_third_derivative(self):
        """d^3/dx^3 of x^3 is 6"""
        f = self.x ** 3
        self.assertAlmostEqual(f.grad[0], 12.0)
        self.assertAlmostEqual(f.hess[0, 0], 12.0)
        self.assertAlmostEqual(f.third[0, 0, 0], 6.0)

    def test_reflected_operators(self):
        """Floats on the left of a jet still produce jets"""
        f = 1.0 - 2.0 * self.x + 3.0 / self.y
        self.assertIsInstance(f, Jet)
        self.assertAlmostEqual(f.value, 1.0 - 4.0 + 1.0)
        np.testing.assert_allclose(f.grad, [-2.0, -3.0 / 9.0])

    def test_numpy_scalar_on_the_left(self):
        """numpy scalars defer to the jet's reflected operators"""
        f = np.float64(2.0) * self.x
        self.assertIsInstance(f, Jet)
        self.assertAlmostEqual(f.grad[0], 2.0)

    def test_quotient(self):
        """x / y against the closed form derivatives"""
        f = self.x / self.y
        np.testing.assert_allclose(f.grad, [1 / 3, -2 / 9])
        np.testing.assert_allclose(f.hess, [[0.0, -1 / 9], [-1 / 9, 4 / 27]])

    def test_division_by_zero_value(self):
        """Dividing by a jet whose value is zero is an evaluation error"""
        zero = self.x - 2.0
        with self.assertRaises(EvaluationError):
            self.y / zero
        with self.assertRaises(EvaluationError):
            self.x / 0

    def test_mixed_orders_truncate(self):
        """Combining order 1 and order 3 jets yields order 1"""
        low = Jet.variable(1.0, 0, 2, order=1)
        self.assertEqual((low + self.x).order, 1)
        self.assertEqual((low * self.x).order, 1)

    def test_jet_power(self):
        """x ** y through exp(y log x)"""
        f = self.x ** self.y
        self.assertAlmostEqual(f.value, 8.0)
        np.testing.assert_allclose(f.grad, [3 * 4.0, 8.0 * math.log(2.0)])


class TestElementaryFunctions(unittest.TestCase):
    """Chain rule through the elementary functions"""

    def test_composite_against_finite_differences(self):
        """Hessian of exp(sin(x) y) / (1 + y^2) matches central differences"""
        point = np.array([0.4, 0.7])

        def f(p):
            x, y = p
            return jet.exp(jet.sin(x) * y) / (1.0 + y * y)

        value = f(seed(point, 2))
        np.testing.assert_allclose(value.hess, finite_hessian(f, point), atol=1e-6)
        self.assertAlmostEqual(value.value, f(point))

    def test_dispatch_on_floats(self):
        """Module functions accept plain floats and arrays"""
        self.assertAlmostEqual(jet.cos(0.0), 1.0)
        np.testing.assert_allclose(jet.sqrt(np.array([4.0, 9.0])), [2.0, 3.0])

    def test_trigonometric_identity(self):
        """sin^2 + cos^2 has zero derivatives of every order"""
        x = Jet.variable(0.8, 0, 1, order=3)
        f = jet.sin(x) ** 2 + jet.cos(x) ** 2
        self.assertAlmostEqual(f.value, 1.0)
        self.assertAlmostEqual(f.grad[0], 0.0)
        self.assertAlmostEqual(f.hess[0, 0], 0.0)
        self.assertAlmostEqual(f.third[0, 0, 0], 0.0)

    def test_arctan_and_tan(self):
        """arctan(tan(x)) is the identity"""
        x = Jet.variable(0.3, 0, 1, order=3)
        f = jet.arctan(jet.tan(x))
        self.assertAlmostEqual(f.value, 0.3)
        self.assertAlmostEqual(f.grad[0], 1.0)
        self.assertAlmostEqual(f.hess[0, 0], 0.0, places=10)
        self.assertAlmostEqual(f.third[0, 0, 0], 0.0, places=9)

    def test_domain_errors(self):
        """log and sqrt refuse values outside their domain"""
        x = Jet.variable(-1.0, 0, 1)
        with self.assertRaises(EvaluationError):
            jet.log(x)
        with self.assertRaises(EvaluationError):
            jet.sqrt(x)

    def test_sqrt_derivatives(self):
        """sqrt(x) at 4: 1/4, -1/32, 3/256"""
        x = Jet.variable(4.0, 0, 1, order=3)
        f = jet.sqrt(x)
        self.assertAlmostEqual(f.grad[0], 0.25)
        self.assertAlmostEqual(f.hess[0, 0], -1 / 32)
        self.assertAlmostEqual(f.third[0, 0, 0], 3 / 256)


class TestJetArrays(unittest.TestCase):
    """Packing nested jets into TensorJets"""

    def test_seed_order_zero(self):
        """Order 0 seeds are plain floats"""
        values = seed([1, 2], 0)
        self.assertEqual(values, [1.0, 2.0])

    def test_mixed_entries(self):
        """Constants get zero derivatives next to jet entries"""
        x, y = seed([1.0, 2.0], 2)
        tj = jet_array([[x * y, 0.0], [0.0, 1]], 2, 2)
        self.assertIsInstance(tj, TensorJet)
        self.assertEqual(tj.shape, (2, 2))
        self.assertEqual(tj.order, 2)
        np.testing.assert_allclose(tj.grad[0, 0], [2.0, 1.0])
        np.testing.assert_allclose(tj.grad[1, 1], [0.0, 0.0])
        np.testing.assert_allclose(tj.hess[0, 0], [[0.0, 1.0], [1.0, 0.0]])

    def test_lower_order_entry_rejected(self):
        """An entry carrying fewer derivatives than requested is an error"""
        x = Jet.variable(1.0, 0, 1, order=1)
        with self.assertRaises(EvaluationError):
            jet_array([x], 1, 2)

    def test_non_numeric_entry_rejected(self):
        """Strings are not tensor components"""
        with self.assertRaises(EvaluationError):
            jet_array(["a"], 1, 1)

    def test_truncation(self):
        """truncated drops derivative parts above the requested order"""
        x, = seed([1.0], 3)
        tj = jet_array([x * x], 1, 3).truncated(1)
        self.assertEqual(tj.order, 1)
        self.assertIsNone(tj.hess)


if __name__ == '__main__':
    unittest.main()
