import math
import unittest

from ddt import data, ddt, unpack

from wheelbounds.errors import (
    DegenerateFractionsError,
    NonPositiveError,
    OutOfSimplexError,
    UnorderedError,
    ValidationError,
)
from wheelbounds.phases import (
    Fractions,
    Regime,
    classify_regime,
    make_conductors,
    make_fractions,
    make_resistors,
    thresholds,
)


@ddt
class TestPhases(unittest.TestCase):
    """Tests for materials, fractions and regime selection."""

    K = make_conductors(1.0, 2.0)

    @data((0.0, 1.0), (-1.0, 2.0), (1.0, math.inf), (math.nan, 1.0))
    @unpack
    def test_non_positive_conductivity(self, k1, k2):
        """Test that conductivities must be positive and finite."""
        with self.assertRaises(NonPositiveError):
            make_conductors(k1, k2)

    def test_unordered_conductivity(self):
        """Test that k1 > k2 is rejected."""
        with self.assertRaisesRegex(UnorderedError, "ordered"):
            make_conductors(2.0, 1.0)

    def test_errors_are_value_errors(self):
        """Test that validation failures can be caught as ValueError."""
        with self.assertRaises(ValueError):
            make_resistors(3.0, 1.0)
        self.assertTrue(issubclass(OutOfSimplexError, ValidationError))

    @data((0.7, 0.4), (-0.1, 0.5), (0.5, -0.1))
    @unpack
    def test_out_of_simplex(self, m1, m2):
        """Test that fractions outside the simplex are rejected."""
        with self.assertRaises(OutOfSimplexError):
            make_fractions(m1, m2)

    def test_pure_ideal_phase(self):
        """Test that m1 = m2 = 0 is degenerate."""
        with self.assertRaises(DegenerateFractionsError):
            make_fractions(0.0, 0.0)

    def test_round_off_is_clipped(self):
        """Test that m3 never comes out negative from round-off."""
        f = make_fractions(0.7, 0.3000000000000001)
        self.assertEqual(f.m3, 0.0)

    def test_fractions_must_sum_to_one(self):
        """Test the direct constructor checks the sum."""
        with self.assertRaises(OutOfSimplexError):
            Fractions(0.2, 0.2, 0.2)

    def test_thresholds_reference(self):
        """Test m11 = 1/6 and m12 = 1/8 at k = (1, 2), m2 = 1/4."""
        m11, m12 = thresholds(self.K, 0.25)
        self.assertAlmostEqual(m11, 1.0 / 6.0, places=14)
        self.assertAlmostEqual(m12, 0.125, places=14)

    @data(0.0, 1.0)
    def test_thresholds_vanish_on_edges(self, m2):
        """Test that both thresholds vanish for m2 = 0 and m2 = 1."""
        self.assertEqual(thresholds(self.K, m2), (0.0, 0.0))

    @data(
        (0.3, Regime.LARGE_M1),
        (0.14, Regime.INTERMEDIATE),
        (0.1, Regime.SMALL_M1),
        (0.125, Regime.INTERMEDIATE),
        (0.0, Regime.SMALL_M1),
    )
    @unpack
    def test_classify_regime(self, m1, regime):
        """Test the regime at m2 = 0.25, ties going to the larger-m1 branch."""
        self.assertIs(classify_regime(self.K, make_fractions(m1, 0.25)), regime)

    def test_tie_at_m11(self):
        """Test that m1 == m11 is the large-m1 regime."""
        m11, _ = thresholds(self.K, 0.36)
        f = Fractions(m11, 0.36, 1.0 - m11 - 0.36)
        self.assertIs(classify_regime(self.K, f), Regime.LARGE_M1)

    def test_scaled_interior(self):
        """Test the fractions left inside an outer annulus of material 1."""
        f = make_fractions(0.3, 0.25).scaled_interior(0.1)
        self.assertAlmostEqual(f.m1, 0.2 / 0.9, places=14)
        self.assertAlmostEqual(f.m2, 0.25 / 0.9, places=14)
        self.assertAlmostEqual(f.m1 + f.m2 + f.m3, 1.0, places=14)

    def test_resistors_read_as_conductors(self):
        """Test that the dual set maps onto the primal one number for number."""
        c = make_resistors(1.0, 2.0).as_conductors()
        self.assertEqual((c.k1, c.k2), (1.0, 2.0))

    def test_regime_labels(self):
        """Test the printed branch names."""
        self.assertEqual([r.label for r in Regime], ["B1", "B2", "B3"])


if __name__ == "__main__":
    unittest.main()
