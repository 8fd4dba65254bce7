import json
import math
import os
import tempfile
import unittest

import numpy as np
from ddt import data, ddt, unpack
from jsonschema import exceptions, validate

from wheelbounds.cell_verifier import (
    VerificationReport,
    VerificationRun,
    build_grid,
    extrapolate,
    field_conditions_check,
    measure,
    measure_dual_resistivity,
    measure_effective,
    read_report,
    report_schema,
    solve_embedded,
    verify_dual,
    verify_homogeneous,
    verify_wheel,
    write_report,
)
from wheelbounds.cond_bounds import DetCondition, FieldSpec, optimal_fields
from wheelbounds.errors import BadContrastError, IllConditionedFitError, ValidationError
from wheelbounds.phases import make_conductors, make_fractions, make_resistors
from wheelbounds.wheel_geometry import PHASE_K2, PhaseMap, build_wheel, rasterize_sector

RUN_SLOW = os.environ.get("WHEELS_RUN_SLOW") == "1"


def _homogeneous_map(nr=16, ntheta=64):
    return PhaseMap(np.full((nr, ntheta), PHASE_K2, dtype=np.int8))


@ddt
class TestCellVerifier(unittest.TestCase):
    """Tests for the polar finite-volume verifier on small grids."""

    K = make_conductors(1.0, 2.0)

    @classmethod
    def setUpClass(cls) -> None:
        super().setUpClass()
        wheel = build_wheel(cls.K, make_fractions(0.14, 0.25))
        cls.wheel_map = rasterize_sector(wheel, cls.K, 8, 32, 128, 1e3)

    def test_grid(self):
        """Test the uniform inner and geometric outer rings."""
        grid = build_grid(16, 64, 4.0)
        self.assertEqual(grid.n_inner, 16)
        self.assertAlmostEqual(grid.edges[16], 1.0, places=14)
        self.assertAlmostEqual(grid.r_out, 4.0, places=12)
        self.assertTrue(np.all(np.diff(grid.edges) > 0))
        self.assertEqual(grid.size, 1 + (grid.n_rings - 1) * 64)
        outer = np.diff(grid.edges)[16:]
        self.assertTrue(np.allclose(outer[1:] / outer[:-1], outer[1] / outer[0]))

    def test_homogeneous_disk(self):
        """Test that a disk of pure k2 measures k2."""
        report = verify_homogeneous(self.K, 16, 64, rtol=1e-12)
        self.assertLess(report.rel_err, 1e-6)
        self.assertEqual(report.kind, "homogeneous")
        self.assertGreater(report.iterations, 0)

    def test_homogeneous_effective(self):
        """Test measure_effective on a homogeneous map."""
        k_num = measure_effective(_homogeneous_map(), self.K, 10.0, rtol=1e-12)
        self.assertAlmostEqual(k_num, 2.0, delta=1e-6)

    def test_homogeneous_dual(self):
        """Test that a homogeneous map of resistivity rho2 measures rho2."""
        rho = measure_dual_resistivity(_homogeneous_map(), make_resistors(1.0, 2.0), 10.0, rtol=1e-12)
        self.assertAlmostEqual(rho, 2.0, delta=1e-6)

    @data("x", "y")
    def test_no_dipole_in_matching_medium(self, loading):
        """Test that both loadings see no dipole when the medium matches the disk."""
        sector = solve_embedded(_homogeneous_map(), self.K, 10.0, 2.0, rtol=1e-12, loading=loading)
        self.assertLess(abs(sector.dipole_amplitude), 1e-6)
        self.assertLess(sector.residual_norm, 1e-11)

    def test_energy_identity(self):
        """Test that the stored energy equals the work done on the outer rim."""
        sector = solve_embedded(self.wheel_map, self.K, 1e3, 5.0, rtol=1e-12)
        self.assertLess(abs(sector.energy - sector.boundary_work) / sector.boundary_work, 1e-7)

    def test_dipole_changes_sign(self):
        """Test that the dipole amplitude brackets the effective conductivity."""
        low = solve_embedded(self.wheel_map, self.K, 1e3, 1.0).dipole_amplitude
        high = solve_embedded(self.wheel_map, self.K, 1e3, 50.0).dipole_amplitude
        self.assertLess(low * high, 0.0)

    def test_high_contrast_converges(self):
        """Test that conjugate gradients converge with the ideal phase at contrast 1e6."""
        sector = solve_embedded(self.wheel_map, self.K, 1e6, 39.0 / 7.0, rtol=1e-10)
        self.assertLess(sector.residual_norm, 1e-8)
        self.assertLess(sector.iterations, 50 * math.sqrt(sector.system.grid.size))

    @data((2.0, 2.0, 4.0, "x"), (1e3, 0.0, 4.0, "x"), (1e3, 2.0, 1.5, "x"), (1e3, 2.0, 4.0, "z"))
    @unpack
    def test_bad_embedding(self, contrast, k_star, r_out, loading):
        """Test the preconditions of the embedded solve."""
        with self.assertRaises(ValidationError):
            solve_embedded(self.wheel_map, self.K, contrast, k_star, r_out=r_out, loading=loading)

    def test_bad_contrast_type(self):
        """Test that the ideal stand-in must exceed k2."""
        with self.assertRaises(BadContrastError):
            verify_wheel(self.K, make_fractions(0.14, 0.25), 8, 32, 128, 1.5)

    def test_coarse_wheel(self):
        """Test a coarse verification run end to end."""
        report, measurement = verify_wheel(self.K, make_fractions(0.14, 0.25), 16, 32, 256, 1e3)
        self.assertTrue(math.isfinite(report.k_num))
        self.assertGreater(report.k_num, 2.0)
        self.assertLess(report.k_num, 10.0)
        self.assertEqual(report.grid, (32, 256))
        self.assertEqual(report.kind, "W2_13")
        self.assertEqual(measurement.k_num, report.k_num)
        self.assertGreater(measurement.secant_steps, 0)
        validate(report.as_dict(), report_schema())

    def test_homogeneous_fields(self):
        """Test that a homogeneous disk carries the identity field."""
        measurement = measure(_homogeneous_map(), (1.0, 2.0, 2.0), (2.0, 4.0), rtol=1e-12)
        spec = FieldSpec(2, 2.0, DetCondition.NON_NEGATIVE, np.eye(2))
        report = field_conditions_check(measurement.sector, [spec], _homogeneous_map().phases, rtol=1e-12)
        stats = report.for_phase(2)
        self.assertAlmostEqual(stats.median_trace, 2.0, delta=1e-2)
        self.assertLess(stats.median_deviation, 1e-2)
        self.assertEqual(stats.det_violation_rate, 0.0)
        self.assertGreater(stats.cells, 0)
        self.assertEqual(len(report.as_dict()["phases"]), 1)


@ddt
class TestExtrapolation(unittest.TestCase):
    """Tests for the extrapolation of a verification series."""

    def test_spike_series(self):
        """Test that k_inf and the 1/n coefficient of an exact series are recovered."""
        runs = [VerificationRun(n, 1e6, 256, 3.0 + 2.0 / n) for n in (16, 32, 64)]
        fit = extrapolate(runs)
        self.assertAlmostEqual(fit.k_inf, 3.0, places=10)
        self.assertAlmostEqual(fit.coefficients["per_spike"], 2.0, places=8)
        self.assertEqual(set(fit.coefficients), {"per_spike"})
        self.assertLess(fit.residual, 1e-12)
        self.assertEqual(fit.as_dict()["n_runs"], 3)

    def test_two_parameter_series(self):
        """Test a series varying both spikes and contrast."""
        pairs = [(16, 1e3), (32, 1e3), (16, 1e4), (64, 1e5)]
        runs = [VerificationRun(n, c, 128, 5.0 - 1.0 / n + 40.0 / c) for n, c in pairs]
        fit = extrapolate(runs)
        self.assertAlmostEqual(fit.k_inf, 5.0, places=8)
        self.assertAlmostEqual(fit.coefficients["per_contrast"], 40.0, places=5)

    def test_constant_series(self):
        """Test that a series where nothing varies returns the mean."""
        runs = [VerificationRun(32, 1e6, 128, k) for k in (1.0, 2.0, 3.0)]
        self.assertAlmostEqual(extrapolate(runs).k_inf, 2.0, places=12)

    @data(
        [(16, 1e6, 128), (32, 1e6, 128)],
        [(16, 16.0, 128), (32, 32.0, 128), (64, 64.0, 128)],
        [(16, 1e3, 64), (32, 1e4, 128), (64, 1e5, 256)],
    )
    def test_ill_conditioned(self, settings):
        """Test that too few or collinear runs are rejected."""
        runs = [VerificationRun(n, c, nr, 1.0 + 1.0 / n) for n, c, nr in settings]
        with self.assertRaises(IllConditionedFitError):
            extrapolate(runs)


class TestReports(unittest.TestCase):
    """Tests for verification report files."""

    REPORT = VerificationReport(
        k_num=5.6, bound=39.0 / 7.0, rel_err=0.0051, grid=(256, 1024), n_spikes=64, contrast=1e6, iterations=1200
    )

    def test_schema(self):
        """Test that reports satisfy the shipped schema and that broken ones do not."""
        validate(self.REPORT.as_dict(), report_schema())
        broken = self.REPORT.as_dict()
        del broken["rel_err"]
        with self.assertRaises(exceptions.ValidationError):
            validate(broken, report_schema())

    def test_write_read(self):
        """Test that a written report reads back unchanged."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "report.json")
            write_report(self.REPORT, path)
            self.assertEqual(read_report(path), self.REPORT)

    def test_read_incomplete(self):
        """Test that a file without the required keys is rejected."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "report.json")
            with open(path, "w", encoding="utf-8") as f:
                json.dump({"k_num": 1.0}, f)
            with self.assertRaises(ValidationError):
                read_report(path)


@ddt
class TestCoarseAttainment(unittest.TestCase):
    """Fast brute-force runs of every wheel kind at loose tolerances."""

    K = make_conductors(1.0, 2.0)

    @data((0.3, "W2_13_1"), (0.14, "W2_13"), (0.1, "W2_123"))
    @unpack
    def test_wheel_near_bound(self, m1, kind):
        """Test that 16 spikes on a 64 x 256 grid at contrast 1e6 converge and land near the bound."""
        report, _ = verify_wheel(self.K, make_fractions(m1, 0.25), 16, 64, 256, 1e6)
        self.assertEqual(report.kind, kind)
        self.assertLess(report.rel_err, 0.35)
        self.assertGreater(report.k_num, 0.9 * report.bound)

    def test_refinement_narrows_gap(self):
        """Test that doubling spikes and angular cells does not widen the gap of the small-m1 wheel."""
        f = make_fractions(0.1, 0.25)
        coarse, _ = verify_wheel(self.K, f, 16, 64, 256, 1e4)
        fine, _ = verify_wheel(self.K, f, 32, 64, 512, 1e4)
        self.assertLess(fine.rel_err, coarse.rel_err + 0.01)

    def test_dual_wheel(self):
        """Test that the insulating-trapezoid wheel lands near the dual resistivity bound."""
        report = verify_dual(make_resistors(1.0, 2.0), make_fractions(0.1, 0.25), 16, 64, 256, 1e4)
        self.assertEqual(report.kind, "dual")
        self.assertTrue(math.isfinite(report.k_num))
        self.assertLess(report.rel_err, 0.35)


@unittest.skipUnless(RUN_SLOW, "Full-resolution runs; set WHEELS_RUN_SLOW=1.")
@ddt
class TestAcceptance(unittest.TestCase):
    """Full-resolution verification of the wheel constructions."""

    K = make_conductors(1.0, 2.0)

    @data(0.3, 0.14, 0.1)
    def test_reference_points(self, m1):
        """Test that 64 spikes on a 256 x 1024 grid come within 2% of the bound."""
        report, _ = verify_wheel(self.K, make_fractions(m1, 0.25), 64, 256, 1024, 1e6)
        self.assertLess(report.rel_err, 0.02)
        validate(report.as_dict(), report_schema())

    def test_dual_reference(self):
        """Test that the dual wheel at the small-m1 reference comes within 3% of the dual bound."""
        report = verify_dual(make_resistors(1.0, 2.0), make_fractions(0.1, 0.25), 64, 256, 1024, 1e6)
        self.assertLess(report.rel_err, 0.03)

    def test_series_closes_gap(self):
        """Test that the gap shrinks as spikes are refined and the extrapolated value is closer still."""
        f = make_fractions(0.14, 0.25)
        reports = [verify_wheel(self.K, f, n, 256, 1024, 1e6)[0] for n in (16, 32, 64)]
        gaps = [r.rel_err for r in reports]
        self.assertLess(gaps[1], gaps[0])
        self.assertLess(gaps[2], gaps[1])
        fit = extrapolate([VerificationRun(n, 1e6, 256, r.k_num) for n, r in zip((16, 32, 64), reports)])
        self.assertLess(abs(fit.k_inf - reports[0].bound) / reports[0].bound, gaps[2])

    def test_optimal_fields(self):
        """Test the hub, spike and ideal-phase fields of the intermediate wheel."""
        f = make_fractions(0.14, 0.25)
        phase_map = rasterize_sector(build_wheel(self.K, f), self.K, 64, 256, 1024, 1e6)
        _, measurement = verify_wheel(self.K, f, 64, 256, 1024, 1e6, phase_map=phase_map)
        report = field_conditions_check(measurement.sector, optimal_fields(self.K, f), phase_map.phases)
        self.assertLess(report.for_phase(2).median_deviation, 0.05)
        self.assertLessEqual(abs(report.for_phase(1).median_det_ratio), 0.05)
        self.assertLessEqual(report.for_phase(3).median_norm, 10.0 * 2.0 / 1e6)


if __name__ == "__main__":
    unittest.main()
