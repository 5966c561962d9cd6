"""
Tests for the rate function of the block density.
"""

import math

import pytest

from tasep_ldp.cgf import cgf_closed, cgf_derivative
from tasep_ldp.core import OutOfRange
from tasep_ldp.ldp import (
    Piece,
    default_z_grid,
    kink_diagnostics,
    phase_points,
    piece_at,
    rate_closed,
    rate_derivative,
    rate_numeric,
    second_kink,
)
from tasep_ldp.params import Params, make_params

CASE_A = make_params("3/10", "1/5")
CASE_B = make_params("7/10", "0")
CASE_C = make_params("7/10", "3/5")
ALL_CASES = [CASE_A, CASE_B, CASE_C]
INTERIOR = [0.05 + 0.01 * k for k in range(91)]


class TestClosedForm:
    """Test the closed-form rate function."""

    def test_case_c_low_density(self) -> None:
        """Test I(0.2) = 0.400579 on the first piece."""
        point = rate_closed(CASE_C, 0.2)
        assert point.piece is Piece.P1
        assert point.value == pytest.approx(0.400579, abs=1e-6)

    def test_case_b_examples(self) -> None:
        """Test I(0.25) and I(1) = log 2 at maximal current."""
        assert rate_closed(CASE_B, 0.25).value == pytest.approx(0.255460, abs=1e-6)
        end = rate_closed(CASE_B, 1.0)
        assert end.piece is Piece.P3
        assert end.value == pytest.approx(math.log(2))

    def test_middle_piece(self) -> None:
        """Test 2[z log z + (1-z) log(1-z)] - log c."""
        z = 0.4
        expected = 2 * (z * math.log(z) + (1 - z) * math.log(1 - z)) + math.log(4)
        point = rate_closed(CASE_B, z)
        assert point.piece is Piece.P2
        assert point.value == pytest.approx(expected, rel=1e-12)

    def test_product_regime_is_relative_entropy(self) -> None:
        """Test I(z) = H(z | alpha) for independent sites."""
        for z in (0.0, 0.1, 0.6, 1.0):
            expected = 0.0
            if z > 0:
                expected += z * math.log(z / 0.3)
            if z < 1:
                expected += (1 - z) * math.log((1 - z) / 0.7)
            point = rate_closed(CASE_A, z)
            assert point.piece is Piece.P1
            assert point.value == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("p", ALL_CASES)
    def test_zero_at_typical_density(self, p: Params) -> None:
        """Test I = 0 at the typical density and I > 0 elsewhere."""
        typical = float(p.typical_density)
        assert rate_closed(p, typical).value == pytest.approx(0.0, abs=1e-12)
        for z in INTERIOR:
            if abs(z - typical) > 0.02:
                assert rate_closed(p, z).value > 0.0

    @pytest.mark.parametrize("p", ALL_CASES)
    def test_convex(self, p: Params) -> None:
        """Test non-negative second differences."""
        values = [rate_closed(p, z).value for z in INTERIOR]
        for k in range(1, len(values) - 1):
            assert values[k - 1] - 2 * values[k] + values[k + 1] >= -1e-12

    def test_pieces(self) -> None:
        """Test the piece boundaries 1 - alpha and 1/(1 + lambda1)."""
        assert second_kink(CASE_C) == pytest.approx(0.4)
        assert second_kink(CASE_B) == pytest.approx(0.5)
        assert piece_at(CASE_C, 0.3) is Piece.P1
        assert piece_at(CASE_C, 0.35) is Piece.P2
        assert piece_at(CASE_C, 0.4) is Piece.P2
        assert piece_at(CASE_C, 0.41) is Piece.P3
        assert piece_at(CASE_A, 0.9) is Piece.P1

    def test_theta_star_inverts_derivative(self) -> None:
        """Test Lambda'(theta*) = z."""
        for z in (0.2, 0.35, 0.5, 0.8):
            point = rate_closed(CASE_C, z)
            assert point.theta_star == pytest.approx(rate_derivative(CASE_C, z))
            assert cgf_derivative(CASE_C, point.theta_star) == pytest.approx(z)

    def test_legendre_inequality(self) -> None:
        """Test I(z) >= z theta - Lambda(theta) for every theta."""
        for z in (0.1, 0.33, 0.6, 0.9):
            value = rate_closed(CASE_C, z).value
            for theta in (-3.0, -1.0, 0.0, 0.5, 2.0):
                assert value >= z * theta - cgf_closed(CASE_C, theta).value - 1e-12

    def test_out_of_range(self) -> None:
        """Test that z outside [0, 1] is rejected."""
        with pytest.raises(OutOfRange, match="z must lie in"):
            rate_closed(CASE_C, 1.5)
        with pytest.raises(OutOfRange):
            rate_closed(CASE_C, -0.1)


class TestNumeric:
    """Test the numeric Legendre transform."""

    @pytest.mark.parametrize("p", ALL_CASES)
    def test_matches_closed_form(self, p: Params) -> None:
        """Test agreement within 1e-6 on (0.05, 0.95)."""
        for z in INTERIOR:
            closed = rate_closed(p, z)
            numeric = rate_numeric(p, z)
            assert numeric.value == pytest.approx(closed.value, abs=1e-6)
            assert numeric.piece is closed.piece

    def test_theta_star(self) -> None:
        """Test that the root is the closed-form maximiser."""
        numeric = rate_numeric(CASE_C, 0.8)
        assert numeric.theta_star == pytest.approx(
            rate_closed(CASE_C, 0.8).theta_star, abs=1e-9
        )

    def test_endpoints_rejected(self) -> None:
        """Test that z = 0 and z = 1 need the closed form."""
        with pytest.raises(OutOfRange, match=r"\(0, 1\)"):
            rate_numeric(CASE_C, 0.0)
        with pytest.raises(OutOfRange):
            rate_numeric(CASE_C, 1.0)


class TestPhasePoints:
    """Test the non-analytic points of the rate function."""

    def test_case_c(self) -> None:
        """Test kinks at 1 - alpha and 1 - rho."""
        report = phase_points(CASE_C)
        assert report.kinks == pytest.approx((0.3, 0.4))
        assert report.verified

    def test_case_b(self) -> None:
        """Test kinks at 1 - alpha and 1/2."""
        report = phase_points(CASE_B)
        assert report.kinks == pytest.approx((0.3, 0.5))
        assert report.verified

    def test_product_regime(self) -> None:
        """Test that independent sites give an analytic rate function."""
        report = phase_points(CASE_A)
        assert report.kinks == ()
        assert report.verified

    def test_diagnostics(self) -> None:
        """Test C^1 behaviour with a curvature jump at the first kink."""
        diagnostic = kink_diagnostics(CASE_C, 0.3)
        assert diagnostic.value_gap < 1e-4
        assert diagnostic.slope_gap < 1e-4
        assert diagnostic.curvature_jump > 0.25
        assert diagnostic.is_kink

    def test_smooth_point_is_not_a_kink(self) -> None:
        """Test that an interior point of a piece shows no jump."""
        diagnostic = kink_diagnostics(CASE_C, 0.6)
        assert not diagnostic.is_kink
        assert len(diagnostic.failed_criteria) == 1
        assert diagnostic.failed_criteria[0].startswith("curvature jump")

    def test_kinks_close_to_zero(self) -> None:
        """Test strongly curved kinks at 1/100 and 1/50."""
        report = phase_points(make_params("99/100", "49/50"))
        assert report.kinks == pytest.approx((0.01, 0.02))
        for diagnostic in report.diagnostics:
            assert diagnostic.slope_gap < 1e-6
            assert diagnostic.failed_criteria == []
        assert report.verified

    def test_case_b_is_limit_of_case_c(self) -> None:
        """Test that rho -> 1/2 from above approaches maximal current."""
        near = make_params("7/10", "5001/10000")
        for z in (0.1, 0.3, 0.45, 0.6, 0.9):
            assert rate_closed(near, z).value == pytest.approx(
                rate_closed(CASE_B, z).value, abs=1e-2
            )


class TestZGrid:
    """Test the default density grid."""

    def test_values(self) -> None:
        """Test k/(steps + 1)."""
        assert default_z_grid(3) == [0.25, 0.5, 0.75]
        grid = default_z_grid(99)
        assert len(grid) == 99
        assert grid[0] == pytest.approx(0.01)
        assert grid[-1] == pytest.approx(0.99)

    def test_invalid(self) -> None:
        """Test that steps < 1 is rejected."""
        with pytest.raises(ValueError, match="steps must be >= 1"):
            default_z_grid(0)
