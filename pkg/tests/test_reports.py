"""
Tests for verification reports.
"""

import pytest

from tasep_ldp.reports import CheckReport, RelationCheck


class TestRelationCheck:
    """Test tallying of one identity."""

    def test_all_pass(self) -> None:
        """Test a check whose every instance holds."""
        check = RelationCheck("identity")
        for k in range(5):
            assert check.record(True, f"k={k}")
        assert check.passed
        assert check.checked == 5
        assert check.first_failure is None

    def test_first_failure_is_kept(self) -> None:
        """Test that only the first failing location is stored."""
        check = RelationCheck("identity")
        check.record(True, "a")
        check.record(False, "b")
        check.record(False, "c")
        assert not check.passed
        assert check.checked == 3
        assert check.first_failure == "b"

    def test_to_dict(self) -> None:
        """Test the row form of a check."""
        check = RelationCheck("identity", detail="k <= 3")
        check.record(True)
        assert check.to_dict() == {
            "check": "identity",
            "passed": True,
            "checked": 1,
            "first_failure": "",
            "detail": "k <= 3",
        }


class TestCheckReport:
    """Test collections of checks."""

    def test_passed_and_failures(self) -> None:
        """Test aggregate pass/fail status."""
        report = CheckReport("demo")
        report.new_check("good").record(True)
        bad = report.new_check("bad")
        bad.record(False, "here")
        assert not report.passed
        assert not report.verify()
        assert report.failures() == [bad]
        assert report.first_failure("bad") == "here"
        assert report.first_failure("good") is None

    def test_unknown_check(self) -> None:
        """Test lookup of a missing check."""
        with pytest.raises(KeyError):
            CheckReport("demo").first_failure("missing")

    def test_extend_prefixes_names(self) -> None:
        """Test merging reports."""
        inner = CheckReport("inner")
        inner.new_check("x").record(True)
        outer = CheckReport("outer")
        outer.extend(inner)
        assert [check.name for check in outer.checks] == ["inner: x"]
        assert outer.passed

    def test_repr(self) -> None:
        """Test the summary representation."""
        report = CheckReport("demo")
        report.new_check("x").record(True)
        assert repr(report) == "CheckReport(demo, 1 checks, passed)"
        assert len(report.to_rows()) == 1
