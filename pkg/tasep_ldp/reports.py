"""
Verification reports.

A CheckReport collects RelationChecks, each of which tallies how many
instances of one identity were tested and where the first failure occurred.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from .core import logger

_log = logger.getChild("reports")


@dataclass
class RelationCheck:
    """Outcome of checking one identity over many instances."""

    name: str
    passed: bool = True
    checked: int = 0
    first_failure: Optional[str] = None
    detail: str = ""

    def record(self, ok: bool, where: str = "") -> bool:
        """Record one instance; the first failing location is kept."""
        self.checked += 1
        if not ok:
            if self.first_failure is None:
                self.first_failure = where
                _log.warning("check %s failed at %s", self.name, where)
            self.passed = False
        return ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "first_failure": self.first_failure or "",
            "detail": self.detail,
        }


class CheckReport:
    """An ordered collection of relation checks."""

    def __init__(self, title: str, checks: Optional[List[RelationCheck]] = None):
        self.title = title
        self.checks: List[RelationCheck] = list(checks or [])

    def add_check(self, check: RelationCheck) -> RelationCheck:
        """Append a check and return it."""
        self.checks.append(check)
        return check

    def new_check(self, name: str, detail: str = "") -> RelationCheck:
        """Create, append and return an empty check."""
        return self.add_check(RelationCheck(name=name, detail=detail))

    def extend(self, other: "CheckReport") -> None:
        """Append every check of another report, prefixing its title."""
        for check in other.checks:
            check.name = f"{other.title}: {check.name}"
            self.checks.append(check)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def verify(self) -> bool:
        """Return True iff every check passed."""
        return self.passed

    def failures(self) -> List[RelationCheck]:
        return [check for check in self.checks if not check.passed]

    def first_failure(self, name: str) -> Optional[str]:
        """Return the first failing location of the named check."""
        for check in self.checks:
            if check.name == name:
                return check.first_failure
        raise KeyError(name)

    def to_rows(self) -> List[Dict[str, Any]]:
        return [check.to_dict() for check in self.checks]

    def __repr__(self) -> str:
        status = "passed" if self.passed else f"{len(self.failures())} failed"
        return f"CheckReport({self.title}, {len(self.checks)} checks, {status})"


__all__ = ["RelationCheck", "CheckReport"]
