"""
Verification Reports
--------------------
Pass/fail records for symbolic identity checks.
"""

from typing import Any, Dict, Iterable, List, Optional

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    """Outcome of one identity check."""

    name: str
    passed: bool
    residual: Optional[str] = None
    detail: Optional[str] = None
    sign: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(exclude_none=True)


class VerificationReport(BaseModel):
    """Ordered collection of check results under a title."""

    title: str
    results: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

    def add(self, result: CheckResult) -> CheckResult:
        self.results.append(result)
        return result

    def extend(self, results: Iterable[CheckResult]) -> None:
        self.results.extend(results)

    def merge(self, other: 'VerificationReport') -> None:
        self.results.extend(other.results)

    def summary(self) -> Dict[str, int]:
        return {
            'total': len(self.results),
            'passed': sum(1 for r in self.results if r.passed),
            'failed': len(self.failures),
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            'title': self.title,
            'passed': self.passed,
            'summary': self.summary(),
            'results': [r.to_dict() for r in self.results],
        }


def identity_check(name: str, residual, detail: Optional[str] = None) -> CheckResult:
    """Build a CheckResult from a residual RatFunc that should vanish."""
    if residual.is_zero():
        return CheckResult(name=name, passed=True, detail=detail)
    return CheckResult(name=name, passed=False, residual=str(residual), detail=detail)
