import logging
import time
from collections.abc import Callable
from datetime import UTC, datetime
from typing import Any

from pydantic import BaseModel, Field, computed_field

from app.core.errors import HilmodError

logger = logging.getLogger(__name__)


class CheckResult(BaseModel):
    """Outcome of one seeded property check."""

    name: str
    trials: int
    max_deviation: float
    passed: bool
    wall_time_s: float
    failure: str | None = None


class Report(BaseModel):
    """Machine-readable result of a command; passed iff every check passed."""

    command: str
    config: dict[str, Any]
    checks: list[CheckResult] = Field(default_factory=list)
    result: dict[str, Any] | None = None
    generated_at: datetime = Field(default_factory=lambda: datetime.now(UTC))

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_json(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


Trial = Callable[[int], float]


def run_check(name: str, trials: int, tol: float, trial: Trial) -> CheckResult:
    """Run trial(0..trials-1); each returns a deviation that must stay <= tol.

    A HilmodError raised by a trial fails the check and is recorded with the
    trial index; the remaining trials are skipped and not counted.
    """
    started = time.perf_counter()
    worst = 0.0
    failure: str | None = None
    run = 0
    for index in range(trials):
        run = index + 1
        try:
            deviation = trial(index)
        except HilmodError as e:
            failure = f"trial {index}: {type(e).__name__}: {e.message}"
            if e.details:
                failure += f" ({e.details})"
            break
        worst = max(worst, deviation)
        if deviation > tol and failure is None:
            failure = f"trial {index}: deviation {deviation:.3e} exceeds {tol:.3e}"
    elapsed = time.perf_counter() - started
    result = CheckResult(
        name=name,
        trials=run,
        max_deviation=worst,
        passed=failure is None,
        wall_time_s=round(elapsed, 6),
        failure=failure,
    )
    if result.passed:
        logger.info("Check %s passed (%d trials, max deviation %.3e)", name, run, worst)
    else:
        logger.warning("Check %s failed: %s", name, failure)
    return result
