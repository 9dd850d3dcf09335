from pydantic import BaseModel

from app.application.reports import CheckResult, Report
from app.application.run_config import RunConfig
from app.domain.free_prob import SandwichCovariance, moment_pairing_oracle, semicircular_moment
from app.domain.module import OperatorMatrix
from app.infrastructure.io.json_codec import OperatorJson, encode_operator


class MomentsResult(BaseModel):
    order: int
    recursion: OperatorJson
    oracle: OperatorJson
    deviation: float


def compute_moments(cov: SandwichCovariance, coeffs: list[OperatorMatrix], config: RunConfig) -> Report:
    """E(X b_1 X ... b_{m-1} X) by the first-pairing recursion and by the pairing sum.

    Raises:
        OrderLimitError: If m = len(coeffs) + 1 exceeds 12.
        DimensionError: If the coefficients and the covariance disagree on (d, n).
    """
    recursion = semicircular_moment(cov, coeffs)
    oracle = moment_pairing_oracle(cov, coeffs)
    deviation = (recursion - oracle).max_abs() / max(1.0, recursion.max_abs())
    result = MomentsResult(
        order=len(coeffs) + 1,
        recursion=encode_operator(recursion),
        oracle=encode_operator(oracle),
        deviation=deviation,
    )
    check = CheckResult(
        name="moment-oracle",
        trials=1,
        max_deviation=deviation,
        passed=deviation <= config.tol,
        wall_time_s=0.0,
    )
    return Report(command="moments", config=config.model_dump(), checks=[check], result=result.model_dump(mode="json"))
