import numpy as np
import pytest

from app.application.run_config import RunConfig
from app.application.use_cases import compute_moments
from app.core.errors import OrderLimitError
from app.domain.free_prob import SandwichCovariance
from app.domain.module import OperatorMatrix
from app.domain.sampling import random_operator


def test_moments_scalar_catalan() -> None:
    one = OperatorMatrix.identity(1, 1)
    cov = SandwichCovariance(one, one)

    report = compute_moments(cov, [one] * 5, RunConfig.build(d=1, n=1))

    assert report.passed
    assert report.checks[0].name == "moment-oracle"
    assert report.result is not None
    assert report.result["order"] == 6
    assert report.result["recursion"] == [[[[5.0, 0.0]]]]
    assert report.result["oracle"] == [[[[5.0, 0.0]]]]


def test_moments_random_agree(rng: np.random.Generator) -> None:
    cov = SandwichCovariance(random_operator(rng, 2, 2), random_operator(rng, 2, 2))
    coeffs = [random_operator(rng, 2, 2) for _ in range(5)]

    report = compute_moments(cov, coeffs, RunConfig.build())

    assert report.passed
    assert report.result["deviation"] <= 1e-9


def test_moments_order_limit() -> None:
    one = OperatorMatrix.identity(1, 1)
    with pytest.raises(OrderLimitError):
        compute_moments(SandwichCovariance(one, one), [one] * 12, RunConfig.build(d=1, n=1))
