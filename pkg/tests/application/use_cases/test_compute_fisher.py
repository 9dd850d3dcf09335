import numpy as np
import pytest

from app.application.run_config import RunConfig
from app.application.use_cases import compute_fisher
from app.core.errors import NotInvertibleError
from app.domain.algebra import SpectrumAlgebraElement
from app.domain.free_prob import OperatorTrace, SandwichCovariance
from app.domain.module import OperatorMatrix
from app.domain.sampling import random_invertible_operator


def test_fisher_of_diagonal_covariance() -> None:
    """A = diag(1, 2), B = I gives 0.75."""
    a = OperatorMatrix.diagonal([SpectrumAlgebraElement.scalar(1, 1), SpectrumAlgebraElement.scalar(2, 1)])
    cov = SandwichCovariance(a, OperatorMatrix.identity(2, 1))

    report = compute_fisher(cov, OperatorTrace.uniform(1), RunConfig.build(d=2, n=1, max_order=3))

    assert report.passed
    assert [check.name for check in report.checks] == ["fisher-closed-form", "conjugate-variable"]
    assert report.result is not None
    assert report.result["numeric"][0] == pytest.approx(0.75)
    assert report.result["closed_form"] == pytest.approx([0.75, 0.0])
    assert report.result["max_order_checked"] == 3


def test_fisher_random_covariance(rng: np.random.Generator) -> None:
    cov = SandwichCovariance(random_invertible_operator(rng, 2, 2), random_invertible_operator(rng, 2, 2))

    report = compute_fisher(cov, OperatorTrace.uniform(2), RunConfig.build(max_order=3))

    assert report.passed
    assert set(report.result["condition_deviations"]) == {"k1", "k2", "k3"}


def test_fisher_singular_covariance() -> None:
    cov = SandwichCovariance(OperatorMatrix.zeros(1, 1), OperatorMatrix.identity(1, 1))
    with pytest.raises(NotInvertibleError) as exc_info:
        compute_fisher(cov, OperatorTrace.uniform(1), RunConfig.build(d=1, n=1))
    assert exc_info.value.point == 1
