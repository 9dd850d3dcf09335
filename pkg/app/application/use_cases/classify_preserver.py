import logging

from pydantic import BaseModel

from app.application.reports import CheckResult, Report
from app.application.run_config import RunConfig
from app.domain.preserver import (
    BlackBoxPreserver,
    PreserverKind,
    classify,
    reconstruction_residual,
    surjectivity_invertibility_check,
)
from app.infrastructure.io.json_codec import OperatorJson, encode_operator

logger = logging.getLogger(__name__)


class ClassifyResult(BaseModel):
    """Canonical form recovered from a generator table."""

    kind: PreserverKind
    left: OperatorJson
    right: OperatorJson
    residual: float
    surjective: bool


def classify_preserver(phi: BlackBoxPreserver, config: RunConfig) -> Report:
    """Classify a black-box rank-one preserver and report the reconstruction residual.

    Args:
        phi: Generator table images[i][j] = Phi(theta(e_i, e_j)).
        config: Run configuration; tol drives every rank and residual decision.

    Returns:
        Report whose result holds the ClassifyResult and whose single check
        "rank-one-classification" passes iff the residual is within tol.

    Raises:
        NotRankOnePreservingError: If some generator image is zero or of rank >= 2.
        InconsistentTypeError: If the images share neither factor.
        GaugeFailureError: If the recovered factors do not reproduce the table.
    """
    canonical = classify(phi, config.tol, config.seed)
    residual = reconstruction_residual(phi, canonical)
    result = ClassifyResult(
        kind=canonical.kind,
        left=encode_operator(canonical.left),
        right=encode_operator(canonical.right),
        residual=residual,
        surjective=surjectivity_invertibility_check(canonical, config.tol).surjective,
    )
    check = CheckResult(
        name="rank-one-classification",
        trials=1,
        max_deviation=residual,
        passed=residual <= config.tol,
        wall_time_s=0.0,
    )
    logger.info("Classified d=%d, n=%d table as %s", phi.d, phi.n, canonical.kind)
    return Report(command="classify", config=config.model_dump(), checks=[check], result=result.model_dump(mode="json"))
