from app.application.use_cases import (
    CHECK_NAMES,
    classify_preserver,
    compute_fisher,
    compute_moments,
    verify_suite,
)

__all__ = [
    "CHECK_NAMES",
    "classify_preserver",
    "compute_fisher",
    "compute_moments",
    "verify_suite",
]
