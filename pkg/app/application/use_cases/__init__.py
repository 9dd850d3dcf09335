from app.application.use_cases.classify_preserver import ClassifyResult, classify_preserver
from app.application.use_cases.compute_fisher import FisherResult, compute_fisher
from app.application.use_cases.compute_moments import MomentsResult, compute_moments
from app.application.use_cases.verify_suite import CHECK_NAMES, verify_suite

__all__ = [
    "CHECK_NAMES",
    "ClassifyResult",
    "FisherResult",
    "MomentsResult",
    "classify_preserver",
    "compute_fisher",
    "compute_moments",
    "verify_suite",
]
