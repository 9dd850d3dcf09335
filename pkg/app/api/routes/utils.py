from typing import Any

from fastapi import APIRouter

from app.application.use_cases import CHECK_NAMES
from app.core.config import settings

router = APIRouter(prefix="/utils", tags=["utils"])


@router.get("/health-check/")
async def health_check() -> dict[str, Any]:
    """Liveness plus the defaults a client needs to interpret reports."""
    return {"status": "ok", "project": settings.PROJECT_NAME, "tol": settings.TOL, "checks": list(CHECK_NAMES)}
