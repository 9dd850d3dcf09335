from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.routing import APIRoute

from app.api.main import api_router
from app.core.config import settings
from app.core.errors import HilmodError, HypothesisError, ValidationError

# Order matters: subclasses must come before base class for isinstance checks
ERROR_TYPE_LABELS: tuple[tuple[type[HilmodError], str, int], ...] = (
    (ValidationError, "Validation Error", 400),
    (HypothesisError, "Hypothesis Failed", 422),
    (HilmodError, "Application Error", 400),  # Base class last
)


def custom_generate_unique_id(route: APIRoute) -> str:
    return f"{route.tags[0]}-{route.name}"


app = FastAPI(
    title=settings.PROJECT_NAME,
    openapi_url=f"{settings.API_V1_STR}/openapi.json",
    generate_unique_id_function=custom_generate_unique_id,
)

app.include_router(api_router, prefix=settings.API_V1_STR)


def _get_error_label(exc: HilmodError) -> tuple[str, int]:
    """Get human-readable error type label and HTTP status."""
    for error_class, label, status in ERROR_TYPE_LABELS:
        if isinstance(exc, error_class):
            return label, status
    return "Error", 400


@app.exception_handler(HilmodError)
async def hilmod_error_handler(request: Request, exc: HilmodError) -> JSONResponse:
    """Handle all Hilmod domain/application errors."""
    label, status = _get_error_label(exc)
    return JSONResponse(
        status_code=status,
        content={
            "error": type(exc).__name__,
            "label": label,
            "message": exc.message,
            "details": exc.details,
        },
    )
