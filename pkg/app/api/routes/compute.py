from typing import Any

from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool

from app.application.run_config import RunConfig
from app.application.use_cases import classify_preserver, compute_fisher, compute_moments
from app.infrastructure.io.json_codec import (
    BlackBoxPreserverSchema,
    FisherInputSchema,
    MomentsInputSchema,
    black_box_from_schema,
    covariance_from_schema,
    moments_from_schema,
    trace_from_schema,
)

router = APIRouter(prefix="/compute", tags=["compute"])


@router.post("/classify")
async def classify(body: BlackBoxPreserverSchema, tol: float | None = None, seed: int | None = None) -> dict[str, Any]:
    phi = black_box_from_schema(body)
    config = RunConfig.build(d=phi.d, n=phi.n, tol=tol, seed=seed)
    report = await run_in_threadpool(classify_preserver, phi, config)
    return report.to_json()


@router.post("/fisher")
async def fisher(
    body: FisherInputSchema,
    tol: float | None = None,
    max_order: int | None = None,
    seed: int | None = None,
) -> dict[str, Any]:
    cov, tau = covariance_from_schema(body), trace_from_schema(body)
    config = RunConfig.build(d=cov.d, n=cov.n, tol=tol, max_order=max_order, seed=seed)
    report = await run_in_threadpool(compute_fisher, cov, tau, config)
    return report.to_json()


@router.post("/moments")
async def moments(body: MomentsInputSchema, tol: float | None = None) -> dict[str, Any]:
    cov, coeffs = moments_from_schema(body)
    config = RunConfig.build(d=cov.d, n=cov.n, tol=tol)
    report = await run_in_threadpool(compute_moments, cov, coeffs, config)
    return report.to_json()
