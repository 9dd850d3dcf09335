"""JSON schemas for algebra elements, operators, preservers and covariances.

A complex number is a two-element array [re, im], an algebra element an array
of n of them and an operator an array[d][d] of elements.
"""

import json
from pathlib import Path
from typing import Any, overload

import numpy as np
import pydantic
from pydantic import BaseModel, FiniteFloat

from app.core.errors import DimensionError, ValidationError
from app.domain.algebra import AlgebraState, ComplexArray, SpectrumAlgebraElement
from app.domain.free_prob import FisherReport, OperatorTrace, SandwichCovariance
from app.domain.module import OperatorMatrix
from app.domain.preserver import (
    BlackBoxPreserver,
    PreserverKind,
    StructuredPreserver,
)

ComplexPair = tuple[FiniteFloat, FiniteFloat]
ElementJson = list[ComplexPair]
OperatorJson = list[list[ElementJson]]


class StateSchema(BaseModel):
    weights: list[FiniteFloat]


class StructuredPreserverSchema(BaseModel):
    kind: PreserverKind
    left: OperatorJson
    right: OperatorJson


class BlackBoxPreserverSchema(BaseModel):
    images: list[list[OperatorJson]]


class CovarianceSchema(BaseModel):
    left: OperatorJson
    right: OperatorJson


class FisherInputSchema(CovarianceSchema):
    """Covariance (A, B) plus the algebra state of the trace; uniform weights when absent."""

    state: StateSchema | None = None


class MomentsInputSchema(BaseModel):
    covariance: CovarianceSchema
    coefficients: list[OperatorJson]


# Arrays


def _complex_array(data: Any, ndim: int, what: str) -> ComplexArray:
    try:
        arr = np.asarray(data, dtype=np.float64)
    except ValueError as e:
        raise DimensionError(
            message=f"{what} has inconsistent dimensions",
            details=str(e),
        ) from e
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2 or 0 in arr.shape:
        raise DimensionError(
            message=f"{what} must be a non-empty nested array of [re, im] pairs",
            details=f"Got array shape {arr.shape}",
        )
    if not np.isfinite(arr).all():
        raise ValidationError(
            message=f"{what} contains a non-finite number",
            details=f"{int((~np.isfinite(arr)).sum())} NaN or infinite value(s)",
        )
    return arr[..., 0] + 1j * arr[..., 1]


def operator_from_json(data: OperatorJson) -> OperatorMatrix:
    values = _complex_array(data, 3, "Operator")
    if values.shape[0] != values.shape[1]:
        raise DimensionError(
            message="Operator must be a square d x d array of elements",
            details=f"Got {values.shape[0]} x {values.shape[1]}",
        )
    return OperatorMatrix(values)


def _pair(z: complex) -> ComplexPair:
    return (float(z.real), float(z.imag))


def encode_element(a: SpectrumAlgebraElement) -> ElementJson:
    return [_pair(z) for z in a.values]


def encode_operator(m: OperatorMatrix) -> OperatorJson:
    return [[encode_element(m.entry(i, j)) for j in range(m.d)] for i in range(m.d)]


# Domain objects


def structured_preserver_from_schema(schema: StructuredPreserverSchema) -> StructuredPreserver:
    return StructuredPreserver(schema.kind, operator_from_json(schema.left), operator_from_json(schema.right))


def black_box_from_schema(schema: BlackBoxPreserverSchema) -> BlackBoxPreserver:
    images = tuple(tuple(operator_from_json(img) for img in row) for row in schema.images)
    return BlackBoxPreserver(images)


def covariance_from_schema(schema: CovarianceSchema) -> SandwichCovariance:
    return SandwichCovariance(operator_from_json(schema.left), operator_from_json(schema.right))


def trace_from_schema(schema: FisherInputSchema) -> OperatorTrace:
    n = operator_from_json(schema.left).n
    if schema.state is None:
        return OperatorTrace.uniform(n)
    state = AlgebraState.from_weights(schema.state.weights)
    if state.n != n:
        raise DimensionError(
            message="State weights do not match the spectrum size",
            details=f"{state.n} weights for n={n}",
        )
    return OperatorTrace(state)


def moments_from_schema(schema: MomentsInputSchema) -> tuple[SandwichCovariance, list[OperatorMatrix]]:
    return covariance_from_schema(schema.covariance), [operator_from_json(c) for c in schema.coefficients]


def encode_structured_preserver(p: StructuredPreserver) -> dict[str, Any]:
    return {"kind": str(p.kind), "left": encode_operator(p.left), "right": encode_operator(p.right)}


def encode_black_box(phi: BlackBoxPreserver) -> dict[str, Any]:
    return {"images": [[encode_operator(img) for img in row] for row in phi.images]}


def encode_covariance(cov: SandwichCovariance) -> dict[str, Any]:
    return {"left": encode_operator(cov.left), "right": encode_operator(cov.right)}


def encode_fisher_report(report: FisherReport) -> dict[str, Any]:
    return {
        "numeric": _pair(report.numeric),
        "closed_form": _pair(report.closed_form),
        "max_order_checked": report.max_order_checked,
        "condition_deviations": dict(report.condition_deviations),
    }


# Parsing


def _load[SchemaT: BaseModel](source: str | Path, schema: type[SchemaT], what: str) -> SchemaT:
    if isinstance(source, Path):
        try:
            text = source.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise ValidationError(message=f"Cannot read {what} file", details=str(e)) from e
    else:
        text = source

    if not text.strip():
        raise ValidationError(
            message=f"{what} JSON is empty",
            details="Input contains no data or only whitespace",
        )
    try:
        return schema.model_validate_json(text)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ValidationError(
            message=f"Invalid {what} JSON at {location}: {first['msg']}",
            details=f"{e.error_count()} error(s) in input",
        ) from e


@overload
def parse_black_box(source: str) -> BlackBoxPreserver: ...


@overload
def parse_black_box(source: Path) -> BlackBoxPreserver: ...


def parse_black_box(source: str | Path) -> BlackBoxPreserver:
    """Parse {"images": [[operator, ...], ...]} into a BlackBoxPreserver.

    Args:
        source: Either a JSON string or Path to a JSON file.

    Returns:
        The generator table, images[i][j] being the image of theta(e_i, e_j).

    Raises:
        ValidationError: If the JSON is empty or malformed.
        DimensionError: If the table or its operators have inconsistent sizes.
    """
    return black_box_from_schema(_load(source, BlackBoxPreserverSchema, "black-box preserver"))


@overload
def parse_structured_preserver(source: str) -> StructuredPreserver: ...


@overload
def parse_structured_preserver(source: Path) -> StructuredPreserver: ...


def parse_structured_preserver(source: str | Path) -> StructuredPreserver:
    return structured_preserver_from_schema(_load(source, StructuredPreserverSchema, "structured preserver"))


@overload
def parse_fisher_input(source: str) -> tuple[SandwichCovariance, OperatorTrace]: ...


@overload
def parse_fisher_input(source: Path) -> tuple[SandwichCovariance, OperatorTrace]: ...


def parse_fisher_input(source: str | Path) -> tuple[SandwichCovariance, OperatorTrace]:
    """Parse {"left", "right", "state"?} into the covariance (A, B) and the trace.

    Raises:
        ValidationError: If the JSON is malformed or the weights do not form a faithful state.
        DimensionError: If A, B and the weights disagree on d or n.
    """
    schema = _load(source, FisherInputSchema, "fisher input")
    return covariance_from_schema(schema), trace_from_schema(schema)


@overload
def parse_moments_input(source: str) -> tuple[SandwichCovariance, list[OperatorMatrix]]: ...


@overload
def parse_moments_input(source: Path) -> tuple[SandwichCovariance, list[OperatorMatrix]]: ...


def parse_moments_input(source: str | Path) -> tuple[SandwichCovariance, list[OperatorMatrix]]:
    return moments_from_schema(_load(source, MomentsInputSchema, "moments input"))


def dumps(payload: Any) -> str:
    """Stable JSON text for reports."""
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"
