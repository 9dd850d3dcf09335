from typing import Any

import pydantic
from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings
from app.core.errors import ValidationError


class RunConfig(BaseModel):
    """Everything a command result depends on besides its input file."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(default=2, ge=1)
    n: int = Field(default=2, ge=1)
    seed: int = Field(default_factory=lambda: settings.SEED, ge=0, lt=2**64)
    trials: int = Field(default_factory=lambda: settings.TRIALS, ge=0)
    tol: float = Field(default_factory=lambda: settings.TOL, gt=0.0)
    max_order: int = Field(default_factory=lambda: settings.MAX_ORDER, ge=2, le=6)

    @classmethod
    def build(cls, **values: Any) -> "RunConfig":
        """Validate, dropping None values so their defaults apply.

        Raises:
            ValidationError: If any field is out of range.
        """
        try:
            return cls(**{key: value for key, value in values.items() if value is not None})
        except pydantic.ValidationError as e:
            first = e.errors()[0]
            field = ".".join(str(part) for part in first["loc"])
            raise ValidationError(
                message=f"Invalid run configuration: {field}: {first['msg']}",
                details=f"Got {field}={first.get('input')!r}",
            ) from e
