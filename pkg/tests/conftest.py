from collections.abc import Generator
from typing import Any

import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.main import app


@pytest.fixture(scope="module")
def client() -> Generator[TestClient, Any]:
    with TestClient(app) as c:
        yield c


@pytest.fixture
def rng() -> np.random.Generator:
    """Fresh seeded generator per test."""
    return np.random.default_rng(20240607)
