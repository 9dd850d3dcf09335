"""Seeded random algebra elements, vectors and operators for property checks.

Every stream is derived from a root seed plus a tuple of keys (a check name,
a trial index, ...) through `numpy.random.SeedSequence`, so draws never
depend on evaluation order.
"""

import zlib
from enum import StrEnum

import numpy as np

from app.core.errors import ValidationError
from app.domain.algebra import SpectrumAlgebraElement
from app.domain.module import ModuleVector, OperatorMatrix

# Moduli of invertible draws lie in [MIN_MODULUS, MAX_MODULUS]; operator singular values too.
MIN_MODULUS = 0.5
MAX_MODULUS = 2.0


class SampleKind(StrEnum):
    ELEMENT = "element"
    INVERTIBLE_ELEMENT = "invertible_element"
    VECTOR = "vector"
    CI_VECTOR = "ci_vector"
    OPERATOR = "operator"
    INVERTIBLE_OPERATOR = "invertible_operator"


def _key_to_int(key: str | int) -> int:
    if isinstance(key, int):
        return key & 0xFFFFFFFF
    return zlib.crc32(key.encode("utf-8"))


def derive_rng(seed: int, *keys: str | int) -> np.random.Generator:
    """Independent generator for (seed, keys); identical inputs give identical streams."""
    if seed < 0:
        raise ValidationError(message="Seed must be non-negative", details=f"Got seed={seed}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(_key_to_int(k) for k in keys))
    return np.random.default_rng(sequence)


def _complex_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _invertible_values(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    modulus = rng.uniform(MIN_MODULUS, MAX_MODULUS, shape)
    phase = rng.uniform(0.0, 2.0 * np.pi, shape)
    return modulus * np.exp(1j * phase)


def random_element(rng: np.random.Generator, n: int) -> SpectrumAlgebraElement:
    return SpectrumAlgebraElement(_complex_normal(rng, (n,)))


def random_invertible_element(rng: np.random.Generator, n: int) -> SpectrumAlgebraElement:
    return SpectrumAlgebraElement(_invertible_values(rng, (n,)))


def random_vector(rng: np.random.Generator, d: int, n: int) -> ModuleVector:
    return ModuleVector(_complex_normal(rng, (d, n)))


def random_ci_vector(rng: np.random.Generator, d: int, n: int) -> ModuleVector:
    """A coordinate-invertible vector: each coordinate is zero or invertible, at least one is not zero."""
    support = rng.random(d) < 0.7
    if not support.any():
        support[rng.integers(d)] = True
    values = _invertible_values(rng, (d, n))
    values[~support] = 0.0
    return ModuleVector(values)


def random_operator(rng: np.random.Generator, d: int, n: int) -> OperatorMatrix:
    return OperatorMatrix(_complex_normal(rng, (d, d, n)))


def _random_unitaries(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    q, r = np.linalg.qr(_complex_normal(rng, (n, d, d)))
    # Fix the phase of R's diagonal so Q is Haar distributed
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.where(np.abs(diag) > 0, np.abs(diag), 1.0)
    return q * phases[:, np.newaxis, :]


def random_invertible_operator(rng: np.random.Generator, d: int, n: int) -> OperatorMatrix:
    """U diag(s) V* at every spectrum point, s in [MIN_MODULUS, MAX_MODULUS] (condition number <= 4)."""
    u = _random_unitaries(rng, d, n)
    v = _random_unitaries(rng, d, n)
    s = rng.uniform(MIN_MODULUS, MAX_MODULUS, (n, d))
    fibers = np.einsum("tij,tj,tkj->tik", u, s, np.conj(v))
    return OperatorMatrix.from_fibers(fibers)


def random_sampler(
    kind: SampleKind | str,
    seed: int,
    d: int,
    n: int,
) -> SpectrumAlgebraElement | ModuleVector | OperatorMatrix:
    """Deterministic draw of the requested kind for (seed, kind, d, n)."""
    if d < 1 or n < 1:
        raise ValidationError(message="Sampler needs d >= 1 and n >= 1", details=f"Got d={d}, n={n}")
    try:
        kind = SampleKind(kind)
    except ValueError as e:
        raise ValidationError(
            message=f"Unknown sample kind '{kind}'",
            details=f"Known kinds: {', '.join(SampleKind)}",
        ) from e
    rng = derive_rng(seed, "sampler", str(kind), d, n)
    match kind:
        case SampleKind.ELEMENT:
            return random_element(rng, n)
        case SampleKind.INVERTIBLE_ELEMENT:
            return random_invertible_element(rng, n)
        case SampleKind.VECTOR:
            return random_vector(rng, d, n)
        case SampleKind.CI_VECTOR:
            return random_ci_vector(rng, d, n)
        case SampleKind.OPERATOR:
            return random_operator(rng, d, n)
        case SampleKind.INVERTIBLE_OPERATOR:
            return random_invertible_operator(rng, d, n)
