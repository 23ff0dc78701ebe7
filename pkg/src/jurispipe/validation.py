"""Input validation helpers shared by the estimator-style classes."""

from __future__ import annotations

from typing import Any, Iterable, Sequence


class ConfigError(ValueError):
    """Raised at load time for invalid configuration (bad patterns, ratios...)."""


def check_text(value: Any, name: str = "text") -> str:
    if not isinstance(value, str):
        raise TypeError(f"{name} must be a string, got {type(value).__name__}")
    return value


def check_texts(X: Iterable[Any], name: str = "X") -> list[str]:
    """Validate an iterable of documents, returning it as a list of str."""
    docs = list(X)
    for i, doc in enumerate(docs):
        if not isinstance(doc, str):
            raise TypeError(
                f"{name}[{i}] must be a string, got {type(doc).__name__}"
            )
    return docs


def check_positive_int(value: Any, name: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_ratio(ratio: Sequence[float], name: str = "ratio") -> tuple[float, float, float]:
    if len(ratio) != 3:
        raise ConfigError(f"{name} must have three entries, got {len(ratio)}")
    total = sum(ratio)
    if abs(total - 100.0) > 1e-9:
        raise ConfigError(f"{name} must sum to 100, got {total}")
    if any(r < 0 for r in ratio):
        raise ConfigError(f"{name} entries must be non-negative")
    return tuple(float(r) for r in ratio)  # type: ignore[return-value]


def check_score_vectors(vectors: Sequence[Sequence[float]]) -> list[list[float]]:
    """Validate per-chunk class-score vectors: same length, entries >= 0."""
    if not vectors:
        raise ValueError("score vectors must be non-empty")
    vecs = [list(map(float, v)) for v in vectors]
    width = len(vecs[0])
    for i, v in enumerate(vecs):
        if len(v) != width:
            raise ValueError(
                f"inconsistent vector lengths: chunk 0 has {width}, chunk {i} has {len(v)}"
            )
        if any(x < 0 for x in v):
            raise ValueError(f"chunk {i} has a negative score entry")
    return vecs
