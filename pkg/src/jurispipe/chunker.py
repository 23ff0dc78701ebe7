"""Overlapping token windows over long documents plus score roll-up.

Chunk i covers tokens [i*stride, i*stride + window) with
stride = window - overlap; the final chunk is truncated at the document
end so consecutive chunks always share exactly ``overlap`` tokens.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .records import Chunk
from .validation import ConfigError, check_score_vectors, check_texts

AGGREGATION_STRATEGIES = ("mean_prob", "majority_vote", "max_confidence")


def tokenize(
    text: str,
    scheme: str = "whitespace",
    tokenizer: Optional[Callable[[str], list[str]]] = None,
) -> list[str]:
    """Split text into tokens; the pluggable scheme delegates to an
    external callable so subword tokenizers can be swapped in."""
    if scheme == "whitespace":
        return text.split()
    if scheme == "pluggable":
        if tokenizer is None:
            raise ConfigError("pluggable scheme requires a tokenizer callable")
        return list(tokenizer(text))
    raise ConfigError(f"unknown tokenize scheme: {scheme!r}")


def chunk_spans(
    n_tokens: int, window: int = 512, overlap: int = 100
) -> list[tuple[int, int]]:
    """Token spans [start, end) for a document of ``n_tokens`` tokens."""
    if not 0 <= overlap < window:
        raise ConfigError(
            f"overlap must satisfy 0 <= overlap < window, got {overlap} / {window}"
        )
    stride = window - overlap
    spans = []
    i = 0
    while True:
        start = i * stride
        end = min(start + window, n_tokens)
        spans.append((start, end))
        if end >= n_tokens:
            return spans
        i += 1


def chunk(
    tokens: Sequence[str],
    window: int = 512,
    overlap: int = 100,
    case_id: str = "",
    pad_final: bool = False,
) -> list[Chunk]:
    """Cut a token sequence into overlapping chunks.

    With ``pad_final`` the last chunk is back-filled to a full window
    (its start moves left), trading exact overlap for uniform length.
    """
    spans = chunk_spans(len(tokens), window, overlap)
    if pad_final and len(spans) > 1:
        start, end = spans[-1]
        spans[-1] = (max(0, end - window), end)
    return [
        Chunk(case_id=case_id, index=i, start=s, end=e, tokens=list(tokens[s:e]))
        for i, (s, e) in enumerate(spans)
    ]


def aggregate(
    vectors: Sequence[Sequence[float]], strategy: str = "mean_prob"
) -> int:
    """Roll per-chunk class-score vectors up to one class index."""
    scores = np.asarray(check_score_vectors(vectors), dtype=float)
    if strategy == "mean_prob":
        return int(np.argmax(scores.mean(axis=0)))
    if strategy == "majority_vote":
        votes = np.argmax(scores, axis=1)
        counts = np.bincount(votes, minlength=scores.shape[1])
        top = np.flatnonzero(counts == counts.max())
        if len(top) == 1:
            return int(top[0])
        # tie: fall back to the mean-probability winner
        return int(np.argmax(scores.mean(axis=0)))
    if strategy == "max_confidence":
        flat = int(np.argmax(scores))
        return flat % scores.shape[1]
    raise ConfigError(f"unknown aggregation strategy: {strategy!r}")


def read_chunk_scores(path) -> dict[str, list[list[float]]]:
    """Read line-delimited {case_id, index, vector} score records into
    per-case vector lists ordered by chunk index."""
    from .io import read_records

    by_case: dict[str, list[tuple[int, list[float]]]] = {}
    for rec in read_records(path):
        by_case.setdefault(rec["case_id"], []).append(
            (int(rec["index"]), [float(x) for x in rec["vector"]])
        )
    return {
        case_id: [vec for _, vec in sorted(entries)]
        for case_id, entries in by_case.items()
    }


class SlidingWindowChunker(BaseEstimator, TransformerMixin):
    """Tokenize documents and cut them into overlapping windows."""

    def __init__(
        self,
        window: int = 512,
        overlap: int = 100,
        scheme: str = "whitespace",
        tokenizer: Optional[Callable[[str], list[str]]] = None,
        pad_final: bool = False,
    ):
        self.window = window
        self.overlap = overlap
        self.scheme = scheme
        self.tokenizer = tokenizer
        self.pad_final = pad_final

    def fit(self, X=None, y=None):
        chunk_spans(0, self.window, self.overlap)  # validates window/overlap
        return self

    def chunk_text(self, text: str, case_id: str = "") -> list[Chunk]:
        tokens = tokenize(text, self.scheme, self.tokenizer)
        return chunk(
            tokens,
            window=self.window,
            overlap=self.overlap,
            case_id=case_id,
            pad_final=self.pad_final,
        )

    def transform(self, X: Iterable[str]) -> list[list[Chunk]]:
        return [self.chunk_text(doc) for doc in check_texts(X)]
