"""Classification and explanation-quality metrics.

Classification reports use macro averaging over a confusion matrix with
a reserved abstain column for parser no-decisions.  Lexical metrics
(ROUGE-1/2/L, BLEU, METEOR) are implemented directly over a fixed
lowercase alnum tokenizer; BERTScore runs greedy cosine matching on top
of a pluggable embedding provider.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Protocol, Sequence, Union

import numpy as np

from .records import NO_DECISION

logger = logging.getLogger(__name__)

# Tokenizer for all lexical metrics, fixed and versioned: lowercase,
# split at whitespace and punctuation (alphanumeric runs survive).
LEXICAL_TOKENIZER_VERSION = "lower-alnum-v1"
_ALNUM = re.compile(r"[a-z0-9]+")

BLEU_SMOOTHING = "add-epsilon-0.1"
_BLEU_EPS = 0.1

# METEOR in exact-match mode: harmonic mean weighted 9:1 toward recall,
# fragmentation penalty 0.5 * (chunks / matches)^3, zero for one chunk.
METEOR_PARAMS = {"alpha": 0.9, "beta": 3.0, "gamma": 0.5, "matcher": "exact"}


def lexical_tokens(text: str) -> list[str]:
    return _ALNUM.findall(text.lower())


# ---------------------------------------------------------------------------
# classification

Label = Union[int, str]


@dataclass
class ConfusionMatrix:
    """k x (k+1) counts; the extra final column holds abstentions."""

    counts: np.ndarray
    n_classes: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, idx):
        return self.counts[idx]


def confusion(
    gold: Sequence[Label],
    pred: Sequence[Label],
    n_classes: Optional[int] = None,
) -> ConfusionMatrix:
    """Tally gold vs predicted labels; ``NO_DECISION`` predictions land
    in the abstain column and count against the gold class's recall."""
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} pred")
    gold_int = [int(g) for g in gold]
    if n_classes is None:
        n_classes = max(gold_int) + 1 if gold_int else 0
        real_preds = [int(p) for p in pred if p != NO_DECISION]
        if real_preds:
            n_classes = max(n_classes, max(real_preds) + 1)
    counts = np.zeros((n_classes, n_classes + 1), dtype=int)
    for g, p in zip(gold_int, pred):
        if not 0 <= g < n_classes:
            raise ValueError(f"gold label {g} outside 0..{n_classes - 1}")
        if p == NO_DECISION:
            counts[g, n_classes] += 1
        else:
            counts[g, int(p)] += 1
    return ConfusionMatrix(counts=counts, n_classes=n_classes)


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float


@dataclass
class EvaluationReport:
    """Macro classification report in the published table layout."""

    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    per_class: list[ClassScores]
    n: int

    def to_record(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "overall": {
                "macro_precision": self.macro_precision,
                "macro_recall": self.macro_recall,
                "macro_f1": self.macro_f1,
                "accuracy": self.accuracy,
            },
            "per_class": [
                {"precision": c.precision, "recall": c.recall, "f1": c.f1}
                for c in self.per_class
            ],
        }

    def render(self) -> str:
        header = ["Metric", "Overall"] + [
            f"Class {i}" for i in range(len(self.per_class))
        ]
        rows = [
            ["Macro Precision", f"{self.macro_precision:.4f}"]
            + [f"{c.precision:.2f}" for c in self.per_class],
            ["Macro Recall", f"{self.macro_recall:.4f}"]
            + [f"{c.recall:.2f}" for c in self.per_class],
            ["Macro F1", f"{self.macro_f1:.4f}"]
            + [f"{c.f1:.2f}" for c in self.per_class],
            ["Accuracy", f"{self.accuracy:.4f}"] + [""] * len(self.per_class),
        ]
        table = [header] + rows
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        lines = []
        for j, row in enumerate(table):
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
            if j == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def macro_report(cm: ConfusionMatrix) -> EvaluationReport:
    """Per-class precision/recall/F1 with zero-denominator conventions,
    unweighted macro means, and trace accuracy."""
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    k = cm.n_classes
    per_class = []
    for c in range(k):
        tp = float(cm.counts[c, c])
        precision = _safe_div(tp, float(cm.counts[:, c].sum()))
        recall = _safe_div(tp, float(cm.counts[c, :].sum()))
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class.append(ClassScores(precision, recall, f1))
    return EvaluationReport(
        macro_precision=sum(c.precision for c in per_class) / k,
        macro_recall=sum(c.recall for c in per_class) / k,
        macro_f1=sum(c.f1 for c in per_class) / k,
        accuracy=float(np.trace(cm.counts[:, :k])) / cm.total,
        per_class=per_class,
        n=cm.total,
    )


# ---------------------------------------------------------------------------
# lexical metrics


@dataclass
class PRF:
    precision: float
    recall: float
    f: float


def _f1(p: float, r: float) -> float:
    return _safe_div(2 * p * r, p + r)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int = 1) -> PRF:
    """Clipped n-gram overlap precision/recall/F1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = _ngrams(lexical_tokens(candidate), n)
    ref = _ngrams(lexical_tokens(reference), n)
    if not ref:
        logger.warning("rouge-%d: empty reference, scoring 0", n)
        return PRF(0.0, 0.0, 0.0)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    p = _safe_div(overlap, sum(cand.values()))
    r = _safe_div(overlap, sum(ref.values()))
    return PRF(p, r, _f1(p, r))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> PRF:
    """Longest-common-subsequence precision/recall/F1 over words."""
    cand = lexical_tokens(candidate)
    ref = lexical_tokens(reference)
    if not ref:
        logger.warning("rouge-l: empty reference, scoring 0")
        return PRF(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    p = _safe_div(lcs, len(cand))
    r = _safe_div(lcs, len(ref))
    return PRF(p, r, _f1(p, r))


@dataclass
class BleuResult:
    score: float
    precisions: list[float]
    brevity_penalty: float
    smoothing: str = BLEU_SMOOTHING
    effective_orders: int = 0

    def __float__(self) -> float:
        return self.score


def bleu(
    candidates: Sequence[str], references: Sequence[str], max_n: int = 4
) -> BleuResult:
    """Corpus-level BLEU: geometric mean of clipped n-gram precisions
    times the brevity penalty.

    Orders with no candidate n-grams anywhere in the corpus are skipped
    (so identical short corpora still score 1.0); zero match counts are
    smoothed by add-epsilon.
    """
    if len(candidates) != len(references):
        raise ValueError("candidate/reference corpus length mismatch")
    if not candidates:
        raise ValueError("empty corpus")
    cand_tokens = [lexical_tokens(c) for c in candidates]
    ref_tokens = [lexical_tokens(r) for r in references]
    cand_len = sum(len(t) for t in cand_tokens)
    ref_len = sum(len(t) for t in ref_tokens)

    precisions: list[float] = []
    log_sum, orders = 0.0, 0
    for n in range(1, max_n + 1):
        clipped = 0
        total = 0
        for ct, rt in zip(cand_tokens, ref_tokens):
            cg = _ngrams(ct, n)
            rg = _ngrams(rt, n)
            clipped += sum(min(count, rg[g]) for g, count in cg.items())
            total += sum(cg.values())
        if total == 0:
            precisions.append(0.0)
            continue
        p = (clipped if clipped > 0 else _BLEU_EPS) / total
        precisions.append(clipped / total)
        log_sum += math.log(p)
        orders += 1

    if orders == 0 or cand_len == 0:
        return BleuResult(0.0, precisions, 0.0, effective_orders=0)
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    score = bp * math.exp(log_sum / orders)
    return BleuResult(score, precisions, bp, effective_orders=orders)


def meteor(candidate: str, reference: str) -> float:
    """Exact-match METEOR: recall-weighted harmonic mean of unigram
    precision/recall with a fragmentation penalty (zero for one chunk)."""
    cand = lexical_tokens(candidate)
    ref = lexical_tokens(reference)
    if not cand or not ref:
        return 0.0

    # align each candidate token to the earliest unused identical
    # reference position, left to right
    used: set[int] = set()
    positions: dict[str, list[int]] = {}
    for j, tok in enumerate(ref):
        positions.setdefault(tok, []).append(j)
    alignment: list[tuple[int, int]] = []
    for i, tok in enumerate(cand):
        for j in positions.get(tok, ()):
            if j not in used:
                used.add(j)
                alignment.append((i, j))
                break
    m = len(alignment)
    if m == 0:
        return 0.0

    chunks = 1
    for (i0, j0), (i1, j1) in zip(alignment, alignment[1:]):
        if i1 != i0 + 1 or j1 != j0 + 1:
            chunks += 1

    p = m / len(cand)
    r = m / len(ref)
    alpha = METEOR_PARAMS["alpha"]
    f_mean = p * r / (alpha * p + (1 - alpha) * r)
    if chunks > 1:
        penalty = METEOR_PARAMS["gamma"] * (chunks / m) ** METEOR_PARAMS["beta"]
    else:
        penalty = 0.0
    return f_mean * (1.0 - penalty)


# ---------------------------------------------------------------------------
# semantic metric


class EmbeddingProvider(Protocol):
    """Contract: one vector per token; vectors are unit-normalized on
    receipt."""

    def embed(self, tokens: Sequence[str]) -> Sequence[Sequence[float]]:
        ...


class EmbedderUnavailable(RuntimeError):
    """The configured embedding provider could not serve a request."""


class HashingEmbedder:
    """Deterministic stand-in provider: each token maps to a fixed
    pseudo-random unit vector derived from its hash.  Identical tokens
    get identical vectors, so self-similarity behaves like the real
    metric; semantic closeness between different tokens does not."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def embed(self, tokens: Sequence[str]) -> list[list[float]]:
        out = []
        for tok in tokens:
            seed = int.from_bytes(
                hashlib.sha256(tok.encode("utf-8")).digest()[:8], "big"
            )
            rng = np.random.default_rng(seed)
            vec = rng.standard_normal(self.dim)
            out.append((vec / np.linalg.norm(vec)).tolist())
        return out


def _normalized(vectors: Sequence[Sequence[float]]) -> np.ndarray:
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim != 2:
        raise ValueError("embedding provider must return one vector per token")
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return arr / norms


def bertscore(
    candidate: Sequence[str] | str,
    reference: Sequence[str] | str,
    embedder: EmbeddingProvider,
) -> PRF:
    """Greedy cosine matching in both directions over token embeddings.

    No baseline rescaling is applied: raw cosine F is reported.
    """
    cand = lexical_tokens(candidate) if isinstance(candidate, str) else list(candidate)
    ref = lexical_tokens(reference) if isinstance(reference, str) else list(reference)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)
    try:
        cand_vecs = _normalized(embedder.embed(cand))
        ref_vecs = _normalized(embedder.embed(ref))
    except Exception as exc:
        raise EmbedderUnavailable(str(exc)) from exc
    sim = cand_vecs @ ref_vecs.T
    p = float(sim.max(axis=1).mean())
    r = float(sim.max(axis=0).mean())
    return PRF(p, r, _f1(p, r))


# ---------------------------------------------------------------------------
# explanation report + Likert


@dataclass
class ExplanationScores:
    """Corpus explanation metrics matching the published table columns."""

    rouge1_f: float
    rouge2_f: float
    rougeL_f: float
    bleu: float
    meteor: float
    bertscore_f: Optional[float] = None
    metadata: dict[str, Any] = field(default_factory=dict)

    COLUMNS = ("Rouge-1", "Rouge-2", "Rouge-L", "BLEU", "METEOR", "BERTScore")

    def to_record(self) -> dict[str, Any]:
        rec = {
            "Rouge-1": self.rouge1_f,
            "Rouge-2": self.rouge2_f,
            "Rouge-L": self.rougeL_f,
            "BLEU": self.bleu,
            "METEOR": self.meteor,
        }
        if self.bertscore_f is not None:
            rec["BERTScore"] = self.bertscore_f
        rec["metadata"] = self.metadata
        return rec

    def render(self) -> str:
        cols = [c for c in self.COLUMNS if c != "BERTScore" or self.bertscore_f is not None]
        rec = self.to_record()
        widths = [max(len(c), 6) for c in cols]
        header = "  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()
        rule = "  ".join("-" * w for w in widths)
        values = "  ".join(
            f"{rec[c]:.4f}".ljust(w) for c, w in zip(cols, widths)
        ).rstrip()
        return "\n".join([header, rule, values])


def explanation_report(
    candidates: Sequence[str],
    references: Sequence[str],
    embedder: Optional[EmbeddingProvider] = None,
) -> ExplanationScores:
    """Mean per-pair ROUGE/METEOR, corpus BLEU, optional BERTScore.

    An unreachable embedder drops the BERTScore column and the run
    continues.
    """
    if len(candidates) != len(references):
        raise ValueError("candidate/reference corpus length mismatch")
    if not candidates:
        raise ValueError("empty corpus")
    n = len(candidates)
    r1 = sum(rouge_n(c, r, 1).f for c, r in zip(candidates, references)) / n
    r2 = sum(rouge_n(c, r, 2).f for c, r in zip(candidates, references)) / n
    rl = sum(rouge_l(c, r).f for c, r in zip(candidates, references)) / n
    bl = bleu(candidates, references)
    mt = sum(meteor(c, r) for c, r in zip(candidates, references)) / n
    bs: Optional[float] = None
    if embedder is not None:
        try:
            bs = (
                sum(bertscore(c, r, embedder).f for c, r in zip(candidates, references))
                / n
            )
        except EmbedderUnavailable as exc:
            logger.warning("embedding provider unreachable, omitting BERTScore: %s", exc)
    return ExplanationScores(
        rouge1_f=r1,
        rouge2_f=r2,
        rougeL_f=rl,
        bleu=bl.score,
        meteor=mt,
        bertscore_f=bs,
        metadata={
            "tokenizer": LEXICAL_TOKENIZER_VERSION,
            "bleu_smoothing": bl.smoothing,
            "bleu_effective_orders": bl.effective_orders,
            "meteor_params": dict(METEOR_PARAMS),
            "bertscore_rescaled": False,
            "n_pairs": n,
        },
    )


@dataclass
class LikertRating:
    rater_id: str
    case_id: str
    model_id: str
    score: int
    timestamp: str = ""

    def __post_init__(self):
        if self.score not in (1, 2, 3, 4, 5):
            raise ValueError(f"Likert score must be in 1..5, got {self.score}")

    def to_record(self) -> dict[str, Any]:
        return {
            "rater_id": self.rater_id,
            "case_id": self.case_id,
            "model_id": self.model_id,
            "score": self.score,
            "timestamp": self.timestamp,
        }

    @classmethod
    def now(cls, rater_id: str, case_id: str, model_id: str, score: int) -> "LikertRating":
        ts = _dt.datetime.now(_dt.timezone.utc).isoformat()
        return cls(rater_id, case_id, model_id, score, ts)


def likert_aggregate(
    ratings: Iterable[Union[LikertRating, int]]
) -> dict[str, Any]:
    """Mean (2 decimals) and 1..5 histogram of a batch of ratings."""
    scores = [r.score if isinstance(r, LikertRating) else int(r) for r in ratings]
    if not scores:
        raise ValueError("no ratings to aggregate")
    for s in scores:
        if s not in (1, 2, 3, 4, 5):
            raise ValueError(f"Likert score must be in 1..5, got {s}")
    distribution = {k: scores.count(k) for k in (1, 2, 3, 4, 5)}
    return {
        "mean": round(sum(scores) / len(scores), 2),
        "distribution": distribution,
        "n": len(scores),
    }
