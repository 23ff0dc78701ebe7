"""Weak decision labeling from outcome keywords in the judgment tail.

A document is scanned over its last 750 words.  Around each key term
(appeal / petition / case) a small context window is inspected for
outcome keywords; a negator shortly before the keyword flips its
polarity, and partial-acceptance markers co-occurring with an outcome
keyword mark the case as partially accepted.  Mixed verdicts across
contexts also resolve to partial acceptance.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import yaml
from sklearn.base import BaseEstimator

from .records import CleanJudgment, Decision, Evidence, LabeledCase
from .validation import ConfigError, check_text

_WORD = re.compile(r"\w+")

# predict() output for documents with no extractable verdict
UNLABELED = -1

POSITIVE_DEFAULT = frozenset({"approved", "allowed", "granted", "accepted", "upheld"})
NEGATIVE_DEFAULT = frozenset({"rejected", "disapproved", "dismissed", "denied"})
PARTIAL_DEFAULT = frozenset({"partly", "partially"})
NEGATOR_DEFAULT = frozenset({"no", "not"})
KEY_TERM_DEFAULT = frozenset({"appeal", "petition", "case"})


def _variants(word: str) -> set[str]:
    """Surface forms matched for a lexicon entry.

    Outcome keywords ship in their conclusory past form ("rejected"),
    but judgments also use base and inflected forms ("we reject it",
    "Appeals Allowed").  The expansion is a small closed rule set, not a
    stemmer; nonsense forms it generates never collide with real words.
    """
    w = word.lower()
    out = {w}
    if w.endswith("ied") and len(w) > 4:
        base = w[:-3] + "y"
        out |= {base, w[:-2] + "es", base + "ing"}
    elif w.endswith("ed") and len(w) > 3:
        b1, b2 = w[:-2], w[:-1]
        out |= {b1, b2, b1 + "s", b2 + "s", b1 + "es", b1 + "ing"}
    elif w.endswith("y") and len(w) > 3:
        out |= {w[:-1] + "ies"}
    else:
        out |= {w + "s", w + "es", w + "ed", w + "d", w + "ing"}
    return out


@dataclass(frozen=True)
class Lexicons:
    """Keyword sets driving the labeler; matching is case-insensitive
    on word boundaries and inflection-aware for outcome/key terms."""

    positive: frozenset[str] = POSITIVE_DEFAULT
    negative: frozenset[str] = NEGATIVE_DEFAULT
    partial_markers: frozenset[str] = PARTIAL_DEFAULT
    negators: frozenset[str] = NEGATOR_DEFAULT
    key_terms: frozenset[str] = KEY_TERM_DEFAULT

    def __post_init__(self) -> None:
        sets = {
            "positive": self.positive,
            "negative": self.negative,
            "partial_markers": self.partial_markers,
            "negators": self.negators,
            "key_terms": self.key_terms,
        }
        names = list(sets)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                overlap = sets[a] & sets[b]
                if overlap:
                    raise ConfigError(
                        f"lexicon sets {a} and {b} overlap: {sorted(overlap)}"
                    )

    @classmethod
    def from_file(cls, path: str | Path) -> "Lexicons":
        """Load lexicons from YAML; missing sets fall back to defaults."""
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        fields = {}
        for name in ("positive", "negative", "partial_markers", "negators", "key_terms"):
            if name in doc:
                fields[name] = frozenset(str(w).lower() for w in doc[name])
        return cls(**fields)

    def build_index(self) -> dict[str, tuple[str, str]]:
        """Map every matchable surface form to (canonical entry, category).

        Negators and partial markers match exactly; outcome keywords and
        key terms match through inflection variants.  Ambiguous surfaces
        across categories are a configuration error.
        """
        index: dict[str, tuple[str, str]] = {}

        def add(surface: str, canonical: str, category: str) -> None:
            prev = index.get(surface)
            if prev is not None and prev[1] != category:
                raise ConfigError(
                    f"surface {surface!r} is ambiguous between {prev[1]} and {category}"
                )
            index[surface] = (canonical, category)

        for word in self.positive:
            for v in _variants(word):
                add(v, word, "positive")
        for word in self.negative:
            for v in _variants(word):
                add(v, word, "negative")
        for word in self.key_terms:
            for v in _variants(word):
                add(v, word, "key_term")
        for word in self.partial_markers:
            add(word.lower(), word, "partial")
        for word in self.negators:
            add(word.lower(), word, "negator")
        return index


@dataclass(frozen=True)
class Word:
    """One scanned word: lowercased text plus its character span."""

    text: str
    start: int
    end: int
    index: int  # position in the window's word sequence


@dataclass
class Context:
    """Words within +-radius of one key-term occurrence."""

    key_term: str
    key_index: int  # window-level word index of the key term
    words: list[Word] = field(default_factory=list)

    @property
    def span(self) -> tuple[int, int]:
        return (self.words[0].start, self.words[-1].end)


@dataclass(frozen=True)
class Verdict:
    """The per-context outcome with its supporting keyword."""

    polarity: Decision
    keyword: str
    start: int
    end: int
    negated: bool


def tail_window(body_text: str, n_words: int = 750) -> tuple[str, int]:
    """Return the last ``n_words`` whitespace words and the char offset
    where the window starts; original spacing within the window is kept."""
    check_text(body_text, "body_text")
    spans = [m.span() for m in re.finditer(r"\S+", body_text)]
    if len(spans) <= n_words:
        return body_text, 0
    start = spans[-n_words][0]
    return body_text[start:], start


def scan_words(window: str) -> list[Word]:
    return [
        Word(m.group().lower(), m.start(), m.end(), i)
        for i, m in enumerate(_WORD.finditer(window))
    ]


def find_contexts(
    window: str, lexicons: Lexicons, radius_words: int = 10
) -> list[Context]:
    """One context per key-term occurrence, in positional order."""
    if radius_words < 1:
        raise ConfigError("radius_words must be >= 1")
    index = lexicons.build_index()
    words = scan_words(window)
    contexts = []
    for w in words:
        hit = index.get(w.text)
        if hit is None or hit[1] != "key_term":
            continue
        lo = max(0, w.index - radius_words)
        hi = min(len(words), w.index + radius_words + 1)
        contexts.append(
            Context(key_term=hit[0], key_index=w.index, words=words[lo:hi])
        )
    return contexts


def classify_context(
    ctx: Context,
    lexicons: Lexicons,
    negation_radius: int = 3,
    _index: Optional[dict[str, tuple[str, str]]] = None,
) -> Optional[Verdict]:
    """Resolve one context to a verdict, or None without outcome keywords.

    Partial markers co-occurring with an outcome keyword win outright.
    Otherwise the outcome keyword nearest the key term decides (ties go
    to the later occurrence) and a negator within ``negation_radius``
    words before it flips the polarity once.
    """
    index = _index if _index is not None else lexicons.build_index()
    outcome_hits: list[tuple[Word, str]] = []
    partial_hit: Optional[Word] = None
    negator_indices: list[int] = []
    for w in ctx.words:
        hit = index.get(w.text)
        if hit is None:
            continue
        category = hit[1]
        if category in ("positive", "negative"):
            outcome_hits.append((w, category))
        elif category == "partial" and partial_hit is None:
            partial_hit = w
        elif category == "negator":
            negator_indices.append(w.index)

    if not outcome_hits:
        return None
    if partial_hit is not None:
        return Verdict(
            Decision.PARTIAL, partial_hit.text, partial_hit.start, partial_hit.end, False
        )

    winner, category = min(
        outcome_hits, key=lambda hc: (abs(hc[0].index - ctx.key_index), -hc[0].index)
    )
    negated = any(
        1 <= winner.index - j <= negation_radius for j in negator_indices
    )
    polarity = Decision.ACCEPTED if category == "positive" else Decision.REJECTED
    if negated:
        polarity = (
            Decision.REJECTED if polarity is Decision.ACCEPTED else Decision.ACCEPTED
        )
    return Verdict(polarity, winner.text, winner.start, winner.end, negated)


def label_case(
    case: CleanJudgment,
    lexicons: Optional[Lexicons] = None,
    window_words: int = 750,
    context_radius: int = 10,
    negation_radius: int = 3,
) -> Optional[LabeledCase]:
    """Label one cleaned judgment; None means no verdict was extractable."""
    lexicons = lexicons or Lexicons()
    index = lexicons.build_index()
    window, offset = tail_window(case.body_text, window_words)
    contexts = find_contexts(window, lexicons, context_radius)
    verdicts = []
    for ctx in contexts:
        verdict = classify_context(ctx, lexicons, negation_radius, _index=index)
        if verdict is not None:
            verdicts.append(verdict)
    if not verdicts:
        return None

    evidence = [
        Evidence(
            keyword=v.keyword,
            start=offset + v.start,
            end=offset + v.end,
            polarity=v.polarity.name.lower(),
            negated=v.negated,
        )
        for v in verdicts
    ]
    polarities = {v.polarity for v in verdicts}
    if Decision.PARTIAL in polarities or {
        Decision.ACCEPTED,
        Decision.REJECTED,
    } <= polarities:
        return LabeledCase(case, Decision.PARTIAL, "multi", evidence)
    label = next(iter(polarities))
    return LabeledCase(case, label, "single", evidence)


def to_task_label(
    labeled: LabeledCase, task: str, binary_variant: str = "single"
) -> Optional[int]:
    """Map a labeled case into a task's label space.

    Ternary passes the value through.  Binary excludes partial cases in
    the "single" variant and maps them to accepted in the "multi"
    variant (a partial acceptance means at least one appeal succeeded).
    """
    if task == "ternary":
        return int(labeled.label)
    if task != "binary":
        raise ConfigError(f"unknown task: {task!r}")
    if labeled.label is Decision.PARTIAL:
        if binary_variant == "single":
            return None
        if binary_variant == "multi":
            return int(Decision.ACCEPTED)
        raise ConfigError(f"unknown binary variant: {binary_variant!r}")
    return int(labeled.label)


class WeakLabeler(BaseEstimator):
    """Rule-based decision labeler with a classifier-style predict().

    ``predict`` maps document strings to {0, 1, 2} with ``UNLABELED``
    (-1) for documents carrying no extractable verdict.  ``label_record``
    exposes the full audit trail for pipeline use.
    """

    def __init__(
        self,
        lexicons: Optional[Lexicons] = None,
        lexicon_file: Optional[str] = None,
        window_words: int = 750,
        context_radius: int = 10,
        negation_radius: int = 3,
    ):
        self.lexicons = lexicons
        self.lexicon_file = lexicon_file
        self.window_words = window_words
        self.context_radius = context_radius
        self.negation_radius = negation_radius

    def fit(self, X=None, y=None):
        if self.lexicon_file is not None:
            self.lexicons_ = Lexicons.from_file(self.lexicon_file)
        else:
            self.lexicons_ = self.lexicons or Lexicons()
        # build eagerly so configuration errors surface at fit time
        self.lexicons_.build_index()
        return self

    def _check_fitted(self):
        if not hasattr(self, "lexicons_"):
            self.fit()

    def label_record(self, case: CleanJudgment) -> Optional[LabeledCase]:
        self._check_fitted()
        return label_case(
            case,
            self.lexicons_,
            window_words=self.window_words,
            context_radius=self.context_radius,
            negation_radius=self.negation_radius,
        )

    def label_text(self, text: str) -> Optional[LabeledCase]:
        from .records import CourtTier

        case = CleanJudgment(
            id="", court_tier=CourtTier.SCI, body_text=text,
            word_count=len(text.split()),
        )
        return self.label_record(case)

    def predict(self, X: Iterable[str]) -> np.ndarray:
        self._check_fitted()
        out = []
        for doc in X:
            labeled = self.label_text(doc)
            out.append(UNLABELED if labeled is None else int(labeled.label))
        return np.asarray(out, dtype=int)

    def label_all(
        self, cases: Sequence[CleanJudgment]
    ) -> tuple[list[LabeledCase], list[str]]:
        """Label a batch; returns (labeled cases, unlabelable ids)."""
        labeled, excluded = [], []
        for case in cases:
            result = self.label_record(case)
            if result is None:
                excluded.append(case.id)
            else:
                labeled.append(result)
        return labeled, excluded
