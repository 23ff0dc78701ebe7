"""Load raw judgments, strip meta-information, extract the operative body.

The cleaning pipeline runs strip_metadata -> extract_body -> clean_tokens
-> apply_filters per document.  Every step is a pure function; the
``JudgmentCleaner`` estimator bundles them with their configuration.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import yaml
from sklearn.base import BaseEstimator, TransformerMixin

from .records import CleanJudgment, CourtTier, RawJudgment
from .validation import ConfigError, check_text, check_texts

# Body markers: the operative judgment follows the first standalone,
# uppercase occurrence of one of these heading tokens.
_BODY_MARKER = re.compile(r"\b(?:ORDER|JUDGMENT|JUDGEMENT)\b")

# Separators allowed directly after a heading token (": ", " - ", newlines).
_MARKER_SEPARATORS = re.compile(r"^[\s:\-\u2013]+")

# A token is noise when any character repeats three or more times in a row.
_TRIPLE_RUN = re.compile(r"(.)\1\1")

# Default removal rules target the labelled header fields of the standard
# Indian case layout.  Each rule deletes the label line together with the
# value on the same line or on the following line.
DEFAULT_METADATA_RULES: list[tuple[str, str]] = [
    (
        "case_no",
        r"(?m)^[ \t]*CASE NOS?\.?[ \t]*:[ \t]*(?:\n[^\n]*)?\n?",
    ),
    (
        "appellants",
        r"(?m)^[ \t]*APPELLANTS?[ \t]*:[ \t]*(?:\n[^\n]*)?\n?",
    ),
    (
        "respondent",
        r"(?m)^[ \t]*RESPONDENTS?[ \t]*:[ \t]*(?:\n[^\n]*)?\n?",
    ),
    (
        "date_of_judgment",
        r"(?m)^[ \t]*DATE OF JUDGMENT[ \t]*:[ \t]*(?:\n[^\n]*)?\n?",
    ),
    (
        "bench",
        r"(?m)^[ \t]*BENCH[ \t]*:[ \t]*(?:\n[^\n]*)?\n?",
    ),
]


class DropReason(str, Enum):
    TOO_SHORT = "TooShort"
    TOO_LONG = "TooLong"
    NO_BODY = "NoBody"


@dataclass
class Drop:
    """A rejected document and the single reason it was rejected."""

    id: str
    reason: DropReason

    def to_record(self) -> dict:
        return {"id": self.id, "reason": self.reason.value}


def compile_rules(rules: Iterable[tuple[str, str]]) -> list[tuple[str, re.Pattern[str]]]:
    """Compile (name, pattern) pairs, failing fast on invalid patterns."""
    compiled = []
    for name, pattern in rules:
        try:
            compiled.append((name, re.compile(pattern)))
        except re.error as exc:
            raise ConfigError(f"invalid metadata rule {name!r}: {exc}") from exc
    return compiled


def load_rules_file(path: str | Path) -> list[tuple[str, str]]:
    """Read removal rules from a YAML file: {rules: [{name, pattern}, ...]}."""
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "rules" not in doc:
        raise ConfigError(f"{path}: expected a mapping with a 'rules' list")
    rules = []
    for i, entry in enumerate(doc["rules"]):
        if "pattern" not in entry:
            raise ConfigError(f"{path}: rule #{i} has no 'pattern'")
        rules.append((entry.get("name", f"rule_{i}"), entry["pattern"]))
    return rules


def strip_metadata(
    text: str, rules: list[tuple[str, re.Pattern[str]]]
) -> str:
    """Delete every rule's matches; iterates to a fixpoint so the result
    is idempotent even when one removal uncovers another match."""
    check_text(text)
    while True:
        new = text
        for _, pattern in rules:
            new = pattern.sub("", new)
        if new == text:
            return text
        text = new


def extract_body(text: str) -> Optional[str]:
    """Return the text strictly after the first body marker, or None.

    Markers are matched case-sensitively ('ORDER', 'JUDGMENT',
    'JUDGEMENT') on word boundaries; a separator run (colon, dash,
    whitespace) directly after the marker is consumed.
    """
    m = _BODY_MARKER.search(text)
    if m is None:
        return None
    rest = text[m.end():]
    return _MARKER_SEPARATORS.sub("", rest, count=1)


def clean_tokens(text: str) -> str:
    """Drop whitespace tokens containing a character run of length >= 3.

    Surviving tokens are re-joined with single spaces and are otherwise
    byte-identical to the input tokens.
    """
    return " ".join(t for t in text.split() if not _TRIPLE_RUN.search(t))


def word_count(text: str) -> int:
    return len(text.split())


def apply_filters(
    doc_id: str,
    body_text: Optional[str],
    tier: CourtTier,
    date,
    min_words: int = 50,
    max_words: int = 32000,
) -> Union[CleanJudgment, Drop]:
    """Keep/drop decision for a cleaned candidate body.

    ``body_text`` is None when no marker was found and the unmarked
    fallback is disabled.
    """
    if body_text is None:
        return Drop(doc_id, DropReason.NO_BODY)
    n = word_count(body_text)
    if n < min_words:
        return Drop(doc_id, DropReason.TOO_SHORT)
    if n > max_words:
        return Drop(doc_id, DropReason.TOO_LONG)
    return CleanJudgment(
        id=doc_id, court_tier=tier, body_text=body_text, word_count=n, date=date
    )


class JudgmentCleaner(BaseEstimator, TransformerMixin):
    """Stateless text cleaner with the filter configuration attached.

    Parameters
    ----------
    rules : list of (name, pattern) pairs or None
        Metadata removal rules; defaults to the standard header fields.
    rules_file : str or None
        YAML rules file; overrides ``rules`` when given.
    keep_unmarked : bool
        Keep the whole stripped text when no body marker is found
        instead of dropping the document.
    min_words, max_words : int
        Inclusive word-count bounds for keeping a document.
    """

    def __init__(
        self,
        rules=None,
        rules_file=None,
        keep_unmarked=False,
        min_words=50,
        max_words=32000,
    ):
        self.rules = rules
        self.rules_file = rules_file
        self.keep_unmarked = keep_unmarked
        self.min_words = min_words
        self.max_words = max_words

    def _effective_rules(self):
        if self.rules_file is not None:
            return load_rules_file(self.rules_file)
        if self.rules is not None:
            return list(self.rules)
        return list(DEFAULT_METADATA_RULES)

    def fit(self, X=None, y=None):
        """Compile the rule set (configuration errors surface here)."""
        self.compiled_rules_ = compile_rules(self._effective_rules())
        return self

    def _check_fitted(self):
        if not hasattr(self, "compiled_rules_"):
            self.fit()

    def clean_text(self, text: str) -> str:
        """strip_metadata -> extract_body -> clean_tokens for one document.

        Falls back to the whole stripped text when no marker is found;
        the keep/drop decision is made by :meth:`process`, not here.
        """
        self._check_fitted()
        stripped = strip_metadata(text, self.compiled_rules_)
        body = extract_body(stripped)
        if body is None:
            body = stripped
        return clean_tokens(body)

    def transform(self, X):
        """Clean a sequence of raw document strings."""
        return [self.clean_text(doc) for doc in check_texts(X)]

    def process(self, raw: RawJudgment) -> Union[CleanJudgment, Drop]:
        """Full per-record contract: clean, then keep or drop."""
        self._check_fitted()
        stripped = strip_metadata(raw.raw_text, self.compiled_rules_)
        body = extract_body(stripped)
        if body is None:
            if not self.keep_unmarked:
                return apply_filters(
                    raw.id, None, raw.court_tier, raw.date,
                    self.min_words, self.max_words,
                )
            body = stripped
        body = clean_tokens(body)
        return apply_filters(
            raw.id, body, raw.court_tier, raw.date,
            self.min_words, self.max_words,
        )

    def process_all(
        self, raws: Iterable[RawJudgment]
    ) -> tuple[list[CleanJudgment], list[Drop]]:
        kept, dropped = [], []
        for raw in raws:
            result = self.process(raw)
            if isinstance(result, CleanJudgment):
                kept.append(result)
            else:
                dropped.append(result)
        return kept, dropped


def load_raw(
    path: str | Path,
    format: str = "line_delimited_records",
    default_tier: CourtTier = CourtTier.SCI,
    errors: Optional[list[str]] = None,
) -> Iterator[RawJudgment]:
    """Yield RawJudgment records in lexicographic id order.

    ``plain_text``: a .txt file or a directory of .txt files, filename
    stem = id.  ``line_delimited_records``: a JSONL file with fields
    {id, court_tier, date (optional ISO-8601), raw_text}.  Malformed
    records are reported into ``errors`` (with their line number) and
    skipped; the stream continues.
    """
    path = Path(path)
    if errors is None:
        errors = []
    if not path.exists():
        raise FileNotFoundError(f"unreadable path: {path}")

    records: list[RawJudgment] = []
    if format == "plain_text":
        files = sorted(path.glob("*.txt")) if path.is_dir() else [path]
        for f in files:
            records.append(
                RawJudgment(id=f.stem, court_tier=default_tier, raw_text=f.read_text(encoding="utf-8"))
            )
    elif format == "line_delimited_records":
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    errors.append(f"invalid JSON at line {lineno}")
                    continue
                if isinstance(rec, dict) and "_meta" in rec:
                    continue
                missing = [k for k in ("id", "raw_text") if k not in rec]
                if missing:
                    errors.append(f"missing field {missing[0]} at line {lineno}")
                    continue
                try:
                    records.append(RawJudgment.from_record(rec))
                except (ValueError, KeyError) as exc:
                    errors.append(f"bad record at line {lineno}: {exc}")
    else:
        raise ConfigError(f"unknown ingest format: {format!r}")

    records.sort(key=lambda r: r.id)
    yield from records
