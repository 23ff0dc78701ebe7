"""Domain record types shared across the pipeline.

Every record round-trips through line-delimited JSON so that pipeline
stages can stream artifacts to and from disk.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Optional


class CourtTier(str, Enum):
    """Court levels used for cumulative subset experiments."""

    SCI = "SCI"
    HC = "HC"
    TRIBUNAL = "Tribunal"
    DAILY_ORDER_DISTRICT = "DailyOrderDistrict"


# Cumulative ladder: valid tier filters are prefixes of this order.
TIER_LADDER: tuple[CourtTier, ...] = (
    CourtTier.SCI,
    CourtTier.HC,
    CourtTier.TRIBUNAL,
    CourtTier.DAILY_ORDER_DISTRICT,
)


class Decision(int, Enum):
    """Case outcome: 0 rejected, 1 accepted, 2 partial acceptance."""

    REJECTED = 0
    ACCEPTED = 1
    PARTIAL = 2


@dataclass
class RawJudgment:
    """One unprocessed court document plus its metadata."""

    id: str
    court_tier: CourtTier
    raw_text: str
    date: Optional[_dt.date] = None

    def to_record(self) -> dict[str, Any]:
        rec = {
            "id": self.id,
            "court_tier": self.court_tier.value,
            "raw_text": self.raw_text,
        }
        if self.date is not None:
            rec["date"] = self.date.isoformat()
        return rec

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "RawJudgment":
        date = rec.get("date")
        return cls(
            id=rec["id"],
            court_tier=CourtTier(rec.get("court_tier", "SCI")),
            raw_text=rec["raw_text"],
            date=_dt.date.fromisoformat(date) if date else None,
        )


@dataclass
class CleanJudgment:
    """A judgment body after metadata stripping, extraction, and filters."""

    id: str
    court_tier: CourtTier
    body_text: str
    word_count: int
    date: Optional[_dt.date] = None

    def to_record(self) -> dict[str, Any]:
        rec = {
            "id": self.id,
            "court_tier": self.court_tier.value,
            "body_text": self.body_text,
            "word_count": self.word_count,
        }
        if self.date is not None:
            rec["date"] = self.date.isoformat()
        return rec

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "CleanJudgment":
        date = rec.get("date")
        return cls(
            id=rec["id"],
            court_tier=CourtTier(rec["court_tier"]),
            body_text=rec["body_text"],
            word_count=rec["word_count"],
            date=_dt.date.fromisoformat(date) if date else None,
        )


@dataclass
class Evidence:
    """One keyword hit backing a weak label.

    ``start``/``end`` are character offsets into the case body text and
    always fall inside the tail window that was scanned.
    """

    keyword: str
    start: int
    end: int
    polarity: str  # "accepted" | "rejected" | "partial"
    negated: bool

    def to_record(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "Evidence":
        return cls(**rec)


@dataclass
class LabeledCase:
    """A cleaned judgment plus its weak decision label and audit trail."""

    case: CleanJudgment
    label: Decision
    label_kind: str  # "single" | "multi"
    evidence: list[Evidence] = field(default_factory=list)

    def to_record(self) -> dict[str, Any]:
        rec = self.case.to_record()
        rec["label"] = int(self.label)
        rec["label_kind"] = self.label_kind
        rec["evidence"] = [ev.to_record() for ev in self.evidence]
        return rec

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "LabeledCase":
        case_fields = {
            k: rec[k] for k in ("id", "court_tier", "body_text", "word_count")
        }
        if rec.get("date"):
            case_fields["date"] = rec["date"]
        return cls(
            case=CleanJudgment.from_record(case_fields),
            label=Decision(rec["label"]),
            label_kind=rec["label_kind"],
            evidence=[Evidence.from_record(e) for e in rec.get("evidence", [])],
        )


@dataclass
class Chunk:
    """One token window of a long document."""

    case_id: str
    index: int
    start: int
    end: int
    tokens: list[str] = field(default_factory=list)

    def to_record(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "index": self.index,
            "start": self.start,
            "end": self.end,
        }


NO_DECISION = "NoDecision"


@dataclass
class PredictionRecord:
    """Parsed output of one inference call."""

    case_id: str
    predicted: Any  # 0 | 1 | "NoDecision"
    raw_output: str
    prompt_digest: str
    explanation: Optional[str] = None

    def to_record(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "predicted": self.predicted,
            "explanation": self.explanation,
            "raw_output": self.raw_output,
            "prompt_digest": self.prompt_digest,
        }

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "PredictionRecord":
        return cls(
            case_id=rec["case_id"],
            predicted=rec["predicted"],
            raw_output=rec.get("raw_output", ""),
            prompt_digest=rec.get("prompt_digest", ""),
            explanation=rec.get("explanation"),
        )

