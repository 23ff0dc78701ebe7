"""Deterministic synthetic judgment corpus for tests and demos.

Every generated document carries a metadata header, a body marker, a
filler body free of outcome vocabulary, and one or two decisive closing
sentences, so the whole corpus survives ingest filters and labels
cleanly.  Gold references hold the decisive sentences for explanation
scoring.
"""

from __future__ import annotations

import datetime as _dt
import random
from typing import Any

from .records import CourtTier, TIER_LADDER

# Filler vocabulary deliberately avoids every default lexicon word and
# body-marker token so planted outcomes stay the only signal.
_FILLER = (
    "the court heard learned counsel for both sides and examined the record "
    "of proceedings the statutory provisions relied upon were considered at "
    "length together with the precedents cited by the parties the factual "
    "matrix was set out in the impugned decision and the submissions were "
    "noted in detail the questions framed concern the interpretation of the "
    "relevant sections and the scope of the remedy available"
).split()

_ACCEPT_SENTENCES = (
    "In the result the appeal is allowed.",
    "The appeal is granted with costs.",
    "The petition is accepted and the impugned direction is set aside.",
)
_REJECT_SENTENCES = (
    "The appeal is dismissed.",
    "We find no merit and the petition is rejected.",
    "The appeal is denied with no order as to costs.",
)
_PARTIAL_SENTENCES = (
    "The appeal is partly allowed.",
    "The petition is partially granted.",
)

_HEADER = (
    "CASE NO:\n{case_no}\n"
    "APPELLANTS:\n{appellant}\n"
    "RESPONDENT:\n{respondent}\n"
    "DATE OF JUDGMENT:\n{date}\n"
    "BENCH:\n{bench}\n"
)

_MARKERS = ("JUDGMENT:", "ORDER:", "JUDGEMENT:")

_TIER_WEIGHTS = {
    CourtTier.SCI: 0.15,
    CourtTier.HC: 0.45,
    CourtTier.TRIBUNAL: 0.25,
    CourtTier.DAILY_ORDER_DISTRICT: 0.15,
}


def _pick_tier(rng: random.Random) -> CourtTier:
    return rng.choices(TIER_LADDER, weights=[_TIER_WEIGHTS[t] for t in TIER_LADDER])[0]


def generate_corpus(
    n: int = 1000, seed: int = 13
) -> tuple[list[dict[str, Any]], list[dict[str, str]]]:
    """Build ``n`` raw judgment records plus gold explanation references.

    Outcome mix: ~45% accepted, ~35% rejected, ~12% partial marker,
    ~8% mixed verdicts (also partial).  All documents pass the default
    ingest filters and produce a weak label.
    """
    rng = random.Random(seed)
    records = []
    references = []
    for i in range(n):
        case_id = f"case{i:05d}"
        outcome = rng.choices(
            ("accept", "reject", "partial", "mixed"), weights=(45, 35, 12, 8)
        )[0]
        if outcome == "accept":
            decisive = [rng.choice(_ACCEPT_SENTENCES)]
        elif outcome == "reject":
            decisive = [rng.choice(_REJECT_SENTENCES)]
        elif outcome == "partial":
            decisive = [rng.choice(_PARTIAL_SENTENCES)]
        else:
            decisive = [
                "The first appeal is granted.",
                "The second appeal is dismissed.",
            ]

        n_words = rng.randint(80, 1500)
        body_words = [rng.choice(_FILLER) for _ in range(n_words)]
        # plant a few noisy tokens that token cleaning must remove
        for _ in range(rng.randint(0, 4)):
            body_words.insert(rng.randrange(len(body_words)), "xxxx" * rng.randint(1, 3))
        body = " ".join(body_words) + " " + " ".join(decisive)

        date = _dt.date(
            rng.randint(2015, 2024), rng.randint(1, 12), rng.randint(1, 28)
        )
        text = (
            _HEADER.format(
                case_no=f"CIVIL APPEAL NO. {rng.randint(1, 9999)} OF {date.year}",
                appellant=f"PARTY {rng.randint(1, 500)}",
                respondent=f"STATE {rng.randint(1, 30)}",
                date=date.strftime("%d/%m/%Y"),
                bench=f"JUSTICE {rng.randint(1, 40)}",
            )
            + rng.choice(_MARKERS)
            + "\n"
            + body
        )
        records.append(
            {
                "id": case_id,
                "court_tier": _pick_tier(rng).value,
                "date": date.isoformat(),
                "raw_text": text,
            }
        )
        references.append({"case_id": case_id, "reference": " ".join(decisive)})
    return records, references
