"""Reproducible splits, tier subsets, temporal test sets, and stats tables.

Splits are id manifests, never copied text: a manifest file is one
header line carrying the config digest followed by one id per line.
"""

from __future__ import annotations

import datetime as _dt
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .io import ArtifactError, digest_obj
from .labeler import to_task_label
from .records import CourtTier, Decision, LabeledCase, TIER_LADDER
from .validation import ConfigError, check_ratio

logger = logging.getLogger(__name__)

# Row labels must match the published table schemas byte for byte
# (including the single inconsistent space before "(%)").
BINARY_STAT_ROWS = ("#Documents", "Avg #words", "Acceptance(%)")
TERNARY_STAT_ROWS = (
    "#Documents",
    "Avg #words",
    "Clear acceptance(%)",
    "Partial acceptance (%)",
)
BINARY_STAT_COLUMNS = ("Train multi", "Train single", "Validation", "Test")
TERNARY_STAT_COLUMNS = ("Train", "Validation", "Test")


def parse_tiers(tiers: Sequence[CourtTier | str]) -> tuple[CourtTier, ...]:
    """Validate that ``tiers`` is a cumulative prefix of the tier ladder."""
    parsed = tuple(CourtTier(t) for t in tiers)
    if parsed != TIER_LADDER[: len(parsed)] or not parsed:
        raise ConfigError(
            f"tiers must be a non-empty prefix of {[t.value for t in TIER_LADDER]}, "
            f"got {[t.value for t in parsed]}"
        )
    return parsed


@dataclass(frozen=True)
class SplitConfig:
    ratio: tuple[float, float, float] = (70.0, 10.0, 20.0)
    seed: int = 13
    task: str = "binary"
    variant: str = "single"
    tiers: tuple[CourtTier, ...] = TIER_LADDER
    temporal_test: Optional[tuple[_dt.date, _dt.date]] = None
    stratify: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ratio", check_ratio(self.ratio))
        object.__setattr__(self, "tiers", parse_tiers(self.tiers))
        if self.task not in ("binary", "ternary"):
            raise ConfigError(f"unknown task: {self.task!r}")
        if self.variant not in ("single", "multi"):
            raise ConfigError(f"unknown variant: {self.variant!r}")
        if self.temporal_test is not None:
            start, end = self.temporal_test
            if start > end:
                raise ConfigError("temporal_test start must be <= end")

    def to_record(self) -> dict:
        rec = {
            "ratio": list(self.ratio),
            "seed": self.seed,
            "task": self.task,
            "variant": self.variant,
            "tiers": [t.value for t in self.tiers],
            "stratify": self.stratify,
        }
        if self.temporal_test is not None:
            rec["temporal_test"] = [d.isoformat() for d in self.temporal_test]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "SplitConfig":
        temporal = rec.get("temporal_test")
        return cls(
            ratio=tuple(rec.get("ratio", (70.0, 10.0, 20.0))),
            seed=rec.get("seed", 13),
            task=rec.get("task", "binary"),
            variant=rec.get("variant", "single"),
            tiers=tuple(CourtTier(t) for t in rec.get("tiers", TIER_LADDER)),
            temporal_test=(
                tuple(_dt.date.fromisoformat(d) for d in temporal) if temporal else None
            ),
            stratify=rec.get("stratify", False),
        )

    def digest(self) -> str:
        return digest_obj(self.to_record())


@dataclass
class DatasetSplit:
    config: SplitConfig
    train: list[str]
    val: list[str]
    test: list[str]
    temporal: list[str] = field(default_factory=list)

    @property
    def manifest_hash(self) -> str:
        return digest_obj(
            {
                "config": self.config.to_record(),
                "train": self.train,
                "val": self.val,
                "test": self.test,
                "temporal": self.temporal,
            }
        )

    def buckets(self) -> dict[str, list[str]]:
        return {"train": self.train, "val": self.val, "test": self.test}


def apportion(n: int, ratio: Sequence[float]) -> tuple[int, ...]:
    """Largest-remainder apportionment of n items; ties go to the
    earliest bucket (train first)."""
    exact = [n * r / 100.0 for r in ratio]
    sizes = [int(x) for x in exact]
    remainders = [x - s for x, s in zip(exact, sizes)]
    seats = n - sum(sizes)
    order = sorted(range(len(ratio)), key=lambda i: (-remainders[i], i))
    for i in order[:seats]:
        sizes[i] += 1
    return tuple(sizes)


def tier_subset(
    cases: Iterable[LabeledCase], tiers: Sequence[CourtTier | str]
) -> list[LabeledCase]:
    wanted = set(parse_tiers(tiers))
    return [c for c in cases if c.case.court_tier in wanted]


def eligible_cases(cases: Iterable[LabeledCase], cfg: SplitConfig) -> list[LabeledCase]:
    """Filter to the config's tiers and task/variant label space."""
    subset = tier_subset(cases, cfg.tiers)
    return [
        c for c in subset if to_task_label(c, cfg.task, cfg.variant) is not None
    ]


def make_temporal_test(
    cases: Iterable[LabeledCase], start: _dt.date, end: _dt.date
) -> tuple[list[str], int]:
    """Ids of cases dated within [start, end]; returns (ids, undated count)."""
    if start > end:
        raise ConfigError("temporal range start must be <= end")
    ids, undated = [], 0
    for c in cases:
        if c.case.date is None:
            undated += 1
            continue
        if start <= c.case.date <= end:
            ids.append(c.case.id)
    return sorted(ids), undated


def make_split(cases: Sequence[LabeledCase], cfg: SplitConfig) -> DatasetSplit:
    """Deterministic seeded shuffle, then a contiguous ratio cut.

    Cases must already be filtered to the config's task/variant/tiers
    (see :func:`eligible_cases`).  When the config carries a temporal
    range, in-range cases are carved out first so they never reach the
    train or val buckets.
    """
    ids = sorted(c.case.id for c in cases)
    if len(ids) != len(set(ids)):
        raise ConfigError("duplicate case ids in split input")

    temporal: list[str] = []
    if cfg.temporal_test is not None:
        temporal, undated = make_temporal_test(cases, *cfg.temporal_test)
        if undated:
            logger.warning("temporal test: %d undated cases excluded", undated)
        carved = set(temporal)
        ids = [i for i in ids if i not in carved]

    if len(ids) < 10:
        raise ConfigError(
            f"cannot realize a {cfg.ratio} split with only {len(ids)} cases"
        )

    rng = random.Random(cfg.seed)
    if cfg.stratify:
        label_of = {
            c.case.id: to_task_label(c, cfg.task, cfg.variant) for c in cases
        }
        groups: dict[int, list[str]] = {}
        for i in ids:
            groups.setdefault(label_of[i], []).append(i)
        buckets: tuple[list[str], list[str], list[str]] = ([], [], [])
        for label in sorted(groups):
            group = groups[label]
            rng.shuffle(group)
            sizes = apportion(len(group), cfg.ratio)
            offset = 0
            for b, size in zip(buckets, sizes):
                b.extend(group[offset:offset + size])
                offset += size
        train, val, test = buckets
    else:
        rng.shuffle(ids)
        n_train, n_val, n_test = apportion(len(ids), cfg.ratio)
        train = ids[:n_train]
        val = ids[n_train:n_train + n_val]
        test = ids[n_train + n_val:]

    return DatasetSplit(config=cfg, train=train, val=val, test=test, temporal=temporal)


def write_manifest(path: str | Path, ids: Sequence[str], config_digest: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#config={config_digest}\n")
        for i in ids:
            fh.write(i + "\n")


def read_manifest(path: str | Path) -> tuple[str, list[str]]:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"manifest not found: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#config="):
            raise ArtifactError(f"{path}: missing config digest header")
        digest = header.split("=", 1)[1]
        ids = [line.strip() for line in fh if line.strip()]
    return digest, ids


@dataclass
class StatsTable:
    """Per-bucket corpus statistics in a published table schema."""

    task: str
    columns: tuple[str, ...]
    cells: dict[str, dict[str, Optional[float]]]  # row label -> column -> value

    @property
    def rows(self) -> tuple[str, ...]:
        return BINARY_STAT_ROWS if self.task == "binary" else TERNARY_STAT_ROWS

    def to_records(self) -> list[dict]:
        return [
            {"metric": row, **{col: self.cells[row].get(col) for col in self.columns}}
            for row in self.rows
        ]

    def render(self) -> str:
        def fmt(row: str, value: Optional[float]) -> str:
            if value is None:
                return "-"
            if row in ("#Documents", "Avg #words"):
                return f"{int(value):,}"
            return f"{value:.2f}"

        widths = {}
        header = ["Metric"] + list(self.columns)
        table = [header] + [
            [row] + [fmt(row, self.cells[row].get(col)) for col in self.columns]
            for row in self.rows
        ]
        for line in table:
            for i, cell in enumerate(line):
                widths[i] = max(widths.get(i, 0), len(cell))
        out = []
        for j, line in enumerate(table):
            out.append(
                "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip()
            )
            if j == 0:
                out.append("  ".join("-" * widths[i] for i in range(len(line))))
        return "\n".join(out)


def _bucket_column(
    cases: Sequence[LabeledCase], task: str
) -> dict[str, Optional[float]]:
    n = len(cases)
    col: dict[str, Optional[float]] = {"#Documents": float(n)}
    if n == 0:
        col["Avg #words"] = None
        if task == "binary":
            col["Acceptance(%)"] = None
        else:
            col["Clear acceptance(%)"] = None
            col["Partial acceptance (%)"] = None
        return col
    col["Avg #words"] = float(round(sum(c.case.word_count for c in cases) / n))
    accepted = sum(1 for c in cases if c.label is Decision.ACCEPTED)
    if task == "binary":
        col["Acceptance(%)"] = round(100.0 * accepted / n, 2)
    else:
        partial = sum(1 for c in cases if c.label is Decision.PARTIAL)
        col["Clear acceptance(%)"] = round(100.0 * accepted / n, 2)
        col["Partial acceptance (%)"] = round(100.0 * partial / n, 2)
    return col


def compute_stats(
    buckets: Mapping[str, Sequence[LabeledCase]], task: str
) -> StatsTable:
    """Build a stats table from named buckets of labeled cases.

    Binary tables use the columns (Train multi, Train single,
    Validation, Test); ternary tables use (Train, Validation, Test).
    Missing buckets render as empty columns.
    """
    columns = BINARY_STAT_COLUMNS if task == "binary" else TERNARY_STAT_COLUMNS
    rows = BINARY_STAT_ROWS if task == "binary" else TERNARY_STAT_ROWS
    cells: dict[str, dict[str, Optional[float]]] = {row: {} for row in rows}
    for col in columns:
        col_stats = _bucket_column(list(buckets.get(col, [])), task)
        for row in rows:
            cells[row][col] = col_stats[row]
    return StatsTable(task=task, columns=columns, cells=cells)


def split_stats(
    split: DatasetSplit,
    cases: Iterable[LabeledCase],
    train_multi_split: Optional[DatasetSplit] = None,
) -> StatsTable:
    """Stats for a split in its task's table schema.

    For the binary schema the "Train multi" column comes from the
    companion multi-variant split when given, otherwise stays empty.
    """
    by_id = {c.case.id: c for c in cases}

    def resolve(ids: Sequence[str]) -> list[LabeledCase]:
        try:
            return [by_id[i] for i in ids]
        except KeyError as exc:
            raise ArtifactError(f"split id not in corpus: {exc}") from exc

    task = split.config.task
    if task == "binary":
        buckets = {
            "Train single": resolve(split.train),
            "Validation": resolve(split.val),
            "Test": resolve(split.test),
        }
        if train_multi_split is not None:
            buckets["Train multi"] = resolve(train_multi_split.train)
        return compute_stats(buckets, "binary")
    buckets = {
        "Train": resolve(split.train),
        "Validation": resolve(split.val),
        "Test": resolve(split.test),
    }
    return compute_stats(buckets, "ternary")
