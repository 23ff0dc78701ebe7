"""Expert-rating workflow: task sampling, a rating ledger, and an HTTP API.

Ratings are appended to a ledger file and never mutated; exports are
pure views over the ledger.  The HTTP layer is a thin FastAPI wrapper
around the store so browser clients and scripts share one contract.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import pydantic

from .io import digest_text, dumps_record, write_records
from .metrics import LikertRating, likert_aggregate
from .records import PredictionRecord

# 1-5 scale semantics shown to raters next to every task.
RUBRIC: tuple[str, ...] = (
    "1 - Incorrect or irrelevant: the explanation does not engage with the "
    "case judgment in any meaningful way.",
    "2 - Off the mark: some attempt is visible, but the explanation "
    "misreads the case and does not reflect its details.",
    "3 - Partially accurate: contains correct elements but misses details "
    "needed to fully understand the judgment.",
    "4 - Accurate and relevant: aligns well with the expected reasoning, "
    "comparable to the reference explanation.",
    "5 - Exceptional: fully accurate and relevant, potentially better than "
    "the expert's own explanation.",
)


class AnnotationError(ValueError):
    """Validation failure in the annotation workflow."""


class DuplicateRating(AnnotationError):
    """This rater already rated this task."""


@dataclass
class AnnotationTask:
    task_id: str
    case_id: str
    model_id: str
    case_excerpt: str
    predicted_label: Any
    explanation: str
    status: str = "open"  # open -> rated

    def to_record(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "case_id": self.case_id,
            "model_id": self.model_id,
            "case_excerpt": self.case_excerpt,
            "predicted_label": self.predicted_label,
            "explanation": self.explanation,
            "status": self.status,
        }

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "AnnotationTask":
        return cls(**rec)


@dataclass
class RatingSubmission:
    task_id: str
    rater_id: str
    score: int
    comment: Optional[str] = None


def create_tasks(
    run: Sequence[PredictionRecord],
    sample: int,
    seed: int,
    run_id: str = "run",
    model_id: str = "model",
    case_texts: Optional[Mapping[str, str]] = None,
    excerpt_chars: int = 1200,
) -> list[AnnotationTask]:
    """Deterministically sample explanation-bearing records into tasks.

    Task ids are digests of (run_id, case_id, model_id) so the same
    seed always reproduces the same task set.
    """
    eligible = [r for r in run if r.explanation]
    if not eligible:
        raise AnnotationError("no explanation-bearing records to sample")
    if sample > len(eligible):
        raise AnnotationError(
            f"sample {sample} exceeds {len(eligible)} eligible records"
        )
    eligible = sorted(eligible, key=lambda r: r.case_id)
    chosen = random.Random(seed).sample(eligible, sample)
    tasks = []
    for rec in sorted(chosen, key=lambda r: r.case_id):
        excerpt = ""
        if case_texts and rec.case_id in case_texts:
            excerpt = case_texts[rec.case_id][:excerpt_chars]
        tasks.append(
            AnnotationTask(
                task_id=digest_text(f"{run_id}|{rec.case_id}|{model_id}")[:12],
                case_id=rec.case_id,
                model_id=model_id,
                case_excerpt=excerpt,
                predicted_label=rec.predicted,
                explanation=rec.explanation,
            )
        )
    return tasks


class AnnotationStore:
    """Tasks plus an append-only rating ledger on disk.

    All mutation goes through one lock, so concurrent submissions
    serialize and duplicates lose deterministically.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.tasks_path = self.root / "tasks.jsonl"
        self.ledger_path = self.root / "ratings.jsonl"
        self.raters_path = self.root / "raters.jsonl"
        self._lock = threading.Lock()
        self._tasks: dict[str, AnnotationTask] = {}
        self._ratings: list[LikertRating] = []
        self._rated_pairs: set[tuple[str, str]] = set()
        self._raters: set[str] = set()
        self._load()

    # -- persistence ------------------------------------------------------

    def _load(self) -> None:
        if self.tasks_path.exists():
            with open(self.tasks_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        task = AnnotationTask.from_record(json.loads(line))
                        self._tasks[task.task_id] = task
        if self.ledger_path.exists():
            with open(self.ledger_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        rating = LikertRating(
                            rater_id=rec["rater_id"],
                            case_id=rec["case_id"],
                            model_id=rec["model_id"],
                            score=rec["score"],
                            timestamp=rec.get("timestamp", ""),
                        )
                        self._ratings.append(rating)
                        self._rated_pairs.add((rec["task_id"], rec["rater_id"]))
        if self.raters_path.exists():
            with open(self.raters_path, encoding="utf-8") as fh:
                self._raters = {line.strip() for line in fh if line.strip()}

    def _append(self, path: Path, line: str) -> None:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()

    # -- workflow ---------------------------------------------------------

    def add_tasks(self, tasks: Sequence[AnnotationTask]) -> None:
        with self._lock:
            with open(self.tasks_path, "w", encoding="utf-8") as fh:
                for task in tasks:
                    fh.write(dumps_record(task.to_record()) + "\n")
            self._tasks = {t.task_id: t for t in tasks}

    def register_rater(self, rater_id: str) -> None:
        if not rater_id or not rater_id.strip():
            raise AnnotationError("rater_id must be non-empty")
        with self._lock:
            if rater_id not in self._raters:
                self._raters.add(rater_id)
                self._append(self.raters_path, rater_id)

    def tasks(self) -> list[AnnotationTask]:
        return sorted(self._tasks.values(), key=lambda t: t.task_id)

    def progress(self, rater_id: str) -> dict[str, int]:
        rated = sum(1 for t, r in self._rated_pairs if r == rater_id)
        return {"rated": rated, "total": len(self._tasks)}

    def next_task(self, rater_id: str) -> Optional[AnnotationTask]:
        """First task (stable order) this rater has not rated; None = done."""
        if rater_id not in self._raters:
            raise AnnotationError(f"unknown rater: {rater_id!r}")
        for task in self.tasks():
            if (task.task_id, rater_id) not in self._rated_pairs:
                return task
        return None

    def submit_rating(self, sub: RatingSubmission) -> dict[str, Any]:
        """Validate and persist one rating; append-only, duplicates rejected."""
        task = self._tasks.get(sub.task_id)
        if task is None:
            raise AnnotationError(f"unknown task: {sub.task_id!r}")
        if sub.rater_id not in self._raters:
            raise AnnotationError(f"unknown rater: {sub.rater_id!r}")
        if not isinstance(sub.score, int) or sub.score not in (1, 2, 3, 4, 5):
            raise AnnotationError(f"score must be an integer in 1..5, got {sub.score!r}")
        with self._lock:
            key = (sub.task_id, sub.rater_id)
            if key in self._rated_pairs:
                raise DuplicateRating(
                    f"rater {sub.rater_id!r} already rated task {sub.task_id!r}"
                )
            rating = LikertRating.now(
                rater_id=sub.rater_id,
                case_id=task.case_id,
                model_id=task.model_id,
                score=sub.score,
            )
            rec = rating.to_record()
            rec["task_id"] = sub.task_id
            if sub.comment:
                rec["comment"] = sub.comment
            self._append(self.ledger_path, dumps_record(rec))
            self._rated_pairs.add(key)
            self._ratings.append(rating)
            task.status = "rated"
        return {"ok": True, "task_id": sub.task_id, "progress": self.progress(sub.rater_id)}

    # -- export -----------------------------------------------------------

    def ratings(self) -> list[LikertRating]:
        return list(self._ratings)

    def distribution(self) -> dict[str, dict[str, Any]]:
        """Per-model histogram over columns 1..5 plus the mean."""
        by_model: dict[str, list[int]] = {}
        for r in self._ratings:
            by_model.setdefault(r.model_id, []).append(r.score)
        return {
            model: likert_aggregate(scores) for model, scores in sorted(by_model.items())
        }

    def export(self, path: str | Path) -> dict[str, Any]:
        """Write the rating records artifact; returns the distribution."""
        ordered = sorted(
            self._ratings, key=lambda r: (r.model_id, r.case_id, r.rater_id)
        )
        dist = self.distribution()
        write_records(
            path,
            (r.to_record() for r in ordered),
            meta={"kind": "likert_ratings", "n": len(ordered), "distribution": dist},
        )
        return dist

    def render_distribution(self) -> str:
        """Aligned table with one row per model and columns 1..5 + mean."""
        dist = self.distribution()
        header = ["Model", "1", "2", "3", "4", "5", "Mean"]
        rows = []
        for model, agg in dist.items():
            rows.append(
                [model]
                + [str(agg["distribution"][k]) for k in (1, 2, 3, 4, 5)]
                + [f"{agg['mean']:.2f}"]
            )
        table = [header] + rows
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        lines = []
        for j, row in enumerate(table):
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
            if j == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines)


class RaterBody(pydantic.BaseModel):
    rater_id: str


class RatingBody(pydantic.BaseModel):
    task_id: str
    rater_id: str
    score: int
    comment: Optional[str] = None


def create_app(store: AnnotationStore, static_dir: Optional[str | Path] = None):
    """FastAPI wrapper exposing the annotation contract over local HTTP."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse

    app = FastAPI(title="jurispipe annotation service")

    @app.get("/api/health")
    def health():
        return {"ok": True, "tasks": len(store.tasks())}

    @app.get("/api/rubric")
    def rubric():
        return {"rubric": list(RUBRIC)}

    @app.post("/api/raters")
    def register(body: RaterBody):
        try:
            store.register_rater(body.rater_id)
        except AnnotationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"ok": True, "rater_id": body.rater_id}

    @app.get("/api/raters/{rater_id}/next")
    def next_task(rater_id: str):
        try:
            task = store.next_task(rater_id)
        except AnnotationError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        progress = store.progress(rater_id)
        if task is None:
            return {"done": True, "progress": progress, "rubric": list(RUBRIC)}
        view = task.to_record()
        view.update({"done": False, "progress": progress, "rubric": list(RUBRIC)})
        return view

    @app.post("/api/ratings")
    def submit(body: RatingBody):
        sub = RatingSubmission(
            task_id=body.task_id,
            rater_id=body.rater_id,
            score=body.score,
            comment=body.comment,
        )
        try:
            return store.submit_rating(sub)
        except DuplicateRating as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except AnnotationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/api/export")
    def export():
        ordered = sorted(
            store.ratings(), key=lambda r: (r.model_id, r.case_id, r.rater_id)
        )
        return JSONResponse(
            {
                "ratings": [r.to_record() for r in ordered],
                "distribution": store.distribution(),
            }
        )

    if static_dir is not None and Path(static_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
