"""Pipeline orchestration: composable subcommands over line-delimited artifacts.

Every artifact embeds the effective config digest and the digests of
its input artifacts; ``verify`` walks that chain.  All randomness flows
from config seeds (default 13, printed at startup).
"""

from __future__ import annotations

import copy
import datetime as _dt
import os
from pathlib import Path
from typing import Any, Optional

import click
import yaml

from . import annotate as annotate_mod
from . import fixtures
from .chunker import SlidingWindowChunker
from .datasets import (
    DatasetSplit,
    SplitConfig,
    eligible_cases,
    make_split,
    read_manifest,
    split_stats,
    write_manifest,
)
from .ingest import JudgmentCleaner, load_raw
from .io import (
    ArtifactError,
    digest_file,
    digest_obj,
    read_meta,
    read_records,
    write_records,
)
from .labeler import WeakLabeler
from .metrics import (
    HashingEmbedder,
    confusion,
    explanation_report,
    macro_report,
)
from .prompts import (
    InstructionSampler,
    KeywordStubBackend,
    PipeBackend,
    exemplars_digest,
    load_exemplars,
    load_pools,
    load_templates,
    predict_case,
    truncate_case_text,
)
from .records import CleanJudgment, LabeledCase
from .validation import ConfigError

DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 13,
    "ingest": {
        "format": "line_delimited_records",
        "min_words": 50,
        "max_words": 32000,
        "keep_unmarked": False,
        "patterns": None,
    },
    "labeler": {
        "lexicons": None,
        "window_words": 750,
        "context_radius": 10,
        "negation_radius": 3,
    },
    "split": {
        "ratio": [70, 10, 20],
        "task": "binary",
        "variant": "single",
        "tiers": ["SCI", "HC", "Tribunal", "DailyOrderDistrict"],
        "temporal_start": None,
        "temporal_end": None,
        "stratify": False,
    },
    "chunker": {"window": 512, "overlap": 100, "pad_final": False},
    "prompts": {
        "template": "instr_pred_expl",
        "max_new_tokens": 256,
        "temperature": 0.0,
        "truncate_words": 1500,
        "truncate_strategy": "tail",
    },
    "metrics": {"embedder": "hashing"},
    "annotate": {"sample": 50, "excerpt_chars": 1200},
}

ENV_PREFIX = "JURISPIPE"

# upstream command per artifact kind, for "run X first" errors
_UPSTREAM_HINTS = {
    "clean": "ingest",
    "labeled": "label",
    "split": "split",
    "chunks": "chunk",
    "predictions": "predict",
    "fixture": "make-fixture",
}


def _deep_update(base: dict, extra: dict) -> dict:
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def load_config(path: Optional[str]) -> dict[str, Any]:
    """File config over defaults, then environment overrides
    (JURISPIPE_<SECTION>_<KEY>, values parsed as YAML)."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        with open(path, encoding="utf-8") as fh:
            _deep_update(cfg, yaml.safe_load(fh) or {})
    for key, raw in os.environ.items():
        if not key.startswith(ENV_PREFIX + "_"):
            continue
        parts = key[len(ENV_PREFIX) + 1:].lower().split("_", 1)
        value = yaml.safe_load(raw)
        if len(parts) == 1:
            cfg[parts[0]] = value
        elif parts[0] in cfg and isinstance(cfg[parts[0]], dict):
            cfg[parts[0]][parts[1]] = value
    return cfg


class Pipeline:
    """Shared state for one CLI invocation.

    The config digest is a snapshot of file + environment config taken
    at startup; per-command flag overrides do not change pipeline
    identity but are recorded in each artifact's meta line.
    """

    def __init__(self, config_path: Optional[str], output_dir: str, force: bool):
        self.config = load_config(config_path)
        self.out = Path(output_dir)
        self.force = force
        self._digest = digest_obj(self.config)
        self.overrides: dict[str, Any] = {}

    @property
    def seed(self) -> int:
        return int(self.config["seed"])

    def digest(self) -> str:
        return self._digest

    def override(self, section: str, **values) -> dict[str, Any]:
        """Apply non-None flag values onto a config section."""
        target = self.config[section]
        for key, value in values.items():
            if value is not None:
                target[key] = value
                self.overrides[f"{section}.{key}"] = value
        return target

    def path(self, name: str) -> Path:
        return self.out / name

    def meta(self, kind: str, inputs: dict[str, Path], **extra) -> dict[str, Any]:
        meta = {
            "kind": kind,
            "config_digest": self.digest(),
            "seed": self.seed,
            "inputs": {
                role: {"path": str(p), "digest": digest_file(p)}
                for role, p in inputs.items()
            },
            **extra,
        }
        if self.overrides:
            meta["flag_overrides"] = dict(self.overrides)
        return meta

    def require(self, path: Path, kind: Optional[str] = None) -> Path:
        if not path.exists():
            hint = _UPSTREAM_HINTS.get(kind or "", None)
            msg = f"missing upstream artifact: {path}"
            if hint:
                msg += f" (run `jurispipe {hint}` first)"
            raise click.ClickException(msg)
        if kind is not None:
            meta = read_meta(path)
            upstream = meta.get("config_digest")
            if upstream and upstream != self.digest() and not self.force:
                raise click.ClickException(
                    f"config digest mismatch for {path}: artifact has {upstream}, "
                    f"current config is {self.digest()} (use --force to mix)"
                )
        return path


pass_pipeline = click.make_pass_decorator(Pipeline)


def _fail(exc: Exception) -> None:
    raise click.ClickException(f"{type(exc).__name__}: {exc}")


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML config file; flags and env vars override it.")
@click.option("--output-dir", "-o", default="runs", show_default=True,
              help="Directory for pipeline artifacts.")
@click.option("--force", is_flag=True, help="Allow mixing artifacts across configs.")
@click.pass_context
def main(ctx, config_path, output_dir, force):
    """Judgment-prediction corpus pipeline."""
    ctx.obj = Pipeline(config_path, output_dir, force)
    click.echo(
        f"seed: {ctx.obj.seed}  config: {ctx.obj.digest()}", err=True
    )


@main.command("make-fixture")
@click.option("--n", default=1000, show_default=True)
@click.option("--seed", default=None, type=int, help="Defaults to the config seed.")
@pass_pipeline
def make_fixture(pipe: Pipeline, n, seed):
    """Generate the synthetic judgment corpus and gold references."""
    seed = pipe.seed if seed is None else seed
    records, references = fixtures.generate_corpus(n=n, seed=seed)
    corpus = pipe.path("corpus.jsonl")
    refs = pipe.path("references.jsonl")
    write_records(corpus, records, meta={"kind": "fixture", "seed": seed,
                                         "config_digest": pipe.digest(), "n": n})
    write_records(refs, references, meta={"kind": "references", "seed": seed,
                                          "config_digest": pipe.digest(), "n": n})
    click.echo(f"wrote {n} raw documents to {corpus}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--format", "fmt", default=None,
              type=click.Choice(["plain_text", "line_delimited_records"]))
@click.option("--patterns", default=None, type=click.Path(exists=True),
              help="YAML metadata-removal rules.")
@click.option("--keep-unmarked", is_flag=True, default=None)
@click.option("--min-words", default=None, type=int)
@click.option("--max-words", default=None, type=int)
@pass_pipeline
def ingest(pipe: Pipeline, input_path, fmt, patterns, keep_unmarked, min_words, max_words):
    """Clean raw judgments into body records plus a drop log."""
    section = pipe.override(
        "ingest", format=fmt, patterns=patterns, keep_unmarked=keep_unmarked,
        min_words=min_words, max_words=max_words,
    )

    input_path = Path(input_path)
    if not input_path.exists():
        raise click.ClickException(f"unreadable input: {input_path}")
    errors: list[str] = []
    try:
        raws = list(load_raw(input_path, format=section["format"], errors=errors))
        cleaner = JudgmentCleaner(
            rules_file=section["patterns"],
            keep_unmarked=section["keep_unmarked"],
            min_words=section["min_words"],
            max_words=section["max_words"],
        ).fit()
        kept, dropped = cleaner.process_all(raws)
    except (ConfigError, ArtifactError) as exc:
        _fail(exc)
    for err in errors:
        click.echo(f"record error: {err}", err=True)

    meta = pipe.meta("clean", {"raw": input_path}, n_kept=len(kept), n_dropped=len(dropped))
    write_records(pipe.path("clean.jsonl"), (c.to_record() for c in kept), meta=meta)
    write_records(
        pipe.path("drops.jsonl"),
        (d.to_record() for d in dropped),
        meta=pipe.meta("drops", {"raw": input_path}),
    )
    click.echo(f"kept {len(kept)}, dropped {len(dropped)} -> {pipe.path('clean.jsonl')}")


@main.command()
@click.option("--input", "input_path", default=None, type=click.Path())
@click.option("--lexicons", default=None, type=click.Path(exists=True))
@click.option("--context-radius", default=None, type=int)
@click.option("--negation-radius", default=None, type=int)
@pass_pipeline
def label(pipe: Pipeline, input_path, lexicons, context_radius, negation_radius):
    """Weakly label cleaned judgments; unlabelable cases are excluded."""
    section = pipe.override(
        "labeler", lexicons=lexicons, context_radius=context_radius,
        negation_radius=negation_radius,
    )

    clean_path = pipe.require(
        Path(input_path) if input_path else pipe.path("clean.jsonl"), "clean"
    )
    try:
        cases = [CleanJudgment.from_record(r) for r in read_records(clean_path)]
        labeler = WeakLabeler(
            lexicon_file=section["lexicons"],
            window_words=section["window_words"],
            context_radius=section["context_radius"],
            negation_radius=section["negation_radius"],
        ).fit()
        labeled, excluded = labeler.label_all(cases)
    except (ConfigError, ArtifactError) as exc:
        _fail(exc)

    meta = pipe.meta("labeled", {"clean": clean_path},
                     n_labeled=len(labeled), n_excluded=len(excluded))
    write_records(pipe.path("labeled.jsonl"), (c.to_record() for c in labeled), meta=meta)
    write_records(
        pipe.path("excluded.jsonl"),
        ({"id": i, "reason": "Unlabelable"} for i in excluded),
        meta=pipe.meta("excluded", {"clean": clean_path}),
    )
    click.echo(
        f"labeled {len(labeled)}, excluded {len(excluded)} -> {pipe.path('labeled.jsonl')}"
    )


def _split_config(pipe: Pipeline) -> SplitConfig:
    s = pipe.config["split"]
    temporal = None
    if s.get("temporal_start") and s.get("temporal_end"):
        temporal = (
            _dt.date.fromisoformat(str(s["temporal_start"])),
            _dt.date.fromisoformat(str(s["temporal_end"])),
        )
    return SplitConfig(
        ratio=tuple(s["ratio"]),
        seed=pipe.seed,
        task=s["task"],
        variant=s["variant"],
        tiers=tuple(s["tiers"]),
        temporal_test=temporal,
        stratify=bool(s.get("stratify", False)),
    )


def _load_labeled(pipe: Pipeline, path: Optional[str] = None) -> list[LabeledCase]:
    labeled_path = pipe.require(
        Path(path) if path else pipe.path("labeled.jsonl"), "labeled"
    )
    return [LabeledCase.from_record(r) for r in read_records(labeled_path)]


@main.command()
@click.option("--input", "input_path", default=None, type=click.Path())
@click.option("--task", default=None, type=click.Choice(["binary", "ternary"]))
@click.option("--variant", default=None, type=click.Choice(["single", "multi"]))
@click.option("--tiers", default=None, help="Comma-separated cumulative prefix.")
@click.option("--ratio", default=None, help="Comma-separated train,val,test percentages.")
@click.option("--temporal-start", default=None)
@click.option("--temporal-end", default=None)
@click.option("--stratify", is_flag=True, default=None)
@pass_pipeline
def split(pipe: Pipeline, input_path, task, variant, tiers, ratio,
          temporal_start, temporal_end, stratify):
    """Build train/val/test manifests (and a temporal test manifest)."""
    pipe.override(
        "split",
        task=task,
        variant=variant,
        tiers=[t.strip() for t in tiers.split(",")] if tiers else None,
        ratio=[float(x) for x in ratio.split(",")] if ratio else None,
        temporal_start=temporal_start,
        temporal_end=temporal_end,
        stratify=stratify,
    )

    try:
        cfg = _split_config(pipe)
        cases = _load_labeled(pipe, input_path)
        eligible = eligible_cases(cases, cfg)
        result = make_split(eligible, cfg)
    except (ConfigError, ArtifactError) as exc:
        _fail(exc)

    split_dir = pipe.path("split")
    split_dir.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    for bucket, ids in result.buckets().items():
        write_manifest(split_dir / f"{bucket}.ids", ids, digest)
    if result.temporal:
        write_manifest(split_dir / "temporal.ids", result.temporal, digest)
    summary = {
        "config": cfg.to_record(),
        "config_digest": pipe.digest(),
        "split_digest": digest,
        "manifest_hash": result.manifest_hash,
        "sizes": {b: len(ids) for b, ids in result.buckets().items()},
        "n_temporal": len(result.temporal),
    }
    (split_dir / "split.json").write_text(
        __import__("json").dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    click.echo(
        "split sizes: "
        + ", ".join(f"{b}={len(ids)}" for b, ids in result.buckets().items())
        + (f", temporal={len(result.temporal)}" if result.temporal else "")
    )


def _load_split(pipe: Pipeline, split_dir: Optional[str]) -> DatasetSplit:
    sdir = Path(split_dir) if split_dir else pipe.path("split")
    summary_path = sdir / "split.json"
    if not summary_path.exists():
        raise click.ClickException(
            f"missing upstream artifact: {summary_path} (run `jurispipe split` first)"
        )
    summary = __import__("json").loads(summary_path.read_text())
    upstream = summary.get("config_digest")
    if upstream and upstream != pipe.digest() and not pipe.force:
        raise click.ClickException(
            f"config digest mismatch for {sdir}: artifact has {upstream}, "
            f"current config is {pipe.digest()} (use --force to mix)"
        )
    cfg = SplitConfig.from_record(summary["config"])
    buckets = {}
    for bucket in ("train", "val", "test"):
        _, ids = read_manifest(sdir / f"{bucket}.ids")
        buckets[bucket] = ids
    temporal: list[str] = []
    if (sdir / "temporal.ids").exists():
        _, temporal = read_manifest(sdir / "temporal.ids")
    return DatasetSplit(cfg, buckets["train"], buckets["val"], buckets["test"], temporal)


@main.command()
@click.option("--input", "input_path", default=None, type=click.Path())
@click.option("--split", "split_dir", default=None, type=click.Path())
@click.option("--format", "fmt", default="table", type=click.Choice(["table", "records"]))
@pass_pipeline
def stats(pipe: Pipeline, input_path, split_dir, fmt):
    """Corpus statistics for a split, in the published table schema."""
    try:
        cases = _load_labeled(pipe, input_path)
        result = _load_split(pipe, split_dir)
        companion = None
        if result.config.task == "binary":
            # the multi-variant train column comes from a same-seed companion split
            multi_cfg = SplitConfig(
                ratio=result.config.ratio,
                seed=result.config.seed,
                task="binary",
                variant="multi",
                tiers=result.config.tiers,
                temporal_test=result.config.temporal_test,
                stratify=result.config.stratify,
            )
            companion = make_split(eligible_cases(cases, multi_cfg), multi_cfg)
        table = split_stats(result, cases, companion)
    except (ConfigError, ArtifactError) as exc:
        _fail(exc)

    write_records(
        pipe.path("stats.jsonl"),
        table.to_records(),
        meta=pipe.meta("stats", {}, task=table.task),
    )
    if fmt == "table":
        click.echo(table.render())
    else:
        for rec in table.to_records():
            click.echo(__import__("json").dumps(rec, sort_keys=True))


@main.command()
@click.option("--input", "input_path", default=None, type=click.Path())
@click.option("--window", default=None, type=int)
@click.option("--overlap", default=None, type=int)
@click.option("--pad-final", is_flag=True, default=None)
@pass_pipeline
def chunk(pipe: Pipeline, input_path, window, overlap, pad_final):
    """Cut cleaned documents into overlapping token windows."""
    section = pipe.override(
        "chunker", window=window, overlap=overlap, pad_final=pad_final
    )

    clean_path = pipe.require(
        Path(input_path) if input_path else pipe.path("clean.jsonl"), "clean"
    )
    try:
        chunker = SlidingWindowChunker(
            window=section["window"],
            overlap=section["overlap"],
            pad_final=section["pad_final"],
        ).fit()
        records = []
        n_docs = 0
        for rec in read_records(clean_path):
            n_docs += 1
            for c in chunker.chunk_text(rec["body_text"], case_id=rec["id"]):
                records.append(c.to_record())
    except (ConfigError, ArtifactError) as exc:
        _fail(exc)
    meta = pipe.meta("chunks", {"clean": clean_path},
                     window=section["window"], overlap=section["overlap"],
                     n_docs=n_docs, n_chunks=len(records))
    write_records(pipe.path("chunks.jsonl"), records, meta=meta)
    click.echo(f"{len(records)} chunks over {n_docs} documents -> {pipe.path('chunks.jsonl')}")


@main.command()
@click.option("--input", "input_path", default=None, type=click.Path())
@click.option("--split", "split_dir", default=None, type=click.Path())
@click.option("--bucket", default="test", type=click.Choice(["train", "val", "test", "temporal"]))
@click.option("--template", default=None,
              type=click.Choice(["fewshot_pred_expl", "fewshot_pred", "instr_pred", "instr_pred_expl"]))
@click.option("--backend", default="keyword-stub", show_default=True,
              help='"keyword-stub" or "pipe".')
@click.option("--pipe-cmd", default=None, help="Command line for the pipe backend.")
@click.option("--max-cases", default=None, type=int)
@pass_pipeline
def predict(pipe: Pipeline, input_path, split_dir, bucket, template, backend,
            pipe_cmd, max_cases):
    """Run the prompting harness over a split bucket."""
    section = pipe.override("prompts", template=template)

    try:
        cases = _load_labeled(pipe, input_path)
        result = _load_split(pipe, split_dir)
        by_id = {c.case.id: c for c in cases}
        ids = result.temporal if bucket == "temporal" else result.buckets()[bucket]
        if max_cases is not None:
            ids = ids[:max_cases]
        templates = load_templates()
        tmpl = templates[section["template"]]
        exemplars = load_exemplars()
        pools = load_pools()
        pool = pools[
            "prediction_explanation" if tmpl.expects_explanation else "prediction"
        ]
        sampler = InstructionSampler(pool, pipe.seed)
        if backend == "keyword-stub":
            engine = KeywordStubBackend()
        elif backend == "pipe":
            if not pipe_cmd:
                raise click.ClickException("--pipe-cmd is required for the pipe backend")
            engine = PipeBackend(pipe_cmd.split())
        else:
            raise click.ClickException(f"unknown backend: {backend}")

        records = []
        draws = []
        for case_id in ids:
            case = by_id.get(case_id)
            if case is None:
                raise click.ClickException(
                    f"split id {case_id} missing from labeled corpus"
                )
            text = truncate_case_text(
                case.case.body_text,
                section["truncate_words"],
                section["truncate_strategy"],
            )
            instruction = None
            if tmpl.requires_instruction:
                index, instruction = sampler.draw()
                draws.append(index)
            rec = predict_case(
                case_id,
                text,
                tmpl,
                engine,
                exemplars=exemplars if tmpl.requires_exemplars else None,
                instruction=instruction,
                max_new_tokens=section["max_new_tokens"],
                temperature=section["temperature"],
            )
            records.append(rec.to_record())
    except (ConfigError, ArtifactError, ValueError) as exc:
        _fail(exc)
    finally:
        if backend == "pipe" and "engine" in dir():
            try:
                engine.close()
            except Exception:
                pass

    meta = pipe.meta(
        "predictions",
        {"labeled": pipe.path("labeled.jsonl") if input_path is None else Path(input_path)},
        template=section["template"],
        template_digest=tmpl.digest(),
        exemplars_digest=exemplars_digest(exemplars),
        instruction_seed=pipe.seed,
        instruction_draws=draws,
        backend=backend,
        bucket=bucket,
        n=len(records),
    )
    write_records(pipe.path("predictions.jsonl"), records, meta=meta)
    click.echo(f"{len(records)} predictions -> {pipe.path('predictions.jsonl')}")


def _read_label_records(path: Path) -> dict[str, Any]:
    """Map case_id -> label from either labeled or prediction records."""
    out = {}
    for rec in read_records(path):
        case_id = rec.get("case_id") or rec.get("id")
        value = rec.get("predicted", rec.get("label"))
        if case_id is None or value is None:
            raise ArtifactError(f"{path}: record without case id or label")
        out[case_id] = value
    return out


def _map_gold(case_id: str, value: Any, task: str, variant: str) -> int:
    """Project a raw 0/1/2 gold label into the task's label space."""
    value = int(value)
    if task == "ternary" or value != 2:
        return value
    if variant == "multi":
        return 1  # partial acceptance means at least one appeal succeeded
    raise ArtifactError(
        f"partial-labeled case {case_id} in binary single-variant gold"
    )


@main.command("eval-classify")
@click.option("--predictions", "pred_path", default=None, type=click.Path())
@click.option("--gold", "gold_path", default=None, type=click.Path())
@click.option("--task", default=None, type=click.Choice(["binary", "ternary"]))
@click.option("--variant", default=None, type=click.Choice(["single", "multi"]))
@click.option("--format", "fmt", default="table", type=click.Choice(["table", "records"]))
@pass_pipeline
def eval_classify(pipe: Pipeline, pred_path, gold_path, task, variant, fmt):
    """Macro classification report of predictions against gold labels."""
    task = task or pipe.config["split"]["task"]
    variant = variant or pipe.config["split"]["variant"]
    pred_file = pipe.require(
        Path(pred_path) if pred_path else pipe.path("predictions.jsonl"), "predictions"
    )
    gold_file = pipe.require(
        Path(gold_path) if gold_path else pipe.path("labeled.jsonl"), "labeled"
    )
    try:
        preds = _read_label_records(pred_file)
        gold_raw = _read_label_records(gold_file)
        gold, pred = [], []
        for case_id, value in sorted(preds.items()):
            if case_id not in gold_raw:
                raise ArtifactError(f"no gold label for case {case_id}")
            gold.append(_map_gold(case_id, gold_raw[case_id], task, variant))
            pred.append(value)
        cm = confusion(gold, pred, n_classes=3 if task == "ternary" else 2)
        report = macro_report(cm)
    except (ArtifactError, ValueError) as exc:
        _fail(exc)

    meta = pipe.meta(
        "eval_classify", {"predictions": pred_file, "gold": gold_file}, task=task
    )
    write_records(pipe.path("eval_classify.jsonl"), [report.to_record()], meta=meta)
    if fmt == "table":
        click.echo(report.render())
    else:
        click.echo(__import__("json").dumps(report.to_record(), sort_keys=True))


@main.command("eval-explain")
@click.option("--predictions", "pred_path", default=None, type=click.Path())
@click.option("--references", "ref_path", default=None, type=click.Path())
@click.option("--embedder", default=None, type=click.Choice(["hashing", "none"]))
@click.option("--format", "fmt", default="table", type=click.Choice(["table", "records"]))
@pass_pipeline
def eval_explain(pipe: Pipeline, pred_path, ref_path, embedder, fmt):
    """Explanation-quality metrics against gold references."""
    embedder = embedder or pipe.config["metrics"]["embedder"]
    pred_file = pipe.require(
        Path(pred_path) if pred_path else pipe.path("predictions.jsonl"), "predictions"
    )
    ref_file = pipe.require(
        Path(ref_path) if ref_path else pipe.path("references.jsonl")
    )
    try:
        refs = {
            rec["case_id"]: rec["reference"]
            for rec in read_records(ref_file)
        }
        candidates, references = [], []
        skipped = 0
        for rec in read_records(pred_file):
            explanation = rec.get("explanation")
            reference = refs.get(rec.get("case_id"))
            if not explanation or not reference:
                skipped += 1
                continue
            candidates.append(explanation)
            references.append(reference)
        if not candidates:
            raise ArtifactError("no scoreable (explanation, reference) pairs")
        provider = HashingEmbedder() if embedder == "hashing" else None
        scores = explanation_report(candidates, references, embedder=provider)
        scores.metadata["skipped_pairs"] = skipped
    except (ArtifactError, ValueError) as exc:
        _fail(exc)

    meta = pipe.meta(
        "eval_explain", {"predictions": pred_file, "references": ref_file}
    )
    write_records(pipe.path("eval_explain.jsonl"), [scores.to_record()], meta=meta)
    if fmt == "table":
        click.echo(scores.render())
        if skipped:
            click.echo(f"(skipped {skipped} pairs without explanation/reference)", err=True)
    else:
        click.echo(__import__("json").dumps(scores.to_record(), sort_keys=True))


@main.command("annotate-tasks")
@click.option("--predictions", "pred_path", default=None, type=click.Path())
@click.option("--input", "clean_path", default=None, type=click.Path(),
              help="Clean records used for case excerpts.")
@click.option("--store", "store_dir", default=None, type=click.Path())
@click.option("--sample", default=None, type=int)
@click.option("--model-id", default="model", show_default=True)
@pass_pipeline
def annotate_tasks(pipe: Pipeline, pred_path, clean_path, store_dir, sample, model_id):
    """Sample prediction records into rating tasks."""
    section = pipe.override("annotate", sample=sample)
    pred_file = pipe.require(
        Path(pred_path) if pred_path else pipe.path("predictions.jsonl"), "predictions"
    )
    try:
        from .records import PredictionRecord

        run = [PredictionRecord.from_record(r) for r in read_records(pred_file)]
        case_texts = None
        clean_file = Path(clean_path) if clean_path else pipe.path("clean.jsonl")
        if clean_file.exists():
            case_texts = {
                r["id"]: r["body_text"] for r in read_records(clean_file)
            }
        tasks = annotate_mod.create_tasks(
            run,
            sample=section["sample"],
            seed=pipe.seed,
            run_id=pipe.digest(),
            model_id=model_id,
            case_texts=case_texts,
            excerpt_chars=section["excerpt_chars"],
        )
        store = annotate_mod.AnnotationStore(
            Path(store_dir) if store_dir else pipe.path("annotation")
        )
        store.add_tasks(tasks)
    except (annotate_mod.AnnotationError, ArtifactError) as exc:
        _fail(exc)
    click.echo(f"{len(tasks)} tasks -> {store.root}")


@main.command("annotate-serve")
@click.option("--store", "store_dir", default=None, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
@click.option("--static", "static_dir", default=None, type=click.Path(),
              help="Directory of built UI assets to serve at /.")
@pass_pipeline
def annotate_serve(pipe: Pipeline, store_dir, host, port, static_dir):
    """Serve the rating API (and the UI when assets are available)."""
    import uvicorn

    store = annotate_mod.AnnotationStore(
        Path(store_dir) if store_dir else pipe.path("annotation")
    )
    if not store.tasks():
        raise click.ClickException(
            "annotation store has no tasks (run `jurispipe annotate-tasks` first)"
        )
    if static_dir is None:
        default_static = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if default_static.exists():
            static_dir = str(default_static)
    app = annotate_mod.create_app(store, static_dir=static_dir)
    click.echo(f"serving {len(store.tasks())} tasks on http://{host}:{port}", err=True)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("annotate-export")
@click.option("--store", "store_dir", default=None, type=click.Path())
@click.option("--format", "fmt", default="table", type=click.Choice(["table", "records"]))
@pass_pipeline
def annotate_export(pipe: Pipeline, store_dir, fmt):
    """Export the rating ledger and the per-model score distribution."""
    store = annotate_mod.AnnotationStore(
        Path(store_dir) if store_dir else pipe.path("annotation")
    )
    out = pipe.path("ratings.jsonl")
    try:
        store.export(out)
    except ValueError as exc:
        _fail(exc)
    if fmt == "table":
        click.echo(store.render_distribution())
    else:
        click.echo(__import__("json").dumps(store.distribution(), sort_keys=True))
    click.echo(f"ratings -> {out}", err=True)


@main.command()
@click.option("--artifact", required=True, type=click.Path(exists=True))
@pass_pipeline
def verify(pipe: Pipeline, artifact):
    """Walk an artifact's provenance chain and validate input digests."""
    failures = []

    def walk(path: Path, depth: int):
        meta = read_meta(path)
        indent = "  " * depth
        click.echo(f"{indent}{path} [{meta.get('kind', '?')}]")
        for role, entry in meta.get("inputs", {}).items():
            src = Path(entry["path"])
            if not src.exists():
                failures.append(f"{path}: input {role} missing ({src})")
                click.echo(f"{indent}  {role}: MISSING {src}")
                continue
            actual = digest_file(src)
            status = "ok" if actual == entry["digest"] else "MISMATCH"
            if status != "ok":
                failures.append(
                    f"{path}: input {role} digest {actual} != recorded {entry['digest']}"
                )
            click.echo(f"{indent}  {role}: {status} {src}")
            if src.suffix == ".jsonl" and status == "ok":
                walk(src, depth + 1)

    walk(Path(artifact), 0)
    if failures:
        raise click.ClickException("; ".join(failures))
    click.echo("provenance chain ok")


if __name__ == "__main__":
    main()
