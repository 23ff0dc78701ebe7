"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines.  Expected values come from independent oracles (hand arithmetic,
brute-force scans, span arithmetic) and from published procedure
numbers; tolerances are pinned in the assertions.
"""

import itertools
import json
import random
import subprocess
import sys
import time

import numpy as np

from jurispipe.chunker import chunk_spans
from jurispipe.datasets import SplitConfig, make_split, make_temporal_test
from jurispipe.ingest import apply_filters, clean_tokens, Drop, DropReason
from jurispipe.labeler import label_case, to_task_label
from jurispipe.metrics import (
    ConfusionMatrix,
    bleu,
    confusion,
    likert_aggregate,
    macro_report,
    rouge_l,
    rouge_n,
)
from jurispipe.prompts import (
    InstructionSampler,
    load_exemplars,
    load_pools,
    load_templates,
    parse_prediction,
    render_prompt,
)
from jurispipe.records import CleanJudgment, CourtTier, Decision, NO_DECISION


def ok(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


def make_case(text):
    return CleanJudgment("t", CourtTier.SCI, text, len(text.split()))


class TestLabelerGoldenSuite:
    def test_golden_sentences(self):
        start = time.perf_counter()
        golden = [
            ("The appeal is granted", 1),
            ("The appeal has no proper evidence and hence we reject it", 0),
            ("No appeal is allowed", 0),
            ("The appeal is partly allowed", 2),
        ]
        for text, want in golden:
            labeled = label_case(make_case(text))
            assert labeled is not None, text
            got = to_task_label(labeled, "ternary")
            assert got == want, f"{text!r}: got {got}, want {want}"
        # the flip is what rejects "No appeal is allowed"
        flipped = label_case(make_case("No appeal is allowed"))
        assert flipped.evidence[0].negated is True
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"golden suite took {elapsed:.3f}s"
        ok("labeler golden suite")


class TestIngestFilters:
    def test_boundaries_and_fuzz(self):
        start = time.perf_counter()
        for n, expect_keep in ((49, False), (50, True), (32000, True), (32001, False)):
            body = " ".join(["word"] * n)
            result = apply_filters("d", body, CourtTier.SCI, None)
            assert isinstance(result, CleanJudgment) == expect_keep, n
        drop_short = apply_filters("d", " ".join(["w"] * 49), CourtTier.SCI, None)
        drop_long = apply_filters("d", " ".join(["w"] * 32001), CourtTier.SCI, None)
        assert isinstance(drop_short, Drop) and drop_short.reason is DropReason.TOO_SHORT
        assert isinstance(drop_long, Drop) and drop_long.reason is DropReason.TOO_LONG

        # 10,000-token fuzz corpus vs an independent run-scan oracle
        rng = random.Random(2024)
        alphabet = "abcdefg"
        tokens = []
        for _ in range(10000):
            t = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 10)))
            if rng.random() < 0.15:
                pos = rng.randrange(len(t) + 1)
                t = t[:pos] + rng.choice(alphabet) * rng.randint(3, 5) + t[pos:]
            tokens.append(t)
        text = " ".join(tokens)

        def oracle_keep(token):
            return all(len(list(g)) < 3 for _, g in itertools.groupby(token))

        expected = [t for t in tokens if oracle_keep(t)]
        got = clean_tokens(text).split()
        assert got == expected, "disagreement with brute-force scan"
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"ingest filter suite took {elapsed:.3f}s"
        ok("ingest filters + fuzz token cleaning")


class TestChunkerInvariants:
    def test_all_lengths_to_5000(self):
        start = time.perf_counter()
        stride = 412

        def oracle(n):
            spans = [(0, min(512, n))]
            while spans[-1][1] < n:
                s = spans[-1][0] + stride
                spans.append((s, min(s + 512, n)))
            return spans

        for n in range(1, 5001):
            spans = chunk_spans(n)
            assert spans == oracle(n), f"N={n}"
            assert spans[0][0] == 0 and spans[-1][1] == n  # coverage ends
            for i, (s, e) in enumerate(spans):
                assert s == i * stride
                if i > 0:
                    prev_s, prev_e = spans[i - 1]
                    assert s <= prev_e  # coverage: no gap
                    assert prev_e - s == 100  # exact overlap
                    assert e > prev_e  # no dead chunk
        assert chunk_spans(1024) == [(0, 512), (412, 924), (824, 1024)]
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"chunker invariants took {elapsed:.3f}s"
        ok("chunker coverage/overlap/no-dead-chunk for N in 1..5000")


class TestSplits:
    def test_ratio_determinism_temporal(self):
        start = time.perf_counter()
        rng = random.Random(5)
        pool = [
            CleanJudgment(f"c{i:05d}", CourtTier.SCI, "b", 100)
            for i in range(10000)
        ]
        from jurispipe.records import LabeledCase

        pool = [LabeledCase(c, Decision.ACCEPTED, "single", []) for c in pool]
        sizes = list(range(10, 1000)) + [rng.randint(1000, 10000) for _ in range(120)] + [10000]
        for n in sizes:
            cases = pool[:n]
            split = make_split(cases, SplitConfig(seed=7, task="ternary"))
            for ids, pct in zip((split.train, split.val, split.test), (70, 10, 20)):
                assert abs(len(ids) - n * pct / 100) <= 1, n
            assert len(split.train) + len(split.val) + len(split.test) == n

        a = make_split(pool[:777], SplitConfig(seed=3, task="ternary"))
        b = make_split(pool[:777], SplitConfig(seed=3, task="ternary"))
        assert (a.train, a.val, a.test) == (b.train, b.val, b.test)

        # dated fixture: exactly the 2020-01-01..2024-04-30 cases
        import datetime as dt

        dated = []
        expected = []
        for i in range(400):
            date = dt.date(2015 + i % 10, 1 + i % 12, 1 + i % 28)
            case = CleanJudgment(f"d{i:04d}", CourtTier.SCI, "b", 100, date)
            dated.append(LabeledCase(case, Decision.ACCEPTED, "single", []))
            if dt.date(2020, 1, 1) <= date <= dt.date(2024, 4, 30):
                expected.append(case.id)
        ids, _ = make_temporal_test(dated, dt.date(2020, 1, 1), dt.date(2024, 4, 30))
        assert ids == sorted(expected)
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"split suite took {elapsed:.3f}s"
        ok("splits 70:10:20 (+-1), determinism, temporal subset")


class TestClassificationMetrics:
    def test_worked_example_and_oracle_fuzz(self):
        cm = confusion([0] * 10 + [1] * 10, [0] * 5 + [1] * 5 + [1] * 10)
        report = macro_report(cm)
        assert abs(report.macro_f1 - 11 / 15) < 1e-12
        assert round(report.macro_f1, 4) == 0.7333
        assert report.accuracy == 0.75

        rng = random.Random(99)
        for _ in range(1000):
            k = rng.choice([2, 3])
            counts = [[rng.randrange(25) for _ in range(k + 1)] for _ in range(k)]
            if sum(map(sum, counts)) == 0:
                counts[0][0] = 1
            report = macro_report(ConfusionMatrix(np.array(counts), n_classes=k))
            # brute-force oracle, pure python
            per = []
            for c in range(k):
                tp = counts[c][c]
                col = sum(counts[g][c] for g in range(k))
                row = sum(counts[c])
                p = tp / col if col else 0.0
                r = tp / row if row else 0.0
                f = 2 * p * r / (p + r) if p + r else 0.0
                per.append((p, r, f))
            total = sum(map(sum, counts))
            assert abs(report.macro_precision - sum(x[0] for x in per) / k) < 1e-12
            assert abs(report.macro_recall - sum(x[1] for x in per) / k) < 1e-12
            assert abs(report.macro_f1 - sum(x[2] for x in per) / k) < 1e-12
            assert abs(report.accuracy - sum(counts[c][c] for c in range(k)) / total) < 1e-12
        ok("macro report vs brute-force oracle (1000 matrices, 1e-12)")


class TestLexicalMetrics:
    def test_identity_and_toys(self):
        text = "the appeal is allowed and the order is set aside"
        assert abs(rouge_n(text, text, 1).f - 1.0) < 1e-9
        assert abs(rouge_n(text, text, 2).f - 1.0) < 1e-9
        assert abs(rouge_l(text, text).f - 1.0) < 1e-9
        assert abs(bleu([text, text], [text, text]).score - 1.0) < 1e-9

        assert abs(rouge_n("the cat sat", "the cat ran", 1).f - 2 / 3) < 1e-9
        prf = rouge_l("a b c d", "a c b d")
        assert abs(prf.f - 0.75) < 1e-9
        assert abs(bleu(["the the the"], ["the cat"]).precisions[0] - 1 / 3) < 1e-9
        ok("lexical metrics identity + hand-derived toys (1e-9)")


class TestLikert:
    def test_published_expert_numbers(self):
        out = likert_aggregate([3] * 23 + [4] * 27)
        assert out["distribution"][3] == 23 and out["distribution"][4] == 27
        assert out["mean"] == 3.54
        assert f"{out['mean']:.2f}" == "3.54"
        ok("Likert aggregation reproduces 3:23/4:27 -> mean 3.54")


class TestPromptHarness:
    def test_skeletons_sampling_parser(self):
        templates = load_templates()
        exemplars = load_exemplars()
        pools = load_pools()

        t1 = render_prompt(templates["fewshot_pred_expl"], "case", exemplars=exemplars)
        assert "Format your output in list format" in t1
        t2 = render_prompt(templates["fewshot_pred"], "case", exemplars=exemplars)
        assert t2.endswith("Give the output predicted case decision as either 0 or 1.")
        t3 = render_prompt(
            templates["instr_pred"], "case", instruction=pools["prediction"].instructions[0]
        )
        t4 = render_prompt(
            templates["instr_pred_expl"], "case",
            instruction=pools["prediction_explanation"].instructions[0],
        )
        for prompt in (t3, t4):
            assert "### Instructions:" in prompt
            assert "### Input:" in prompt
            assert "### Response:" in prompt

        sampler = InstructionSampler(pools["prediction"], seed=13)
        for _ in range(16000):
            sampler.draw()
        counts = [sampler.draws.count(i) for i in range(16)]
        assert all(900 <= c <= 1100 for c in counts), counts

        raw = "1.0 The order is upheld. 1.1 The order is upheld. 1.2 The order is upheld."
        predicted, _ = parse_prediction(raw, expects_explanation=True)
        assert predicted == NO_DECISION
        ok("prompt skeletons, 16k instruction draws in [900,1100], NoDecision parse")


class TestEndToEnd:
    def test_full_pipeline_under_30s(self, tmp_path):
        out = tmp_path / "runs"
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("seed: 13\nsplit:\n  task: ternary\n")

        def cli(*args):
            result = subprocess.run(
                [sys.executable, "-m", "jurispipe.cli", "--config", str(cfg),
                 "-o", str(out), *args],
                capture_output=True, text=True,
            )
            assert result.returncode == 0, result.stderr + result.stdout
            return result.stdout

        start = time.perf_counter()
        cli("make-fixture", "--n", "1000")
        cli("ingest", "--input", str(out / "corpus.jsonl"))
        cli("label")
        cli("split")
        cli("chunk")
        cli("predict", "--bucket", "test", "--backend", "keyword-stub")
        classify_out = cli("eval-classify", "--format", "records")
        explain_out = cli(
            "eval-explain", "--references", str(out / "references.jsonl"),
            "--format", "records",
        )
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"end-to-end took {elapsed:.1f}s"

        # manifests realize 70:10:20 of the 1,000-doc corpus exactly
        for bucket, want in (("train", 700), ("val", 100), ("test", 200)):
            lines = (out / "split" / f"{bucket}.ids").read_text().splitlines()
            assert lines[0].startswith("#config=")
            assert len(lines) - 1 == want, bucket

        # classification report in the published layout
        record = json.loads(classify_out.strip().splitlines()[-1])
        assert set(record["overall"]) == {
            "macro_precision", "macro_recall", "macro_f1", "accuracy",
        }
        assert len(record["per_class"]) == 3  # ternary: classes 0, 1, 2

        # explanation report in the published column schema
        record = json.loads(explain_out.strip().splitlines()[-1])
        for column in ("Rouge-1", "Rouge-2", "Rouge-L", "BLEU", "METEOR", "BERTScore"):
            assert column in record, column

        # stats table in the published row schema
        stats_out = cli("stats", "--format", "records")
        rows = [json.loads(l) for l in stats_out.strip().splitlines()]
        assert [r["metric"] for r in rows] == [
            "#Documents", "Avg #words", "Clear acceptance(%)", "Partial acceptance (%)",
        ]
        ok(f"end-to-end pipeline on 1,000 docs in {elapsed:.1f}s")
