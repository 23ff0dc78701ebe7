"""Tests for the tail-window keyword labeler."""

import random

import pytest
from hypothesis import given, strategies as st

from jurispipe.labeler import (
    UNLABELED,
    Lexicons,
    WeakLabeler,
    classify_context,
    find_contexts,
    label_case,
    tail_window,
    to_task_label,
)
from jurispipe.records import CleanJudgment, CourtTier, Decision
from jurispipe.validation import ConfigError


def make_case(text: str, case_id: str = "t") -> CleanJudgment:
    return CleanJudgment(
        id=case_id,
        court_tier=CourtTier.SCI,
        body_text=text,
        word_count=len(text.split()),
    )


class TestTailWindow:
    def test_long_doc_keeps_last_750(self):
        text = " ".join(f"w{i}" for i in range(1000))
        window, offset = tail_window(text)
        assert window.split() == text.split()[250:]
        assert text[offset:] == window

    def test_short_doc_is_whole(self):
        text = " ".join(f"w{i}" for i in range(300))
        window, offset = tail_window(text)
        assert window == text and offset == 0

    def test_suffix_oracle_on_random_fixtures(self):
        rng = random.Random(5)
        for _ in range(25):
            n = rng.randint(1, 2000)
            text = " ".join(
                "".join(rng.choice("abc") for _ in range(rng.randint(1, 5)))
                for _ in range(n)
            )
            window, offset = tail_window(text)
            assert text[offset:] == window
            assert len(window.split()) == min(n, 750)


class TestFindContexts:
    def test_single_context_around_appeal(self):
        contexts = find_contexts("the appeal is granted", Lexicons())
        assert len(contexts) == 1
        assert contexts[0].key_term == "appeal"
        assert any(w.text == "granted" for w in contexts[0].words)

    def test_no_key_terms(self):
        assert find_contexts("nothing relevant here", Lexicons()) == []

    def test_three_petitions_three_contexts_in_order(self):
        text = "first petition text, second petition text, third petition text"
        contexts = find_contexts(text, Lexicons())
        assert len(contexts) == 3
        assert [c.key_term for c in contexts] == ["petition"] * 3
        assert contexts[0].key_index < contexts[1].key_index < contexts[2].key_index

    def test_radius_limits_context(self):
        text = "granted " + "x " * 30 + "appeal " + "y " * 30 + "dismissed"
        contexts = find_contexts(text, Lexicons(), radius_words=5)
        words = {w.text for w in contexts[0].words}
        assert "granted" not in words and "dismissed" not in words


def classify_sentence(sentence: str, **kwargs):
    contexts = find_contexts(sentence, Lexicons(), kwargs.pop("radius", 10))
    assert contexts, f"no key term in {sentence!r}"
    return classify_context(contexts[0], Lexicons(), **kwargs)


class TestClassifyContext:
    def test_plain_grant_is_accepted(self):
        verdict = classify_sentence("The appeal is granted")
        assert verdict.polarity is Decision.ACCEPTED and not verdict.negated

    def test_negated_allow_flips_to_rejected(self):
        verdict = classify_sentence("No appeal is allowed")
        assert verdict.polarity is Decision.REJECTED and verdict.negated

    def test_distant_negation_does_not_flip(self):
        verdict = classify_sentence(
            "The appeal has no proper evidence and hence we reject it"
        )
        assert verdict.polarity is Decision.REJECTED and not verdict.negated

    def test_partial_marker_with_outcome(self):
        verdict = classify_sentence("appeal is partly allowed")
        assert verdict.polarity is Decision.PARTIAL

    def test_bare_partial_marker_is_no_verdict(self):
        assert classify_sentence("the appeal was partly heard") is None

    def test_no_outcome_keyword(self):
        assert classify_sentence("the appeal was heard at length") is None

    def test_nearest_keyword_wins(self):
        # "dismissed" is nearer to "appeal" than "granted"
        verdict = classify_sentence("granted earlier relief but appeal dismissed")
        assert verdict.polarity is Decision.REJECTED

    def test_tie_goes_to_later_keyword(self):
        # equidistant: one word before and one word after the key term
        verdict = classify_sentence("granted appeal dismissed")
        assert verdict.polarity is Decision.REJECTED


class TestLabelCase:
    def test_agreeing_contexts_single(self):
        text = "the appeal is granted . the petition is allowed"
        labeled = label_case(make_case(text))
        assert labeled.label is Decision.ACCEPTED
        assert labeled.label_kind == "single"
        assert len(labeled.evidence) == 2

    def test_mixed_contexts_partial_multi(self):
        text = "the first appeal is granted . the second appeal is dismissed"
        labeled = label_case(make_case(text))
        assert labeled.label is Decision.PARTIAL
        assert labeled.label_kind == "multi"

    def test_no_contexts_unlabelable(self):
        assert label_case(make_case("nothing to see in this text")) is None

    def test_evidence_spans_inside_window_and_justify_label(self):
        filler = " ".join(f"f{i}" for i in range(900))
        tail = "finally the appeal is partly allowed"
        text = filler + " " + tail
        labeled = label_case(make_case(text))
        window, offset = tail_window(text)
        assert labeled.label is Decision.PARTIAL
        for ev in labeled.evidence:
            assert offset <= ev.start < ev.end <= len(text)
            assert text[ev.start:ev.end].lower() == ev.keyword

    def test_window_locality(self):
        tail_words = ["pad"] * 743 + "finally the appeal is granted here now".split()
        tail = " ".join(tail_words)  # exactly 750 words: fills the window
        for prefix in ("the petition was dismissed " * 40, "irrelevant start "):
            text = prefix + " " + tail
            labeled = label_case(make_case(text))
            assert labeled.label is Decision.ACCEPTED
            assert labeled.label_kind == "single"
            assert [e.keyword for e in labeled.evidence] == ["granted"]

    def test_case_insensitive(self):
        lower = label_case(make_case("the appeal is granted"))
        upper = label_case(make_case("THE APPEAL IS GRANTED"))
        assert upper.label is lower.label is Decision.ACCEPTED

    def test_determinism(self):
        text = "the appeal is granted . the case is partly dismissed"
        assert label_case(make_case(text)) == label_case(make_case(text))


OUTCOME_WORDS = sorted(Lexicons().positive | Lexicons().negative)


class TestFlipInvolution:
    @pytest.mark.parametrize("keyword", OUTCOME_WORDS)
    def test_inserting_negator_flips_polarity(self, keyword):
        base = classify_sentence(f"the appeal is {keyword}")
        flipped = classify_sentence(f"the appeal is not {keyword}")
        assert base.polarity is not flipped.polarity
        assert {base.polarity, flipped.polarity} == {
            Decision.ACCEPTED,
            Decision.REJECTED,
        }

    @given(st.sampled_from(OUTCOME_WORDS), st.integers(0, 2))
    def test_flip_with_filler_words(self, keyword, pad):
        filler = " ".join(["thus"] * pad)
        base = classify_sentence(f"the appeal {filler} {keyword}".replace("  ", " "))
        flipped = classify_sentence(
            f"the appeal {filler} not {keyword}".replace("  ", " ")
        )
        assert flipped.negated
        assert base.polarity is not flipped.polarity


class TestToTaskLabel:
    def make_labeled(self, label):
        case = make_case("the appeal is granted")
        lc = label_case(case)
        lc.label = label
        return lc

    def test_partial_binary_single_excluded(self):
        assert to_task_label(self.make_labeled(Decision.PARTIAL), "binary") is None

    def test_partial_binary_multi_maps_to_accepted(self):
        assert (
            to_task_label(
                self.make_labeled(Decision.PARTIAL), "binary", binary_variant="multi"
            )
            == 1
        )

    def test_accepted_binary(self):
        assert to_task_label(self.make_labeled(Decision.ACCEPTED), "binary") == 1

    def test_partial_ternary(self):
        assert to_task_label(self.make_labeled(Decision.PARTIAL), "ternary") == 2


class TestLexicons:
    def test_overlapping_sets_rejected(self):
        with pytest.raises(ConfigError):
            Lexicons(positive=frozenset({"granted", "rejected"}))

    def test_from_file_overrides(self, tmp_path):
        f = tmp_path / "lex.yaml"
        f.write_text("positive: [won]\nnegative: [lost]\n")
        lex = Lexicons.from_file(f)
        assert lex.positive == frozenset({"won"})
        assert lex.key_terms == Lexicons().key_terms

    def test_inflected_forms_match(self):
        # conclusory phrasing uses base and plural forms
        labeled = label_case(make_case("Appeals Allowed"))
        assert labeled.label is Decision.ACCEPTED
        labeled = label_case(make_case("we reject the petition"))
        assert labeled.label is Decision.REJECTED


class TestEvidenceAudit:
    def test_evidence_replays_to_the_label(self):
        # the per-context rules applied to the evidence list alone must
        # reproduce the case label
        rng = random.Random(77)
        outcomes = [
            "the appeal is granted",
            "the petition is dismissed",
            "the case is partly allowed",
            "no appeal is allowed",
            "we reject the petition",
        ]
        for _ in range(60):
            sentences = [rng.choice(outcomes) for _ in range(rng.randint(1, 4))]
            text = " . ".join(sentences)
            labeled = label_case(make_case(text))
            assert labeled is not None
            polarities = {e.polarity for e in labeled.evidence}
            if "partial" in polarities or {"accepted", "rejected"} <= polarities:
                expected = Decision.PARTIAL
            else:
                expected = Decision[next(iter(polarities)).upper()]
            assert labeled.label is expected
            kind = "multi" if expected is Decision.PARTIAL else "single"
            assert labeled.label_kind == kind


class TestWeakLabeler:
    def test_predict_vector(self):
        labeler = WeakLabeler().fit()
        docs = [
            "the appeal is granted",
            "the appeal is dismissed",
            "the appeal is partly allowed",
            "no decision words here",
        ]
        assert labeler.predict(docs).tolist() == [1, 0, 2, UNLABELED]

    def test_get_params(self):
        labeler = WeakLabeler(context_radius=7)
        assert labeler.get_params()["context_radius"] == 7

    def test_label_all_splits_excluded(self):
        labeler = WeakLabeler().fit()
        cases = [
            make_case("the appeal is granted", "a"),
            make_case("nothing here", "b"),
        ]
        labeled, excluded = labeler.label_all(cases)
        assert [lc.case.id for lc in labeled] == ["a"]
        assert excluded == ["b"]
