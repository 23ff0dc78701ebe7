"""Corpus construction, weak labeling, chunked prediction, and evaluation
for legal judgment prediction over Indian court judgments."""

__version__ = "0.1.0"

from .chunker import SlidingWindowChunker, aggregate, chunk, tokenize
from .datasets import (
    DatasetSplit,
    SplitConfig,
    compute_stats,
    make_split,
    make_temporal_test,
    tier_subset,
)
from .ingest import (
    JudgmentCleaner,
    apply_filters,
    clean_tokens,
    extract_body,
    load_raw,
    strip_metadata,
)
from .labeler import (
    Lexicons,
    WeakLabeler,
    classify_context,
    find_contexts,
    label_case,
    tail_window,
    to_task_label,
)
from .metrics import (
    EvaluationReport,
    ExplanationScores,
    LikertRating,
    bertscore,
    bleu,
    confusion,
    explanation_report,
    likert_aggregate,
    macro_report,
    meteor,
    rouge_l,
    rouge_n,
)
from .prompts import (
    InstructionPool,
    KeywordStubBackend,
    PipeBackend,
    PromptTemplate,
    infer,
    parse_prediction,
    render_prompt,
    sample_instruction,
)
from .records import (
    Chunk,
    CleanJudgment,
    CourtTier,
    Decision,
    LabeledCase,
    PredictionRecord,
    RawJudgment,
)
