"""Prompt construction, instruction sampling, inference, and parsing.

Templates and instruction pools load from versioned YAML shipped with
the package; rendering is deterministic and every rendered prompt gets
a digest so logged runs can be replayed bit for bit.
"""

from __future__ import annotations

import json
import logging
import re
import subprocess
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import yaml

from .io import digest_text
from .labeler import Lexicons, WeakLabeler
from .records import NO_DECISION, PredictionRecord
from .validation import ConfigError

logger = logging.getLogger(__name__)

TEMPLATE_KINDS = ("fewshot_pred_expl", "fewshot_pred", "instr_pred", "instr_pred_expl")
POOL_SIZE = 16

# Parse ladder step (a): a bracketed [prediction, explanation] list.
_LIST_OUTPUT = re.compile(r"\[\s*([01])\s*,\s*(.*)", re.DOTALL)
# Step (b): a leading standalone 0/1 (but not "1.0", "10", "1st", ...).
_LEADING_DIGIT = re.compile(r"^\s*\(?([01])\)?(?!\.?\d)(?:\b|$)")
# Step (c): outcome keywords scanned in the first sentence only.
_ACCEPT_WORDS = ("accepted", "allowed")
_REJECT_WORDS = ("rejected", "dismissed")
_FIRST_SENTENCE = re.compile(r"^.*?(?:[.!?\n]|$)", re.DOTALL)
_EXPLANATION_LABEL = re.compile(r"^\s*explanation\s*:?\s*", re.IGNORECASE)


def _load_yaml_data(name: str) -> dict:
    path = resources.files("jurispipe.data") / name
    return yaml.safe_load(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Exemplar:
    case_proceeding: str
    prediction: str
    explanation: str = ""


@dataclass(frozen=True)
class PromptTemplate:
    kind: str
    body: str
    expects_explanation: bool
    requires_exemplars: bool
    requires_instruction: bool

    def digest(self) -> str:
        return digest_text(self.kind + "\n" + self.body)


@dataclass(frozen=True)
class InstructionPool:
    task: str  # "prediction" | "prediction_explanation"
    instructions: tuple[str, ...]
    version: int = 1

    def __post_init__(self):
        if len(self.instructions) != POOL_SIZE:
            raise ConfigError(
                f"instruction pool {self.task!r} must have exactly {POOL_SIZE} "
                f"entries, got {len(self.instructions)}"
            )


def load_templates(path: Optional[str | Path] = None) -> dict[str, PromptTemplate]:
    doc = (
        yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if path is not None
        else _load_yaml_data("templates.yaml")
    )
    templates = {}
    for kind in TEMPLATE_KINDS:
        if kind not in doc["templates"]:
            raise ConfigError(f"template config missing kind {kind!r}")
        entry = doc["templates"][kind]
        templates[kind] = PromptTemplate(
            kind=kind,
            body=entry["body"],
            expects_explanation=bool(entry.get("expects_explanation", False)),
            requires_exemplars="exemplars" in entry.get("requires", []),
            requires_instruction="instruction" in entry.get("requires", []),
        )
    return templates


def load_pools(path: Optional[str | Path] = None) -> dict[str, InstructionPool]:
    doc = (
        yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if path is not None
        else _load_yaml_data("instructions.yaml")
    )
    version = int(doc.get("version", 1))
    return {
        task: InstructionPool(task, tuple(entries), version)
        for task, entries in doc["pools"].items()
    }


def load_exemplars(path: Optional[str | Path] = None) -> list[Exemplar]:
    doc = (
        yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if path is not None
        else _load_yaml_data("exemplars.yaml")
    )
    return [Exemplar(**e) for e in doc["exemplars"]]


def exemplars_digest(exemplars: Sequence[Exemplar]) -> str:
    return digest_text(
        json.dumps([e.__dict__ for e in exemplars], sort_keys=True, ensure_ascii=False)
    )


def render_prompt(
    template: PromptTemplate,
    case_text: str,
    exemplars: Optional[Sequence[Exemplar]] = None,
    instruction: Optional[str] = None,
) -> str:
    """Fill a template's slots; raises on unmet requirements."""
    if not case_text:
        raise ValueError("case_text must be non-empty")
    slots: dict[str, str] = {"case_proceeding": case_text}
    if template.requires_exemplars:
        if exemplars is None or len(exemplars) != 2:
            raise ValueError(
                f"template {template.kind} requires exactly two exemplars"
            )
        for i, ex in enumerate(exemplars, start=1):
            slots[f"exemplar_{i}_case"] = ex.case_proceeding
            slots[f"exemplar_{i}_prediction"] = ex.prediction
            slots[f"exemplar_{i}_explanation"] = ex.explanation
    if template.requires_instruction:
        if not instruction:
            raise ValueError(f"template {template.kind} requires an instruction")
        slots["instruction"] = instruction
    return template.body.format(**slots)


class InstructionSampler:
    """Seeded uniform sampler over a pool; draws are logged for replay."""

    def __init__(self, pool: InstructionPool, seed: int):
        import random

        self.pool = pool
        self.seed = seed
        self._rng = random.Random(seed)
        self.draws: list[int] = []

    def draw(self) -> tuple[int, str]:
        index = self._rng.randrange(POOL_SIZE)
        self.draws.append(index)
        return index, self.pool.instructions[index]


def sample_instruction(pool: InstructionPool, seed: int) -> tuple[int, str]:
    """One-shot seeded draw: same seed, same index."""
    return InstructionSampler(pool, seed).draw()


# ---------------------------------------------------------------------------
# inference backends


class InferenceError(RuntimeError):
    """Base class for typed inference failures."""


class OverBudgetError(InferenceError):
    """Prompt exceeds the backend's declared budget; nothing was sent."""


class TransportError(InferenceError):
    """The backend could not be reached or answered garbage."""


class InferenceTimeout(InferenceError):
    """The backend did not answer within the allotted time."""


class InferenceBackend:
    """Text-in/text-out endpoint with a declared prompt budget.

    ``prompt_budget`` is in whatever units ``count_units`` reports
    (whitespace tokens by default); None means unlimited.
    """

    prompt_budget: Optional[int] = None

    def count_units(self, prompt: str) -> int:
        return len(prompt.split())

    def generate(
        self, prompt: str, max_new_tokens: int = 256, temperature: float = 0.0
    ) -> str:
        raise NotImplementedError


class CallableBackend(InferenceBackend):
    """Wrap a plain function for testing and local stubs."""

    def __init__(self, fn: Callable[[str], str], prompt_budget: Optional[int] = None):
        self.fn = fn
        self.prompt_budget = prompt_budget

    def generate(self, prompt, max_new_tokens=256, temperature=0.0):
        try:
            return self.fn(prompt)
        except TimeoutError as exc:
            raise InferenceTimeout(str(exc)) from exc
        except Exception as exc:
            raise TransportError(str(exc)) from exc


class KeywordStubBackend(InferenceBackend):
    """Deterministic stand-in model: labels the case text between the
    final angle brackets with the weak labeler and answers in the
    bracketed list format (or a repetitive no-decision string when the
    text carries no verdict)."""

    def __init__(self, lexicons: Optional[Lexicons] = None):
        self._labeler = WeakLabeler(lexicons=lexicons).fit()

    @staticmethod
    def _case_text(prompt: str) -> str:
        start = prompt.rfind("<")
        end = prompt.rfind(">")
        if start == -1 or end <= start:
            return prompt
        return prompt[start + 1:end]

    def generate(self, prompt, max_new_tokens=256, temperature=0.0):
        case_text = self._case_text(prompt)
        labeled = self._labeler.label_text(case_text)
        if labeled is None:
            return "1.0 The order is upheld. 1.1 The order is upheld."
        decision = 1 if int(labeled.label) in (1, 2) else 0
        tail = " ".join(case_text.split()[-12:])
        return f"[{decision}, {tail}]"


class PipeBackend(InferenceBackend):
    """Line-delimited JSON over a subprocess pipe.

    Each request is one line {"prompt", "max_new_tokens", "temperature"};
    each response one line {"text": ...}.
    """

    def __init__(
        self,
        cmd: Sequence[str],
        prompt_budget: Optional[int] = None,
        timeout: float = 30.0,
    ):
        self.cmd = list(cmd)
        self.prompt_budget = prompt_budget
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.cmd,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise TransportError(f"cannot start backend: {exc}") from exc
        return self._proc

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.terminate()
            self._proc.wait(timeout=5)
        self._proc = None

    def generate(self, prompt, max_new_tokens=256, temperature=0.0):
        import select

        proc = self._ensure_proc()
        request = json.dumps(
            {
                "prompt": prompt,
                "max_new_tokens": max_new_tokens,
                "temperature": temperature,
            },
            ensure_ascii=False,
        )
        try:
            proc.stdin.write(request + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self.close()
            raise TransportError(f"backend pipe broken: {exc}") from exc
        ready, _, _ = select.select([proc.stdout], [], [], self.timeout)
        if not ready:
            self.close()
            raise InferenceTimeout(f"no response within {self.timeout}s")
        line = proc.stdout.readline()
        if not line:
            self.close()
            raise TransportError("backend closed the pipe")
        try:
            return json.loads(line)["text"]
        except (json.JSONDecodeError, KeyError) as exc:
            raise TransportError(f"malformed backend response: {line!r}") from exc


def infer(
    prompt: str,
    backend: InferenceBackend,
    max_new_tokens: int = 256,
    temperature: float = 0.0,
    max_retries: int = 2,
    backoff: float = 0.1,
    log: Optional[list[dict[str, Any]]] = None,
) -> str:
    """Run one generation with budget check, bounded retries, and
    exponential backoff; request/response digests go to ``log``."""
    if backend.prompt_budget is not None:
        units = backend.count_units(prompt)
        if units > backend.prompt_budget:
            raise OverBudgetError(
                f"prompt is {units} units, budget is {backend.prompt_budget}"
            )
    attempt = 0
    while True:
        try:
            text = backend.generate(
                prompt, max_new_tokens=max_new_tokens, temperature=temperature
            )
        except (TransportError, InferenceTimeout) as exc:
            if attempt >= max_retries:
                raise
            delay = backoff * (2 ** attempt)
            logger.warning("inference failed (%s), retry %d in %.2fs", exc, attempt + 1, delay)
            time.sleep(delay)
            attempt += 1
            continue
        if log is not None:
            log.append(
                {
                    "prompt_digest": digest_text(prompt),
                    "response_digest": digest_text(text),
                    "retries": attempt,
                }
            )
        return text


# ---------------------------------------------------------------------------
# output parsing


def _after_line_of(raw: str, end_index: int) -> Optional[str]:
    """Text after the line containing position ``end_index``, or None."""
    newline = raw.find("\n", end_index)
    if newline == -1:
        return None
    rest = raw[newline + 1:].strip()
    return rest or None


def _strip_explanation_label(text: Optional[str]) -> Optional[str]:
    if text is None:
        return None
    return _EXPLANATION_LABEL.sub("", text).strip() or None


def parse_prediction(raw_output: str, expects_explanation: bool = False):
    """Extract (decision, explanation) from generated text.

    Ladder, most to least structured: bracketed [p, explanation] list;
    leading standalone 0/1; outcome keyword in the first sentence;
    otherwise NoDecision.  Never raises.
    """
    raw = raw_output or ""

    m = _LIST_OUTPUT.search(raw)
    if m:
        predicted = int(m.group(1))
        explanation = m.group(2).strip()
        if explanation.endswith("]"):
            explanation = explanation[:-1].rstrip()
        return predicted, (explanation or None) if expects_explanation else None

    m = _LEADING_DIGIT.match(raw)
    if m:
        predicted = int(m.group(1))
        explanation = _strip_explanation_label(_after_line_of(raw, m.end()))
        return predicted, explanation if expects_explanation else None

    first = _FIRST_SENTENCE.match(raw)
    sentence = first.group(0).lower() if first else ""
    words = set(re.findall(r"[a-z]+", sentence))
    accept = next((w for w in _ACCEPT_WORDS if w in words), None)
    reject = next((w for w in _REJECT_WORDS if w in words), None)
    if accept or reject:
        if accept and reject:
            # both polarities in one sentence: first occurrence wins
            predicted = 1 if sentence.find(accept) < sentence.find(reject) else 0
        else:
            predicted = 1 if accept else 0
        if not expects_explanation:
            return predicted, None
        explanation = _strip_explanation_label(
            _after_line_of(raw, first.end() if first else 0)
        )
        return predicted, explanation or raw.strip()

    return NO_DECISION, None


def predict_case(
    case_id: str,
    case_text: str,
    template: PromptTemplate,
    backend: InferenceBackend,
    exemplars: Optional[Sequence[Exemplar]] = None,
    instruction: Optional[str] = None,
    max_new_tokens: int = 256,
    temperature: float = 0.0,
    log: Optional[list[dict[str, Any]]] = None,
) -> PredictionRecord:
    """Render, infer, and parse one case into a PredictionRecord."""
    prompt = render_prompt(template, case_text, exemplars, instruction)
    raw = infer(
        prompt, backend, max_new_tokens=max_new_tokens, temperature=temperature, log=log
    )
    predicted, explanation = parse_prediction(raw, template.expects_explanation)
    return PredictionRecord(
        case_id=case_id,
        predicted=predicted,
        explanation=explanation,
        raw_output=raw,
        prompt_digest=digest_text(prompt),
    )


def truncate_case_text(
    text: str, budget_words: int, strategy: str = "tail"
) -> str:
    """Shorten a case to ``budget_words`` whitespace words.

    Strategies: ``head`` keeps the opening, ``tail`` keeps the ending
    (where decisions are summarized), ``head_tail`` keeps half of each.
    """
    words = text.split()
    if len(words) <= budget_words:
        return text
    if strategy == "head":
        return " ".join(words[:budget_words])
    if strategy == "tail":
        return " ".join(words[-budget_words:])
    if strategy == "head_tail":
        half = budget_words // 2
        return " ".join(words[:half] + words[len(words) - (budget_words - half):])
    raise ConfigError(f"unknown truncation strategy: {strategy!r}")
