"""Rationale generation, validation and training-corpus construction."""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import CancelledError, ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from . import clex
from .backend import Backend, CompletionRequest
from .errors import BackendUnavailable, RationaleRejected, ResponseTruncated
from .prompts import DEFAULT_TEMPLATES, PromptTemplates, fill

log = logging.getLogger(__name__)

GRANULARITIES = ("concise", "detailed")
CORPUS_MODES = ("source_only", "full_distillation", "no_rationale")
DETAILED_KEYS = ("inputs", "outputs", "implicit_operations")

DEFAULT_MAX_RATIONALE_TOKENS = 256
DEFAULT_MAX_SEQ_TOKENS = 2048

_FIELD_LINE = re.compile(
    r"^(?:[-•]\s*)?(function|purpose|inputs|outputs|implicit[ _-]operations)\s*:\s*(.*)$",
    re.IGNORECASE,
)
_DECORATION = re.compile(r"^\s*\*+ ?")
_IDENT = re.compile(r"[A-Za-z_]\w*")

_LABELS = {
    "function": "Function",
    "purpose": "Purpose",
    "inputs": "Inputs",
    "outputs": "Outputs",
    "implicit_operations": "Implicit Operations",
}


@dataclass
class Rationale:
    function_name: str
    purpose: str
    granularity: str
    raw_comment: str
    detailed_fields: dict[str, str] | None = None

    def __post_init__(self) -> None:
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"granularity must be one of {GRANULARITIES}")
        if not (self.raw_comment.startswith("/*") and self.raw_comment.endswith("*/")):
            raise ValueError("raw_comment must be a /* ... */ block")
        if not self.purpose:
            raise ValueError("purpose must be non-empty")
        if (self.granularity == "detailed") != (self.detailed_fields is not None):
            raise ValueError("detailed_fields must be present exactly for detailed granularity")

    def to_json(self) -> dict:
        return asdict(self)


def render_rationale(
    function_name: str,
    purpose: str,
    detailed_fields: dict[str, str] | None = None,
) -> str:
    """Format fields as a header comment in the style the generator is asked for."""
    lines = ["/*", f" * Function: {function_name}", f" * Purpose: {purpose}"]
    for key in DETAILED_KEYS if detailed_fields else ():
        lines.append(f" * {_LABELS[key]}: {detailed_fields[key]}")
    lines.append(" */")
    return "\n".join(lines)


def _fields_of(body: str) -> dict[str, str]:
    fields: dict[str, list[str]] = {}
    current = None
    for line in body.splitlines():
        line = _DECORATION.sub("", line).strip()
        if not line:
            continue
        m = _FIELD_LINE.match(line)
        if m:
            current = re.sub(r"[ _-]", "_", m.group(1).lower())
            fields.setdefault(current, []).append(m.group(2).strip())
        elif current is not None:
            fields[current].append(line)
    return {k: " ".join(p for p in v if p) for k, v in fields.items()}


def parse_and_validate(
    text: str,
    granularity: str = "concise",
    max_tokens: int = DEFAULT_MAX_RATIONALE_TOKENS,
) -> Rationale:
    if granularity not in GRANULARITIES:
        raise ValueError(f"granularity must be one of {GRANULARITIES}")
    block = text.strip()
    if not block.startswith("/*"):
        raise RationaleRejected("invalid_comment", "does not start with /*")
    if not block.endswith("*/") or len(block) < 4:
        raise RationaleRejected("invalid_comment", "does not end with */")
    body = block[2:-2]
    if "*/" in body or "/*" in body:
        raise RationaleRejected("invalid_comment", "more than one comment block")

    fields = _fields_of(body)
    name_match = _IDENT.search(fields.get("function", ""))
    if name_match is None:
        raise RationaleRejected("missing_fields", "no Function: line")
    if not fields.get("purpose"):
        raise RationaleRejected("missing_fields", "no Purpose: line")
    detailed = None
    if granularity == "detailed":
        absent = [k for k in DETAILED_KEYS if not fields.get(k)]
        if absent:
            raise RationaleRejected("missing_fields", f"missing {', '.join(absent)}")
        detailed = {k: fields[k] for k in DETAILED_KEYS}

    n_tokens = clex.count_tokens(block, include_comments=True)
    if n_tokens > max_tokens:
        raise RationaleRejected("over_length", f"{n_tokens} tokens > {max_tokens}")

    return Rationale(
        function_name=name_match.group(),
        purpose=fields["purpose"],
        granularity=granularity,
        raw_comment=block,
        detailed_fields=detailed,
    )


def build_rationale_prompt(
    pseudo: str,
    granularity: str = "concise",
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> CompletionRequest:
    if not pseudo.strip():
        raise ValueError("pseudo-code is empty")
    if granularity == "concise":
        template = templates.rationale_concise
    elif granularity == "detailed":
        template = templates.rationale_detailed
    else:
        raise ValueError(f"granularity must be one of {GRANULARITIES}")
    return CompletionRequest(system_text="", user_text=fill(template, code_snippet=pseudo))


def generate_rationale(
    pseudo: str,
    gen: Backend,
    granularity: str = "concise",
    templates: PromptTemplates = DEFAULT_TEMPLATES,
    max_tokens: int = DEFAULT_MAX_RATIONALE_TOKENS,
) -> Rationale:
    req = build_rationale_prompt(pseudo, granularity, templates)
    try:
        text = gen.complete(req).text
    except ResponseTruncated as exc:
        # a cut-off comment almost never validates, but let the validator say why
        text = exc.response.text if exc.response is not None else ""
    return parse_and_validate(text, granularity, max_tokens)


# --- training corpus ------------------------------------------------------

@dataclass
class TrainingSample:
    instruction: str
    input: str
    output: str
    mode: str

    def __post_init__(self) -> None:
        if self.mode not in CORPUS_MODES:
            raise ValueError(f"mode must be one of {CORPUS_MODES}")

    def to_json(self) -> dict:
        return {"instruction": self.instruction, "input": self.input, "output": self.output}


@dataclass
class FilterStats:
    kept: int = 0
    dropped_invalid_comment: int = 0
    dropped_missing_fields: int = 0
    dropped_over_length: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_invalid_comment + self.dropped_missing_fields + self.dropped_over_length

    @property
    def total(self) -> int:
        return self.kept + self.dropped

    def count_rejection(self, reason: str) -> None:
        attr = f"dropped_{reason}"
        setattr(self, attr, getattr(self, attr) + 1)

    def to_json(self) -> dict:
        return {**asdict(self), "total": self.total}


class CorpusAborted(BackendUnavailable):
    """Backend went away mid-build; carries what was finished so far."""

    def __init__(self, message: str, stats: FilterStats, samples: list[TrainingSample]):
        super().__init__(message)
        self.stats = stats
        self.samples = samples


def make_training_sample(
    pseudo: str,
    ground_truth: str,
    rationale: Rationale | None,
    mode: str,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> TrainingSample:
    if mode == "no_rationale":
        return TrainingSample(templates.instruction, pseudo, ground_truth, mode)
    if rationale is None:
        raise ValueError(f"mode {mode} needs a rationale")
    # rationale always precedes the pseudo-code
    injected = f"{rationale.raw_comment}\n{pseudo}"
    output = ground_truth
    if mode == "full_distillation":
        output = f"{rationale.raw_comment}\n{ground_truth}"
    return TrainingSample(templates.instruction, injected, output, mode)


def sequence_tokens(sample: TrainingSample) -> int:
    return sum(
        clex.count_tokens(part, include_comments=True)
        for part in (sample.instruction, sample.input, sample.output)
    )


def build_training_corpus(
    pairs: Sequence[tuple[str, str]],
    gen: Backend | None,
    mode: str = "source_only",
    granularity: str = "concise",
    max_seq_tokens: int = DEFAULT_MAX_SEQ_TOKENS,
    max_rationale_tokens: int = DEFAULT_MAX_RATIONALE_TOKENS,
    workers: int = 4,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> tuple[list[TrainingSample], FilterStats]:
    """Annotate (pseudo, source) pairs and emit Alpaca records in input order."""
    if not pairs:
        raise ValueError("no pairs given")
    if mode not in CORPUS_MODES:
        raise ValueError(f"mode must be one of {CORPUS_MODES}")
    if mode != "no_rationale" and gen is None:
        raise ValueError("a generator backend is required unless mode is no_rationale")

    def work(idx: int):
        pseudo, truth = pairs[idx]
        rationale = None
        if mode != "no_rationale":
            try:
                rationale = generate_rationale(pseudo, gen, granularity, templates, max_rationale_tokens)
            except RationaleRejected as rej:
                return rej.reason
        sample = make_training_sample(pseudo, truth, rationale, mode, templates)
        if sequence_tokens(sample) > max_seq_tokens:
            return "over_length"
        return sample

    results: dict[int, object] = {}
    failure: BackendUnavailable | None = None
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {pool.submit(work, i): i for i in range(len(pairs))}
        for fut in as_completed(futures):
            try:
                results[futures[fut]] = fut.result()
            except CancelledError:
                continue
            except BackendUnavailable as exc:
                if failure is None:
                    failure = exc
                    pool.shutdown(wait=False, cancel_futures=True)

    stats = FilterStats()
    samples: list[TrainingSample] = []
    for idx in sorted(results):
        res = results[idx]
        if isinstance(res, TrainingSample):
            stats.kept += 1
            samples.append(res)
        else:
            stats.count_rejection(res)

    if failure is not None:
        raise CorpusAborted(f"corpus build aborted: {failure}", stats, samples)
    assert stats.total == len(pairs), f"filter accounting off: {stats.total} != {len(pairs)}"
    return samples, stats


def write_corpus(samples: Sequence[TrainingSample], stats: FilterStats, out_path: str | Path) -> Path:
    """Write the JSONL corpus and a ``<stem>.stats.json`` sidecar; returns the sidecar path."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")
    return write_stats(stats, out_path)


def write_stats(stats: FilterStats, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    sidecar = out_path.with_name(out_path.stem + ".stats.json")
    sidecar.write_text(json.dumps(stats.to_json(), indent=2) + "\n")
    return sidecar
