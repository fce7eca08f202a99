"""Dual-path refinement with compile-and-compare selection.

Each sample gets two candidates from the same refiner: a semantic one
conditioned on a generated rationale, and a syntactic one from pseudo-code
alone. Both are recompiled at the sample's optimization level and scored
against its original assembly; ``select`` then prefers the semantic candidate
whenever it compiles and scores at least as well.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from . import clex
from .backend import Backend, CompletionRequest
from .corpus import BenchmarkSample, ToolchainConfig
from .errors import EmptyGeneration, RationaleRejected, ResponseTruncated
from .metric import BleuConfig, consistency_score
from .prompts import DEFAULT_TEMPLATES, PromptTemplates, fill
from .sce import Rationale, generate_rationale

SEMANTIC = "semantic"
SYNTACTIC = "syntactic"

BRANCHES = (
    "sem_only_compiles",
    "sem_score_wins_or_ties",
    "syn_only_compiles",
    "syn_score_wins",
    "both_fail_default_syn",
)


@dataclass
class Candidate:
    source: str
    path: str
    compile_ok: bool = False
    consistency: float = 0.0
    rationale_used: Rationale | None = None
    diagnostics: str = ""
    note: str | None = None

    def __post_init__(self) -> None:
        if self.path not in (SEMANTIC, SYNTACTIC):
            raise ValueError(f"unknown path {self.path!r}")
        if self.path == SYNTACTIC and self.rationale_used is not None:
            raise ValueError("syntactic candidates never carry a rationale")
        if not self.compile_ok:
            self.consistency = 0.0

    def to_json(self) -> dict:
        return {
            "path": self.path,
            "source": self.source,
            "compile_ok": self.compile_ok,
            "consistency": self.consistency,
            "diagnostics_digest": hashlib.sha256(self.diagnostics.encode()).hexdigest()[:16],
            "diagnostics_head": self.diagnostics[:300],
            "note": self.note,
            "rationale": self.rationale_used.raw_comment if self.rationale_used else None,
        }


@dataclass
class SelectionDecision:
    chosen: Candidate
    branch: str
    scores: dict[str, float | None] = field(default_factory=dict)


def select(sem: Candidate, syn: Candidate) -> SelectionDecision:
    """Semantic wins iff it compiles and either syntactic fails or sem scores >= syn."""
    scores = {
        "sem": sem.consistency if sem.compile_ok else None,
        "syn": syn.consistency if syn.compile_ok else None,
    }
    if sem.compile_ok and not syn.compile_ok:
        return SelectionDecision(sem, "sem_only_compiles", scores)
    if sem.compile_ok and sem.consistency >= syn.consistency:
        return SelectionDecision(sem, "sem_score_wins_or_ties", scores)
    if sem.compile_ok:
        return SelectionDecision(syn, "syn_score_wins", scores)
    if syn.compile_ok:
        return SelectionDecision(syn, "syn_only_compiles", scores)
    return SelectionDecision(syn, "both_fail_default_syn", scores)


# --- extraction -----------------------------------------------------------

_FENCE = re.compile(r"```[ \t]*(?:[A-Za-z+#]*)[ \t]*\n(.*?)(?:```|\Z)", re.DOTALL)


def _strip_fence(text: str) -> str:
    m = _FENCE.search(text)
    return m.group(1) if m else text


def _code_tokens(text: str):
    """(kind, text, start, end) for every non-comment, non-whitespace token."""
    for m in clex._TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind in ("ws", "line_comment", "block_comment"):
            continue
        yield kind, m.group(), m.start(), m.end()


def extract_function(text: str) -> str:
    """Return the first complete, brace-balanced C function definition in *text*.

    Preprocessor lines that precede it are kept so includes survive.
    """
    code = _strip_fence(text)
    toks = list(_code_tokens(code))
    depth = 0
    for i, (kind, tok, start, _) in enumerate(toks):
        if tok == "{":
            if depth == 0 and i > 0 and toks[i - 1][1] == ")":
                end = _matching_brace(toks, i)
                if end is None:
                    break
                sig_start = _signature_start(code, toks, i - 1)
                if sig_start is None:
                    depth += 1
                    continue
                body = code[sig_start:end].strip()
                pre = [
                    ln.strip()
                    for ln in code[:sig_start].splitlines()
                    if ln.strip().startswith("#")
                ]
                return "\n".join(pre + [body]) if pre else body
            depth += 1
        elif tok == "}":
            depth = max(0, depth - 1)
    raise EmptyGeneration("no complete C function in model output")


def _matching_brace(toks, open_idx: int) -> int | None:
    depth = 0
    for kind, tok, _, end in toks[open_idx:]:
        if tok == "{":
            depth += 1
        elif tok == "}":
            depth -= 1
            if depth == 0:
                return end
    return None


def _signature_start(code: str, toks, close_paren_idx: int) -> int | None:
    depth = 0
    j = close_paren_idx
    while j >= 0:
        tok = toks[j][1]
        if tok == ")":
            depth += 1
        elif tok == "(":
            depth -= 1
            if depth == 0:
                break
        j -= 1
    if j <= 0 or toks[j - 1][0] != "ident":
        return None
    name_start = toks[j - 1][2]
    line_start = code.rfind("\n", 0, name_start) + 1
    if code[line_start:name_start].strip():
        return line_start
    # GNU style: return type on the line above the name
    prev_end = line_start - 1
    if prev_end <= 0:
        return line_start
    prev_start = code.rfind("\n", 0, prev_end) + 1
    prev = code[prev_start:prev_end].strip()
    prev_toks = clex.tokenize(prev)
    if prev_toks and len(prev_toks) <= 4 and all(t == "*" or t.isidentifier() for t in prev_toks):
        return prev_start
    return line_start


# --- generation -----------------------------------------------------------

def build_refine_prompt(
    pseudo: str,
    rationale: Rationale | None,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> CompletionRequest:
    if rationale is not None:
        text = fill(
            templates.refine_with_rationale,
            instruction=templates.instruction,
            rationale=rationale.raw_comment,
            code_snippet=pseudo,
        )
    else:
        text = fill(templates.refine_plain, instruction=templates.instruction, code_snippet=pseudo)
    return CompletionRequest(system_text="", user_text=text)


def refine(
    pseudo: str,
    rationale: Rationale | None,
    ref_backend: Backend,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> str:
    req = build_refine_prompt(pseudo, rationale, templates)
    try:
        text = ref_backend.complete(req).text
    except ResponseTruncated as exc:
        text = exc.response.text if exc.response is not None else ""
    return extract_function(text)


@dataclass
class PipelineSettings:
    granularity: str = "concise"
    max_rationale_tokens: int = 256
    templates: PromptTemplates = field(default_factory=PromptTemplates)
    bleu: BleuConfig = field(default_factory=BleuConfig)


def make_candidate(
    sample: BenchmarkSample,
    path: str,
    gen: Backend,
    ref: Backend,
    toolchain: ToolchainConfig,
    settings: PipelineSettings = PipelineSettings(),
) -> Candidate:
    """Generate and score one path's candidate. BackendUnavailable propagates."""
    rationale = None
    if path == SEMANTIC:
        try:
            rationale = generate_rationale(
                sample.pseudo_code, gen, settings.granularity,
                settings.templates, settings.max_rationale_tokens,
            )
        except RationaleRejected as rej:
            return Candidate("", SEMANTIC, note=f"rationale_rejected:{rej.reason}")
    try:
        source = refine(sample.pseudo_code, rationale, ref, settings.templates)
    except EmptyGeneration:
        return Candidate("", path, rationale_used=rationale, note="empty_generation")
    report = consistency_score(source, sample, toolchain, settings.bleu)
    return Candidate(
        source, path, report.compile_ok, report.consistency,
        rationale_used=rationale, diagnostics=report.diagnostics,
    )


def run_ddpf(
    sample: BenchmarkSample,
    gen: Backend,
    ref: Backend,
    toolchain: ToolchainConfig,
    settings: PipelineSettings = PipelineSettings(),
) -> tuple[SelectionDecision, tuple[Candidate, Candidate]]:
    sem = make_candidate(sample, SEMANTIC, gen, ref, toolchain, settings)
    syn = make_candidate(sample, SYNTACTIC, gen, ref, toolchain, settings)
    return select(sem, syn), (sem, syn)


def decision_log_entry(
    sample: BenchmarkSample,
    decision: SelectionDecision | None,
    candidates: dict[str, Candidate],
    mode: str = "ddpf",
) -> dict:
    chosen = None
    if decision is not None:
        chosen = decision.chosen.path
    elif len(candidates) == 1:
        chosen = next(iter(candidates.values())).path
    return {
        "sample_id": sample.id,
        "opt_level": sample.opt_level,
        "mode": mode,
        "branch": decision.branch if decision else None,
        "chosen_path": chosen,
        "scores": decision.scores if decision else None,
        "candidates": {k: c.to_json() for k, c in candidates.items()},
    }


def reselect_from_log(entry: dict) -> SelectionDecision:
    """Re-run the selection rule from a decision-log entry, no toolchain needed."""
    c = entry["candidates"]

    def rebuild(d: dict) -> Candidate:
        return Candidate(d["source"], d["path"], d["compile_ok"], d["consistency"], note=d.get("note"))

    return select(rebuild(c["sem"]), rebuild(c["syn"]))
