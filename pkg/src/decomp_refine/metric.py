"""Scoring: BLEU, recompilation consistency, re-executability and compile rate."""

from __future__ import annotations

import math
import shutil
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from . import clex
from .corpus import BenchmarkSample, ToolchainConfig, compile_source, disassemble, normalize_assembly
from .errors import EmptyInput

SMOOTHING_MODES = ("none", "add_epsilon")


@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    smoothing: str = "add_epsilon"
    epsilon: float = 1e-9
    brevity_penalty: bool = True

    def __post_init__(self) -> None:
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.smoothing not in SMOOTHING_MODES:
            raise ValueError(f"smoothing must be one of {SMOOTHING_MODES}")


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def modified_precision_counts(candidate: Sequence[str], reference: Sequence[str], n: int) -> tuple[int, int]:
    """(clipped matches, total candidate n-grams) for order *n*."""
    cand = ngrams(candidate, n)
    ref = ngrams(reference, n)
    clipped = sum(min(c, ref[g]) for g, c in cand.items())
    return clipped, sum(cand.values())


def bleu(candidate: Sequence[str], reference: Sequence[str], cfg: BleuConfig = BleuConfig()) -> float:
    """Sentence BLEU of *candidate* against a single *reference*.

    Orders longer than the candidate have no n-grams and are left out of the
    geometric mean, so any non-empty sequence scores 1.0 against itself.
    """
    if not candidate:
        return 0.0
    log_sum = 0.0
    orders = min(cfg.max_n, len(candidate))
    for n in range(1, orders + 1):
        clipped, total = modified_precision_counts(candidate, reference, n)
        p = clipped / total
        if p == 0.0:
            if cfg.smoothing == "none":
                return 0.0
            p = cfg.epsilon
        log_sum += math.log(p)
    score = math.exp(log_sum / orders)
    if cfg.brevity_penalty:
        score *= math.exp(min(0.0, 1.0 - len(reference) / len(candidate)))
    return min(1.0, max(0.0, score))


def source_bleu4(generated: str, ground_truth: str, cfg: BleuConfig = BleuConfig()) -> float:
    return bleu(clex.tokenize(generated), clex.tokenize(ground_truth), cfg)


@dataclass
class ScoreReport:
    consistency: float
    compile_ok: bool
    diagnostics: str = ""
    source_bleu4: float | None = None
    re_exec_pass: bool | None = None


def consistency_score(
    candidate_source: str,
    sample: BenchmarkSample,
    toolchain: ToolchainConfig,
    cfg: BleuConfig = BleuConfig(),
) -> ScoreReport:
    """Recompile the candidate at the sample's level and compare assembly."""
    if not sample.original_asm:
        raise ValueError(f"sample {sample.id} has no reference assembly")
    if not candidate_source.strip():
        return ScoreReport(0.0, False, "empty candidate")
    workdir = toolchain.make_workspace("score_")
    try:
        res = compile_source(candidate_source, sample.opt_level, toolchain, workdir)
        if not res.ok:
            return ScoreReport(0.0, False, res.diagnostics)
        tokens = normalize_assembly(disassemble(res.binary_path, toolchain))
        return ScoreReport(bleu(tokens, sample.original_asm, cfg), True, res.diagnostics)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def re_exec_rate(records: Iterable) -> float:
    records = list(records)
    if not records:
        raise EmptyInput("no records")
    flags = [_field(r, "re_exec_pass") for r in records]
    if any(f is None for f in flags):
        raise ValueError("every record needs re_exec_pass")
    return sum(bool(f) for f in flags) / len(flags)


def compile_rate(records: Iterable) -> float:
    records = list(records)
    if not records:
        raise EmptyInput("no records")
    return sum(bool(_field(r, "compile_ok")) for r in records) / len(records)


def _field(record, name):
    return record[name] if isinstance(record, dict) else getattr(record, name)


def round_half_up(value: float, places: int = 2) -> Decimal:
    """Round the way report tables do (0.005 goes up), avoiding float artefacts."""
    quantum = Decimal(1).scaleb(-places)
    return Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP)


def format_pct(value: float) -> str:
    return str(round_half_up(value, 2))
