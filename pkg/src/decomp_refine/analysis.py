"""Failure rates by code pattern and re-executability by input length.

Pattern detection is lexical: comments and literals are blanked first, then
keywords, operators and call sites are matched on the token stream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import clex
from .errors import JoinMismatch

PATTERN_TAGS = ("if_condition", "while_loop", "bitwise_ops", "do_while_loop", "memory_mgmt")
DEFAULT_EDGES = (50, 100, 200, 500, 1000, 2000, 5000, 10000)

MEMORY_CALLS = {"malloc", "calloc", "realloc", "free", "memcpy", "memmove", "memset"}
_BITWISE_OPS = {"|", "^", "~", "<<", ">>", "<<=", ">>=", "&=", "|=", "^="}
# tokens after which '&' is binary rather than address-of
_OPERAND_END_KINDS = {"ident", "number", "char", "string"}
_NOT_OPERANDS = {"return", "case", "sizeof", "else", "do", "goto"}


def _matching(toks: list[str], open_idx: int, open_tok: str, close_tok: str) -> int | None:
    depth = 0
    for k in range(open_idx, len(toks)):
        if toks[k] == open_tok:
            depth += 1
        elif toks[k] == close_tok:
            depth -= 1
            if depth == 0:
                return k
    return None


def _do_while_tails(toks: list[str]) -> set[int]:
    """Indices of ``while`` tokens that close a do-while loop."""
    tails = set()
    for i, t in enumerate(toks):
        if t != "do":
            continue
        j = i + 1
        if j < len(toks) and toks[j] == "{":
            end = _matching(toks, j, "{", "}")
        else:
            # single statement body: up to the first ';' outside brackets
            end, depth = None, 0
            for k in range(j, len(toks)):
                if toks[k] in "({[":
                    depth += 1
                elif toks[k] in ")}]":
                    depth -= 1
                elif toks[k] == ";" and depth == 0:
                    end = k
                    break
        if end is not None and end + 1 < len(toks) and toks[end + 1] == "while":
            tails.add(end + 1)
    return tails


def classify_patterns(source: str) -> set[str]:
    scanned = clex.scan(clex.strip_comments_and_strings(source))
    toks = [str(t) for t in scanned]
    tags: set[str] = set()
    tails = _do_while_tails(toks)
    if tails:
        tags.add("do_while_loop")
    for i, tok in enumerate(scanned):
        if tok.kind == "ident":
            if tok == "if":
                tags.add("if_condition")
            elif tok == "while" and i not in tails:
                tags.add("while_loop")
            elif tok in MEMORY_CALLS and i + 1 < len(toks) and toks[i + 1] == "(":
                tags.add("memory_mgmt")
        elif tok in _BITWISE_OPS:
            tags.add("bitwise_ops")
        elif tok in ("&",) and i > 0:
            prev = scanned[i - 1]
            if (prev.kind in _OPERAND_END_KINDS and prev not in _NOT_OPERANDS) or prev in (")", "]"):
                tags.add("bitwise_ops")
    return tags


def _join(records: Iterable, samples: Sequence) -> list[tuple[object, object]]:
    by_id = {s.id: s for s in samples}
    pairs = []
    for r in records:
        sid = r.sample_id if hasattr(r, "sample_id") else r["sample_id"]
        if sid not in by_id:
            raise JoinMismatch(f"record {sid!r} has no matching sample")
        pairs.append((r, by_id[sid]))
    return pairs


def _passed(record) -> bool:
    return bool(record.re_exec_pass if hasattr(record, "re_exec_pass") else record["re_exec_pass"])


@dataclass
class PatternStat:
    tag: str
    failures: int
    total: int

    @property
    def rate(self) -> float | None:
        return self.failures / self.total if self.total else None


def failure_by_pattern(records: Iterable, samples: Sequence) -> dict[str, PatternStat]:
    """Per tag: how many tagged samples failed re-execution, out of how many."""
    stats = {t: PatternStat(t, 0, 0) for t in PATTERN_TAGS}
    for rec, sample in _join(records, samples):
        for tag in classify_patterns(sample.ground_truth or ""):
            stats[tag].total += 1
            if not _passed(rec):
                stats[tag].failures += 1
    return stats


@dataclass
class LengthBucket:
    lo: int
    hi: int | None  # None means unbounded
    n: int = 0
    passes: int = 0

    @property
    def rate(self) -> float | None:
        return self.passes / self.n if self.n else None

    def contains(self, length: int) -> bool:
        return self.lo <= length and (self.hi is None or length < self.hi)


def make_buckets(edges: Sequence[float]) -> list[LengthBucket]:
    if not edges:
        raise ValueError("need at least one edge")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bucket edges must be strictly increasing")
    bounds = [e for e in edges if not math.isinf(e)] or [0]
    lo_edges = [0] + bounds if bounds[0] > 0 else bounds
    buckets = []
    for i, lo in enumerate(lo_edges):
        hi = lo_edges[i + 1] if i + 1 < len(lo_edges) else None
        buckets.append(LengthBucket(int(lo), None if hi is None else int(hi)))
    return buckets


def rate_by_length(records: Iterable, samples: Sequence, bucket_edges: Sequence[float] = DEFAULT_EDGES) -> list[LengthBucket]:
    """Re-executability per pseudo-code length bucket (lexical tokens)."""
    buckets = make_buckets(bucket_edges)
    for rec, sample in _join(records, samples):
        length = clex.count_tokens(sample.pseudo_code)
        for b in buckets:
            if b.contains(length):
                b.n += 1
                b.passes += _passed(rec)
                break
    return buckets


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def write_patterns_csv(stats: dict[str, PatternStat], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tag", "failures", "total", "failure_rate"])
        for tag in PATTERN_TAGS:
            s = stats[tag]
            w.writerow([tag, s.failures, s.total, _fmt(s.rate)])


def write_length_csv(buckets: Sequence[LengthBucket], path: str | Path) -> None:
    # midpoint column gives gnuplot something to put on a log x axis
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lo", "hi", "n", "passes", "re_exec_rate", "midpoint"])
        for b in buckets:
            mid = "" if b.hi is None else (b.lo + b.hi) / 2
            w.writerow([b.lo, "" if b.hi is None else b.hi, b.n, b.passes, _fmt(b.rate), mid])
