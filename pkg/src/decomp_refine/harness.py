"""Re-executability testing, benchmark runs and report emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import shutil
import signal
import subprocess
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Sequence

from . import clex
from .analysis import classify_patterns
from .backend import Backend
from .corpus import OPT_LEVELS, BenchmarkSample, ToolchainConfig
from .ddpf import SEMANTIC, SYNTACTIC, PipelineSettings, decision_log_entry, make_candidate, run_ddpf
from .errors import BackendUnavailable, EmptyInput
from .metric import round_half_up, source_bleu4

log = logging.getLogger(__name__)

PATH_MODES = ("ddpf", "sem", "syn")
_MODE_PATH = {"sem": SEMANTIC, "syn": SYNTACTIC}


@dataclass
class RunConfig:
    workers: int = 4
    exec_timeout: float = 10.0
    opt_levels: tuple[str, ...] = OPT_LEVELS
    output_dir: str = "runs/latest"
    seed_ordering: bool = True
    max_output_bytes: int = 1 << 20
    max_memory_mb: int = 2048

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.exec_timeout <= 0:
            raise ValueError("exec_timeout must be > 0")
        self.opt_levels = tuple(self.opt_levels)
        bad = [lv for lv in self.opt_levels if lv not in OPT_LEVELS]
        if bad:
            raise ValueError(f"unknown optimization levels {bad}")


@dataclass
class ExecOutcome:
    passed: bool
    error_class: str | None = None
    detail: str = ""


@dataclass
class EvalRecord:
    sample_id: str
    opt_level: str
    selected_path: str | None
    compile_ok: bool
    re_exec_pass: bool
    source_bleu4: float | None
    consistency: float
    wall_time: float
    error_class: str | None = None
    branch: str | None = None
    mode: str = "ddpf"
    pattern_tags: list[str] = field(default_factory=list)
    token_length: int = 0
    decision: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.re_exec_pass and not self.compile_ok:
            raise ValueError("re_exec_pass implies compile_ok")

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("decision")
        return d

    def comparable(self) -> dict:
        """Payload without timing, for replay comparisons."""
        d = self.to_json()
        d.pop("wall_time")
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "EvalRecord":
        names = {f for f in cls.__dataclass_fields__ if f != "decision"}
        return cls(**{k: v for k, v in obj.items() if k in names})


# --- sandboxed execution --------------------------------------------------

def _limited_argv(exe: str, max_output_bytes: int, max_memory_mb: int) -> list[str]:
    blocks = max(1, max_output_bytes // 512)
    script = (
        f"ulimit -c 0 2>/dev/null; ulimit -f {blocks} 2>/dev/null; "
        f"ulimit -v {max_memory_mb * 1024} 2>/dev/null; exec \"$0\""
    )
    return ["/bin/sh", "-c", script, exe]


def run_unit_tests(
    source: str,
    harness_src: str,
    toolchain: ToolchainConfig,
    timeout: float = 10.0,
    max_output_bytes: int = 1 << 20,
    max_memory_mb: int = 2048,
) -> ExecOutcome:
    """Build *source* together with its test ``main`` and run it.

    Passing means exit status 0 within *timeout*. Everything a candidate can do
    wrong (not compiling, crashing, hanging, spamming output) is reported as a
    failed outcome, never raised.
    """
    cc = toolchain.resolve("compiler")
    workdir = toolchain.make_workspace("exec_")
    try:
        (workdir / "main.c").write_text(toolchain.prelude + source + "\n\n" + harness_src + "\n")
        try:
            build = subprocess.run(
                [cc, *toolchain.extra_flags, "main.c", "-o", "prog", "-lm"],
                cwd=workdir, capture_output=True, text=True, timeout=toolchain.compile_timeout,
            )
        except subprocess.TimeoutExpired:
            return ExecOutcome(False, "compile_timeout")
        if build.returncode != 0:
            return ExecOutcome(False, "compile_error", build.stderr[-2000:])

        argv = _limited_argv("./prog", max_output_bytes, max_memory_mb)
        with open(workdir / "stdout", "wb") as out, open(workdir / "stderr", "wb") as err:
            proc = subprocess.Popen(
                argv, cwd=workdir, stdin=subprocess.DEVNULL, stdout=out, stderr=err,
                start_new_session=True,
            )
            try:
                rc = proc.wait(timeout=timeout)
            except subprocess.TimeoutExpired:
                _kill_group(proc)
                return ExecOutcome(False, "timeout", f"killed after {timeout}s")
        detail = _tail(workdir / "stderr", 2000)
        if rc == 0:
            return ExecOutcome(True, None, detail)
        if rc < 0:
            sig = -rc
            if sig == signal.SIGXFSZ:
                return ExecOutcome(False, "output_limit", detail)
            return ExecOutcome(False, "crash", f"signal {signal.Signals(sig).name}\n{detail}")
        return ExecOutcome(False, "test_failed", f"exit status {rc}\n{detail}")
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except ProcessLookupError:
        pass
    proc.wait()


def _tail(path: Path, limit: int) -> str:
    data = path.read_bytes()[-limit:]
    return data.decode("utf-8", errors="replace")


# --- benchmark runs -------------------------------------------------------

def evaluate_sample(
    sample: BenchmarkSample,
    gen: Backend,
    ref: Backend,
    toolchain: ToolchainConfig,
    cfg: RunConfig,
    settings: PipelineSettings,
    mode: str = "ddpf",
) -> EvalRecord:
    start = time.monotonic()
    tags = sorted(classify_patterns(sample.ground_truth or ""))
    length = clex.count_tokens(sample.pseudo_code)
    base = dict(sample_id=sample.id, opt_level=sample.opt_level, mode=mode,
                pattern_tags=tags, token_length=length)
    try:
        if mode == "ddpf":
            decision, (sem, syn) = run_ddpf(sample, gen, ref, toolchain, settings)
            chosen, branch = decision.chosen, decision.branch
            log_entry = decision_log_entry(sample, decision, {"sem": sem, "syn": syn}, mode)
        else:
            chosen = make_candidate(sample, _MODE_PATH[mode], gen, ref, toolchain, settings)
            branch = None
            log_entry = decision_log_entry(sample, None, {mode: chosen}, mode)
    except BackendUnavailable as exc:
        log.warning("sample %s: backend unavailable: %s", sample.id, exc)
        return EvalRecord(
            selected_path=None, compile_ok=False, re_exec_pass=False, source_bleu4=None,
            consistency=0.0, wall_time=time.monotonic() - start,
            error_class="backend_unavailable",
            decision={"sample_id": sample.id, "opt_level": sample.opt_level, "mode": mode,
                      "error": str(exc)},
            **base,
        )

    passed = False
    error_class = None
    if not chosen.compile_ok:
        error_class = chosen.note or "compile_error"
    elif not sample.test_harness:
        error_class = "no_harness"
    else:
        outcome = run_unit_tests(
            chosen.source, sample.test_harness, toolchain, cfg.exec_timeout,
            cfg.max_output_bytes, cfg.max_memory_mb,
        )
        passed, error_class = outcome.passed, outcome.error_class
    bleu4 = None
    if chosen.source.strip() and sample.ground_truth:
        bleu4 = source_bleu4(chosen.source, sample.ground_truth, settings.bleu)
    return EvalRecord(
        selected_path=chosen.path,
        compile_ok=chosen.compile_ok,
        re_exec_pass=passed,
        source_bleu4=bleu4,
        consistency=chosen.consistency,
        wall_time=time.monotonic() - start,
        error_class=error_class,
        branch=branch,
        decision=log_entry,
        **base,
    )


def evaluate_benchmark(
    samples: Sequence[BenchmarkSample],
    gen: Backend,
    ref: Backend,
    toolchain: ToolchainConfig,
    cfg: RunConfig = RunConfig(),
    settings: PipelineSettings = PipelineSettings(),
    mode: str = "ddpf",
) -> list[EvalRecord]:
    """Evaluate every sample whose level is selected; one record per sample, sorted by id."""
    if mode not in PATH_MODES:
        raise ValueError(f"mode must be one of {PATH_MODES}")
    selected = [s for s in samples if s.opt_level in cfg.opt_levels]
    if not selected:
        raise EmptyInput("no samples left after the optimization-level filter")
    if cfg.seed_ordering:
        selected.sort(key=lambda s: s.id)
    # fail fast on a missing toolchain instead of once per sample
    toolchain.resolve("compiler")
    toolchain.resolve("disassembler")

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        records = list(pool.map(
            lambda s: evaluate_sample(s, gen, ref, toolchain, cfg, settings, mode), selected
        ))
    records.sort(key=lambda r: r.sample_id)
    assert len(records) == len(selected)
    return records


# --- reports --------------------------------------------------------------

@dataclass
class LevelSummary:
    level: str
    n: int
    re_exec_pass: int
    compile_ok: int
    bleu_sum: float
    bleu_n: int

    @property
    def re_exec_rate(self) -> float:
        return 100.0 * self.re_exec_pass / self.n

    @property
    def compile_rate(self) -> float:
        return 100.0 * self.compile_ok / self.n

    @property
    def mean_bleu(self) -> float | None:
        return self.bleu_sum / self.bleu_n if self.bleu_n else None


def summarize_levels(records: Sequence[EvalRecord]) -> list[LevelSummary]:
    out = []
    for level in OPT_LEVELS:
        rs = [r for r in records if r.opt_level == level]
        if not rs:
            continue
        bleus = [r.source_bleu4 for r in rs if r.source_bleu4 is not None]
        out.append(LevelSummary(
            level, len(rs), sum(r.re_exec_pass for r in rs), sum(r.compile_ok for r in rs),
            sum(bleus), len(bleus),
        ))
    return out


def average_rates(rates: Sequence[float]) -> str:
    """Avg column: arithmetic mean of per-level percentages, half-up to two decimals."""
    if not rates:
        raise EmptyInput("no rates to average")
    return str(round_half_up(fmean(rates), 2))


def _pct(x: float) -> str:
    return str(round_half_up(x, 2))


def _bleu(x: float | None) -> str:
    return "-" if x is None else str(round_half_up(x, 4))


def emit_report(records: Sequence[EvalRecord], title: str = "Re-executability report") -> tuple[str, str]:
    """Return (report text, CSV text). Both are pure functions of *records*."""
    if not records:
        raise EmptyInput("no records to report")
    levels = summarize_levels(records)
    bleu_means = [lv.mean_bleu for lv in levels if lv.mean_bleu is not None]
    avg_re = average_rates([lv.re_exec_rate for lv in levels])
    avg_cc = average_rates([lv.compile_rate for lv in levels])
    avg_bleu = _bleu(fmean(bleu_means)) if bleu_means else "-"

    modes = sorted({r.mode for r in records})
    lines = [f"{title} (mode={','.join(modes)}, N={len(records)})", ""]
    header = ["Metric"] + [lv.level for lv in levels] + ["Avg"]
    rows = [
        ["Re-exec (%)"] + [_pct(lv.re_exec_rate) for lv in levels] + [avg_re],
        ["Compile (%)"] + [_pct(lv.compile_rate) for lv in levels] + [avg_cc],
        ["BLEU-4 (src)"] + [_bleu(lv.mean_bleu) for lv in levels] + [avg_bleu],
    ]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    for row in [header] + rows:
        lines.append("  ".join(c.ljust(widths[0]) if i == 0 else c.rjust(widths[i])
                               for i, c in enumerate(row)))

    n = len(records)
    paths = Counter(r.selected_path or "none" for r in records)
    lines += ["", "Path selection:"]
    for p in ("semantic", "syntactic", "none"):
        lines.append(f"  {p:<10} {paths.get(p, 0):>5}  ({_pct(100.0 * paths.get(p, 0) / n)}%)")
    branches = Counter(r.branch for r in records if r.branch)
    if branches:
        lines += ["", "Selection branches:"]
        lines += [f"  {b:<24} {c:>5}" for b, c in sorted(branches.items())]
    errors = Counter(r.error_class for r in records if r.error_class)
    if errors:
        lines += ["", "Failure classes:"]
        lines += [f"  {e:<24} {c:>5}" for e, c in sorted(errors.items())]
    text = "\n".join(lines) + "\n"

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "n", "re_exec_pass", "compile_ok", "re_exec_rate", "compile_rate", "mean_source_bleu4"])
    for lv in levels:
        w.writerow([lv.level, lv.n, lv.re_exec_pass, lv.compile_ok,
                    _pct(lv.re_exec_rate), _pct(lv.compile_rate), _bleu(lv.mean_bleu)])
    w.writerow(["Avg", n, sum(lv.re_exec_pass for lv in levels), sum(lv.compile_ok for lv in levels),
                avg_re, avg_cc, avg_bleu])
    return text, buf.getvalue()


def write_run_outputs(records: Sequence[EvalRecord], out_dir: str | Path, title: str = "Re-executability report") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "records.jsonl", "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")
    with open(out_dir / "decisions.jsonl", "w", encoding="utf-8") as fh:
        for r in records:
            if r.decision is not None:
                fh.write(json.dumps(r.decision, sort_keys=True) + "\n")
    text, table = emit_report(records, title)
    (out_dir / "report.txt").write_text(text)
    (out_dir / "report.csv").write_text(table)
    return out_dir


def load_records(path: str | Path) -> list[EvalRecord]:
    with open(path, encoding="utf-8") as fh:
        return [EvalRecord.from_json(json.loads(line)) for line in fh if line.strip()]
