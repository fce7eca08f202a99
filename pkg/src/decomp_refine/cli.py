"""Command-line entry point.

Exit status: 0 on success, 1 when infrastructure fails (toolchain, fixtures,
backend, unreadable input), 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import platform
import sys
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, analysis, demo
from .backend import Backend, fixture_digest
from .config import AppConfig, load_config
from .corpus import OPT_LEVELS, load_samples
from .errors import BackendUnavailable, ConfigError, DecompRefineError, RationaleRejected
from .harness import PATH_MODES, evaluate_benchmark, load_records, write_run_outputs
from .sce import (
    CORPUS_MODES,
    GRANULARITIES,
    CorpusAborted,
    FilterStats,
    build_training_corpus,
    generate_rationale,
    write_corpus,
)

log = logging.getLogger("decomp_refine")

EXIT_OK, EXIT_INFRA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_levels(text: str) -> tuple[str, ...]:
    levels = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [lv for lv in levels if lv not in OPT_LEVELS]
    if bad or not levels:
        raise argparse.ArgumentTypeError(f"levels must be a comma list drawn from {','.join(OPT_LEVELS)}")
    return levels


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DecompRefineError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
    return rows


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- setup ----------------------------------------------------------------

def make_config(args) -> AppConfig:
    cfg = load_config(args.config)
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        cfg.run.workers = args.workers
    if args.timeout is not None:
        if args.timeout <= 0:
            raise UsageError("--timeout must be > 0")
        cfg.run.exec_timeout = args.timeout
    if args.mock_fixtures:
        cfg.generator.fixtures_dir = args.mock_fixtures
        cfg.refiner.fixtures_dir = args.mock_fixtures
    return cfg


def write_manifest(path: Path, cfg: AppConfig, command: str, inputs: dict[str, str], extra: dict | None = None) -> None:
    fixtures = {}
    for role, spec in (("generator", cfg.generator), ("refiner", cfg.refiner)):
        if spec.fixtures_dir and Path(spec.fixtures_dir).is_dir():
            fixtures[role] = {"dir": spec.fixtures_dir, "digest": fixture_digest(spec.fixtures_dir)}
        elif spec.config.endpoint_url:
            fixtures[role] = {"endpoint": spec.config.endpoint_url, "model": spec.config.model_name}
    manifest = {
        "command": command,
        "package_version": __version__,
        "python": platform.python_version(),
        "created_unix": int(time.time()),
        "config_digest": cfg.digest(),
        "config": {
            "toolchain": dataclasses.asdict(cfg.toolchain),
            "bleu": dataclasses.asdict(cfg.bleu),
            "run": dataclasses.asdict(cfg.run),
            "granularity": cfg.granularity,
            "max_rationale_tokens": cfg.max_rationale_tokens,
        },
        "toolchain_versions": cfg.toolchain.versions(),
        "backends": fixtures,
        "inputs": {name: {"path": p, "sha256": file_digest(p)} for name, p in inputs.items()},
    }
    if extra:
        manifest.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _file_manifest(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


# --- subcommands ----------------------------------------------------------

def cmd_annotate(args, cfg: AppConfig) -> int:
    rows = read_jsonl(args.input)
    gen = cfg.generator.build()
    granularity = args.granularity or cfg.granularity

    def work(item):
        idx, row = item
        rid = row.get("id", idx)
        try:
            r = generate_rationale(row["pseudo_code"], gen, granularity,
                                   cfg.prompt_templates, cfg.max_rationale_tokens)
        except RationaleRejected as rej:
            return {"id": rid, "accepted": False, "reason": rej.reason, "detail": rej.detail}
        except BackendUnavailable as exc:
            return {"id": rid, "accepted": False, "reason": "backend_unavailable", "detail": str(exc)}
        out = {"id": rid, "accepted": True, "reason": None, "function_name": r.function_name,
               "purpose": r.purpose, "granularity": r.granularity, "raw_comment": r.raw_comment}
        if r.detailed_fields:
            out.update(r.detailed_fields)
        return out

    for i, row in enumerate(rows):
        if "pseudo_code" not in row:
            raise DecompRefineError(f"{args.input}: row {i + 1} has no pseudo_code")
    with ThreadPoolExecutor(max_workers=cfg.run.workers) as pool:
        results = list(pool.map(work, enumerate(rows)))

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")

    stats = FilterStats()
    reasons = Counter()
    for r in results:
        if r["accepted"]:
            stats.kept += 1
        else:
            reasons[r["reason"]] += 1
            if r["reason"] != "backend_unavailable":
                stats.count_rejection(r["reason"])
    summary = {
        "total": len(results),
        "accepted": stats.kept,
        "rejected": len(results) - stats.kept,
        "by_reason": dict(sorted(reasons.items())),
        "filter_stats": stats.to_json(),
    }
    out.with_name(out.stem + ".summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    write_manifest(_file_manifest(out), cfg, "annotate", {"input": args.input},
                   {"granularity": granularity})
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_build_dataset(args, cfg: AppConfig) -> int:
    rows = read_jsonl(args.input)
    pairs = []
    for i, row in enumerate(rows):
        if "pseudo_code" not in row or "ground_truth" not in row:
            raise DecompRefineError(f"{args.input}: row {i + 1} needs pseudo_code and ground_truth")
        pairs.append((row["pseudo_code"], row["ground_truth"]))
    if not pairs:
        raise DecompRefineError(f"{args.input} holds no pairs")
    gen = cfg.generator.build() if args.mode != "no_rationale" else None
    out = Path(args.out)
    status = EXIT_OK
    try:
        samples, stats = build_training_corpus(
            pairs, gen, args.mode, args.granularity or cfg.granularity,
            args.max_seq_tokens, cfg.max_rationale_tokens, cfg.run.workers, cfg.prompt_templates,
        )
    except CorpusAborted as exc:
        log.error("%s", exc)
        samples, stats, status = exc.samples, exc.stats, EXIT_INFRA
    sidecar = write_corpus(samples, stats, out)
    write_manifest(_file_manifest(out), cfg, "build-dataset", {"input": args.input},
                   {"mode": args.mode, "complete": status == EXIT_OK})
    print(json.dumps({"corpus": str(out), "stats": str(sidecar), **stats.to_json()}, sort_keys=True))
    return status


def cmd_evaluate(args, cfg: AppConfig) -> int:
    samples = load_samples(args.samples)
    if args.levels:
        cfg.run.opt_levels = args.levels
    out_dir = Path(args.out or cfg.run.output_dir)
    cfg.run.output_dir = str(out_dir)
    gen: Backend = cfg.generator.build()
    ref: Backend = cfg.refiner.build()
    records = evaluate_benchmark(samples, gen, ref, cfg.toolchain, cfg.run, cfg.settings(), args.path)
    write_run_outputs(records, out_dir, f"Re-executability report ({args.path})")
    write_manifest(out_dir / "run_manifest.json", cfg, "evaluate", {"samples": args.samples},
                   {"path": args.path, "records": len(records)})
    sys.stdout.write((out_dir / "report.txt").read_text())
    return EXIT_OK


def cmd_analyze(args, cfg: AppConfig) -> int:
    records = load_records(args.records)
    samples = load_samples(args.samples)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = analysis.failure_by_pattern(records, samples)
    buckets = analysis.rate_by_length(records, samples, args.edges)
    analysis.write_patterns_csv(stats, out_dir / "patterns.csv")
    analysis.write_length_csv(buckets, out_dir / "length_curve.csv")
    write_manifest(out_dir / "run_manifest.json", cfg, "analyze",
                   {"records": args.records, "samples": args.samples}, {"edges": list(args.edges)})
    sys.stdout.write((out_dir / "patterns.csv").read_text())
    return EXIT_OK


def cmd_prepare_demo(args, cfg: AppConfig) -> int:
    paths = demo.prepare_demo(args.out, cfg.toolchain, cfg.prompt_templates)
    print(json.dumps(paths, indent=2))
    return EXIT_OK


# --- parser ---------------------------------------------------------------

def _edges(text: str) -> list[float]:
    try:
        edges = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not edges or any(b <= a for a, b in zip(edges, edges[1:])):
        raise argparse.ArgumentTypeError("edges must be a strictly increasing comma list")
    return edges


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="decomp-refine", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--workers", type=int, help="worker pool size")
    p.add_argument("--timeout", type=float, help="per-test execution timeout in seconds")
    p.add_argument("--mock-fixtures", metavar="DIR",
                   help="serve both generator and refiner from this fixture directory")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("annotate", help="generate and validate rationales")
    a.add_argument("input", help="JSONL rows with a pseudo_code field")
    a.add_argument("--granularity", choices=GRANULARITIES)
    a.add_argument("--out", required=True, help="rationales JSONL to write")
    a.set_defaults(func=cmd_annotate)

    b = sub.add_parser("build-dataset", help="build an instruction-tuning corpus")
    b.add_argument("input", help="JSONL rows with pseudo_code and ground_truth")
    b.add_argument("--mode", choices=CORPUS_MODES, default="source_only")
    b.add_argument("--granularity", choices=GRANULARITIES)
    b.add_argument("--max-seq-tokens", type=int, default=2048)
    b.add_argument("--out", required=True, help="corpus JSONL to write")
    b.set_defaults(func=cmd_build_dataset)

    e = sub.add_parser("evaluate", help="refine, select and test a benchmark")
    e.add_argument("samples", help="benchmark samples JSONL")
    e.add_argument("--path", choices=PATH_MODES, default="ddpf")
    e.add_argument("--levels", type=parse_levels, help="e.g. O0,O2")
    e.add_argument("--out", help="output directory")
    e.set_defaults(func=cmd_evaluate)

    n = sub.add_parser("analyze", help="failure rates by pattern and by length")
    n.add_argument("records", help="records.jsonl from evaluate")
    n.add_argument("samples", help="the samples JSONL the records came from")
    n.add_argument("--edges", type=_edges, default=list(analysis.DEFAULT_EDGES),
                   help="length bucket edges, comma separated")
    n.add_argument("--out", required=True, help="output directory")
    n.set_defaults(func=cmd_analyze)

    d = sub.add_parser("prepare-demo", help="write the offline mini-benchmark and fixtures")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_prepare_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        return args.func(args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DecompRefineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFRA


if __name__ == "__main__":
    sys.exit(main())
