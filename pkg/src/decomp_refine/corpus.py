"""Benchmark samples and the external C toolchain.

Compiles candidate sources to unlinked object files, disassembles them and
turns the disassembly into an address-invariant token stream so that two
compilations of the same source compare equal.
"""

from __future__ import annotations

import json
import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DisassemblyFailed, DuplicateId, ParseError, ToolchainMissing

OPT_LEVELS = ("O0", "O1", "O2", "O3")

# Prepended to every translation unit we build. Model outputs routinely use
# bool/fabsf/malloc without including anything.
DEFAULT_PRELUDE = "\n".join(
    f"#include <{h}>"
    for h in (
        "stdio.h", "stdlib.h", "string.h", "math.h",
        "stdbool.h", "stdint.h", "limits.h", "ctype.h",
    )
) + "\n"

DEFAULT_DISASM_FLAGS = ("-d", "--no-show-raw-insn")


@dataclass
class ToolchainConfig:
    compiler_path: str = "gcc"
    disassembler_path: str = "objdump"
    extra_flags: list[str] = field(default_factory=list)
    compile_timeout: float = 30.0
    workspace_root: str = field(default_factory=tempfile.gettempdir)
    disasm_flags: list[str] = field(default_factory=lambda: list(DEFAULT_DISASM_FLAGS))
    prelude: str = DEFAULT_PRELUDE

    def __post_init__(self) -> None:
        if self.compile_timeout <= 0:
            raise ValueError("compile_timeout must be positive")
        root = Path(self.workspace_root)
        if not root.is_dir() or not os.access(root, os.W_OK):
            raise ValueError(f"workspace_root {root} is not a writable directory")

    def resolve(self, which: str) -> str:
        name = self.compiler_path if which == "compiler" else self.disassembler_path
        found = shutil.which(name)
        if found is None:
            raise ToolchainMissing(f"{which} {name!r} not found")
        return found

    def make_workspace(self, prefix: str = "ws_") -> Path:
        return Path(tempfile.mkdtemp(prefix=prefix, dir=self.workspace_root))

    def versions(self) -> dict[str, str]:
        out = {}
        for which in ("compiler", "disassembler"):
            try:
                exe = self.resolve(which)
                proc = subprocess.run([exe, "--version"], capture_output=True, text=True, timeout=10)
                out[which] = proc.stdout.splitlines()[0] if proc.stdout else ""
            except (ToolchainMissing, OSError, subprocess.SubprocessError):
                out[which] = "unavailable"
        return out


@dataclass
class CompileResult:
    ok: bool
    binary_path: Path | None
    diagnostics: str
    timed_out: bool = False


def compile_source(
    source: str,
    opt_level: str,
    cfg: ToolchainConfig,
    workdir: Path | None = None,
) -> CompileResult:
    """Compile *source* to an object file with ``-c -O<level>``.

    A fresh workspace under ``cfg.workspace_root`` is created when *workdir*
    is not given; the caller owns it afterwards.
    """
    if not source.strip():
        raise ValueError("source is empty")
    if opt_level not in OPT_LEVELS:
        raise ValueError(f"bad optimization level {opt_level!r}")
    cc = cfg.resolve("compiler")
    workdir = Path(workdir) if workdir is not None else cfg.make_workspace("cc_")
    src = workdir / "candidate.c"
    obj = workdir / "candidate.o"
    src.write_text(cfg.prelude + source + "\n")
    cmd = [cc, "-c", f"-{opt_level}", *cfg.extra_flags, src.name, "-o", obj.name]
    try:
        proc = subprocess.run(
            cmd, cwd=workdir, capture_output=True, text=True, timeout=cfg.compile_timeout
        )
    except subprocess.TimeoutExpired:
        return CompileResult(False, None, f"compilation timed out after {cfg.compile_timeout}s", True)
    ok = proc.returncode == 0 and obj.exists()
    return CompileResult(ok, obj if ok else None, proc.stderr)


def disassemble(binary_path: Path, cfg: ToolchainConfig) -> str:
    binary_path = Path(binary_path)
    if not binary_path.exists():
        raise FileNotFoundError(binary_path)
    objdump = cfg.resolve("disassembler")
    # Run from the object's directory with a relative name so the header line
    # never carries the workspace path.
    proc = subprocess.run(
        [objdump, *cfg.disasm_flags, binary_path.name],
        cwd=binary_path.parent,
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise DisassemblyFailed(proc.stderr.strip() or f"exit status {proc.returncode}")
    return proc.stdout


# --- normalization -------------------------------------------------------

_OBJDUMP_ADDR = re.compile(r"^\s*[0-9a-fA-F]+:\s")
_RAW_BYTES = re.compile(r"^(?:[0-9a-f]{2} )+\s*")
_RELOC = re.compile(r"^\s*[0-9a-fA-F]+:\s+R_\w+")
_SYM_ANNOT = re.compile(r"<([^<>]*)>")
_FUNC_HEADER = re.compile(r"^[0-9a-fA-F]+\s+<[^>]*>:\s*$")
_LABEL_DEF = re.compile(r"^\s*[\w.$@]+:\s*$")
_HEX_ADDR = re.compile(r"^(?:0x[0-9a-fA-F]+|[0-9a-fA-F]*[0-9][0-9a-fA-F]*)$")
_PLACEHOLDER = re.compile(r"^(?:ADDR|L\d+)$")
_LOCAL_LABEL = re.compile(r"^\.?L\w*$")
_RIP_REL = re.compile(r"^[^(]*\((%?rip)\)$", re.IGNORECASE)
_INTEL_RIP = re.compile(r"^\[rip[+-][^\]]*\]$", re.IGNORECASE)
_INLINE_LABEL = re.compile(r"^[\w.$@]+:\s+(.*)$")

ADDR = "ADDR"


def _split_operands(text: str) -> list[str]:
    """Split on whitespace and top-level commas; keep ``(%rax,%rbx,4)`` whole."""
    parts: list[str] = []
    buf = []
    depth = 0
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth = max(0, depth - 1)
        if depth == 0 and (ch == "," or ch.isspace()):
            if buf:
                parts.append("".join(buf))
                buf = []
            continue
        buf.append(ch)
    if buf:
        parts.append("".join(buf))
    return parts


def _is_branch(mnemonic: str) -> bool:
    m = mnemonic.lower()
    return m.startswith("j") or m.startswith("call") or m.startswith("loop") or m.startswith("xbegin")


class _LabelMap:
    def __init__(self) -> None:
        self._names: dict[str, str] = {}

    def __call__(self, key: str) -> str:
        if key not in self._names:
            self._names[key] = f"L{len(self._names)}"
        return self._names[key]


def _instruction_text(line: str) -> str | None:
    """Return the instruction part of one line, or None if it carries none."""
    stripped = line.strip()
    if not stripped:
        return None
    low = stripped.lower()
    if low.startswith("disassembly of section") or "file format" in low:
        return None
    if _FUNC_HEADER.match(stripped) or _RELOC.match(line):
        return None
    m = _OBJDUMP_ADDR.match(line)
    if m:
        rest = line[m.end():]
        head, tab, tail = rest.partition("\t")
        if tab and _RAW_BYTES.fullmatch(head.strip() + " "):
            rest = tail
        elif not tab:
            # byte-only continuation lines of long instructions
            rest = _RAW_BYTES.sub("", rest.lstrip() + " ", count=1)
        stripped = rest.strip()
    # '#' comments (AT&T) and ';' comments (Intel listings)
    stripped = re.split(r"[#;]", stripped, maxsplit=1)[0].strip()
    if not stripped or stripped.startswith(".") or _LABEL_DEF.match(stripped):
        return None
    lm = _INLINE_LABEL.match(stripped)
    if lm:
        stripped = lm.group(1)
        if stripped.startswith("."):
            return None
    return stripped


def _normalize_operand(tok: str, branch: bool, labels: _LabelMap, annot: str | None) -> str:
    if _PLACEHOLDER.match(tok):
        return labels(tok) if tok != ADDR else tok
    if _HEX_ADDR.match(tok):
        if branch:
            if annot and "+" not in annot and annot.strip():
                return annot.lower()
            return labels(tok.lower())
        return ADDR
    if _LOCAL_LABEL.match(tok) and tok.startswith("."):
        return labels(tok)
    m = _RIP_REL.match(tok)
    if m:
        return f"{ADDR}({m.group(1).lower()})"
    if _INTEL_RIP.match(tok):
        return f"[rip+{ADDR}]"
    return tok.lower()


def normalize_assembly(raw_asm: str) -> list[str]:
    """Reduce objdump or ``gcc -S`` text to mnemonics and canonical operands.

    Absolute addresses become ``ADDR``, rip-relative displacements become
    ``ADDR(%rip)``, branch targets and local labels become ``L0, L1, ...`` in
    order of first appearance. Directives, comments, headers and label
    definitions are dropped.
    """
    labels = _LabelMap()
    tokens: list[str] = []
    for line in raw_asm.splitlines():
        text = _instruction_text(line)
        if text is None:
            continue
        annots = _SYM_ANNOT.findall(text)
        text = _SYM_ANNOT.sub(" ", text)
        parts = _split_operands(text)
        if not parts:
            continue
        mnemonic_idx = 0
        # prefixes such as "rep", "lock", "notrack", "bnd", "cs", "data16"
        while mnemonic_idx < len(parts) - 1 and parts[mnemonic_idx].lower() in _PREFIXES:
            mnemonic_idx += 1
        branch = _is_branch(parts[mnemonic_idx])
        annot = annots[0] if annots else None
        for i, p in enumerate(parts):
            if i <= mnemonic_idx:
                tokens.append(p if _PLACEHOLDER.match(p) else p.lower())
            else:
                tokens.append(_normalize_operand(p, branch, labels, annot))
    return tokens


_PREFIXES = {
    "rep", "repe", "repz", "repne", "repnz", "lock", "notrack", "bnd",
    "cs", "ds", "ss", "es", "fs", "gs", "data16", "addr32", "rex", "rex.w",
}


def render_tokens(tokens: list[str]) -> str:
    return " ".join(tokens)


# --- samples -------------------------------------------------------------

@dataclass
class BenchmarkSample:
    id: str
    opt_level: str
    pseudo_code: str
    original_asm: list[str] = field(default_factory=list)
    ground_truth: str | None = None
    test_harness: str | None = None
    original_asm_raw: str = ""

    def __post_init__(self) -> None:
        if self.opt_level not in OPT_LEVELS:
            raise ValueError(f"opt_level must be one of {OPT_LEVELS}, got {self.opt_level!r}")
        if not self.id:
            raise ValueError("id must be non-empty")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "opt_level": self.opt_level,
            "pseudo_code": self.pseudo_code,
            "original_asm_raw": self.original_asm_raw,
            "ground_truth": self.ground_truth,
            "test_harness": self.test_harness,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BenchmarkSample":
        raw = obj.get("original_asm_raw") or ""
        return cls(
            id=obj["id"],
            opt_level=obj["opt_level"],
            pseudo_code=obj["pseudo_code"],
            original_asm=normalize_assembly(raw),
            ground_truth=obj.get("ground_truth"),
            test_harness=obj.get("test_harness"),
            original_asm_raw=raw,
        )


_REQUIRED = ("id", "opt_level", "pseudo_code")


def load_samples(path: str | Path) -> list[BenchmarkSample]:
    samples: list[BenchmarkSample] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("record is not an object", lineno)
            missing = [k for k in _REQUIRED if k not in obj]
            if missing:
                raise ParseError(f"missing fields {missing}", lineno)
            try:
                sample = BenchmarkSample.from_json(obj)
            except (ValueError, TypeError) as exc:
                raise ParseError(str(exc), lineno) from exc
            if sample.id in seen:
                raise DuplicateId(sample.id, lineno)
            seen.add(sample.id)
            samples.append(sample)
    return samples


def write_samples(samples, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")


def assemble_reference(source: str, opt_level: str, cfg: ToolchainConfig) -> str:
    """Compile and disassemble *source*; returns the raw disassembly text.

    Raises RuntimeError with the diagnostics if the source does not compile.
    """
    workdir = cfg.make_workspace("ref_")
    try:
        res = compile_source(source, opt_level, cfg, workdir)
        if not res.ok:
            raise RuntimeError(f"reference source does not compile:\n{res.diagnostics}")
        return disassemble(res.binary_path, cfg)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
