"""Offline demonstration data: a small C benchmark and hash-keyed mock fixtures.

Every function comes with its source, a test ``main`` that exits nonzero on a
wrong answer, a stub that compiles but computes the wrong thing, and
hand-written pseudo-code in the style of Ghidra's output. The pseudo-code
carries a per-level header line so that the four optimization levels of one
function produce four distinct prompts (and therefore four fixture keys).

``prepare_demo`` compiles the sources to get reference assembly, then writes
fixtures for a 32-sample mini-benchmark whose outcome is fixed by
``MINIBENCH_PLAN``:

    S  semantic candidate is the ground truth, syntactic one is garbage
    Y  syntactic candidate is the ground truth, semantic one is garbage
    N  both candidates are garbage
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .backend import write_fixture
from .corpus import OPT_LEVELS, BenchmarkSample, ToolchainConfig, assemble_reference, write_samples
from .ddpf import build_refine_prompt
from .prompts import DEFAULT_TEMPLATES, PromptTemplates
from .sce import build_rationale_prompt, parse_and_validate, render_rationale


@dataclass(frozen=True)
class DemoFunction:
    name: str
    purpose: str
    ground_truth: str
    harness: str
    stub: str
    pseudo: str
    inputs: str
    outputs: str
    implicit: str


FUNCTIONS: tuple[DemoFunction, ...] = (
    DemoFunction(
        name="sum_to_n",
        purpose="Adds the integers from 1 to n with a counting loop and returns the total.",
        ground_truth="""\
int sum_to_n(int n) {
    int s = 0;
    int i = 1;
    while (i <= n) {
        s += i;
        i++;
    }
    return s;
}""",
        harness="""\
int main(void) {
    if (sum_to_n(0) != 0) return 1;
    if (sum_to_n(1) != 1) return 1;
    if (sum_to_n(10) != 55) return 1;
    return 0;
}""",
        stub="int sum_to_n(int n) {\n    return n;\n}",
        pseudo="""\
int sum_to_n(int param_1)

{
  int local_10;
  int local_c;

  local_10 = 0;
  for (local_c = 1; local_c <= param_1; local_c = local_c + 1) {
    local_10 = local_10 + local_c;
  }
  return local_10;
}""",
        inputs="param_1 is the upper bound n.",
        outputs="Returns the sum 1 + 2 + ... + n, or 0 when n < 1.",
        implicit="None.",
    ),
    DemoFunction(
        name="count_bits",
        purpose="Counts the set bits of an unsigned integer by testing and shifting out the low bit.",
        ground_truth="""\
int count_bits(unsigned int x) {
    int c = 0;
    while (x) {
        c += x & 1u;
        x >>= 1;
    }
    return c;
}""",
        harness="""\
int main(void) {
    if (count_bits(0u) != 0) return 1;
    if (count_bits(7u) != 3) return 1;
    if (count_bits(0x80000001u) != 2) return 1;
    if (count_bits(255u) != 8) return 1;
    return 0;
}""",
        stub="int count_bits(unsigned int x) {\n    (void)x;\n    return 0;\n}",
        pseudo="""\
int count_bits(uint param_1)

{
  uint local_1c;
  int local_c;

  local_c = 0;
  for (local_1c = param_1; local_1c != 0; local_1c = local_1c >> 1) {
    local_c = local_c + (local_1c & 1);
  }
  return local_c;
}""",
        inputs="param_1 is the word to inspect.",
        outputs="Returns the population count.",
        implicit="Logical right shift of an unsigned value.",
    ),
    DemoFunction(
        name="max_element",
        purpose="Returns the largest value in an int array of length n.",
        ground_truth="""\
int max_element(const int *a, int n) {
    int best = a[0];
    for (int i = 1; i < n; i++) {
        if (a[i] > best) {
            best = a[i];
        }
    }
    return best;
}""",
        harness="""\
int main(void) {
    int a[] = {3, 9, 2};
    int b[] = {-5, -2, -9};
    if (max_element(a, 3) != 9) return 1;
    if (max_element(b, 3) != -2) return 1;
    return 0;
}""",
        stub="int max_element(const int *a, int n) {\n    (void)n;\n    return a[0];\n}",
        pseudo="""\
int max_element(int *param_1,int param_2)

{
  int local_10;
  int local_c;

  local_10 = *param_1;
  for (local_c = 1; local_c < param_2; local_c = local_c + 1) {
    if (local_10 < param_1[local_c]) {
      local_10 = param_1[local_c];
    }
  }
  return local_10;
}""",
        inputs="param_1 points to the array, param_2 is its length.",
        outputs="Returns the maximum element.",
        implicit="Array indexing through a pointer.",
    ),
    DemoFunction(
        name="is_palindrome",
        purpose="Checks whether a NUL-terminated string reads the same forwards and backwards.",
        ground_truth="""\
int is_palindrome(const char *s) {
    int len = (int)strlen(s);
    for (int i = 0; i < len / 2; i++) {
        if (s[i] != s[len - 1 - i]) {
            return 0;
        }
    }
    return 1;
}""",
        harness="""\
int main(void) {
    if (is_palindrome("racecar") != 1) return 1;
    if (is_palindrome("ab") != 0) return 1;
    if (is_palindrome("") != 1) return 1;
    return 0;
}""",
        stub="int is_palindrome(const char *s) {\n    (void)s;\n    return 1;\n}",
        pseudo="""\
undefined8 is_palindrome(char *param_1)

{
  size_t sVar1;
  int local_10;

  sVar1 = strlen(param_1);
  local_10 = 0;
  while( true ) {
    if ((int)sVar1 / 2 <= local_10) {
      return 1;
    }
    if (param_1[local_10] != param_1[(long)((int)sVar1 + -1) - (long)local_10]) break;
    local_10 = local_10 + 1;
  }
  return 0;
}""",
        inputs="param_1 is the string.",
        outputs="Returns 1 for a palindrome, 0 otherwise.",
        implicit="Length is truncated to int before halving.",
    ),
    DemoFunction(
        name="gcd",
        purpose="Computes the greatest common divisor of two integers with Euclid's remainder loop.",
        ground_truth="""\
int gcd(int a, int b) {
    int t;
    do {
        t = a % b;
        a = b;
        b = t;
    } while (b != 0);
    return a;
}""",
        harness="""\
int main(void) {
    if (gcd(12, 18) != 6) return 1;
    if (gcd(7, 3) != 1) return 1;
    if (gcd(100, 10) != 10) return 1;
    return 0;
}""",
        stub="int gcd(int a, int b) {\n    (void)a;\n    (void)b;\n    return 1;\n}",
        pseudo="""\
int gcd(int param_1,int param_2)

{
  int iVar1;
  int local_1c;
  int local_18;

  local_1c = param_2;
  local_18 = param_1;
  do {
    iVar1 = local_18 % local_1c;
    local_18 = local_1c;
    local_1c = iVar1;
  } while (iVar1 != 0);
  return local_18;
}""",
        inputs="param_1 and param_2 are the two operands; param_2 must be nonzero.",
        outputs="Returns the greatest common divisor.",
        implicit="Signed remainder.",
    ),
    DemoFunction(
        name="make_range",
        purpose="Allocates an array of n ints and fills element i with i squared.",
        ground_truth="""\
int *make_range(int n) {
    int *p = (int *)malloc(sizeof(int) * (size_t)n);
    for (int i = 0; i < n; i++) {
        p[i] = i * i;
    }
    return p;
}""",
        harness="""\
int main(void) {
    int *p = make_range(5);
    if (p == NULL) return 1;
    if (p[0] != 0 || p[2] != 4 || p[4] != 16) {
        free(p);
        return 1;
    }
    free(p);
    return 0;
}""",
        stub="int *make_range(int n) {\n    (void)n;\n    return NULL;\n}",
        pseudo="""\
void * make_range(int param_1)

{
  void *pvVar1;
  int local_14;

  pvVar1 = malloc((long)param_1 << 2);
  for (local_14 = 0; local_14 < param_1; local_14 = local_14 + 1) {
    *(int *)((long)pvVar1 + (long)local_14 * 4) = local_14 * local_14;
  }
  return pvVar1;
}""",
        inputs="param_1 is the element count.",
        outputs="Returns a heap array owned by the caller.",
        implicit="Byte offsets of 4 per element.",
    ),
    DemoFunction(
        name="reverse_bits8",
        purpose="Reverses the order of the low eight bits of its argument.",
        ground_truth="""\
unsigned int reverse_bits8(unsigned int x) {
    unsigned int r = 0;
    for (int i = 0; i < 8; i++) {
        r = (r << 1) | ((x >> i) & 1u);
    }
    return r;
}""",
        harness="""\
int main(void) {
    if (reverse_bits8(1u) != 128u) return 1;
    if (reverse_bits8(0xF0u) != 0x0Fu) return 1;
    if (reverse_bits8(0u) != 0u) return 1;
    return 0;
}""",
        stub="unsigned int reverse_bits8(unsigned int x) {\n    return x;\n}",
        pseudo="""\
uint reverse_bits8(uint param_1)

{
  uint local_10;
  int local_c;

  local_10 = 0;
  for (local_c = 0; local_c < 8; local_c = local_c + 1) {
    local_10 = param_1 >> ((byte)local_c & 0x1f) & 1 | local_10 * 2;
  }
  return local_10;
}""",
        inputs="param_1 holds the byte in its low bits.",
        outputs="Returns the bit-reversed byte.",
        implicit="Multiplication by 2 stands for a left shift.",
    ),
    DemoFunction(
        name="digit_sum",
        purpose="Returns the sum of the decimal digits of an integer, ignoring its sign.",
        ground_truth="""\
int digit_sum(int n) {
    int s = 0;
    if (n < 0) {
        n = -n;
    }
    do {
        s += n % 10;
        n /= 10;
    } while (n > 0);
    return s;
}""",
        harness="""\
int main(void) {
    if (digit_sum(123) != 6) return 1;
    if (digit_sum(-45) != 9) return 1;
    if (digit_sum(0) != 0) return 1;
    return 0;
}""",
        stub="int digit_sum(int n) {\n    (void)n;\n    return 0;\n}",
        pseudo="""\
int digit_sum(int param_1)

{
  int local_1c;
  int local_c;

  local_c = 0;
  local_1c = param_1;
  if (param_1 < 0) {
    local_1c = -param_1;
  }
  do {
    local_c = local_c + local_1c % 10;
    local_1c = local_1c / 10;
  } while (0 < local_1c);
  return local_c;
}""",
        inputs="param_1 is the number.",
        outputs="Returns the digit sum.",
        implicit="Division by 10 may be lowered to a multiply.",
    ),
    DemoFunction(
        name="dup_upper",
        purpose="Returns a freshly allocated upper-case copy of a string, or NULL if allocation fails.",
        ground_truth="""\
char *dup_upper(const char *s) {
    size_t len = strlen(s);
    char *out = (char *)malloc(len + 1);
    if (out == NULL) {
        return NULL;
    }
    memcpy(out, s, len + 1);
    for (size_t i = 0; i < len; i++) {
        out[i] = (char)toupper((unsigned char)out[i]);
    }
    return out;
}""",
        harness="""\
int main(void) {
    char *u = dup_upper("abc1");
    if (u == NULL) return 1;
    if (strcmp(u, "ABC1") != 0) {
        free(u);
        return 1;
    }
    free(u);
    return 0;
}""",
        stub="char *dup_upper(const char *s) {\n    (void)s;\n    return NULL;\n}",
        pseudo="""\
void * dup_upper(char *param_1)

{
  int iVar1;
  size_t sVar2;
  void *pvVar3;
  ulong local_20;

  sVar2 = strlen(param_1);
  pvVar3 = malloc(sVar2 + 1);
  if (pvVar3 == (void *)0x0) {
    pvVar3 = (void *)0x0;
  }
  else {
    memcpy(pvVar3,param_1,sVar2 + 1);
    for (local_20 = 0; local_20 < sVar2; local_20 = local_20 + 1) {
      iVar1 = toupper((uint)*(byte *)((long)pvVar3 + local_20));
      *(char *)((long)pvVar3 + local_20) = (char)iVar1;
    }
  }
  return pvVar3;
}""",
        inputs="param_1 is the source string.",
        outputs="Returns a heap copy owned by the caller.",
        implicit="Characters are widened through unsigned char before toupper.",
    ),
    DemoFunction(
        name="fib",
        purpose="Returns the n-th Fibonacci number computed iteratively.",
        ground_truth="""\
long fib(int n) {
    long a = 0, b = 1;
    if (n == 0) {
        return 0;
    }
    for (int i = 1; i < n; i++) {
        long t = a + b;
        a = b;
        b = t;
    }
    return b;
}""",
        harness="""\
int main(void) {
    if (fib(0) != 0) return 1;
    if (fib(1) != 1) return 1;
    if (fib(10) != 55) return 1;
    if (fib(30) != 832040) return 1;
    return 0;
}""",
        stub="long fib(int n) {\n    return n;\n}",
        pseudo="""\
long fib(int param_1)

{
  long lVar1;
  int local_1c;
  long local_18;
  long local_10;

  local_18 = 0;
  local_10 = 1;
  if (param_1 == 0) {
    local_10 = 0;
  }
  else {
    for (local_1c = 1; local_1c < param_1; local_1c = local_1c + 1) {
      lVar1 = local_18 + local_10;
      local_18 = local_10;
      local_10 = lVar1;
    }
  }
  return local_10;
}""",
        inputs="param_1 is the index n.",
        outputs="Returns fib(n) as a long.",
        implicit="None.",
    ),
    DemoFunction(
        name="parity",
        purpose="Returns 1 if its argument has an odd number of set bits and 0 otherwise.",
        ground_truth="""\
int parity(unsigned int x) {
    x ^= x >> 16;
    x ^= x >> 8;
    x ^= x >> 4;
    x ^= x >> 2;
    x ^= x >> 1;
    return (int)(x & 1u);
}""",
        harness="""\
int main(void) {
    if (parity(0u) != 0) return 1;
    if (parity(7u) != 1) return 1;
    if (parity(3u) != 0) return 1;
    if (parity(0x80000000u) != 1) return 1;
    return 0;
}""",
        stub="int parity(unsigned int x) {\n    (void)x;\n    return 0;\n}",
        pseudo="""\
uint parity(uint param_1)

{
  uint uVar1;

  uVar1 = param_1 >> 0x10 ^ param_1;
  uVar1 = uVar1 >> 8 ^ uVar1;
  uVar1 = uVar1 >> 4 ^ uVar1;
  uVar1 = uVar1 >> 2 ^ uVar1;
  return (uVar1 >> 1 ^ uVar1) & 1;
}""",
        inputs="param_1 is the word.",
        outputs="Returns the parity bit.",
        implicit="XOR folding of halves.",
    ),
    DemoFunction(
        name="bubble_sort",
        purpose="Sorts an int array of length n in ascending order in place by repeated swaps.",
        ground_truth="""\
void bubble_sort(int *a, int n) {
    for (int i = 0; i < n - 1; i++) {
        for (int j = 0; j < n - 1 - i; j++) {
            if (a[j] > a[j + 1]) {
                int t = a[j];
                a[j] = a[j + 1];
                a[j + 1] = t;
            }
        }
    }
}""",
        harness="""\
int main(void) {
    int a[] = {5, 1, 4, 2, 8};
    bubble_sort(a, 5);
    for (int i = 0; i < 4; i++) {
        if (a[i] > a[i + 1]) return 1;
    }
    if (a[0] != 1 || a[4] != 8) return 1;
    return 0;
}""",
        stub="void bubble_sort(int *a, int n) {\n    (void)a;\n    (void)n;\n}",
        pseudo="""\
void bubble_sort(int *param_1,int param_2)

{
  int iVar1;
  int local_14;
  int local_10;

  for (local_14 = 0; local_14 < param_2 + -1; local_14 = local_14 + 1) {
    for (local_10 = 0; local_10 < (param_2 - local_14) + -1; local_10 = local_10 + 1) {
      if (param_1[(long)local_10 + 1] < param_1[local_10]) {
        iVar1 = param_1[local_10];
        param_1[local_10] = param_1[(long)local_10 + 1];
        param_1[(long)local_10 + 1] = iVar1;
      }
    }
  }
  return;
}""",
        inputs="param_1 points to the array, param_2 is its length.",
        outputs="No return value; the array is modified in place.",
        implicit="Adjacent elements are compared and swapped.",
    ),
)

FUNCTIONS_BY_NAME = {f.name: f for f in FUNCTIONS}

# first eight functions x four levels; one letter per level O0..O3
MINIBENCH_PLAN: dict[str, str] = {
    "sum_to_n": "SSSS",
    "count_bits": "SSSY",
    "max_element": "SSYS",
    "is_palindrome": "SSSN",
    "gcd": "SYSS",
    "make_range": "SSNS",
    "reverse_bits8": "YSSN",
    "digit_sum": "SSSN",
}

# How the semantic path goes wrong on its Y and N samples. Kinds:
#   reject   the rationale fails validation (no Purpose line)
#   prose    the refiner answers without any code
#   stub     compiles, wrong answer
#   broken   does not compile
SEM_GARBAGE = {
    ("count_bits", "O3"): "reject",
    ("max_element", "O2"): "prose",
    ("gcd", "O1"): "stub",
    ("reverse_bits8", "O0"): "broken",
    ("is_palindrome", "O3"): "stub",
    ("make_range", "O2"): "prose",
    ("reverse_bits8", "O3"): "broken",
    ("digit_sum", "O3"): "stub",
}
# Syntactic garbage on N samples; on S samples it alternates stub/broken.
SYN_GARBAGE_N = {
    ("is_palindrome", "O3"): "stub",
    ("make_range", "O2"): "broken",
    ("reverse_bits8", "O3"): "stub",
    ("digit_sum", "O3"): "broken",
}

_ENTRY_BASE = {"O0": 0x101139, "O1": 0x101129, "O2": 0x101200, "O3": 0x101280}


def pseudo_for(fn: DemoFunction, level: str) -> str:
    index = list(FUNCTIONS_BY_NAME).index(fn.name)
    entry = _ENTRY_BASE[level] + 0x40 * index
    return f"// {fn.name} @ {entry:08x} ({level})\n{fn.pseudo}"


def sample_id(fn: DemoFunction, level: str) -> str:
    return f"{fn.name}_{level}"


def broken_source(fn: DemoFunction) -> str:
    # Ghidra types and an unresolved data label, so it never compiles
    return f"undefined4 {fn.name}(undefined4 param_1)\n{{\n  return DAT_00104010 + param_1;\n}}"


def _garbage(fn: DemoFunction, kind: str) -> str:
    if kind == "stub":
        return f"```c\n{fn.stub}\n```"
    if kind == "broken":
        return broken_source(fn)
    if kind == "prose":
        return "I am not able to turn this listing into C code."
    raise ValueError(kind)


def _fenced(src: str, fence: bool) -> str:
    return f"```c\n{src}\n```\n" if fence else src + "\n"


def _rationale_text(fn: DemoFunction, granularity: str) -> str:
    if granularity == "detailed":
        fields = {"inputs": fn.inputs, "outputs": fn.outputs, "implicit_operations": fn.implicit}
        return render_rationale(fn.name, fn.purpose, fields)
    return render_rationale(fn.name, fn.purpose)


def materialize(
    functions,
    levels,
    toolchain: ToolchainConfig,
) -> list[BenchmarkSample]:
    """Compile each ground truth at each level and build the benchmark samples."""
    samples = []
    for fn in functions:
        for level in levels:
            raw = assemble_reference(fn.ground_truth, level, toolchain)
            samples.append(BenchmarkSample.from_json({
                "id": sample_id(fn, level),
                "opt_level": level,
                "pseudo_code": pseudo_for(fn, level),
                "original_asm_raw": raw,
                "ground_truth": fn.ground_truth,
                "test_harness": fn.harness,
            }))
    return samples


def write_minibench_fixtures(
    fixtures_dir: str | Path,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> int:
    """Write every generator and refiner response the mini-benchmark needs."""
    count = 0
    k = 0
    for name, plan in MINIBENCH_PLAN.items():
        fn = FUNCTIONS_BY_NAME[name]
        for level, outcome in zip(OPT_LEVELS, plan):
            pseudo = pseudo_for(fn, level)
            sem_kind = SEM_GARBAGE.get((name, level)) if outcome != "S" else None

            # generator: both granularities so annotate works either way
            for gran in ("concise", "detailed"):
                text = _rationale_text(fn, gran)
                if sem_kind == "reject":
                    text = f"/*\n * Function: {fn.name}\n */"
                write_fixture(fixtures_dir, build_rationale_prompt(pseudo, gran, templates).user_text, text)
                count += 1

            # semantic refiner
            if sem_kind != "reject":
                rationale = parse_and_validate(_rationale_text(fn, "concise"))
                sem_text = _fenced(fn.ground_truth, k % 2 == 0) if outcome == "S" else _garbage(fn, sem_kind)
                write_fixture(fixtures_dir, build_refine_prompt(pseudo, rationale, templates).user_text, sem_text)
                count += 1

            # syntactic refiner
            if outcome == "Y":
                syn_text = _fenced(fn.ground_truth, k % 2 == 1)
            elif outcome == "N":
                syn_text = _garbage(fn, SYN_GARBAGE_N[(name, level)])
            else:
                syn_text = _garbage(fn, "stub" if k % 2 == 0 else "broken")
            write_fixture(fixtures_dir, build_refine_prompt(pseudo, None, templates).user_text, syn_text)
            count += 1
            k += 1
    return count


def expected_outcomes() -> dict[str, str]:
    """Sample id -> plan letter, for tests and hand counts."""
    return {
        f"{name}_{level}": letter
        for name, plan in MINIBENCH_PLAN.items()
        for level, letter in zip(OPT_LEVELS, plan)
    }


# --- worked example: pair-difference check with an optimized-away fabsf --

CASE_STUDY_PSEUDO = """\
undefined8 func0(float param_1,long param_2,int param_3) {
  int local_10;
  int local_c;
  local_10 = 0;
  do {
    local_c = local_10;
    if (param_3 <= local_10) { return 0; }
    while (local_c = local_c + 1, local_c < param_3) {
      if ((float)(DAT_001020d0 &
                 (uint)(*(float *)(param_2 + (long)local_10 * 4) -
                        *(float *)(param_2 + (long)local_c * 4))) < param_1) {
        return 1;
      }
    }
    local_10 = local_10 + 1;
  } while( true );
}"""

CASE_STUDY_RATIONALE = """\
/*
 * Function: func0
 * Purpose: Compares pairs of float values from an array pointed to by param_2,
 * using a nested loop structure. Returns 1 if any pair difference
 * (absolute value) is less than param_1; otherwise returns 0.
 */"""

CASE_STUDY_BASELINE = """\
bool func0(float param_1, long param_2, int param_3) {
    for (int i = 0; i < param_3; i++) {
        for (int j = i + 1; j < param_3; j++) {
            // Logical & Syntax Error: Fails to restore fabsf and pointer types
            if ((float)(DAT_001020d0 & (uint)(*(float *)(param_2 + i * 4) -
                                              *(float *)(param_2 + j * 4))) < param_1) {
                return true;
            }
        }
    }
    return false;
}"""

CASE_STUDY_REFINED = """\
bool func0(float *arr, int n, float eps) {
    int i, j;
    for (i = 0; i < n; i++) {
        for (j = i + 1; j < n; j++) {
            // Success: Perfectly restores fabsf and array indexing semantics
            if (fabsf(arr[i] - arr[j]) < eps) {
                return true;
            }
        }
    }
    return false;
}"""

CASE_STUDY_GROUND_TRUTH = """\
bool func0(float *numbers, int size, float threshold) {
    int i, j;
    for (i = 0; i < size; i++) {
        for (j = i + 1; j < size; j++) {
            if (fabsf(numbers[i] - numbers[j]) < threshold) {
                return true;
            }
        }
    }
    return false;
}"""

CASE_STUDY_HARNESS = """\
int main(void) {
    float a[] = {1.0f, 2.0f, 3.9f, 4.0f, 5.0f, 2.2f};
    float b[] = {1.0f, 2.0f, 5.9f, 4.0f, 5.0f};
    float c[] = {1.1f, 2.2f, 3.1f, 4.1f, 5.1f};
    if (!func0(a, 6, 0.3f)) return 1;
    if (func0(a, 6, 0.05f)) return 1;
    if (!func0(b, 5, 0.95f)) return 1;
    if (func0(b, 5, 0.8f)) return 1;
    if (!func0(c, 5, 1.0f)) return 1;
    if (func0(c, 5, 0.5f)) return 1;
    return 0;
}"""


def case_study_sample(toolchain: ToolchainConfig, level: str = "O0") -> BenchmarkSample:
    raw = assemble_reference(CASE_STUDY_GROUND_TRUTH, level, toolchain)
    return BenchmarkSample.from_json({
        "id": f"func0_{level}",
        "opt_level": level,
        "pseudo_code": CASE_STUDY_PSEUDO,
        "original_asm_raw": raw,
        "ground_truth": CASE_STUDY_GROUND_TRUTH,
        "test_harness": CASE_STUDY_HARNESS,
    })


def write_case_study_fixtures(fixtures_dir: str | Path, templates: PromptTemplates = DEFAULT_TEMPLATES) -> None:
    """Generator returns the worked rationale, refiner returns the two published outputs."""
    write_fixture(fixtures_dir, build_rationale_prompt(CASE_STUDY_PSEUDO, "concise", templates).user_text,
                  CASE_STUDY_RATIONALE)
    rationale = parse_and_validate(CASE_STUDY_RATIONALE)
    write_fixture(fixtures_dir, build_refine_prompt(CASE_STUDY_PSEUDO, rationale, templates).user_text,
                  CASE_STUDY_REFINED)
    write_fixture(fixtures_dir, build_refine_prompt(CASE_STUDY_PSEUDO, None, templates).user_text,
                  CASE_STUDY_BASELINE)


# --- one-shot materialization ---------------------------------------------

def prepare_demo(out_dir: str | Path, toolchain: ToolchainConfig,
                 templates: PromptTemplates = DEFAULT_TEMPLATES) -> dict[str, str]:
    """Write samples, pairs and fixtures for the mini-benchmark and the worked example."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fixtures = out / "fixtures"
    mini = [FUNCTIONS_BY_NAME[n] for n in MINIBENCH_PLAN]
    samples = materialize(mini, OPT_LEVELS, toolchain)
    write_samples(samples, out / "minibench.jsonl")
    write_minibench_fixtures(fixtures, templates)
    with open(out / "pairs.jsonl", "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps({"id": s.id, "pseudo_code": s.pseudo_code,
                                 "ground_truth": s.ground_truth}) + "\n")
    case = case_study_sample(toolchain)
    write_samples([case], out / "case_study.jsonl")
    write_case_study_fixtures(fixtures, templates)
    return {
        "samples": str(out / "minibench.jsonl"),
        "pairs": str(out / "pairs.jsonl"),
        "case_study": str(out / "case_study.jsonl"),
        "fixtures": str(fixtures),
    }
