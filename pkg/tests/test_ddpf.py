import itertools

import pytest
from hypothesis import given, strategies as st

from decomp_refine.backend import Backend, CompletionResponse
from decomp_refine.corpus import BenchmarkSample, assemble_reference
from decomp_refine.ddpf import (
    SEMANTIC,
    SYNTACTIC,
    Candidate,
    decision_log_entry,
    extract_function,
    reselect_from_log,
    run_ddpf,
    select,
)
from decomp_refine.errors import EmptyGeneration


def cand(path, ok, score):
    return Candidate("int f(void){return 0;}", path, ok, score)


def test_failed_candidate_scores_zero():
    assert Candidate("x", SEMANTIC, False, 0.9).consistency == 0.0


def test_syntactic_cannot_carry_rationale():
    from decomp_refine.sce import parse_and_validate, render_rationale

    with pytest.raises(ValueError):
        Candidate("x", SYNTACTIC, rationale_used=parse_and_validate(render_rationale("f", "p")))


@given(st.booleans(), st.booleans(), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_sem_score(vs, vy, s1, s2, sy):
    lo, hi = sorted((s1, s2))
    if select(cand(SEMANTIC, vs, lo), cand(SYNTACTIC, vy, sy)).chosen.path == SEMANTIC:
        assert select(cand(SEMANTIC, vs, hi), cand(SYNTACTIC, vy, sy)).chosen.path == SEMANTIC


def test_branch_labels():
    grid = itertools.product([True, False], [True, False], [0.0, 0.5, 1.0], [0.0, 0.5, 1.0])
    seen = {select(cand(SEMANTIC, a, s), cand(SYNTACTIC, b, t)).branch for a, b, s, t in grid}
    assert seen == {"sem_only_compiles", "sem_score_wins_or_ties", "syn_only_compiles",
                    "syn_score_wins", "both_fail_default_syn"}


@pytest.mark.parametrize("text,name", [
    ("```c\nint f(int a) {\n  return a;\n}\n```", "int f(int a)"),
    ("Here you go:\n\nstatic unsigned long\nhash(const char *s)\n{\n  return 0;\n}\nthanks", "static unsigned long\nhash"),
    ("#include <stdio.h>\nint main(void) { if (1) { puts(\"}\"); } return 0; }", "#include <stdio.h>\nint main"),
    ("int g(void) { /* } */ return '}'; } int h(void) { return 1; }", "int g(void)"),
])
def test_extract_function(text, name):
    out = extract_function(text)
    assert out.startswith(name)
    assert out.rstrip().endswith("}")


def test_extract_picks_first_only():
    out = extract_function("int a(void) { return 1; }\nint b(void) { return 2; }")
    assert out == "int a(void) { return 1; }"


@pytest.mark.parametrize("text", ["I cannot do that.", "int f(int a) {\n  return a;", "", "x = {1, 2};"])
def test_extract_empty(text):
    with pytest.raises(EmptyGeneration):
        extract_function(text)


def test_reselect_from_log():
    s = BenchmarkSample("s", "O0", "p")
    sem, syn = cand(SEMANTIC, True, 0.4), cand(SYNTACTIC, True, 0.6)
    d = select(sem, syn)
    entry = decision_log_entry(s, d, {"sem": sem, "syn": syn})
    again = reselect_from_log(entry)
    assert (again.chosen.path, again.branch) == (d.chosen.path, d.branch) == (SYNTACTIC, "syn_score_wins")


class Canned(Backend):
    def __init__(self, rationale, sem, syn):
        self.rationale, self.sem, self.syn = rationale, sem, syn

    def complete(self, req):
        t = req.user_text
        if t.startswith("Instruction: You are an expert"):
            out = self.rationale
        elif "### Input:\n/*" in t:
            out = self.sem
        else:
            out = self.syn
        return CompletionResponse(out, 0, 0.0, 1)


def test_run_ddpf_rejected_rationale_falls_back(toolchain):
    gt = "int f(int x) { return x + 1; }"
    s = BenchmarkSample.from_json({"id": "f", "opt_level": "O0", "pseudo_code": "int f(int p){return p+1;}",
                                   "original_asm_raw": assemble_reference(gt, "O0", toolchain)})
    b = Canned("no comment", "unused", gt)
    decision, (sem, syn) = run_ddpf(s, b, b, toolchain)
    assert sem.note == "rationale_rejected:invalid_comment" and not sem.compile_ok
    assert decision.branch == "syn_only_compiles" and decision.chosen is syn and syn.consistency == 1.0

    b = Canned("/*\n * Function: f\n * Purpose: increments\n */", gt, "garbage text")
    decision, (sem, syn) = run_ddpf(s, b, b, toolchain)
    assert decision.branch == "sem_only_compiles" and syn.note == "empty_generation"
    assert sem.rationale_used is not None and sem.rationale_used.function_name == "f"
