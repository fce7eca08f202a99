import math
from decimal import Decimal

import pytest
from hypothesis import given, strategies as st
from nltk.translate.bleu_score import sentence_bleu

from decomp_refine.corpus import BenchmarkSample, assemble_reference
from decomp_refine.errors import EmptyInput
from decomp_refine.metric import (
    BleuConfig,
    bleu,
    compile_rate,
    consistency_score,
    modified_precision_counts,
    re_exec_rate,
    round_half_up,
)

NO_SMOOTH = BleuConfig(smoothing="none")
words = st.lists(st.sampled_from(list("abcdef")), min_size=1, max_size=25)


def test_identity_and_disjoint():
    t = "mov push pop ret call".split()
    assert bleu(t, t) == 1.0
    assert bleu(t, "a b c d e".split(), NO_SMOOTH) == 0.0
    assert bleu([], t) == 0.0


def test_hand_case():
    assert abs(bleu("a b c d".split(), "a b c d e".split()) - math.exp(-0.25)) < 1e-9


def test_clipping():
    # "the the the" vs "the cat": unigram precision 1/3
    assert modified_precision_counts(["the"] * 3, ["the", "cat"], 1) == (1, 3)


@given(words, words)
def test_agrees_with_nltk_when_all_orders_match(cand, ref):
    orders = [modified_precision_counts(cand, ref, n) for n in range(1, 5)]
    if len(cand) < 4 or any(c == 0 for c, _ in orders):
        return
    assert abs(bleu(cand, ref, NO_SMOOTH) - sentence_bleu([ref], cand)) < 1e-12


@given(words, words)
def test_bounds(cand, ref):
    assert 0.0 <= bleu(cand, ref) <= 1.0


@given(words)
def test_self_identity(t):
    assert bleu(t, t) == pytest.approx(1.0, abs=1e-12)


@given(words, words, st.integers(1, 4))
def test_clipped_never_exceeds_total(cand, ref, n):
    clipped, total = modified_precision_counts(cand, ref, n)
    assert 0 <= clipped <= total


def test_bad_config():
    with pytest.raises(ValueError):
        BleuConfig(max_n=0)
    with pytest.raises(ValueError):
        BleuConfig(smoothing="floor")


def test_rates():
    recs = [{"re_exec_pass": True, "compile_ok": True}, {"re_exec_pass": False, "compile_ok": True},
            {"re_exec_pass": False, "compile_ok": False}, {"re_exec_pass": True, "compile_ok": True}]
    assert re_exec_rate(recs) == 0.5
    assert compile_rate(recs) == 0.75
    with pytest.raises(EmptyInput):
        re_exec_rate([])


@given(st.lists(st.booleans(), min_size=1), st.lists(st.booleans(), min_size=1))
def test_re_exec_additive(a, b):
    ra = re_exec_rate([{"re_exec_pass": x} for x in a])
    rb = re_exec_rate([{"re_exec_pass": x} for x in b])
    rab = re_exec_rate([{"re_exec_pass": x} for x in a + b])
    assert rab == pytest.approx((ra * len(a) + rb * len(b)) / (len(a) + len(b)))


def test_half_up():
    assert round_half_up(44.815) == Decimal("44.82")
    assert round_half_up(2.675) == Decimal("2.68")  # float 2.675 is below; repr keeps it
    assert round_half_up(50.0) == Decimal("50.00")


def test_consistency(toolchain):
    gt = "int f(int x) { int s = 0; while (x) { s += x; x--; } return s; }"
    raw = assemble_reference(gt, "O1", toolchain)
    s = BenchmarkSample.from_json({"id": "f", "opt_level": "O1", "pseudo_code": "x", "original_asm_raw": raw})
    assert consistency_score(gt, s, toolchain).consistency == 1.0
    other = consistency_score("int f(int x) { return x; }", s, toolchain)
    assert other.compile_ok and other.consistency < 1.0
    bad = consistency_score("int f(int x) { return DAT_1; }", s, toolchain)
    assert not bad.compile_ok and bad.consistency == 0.0
