import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN, golden
from toxprune.errors import EmptyWordList, LengthMismatch
from toxprune.metrics import (BLEU_EPSILON, EvalCorpus, bleu, brevity_penalty, distinct_n, evaluate,
                              format_csv_row, lcs_length, lexical_toxicity, rouge, rouge_l_f1)


def corpus(*pairs):
    return EvalCorpus(pairs)


def test_distinct_hand_counts():
    assert distinct_n(["a b a"], 1) == 2 / 3
    assert distinct_n(["a b", "a b"], 2) == 1 / 2
    assert distinct_n(["a b c", "d e"], 1) == 1.0
    assert distinct_n(["A a"], 1) == 1 / 2
    assert distinct_n([], 1) == 0.0
    assert distinct_n(["a"], 2) == 0.0


def test_distinct_pools_across_items():
    # per-item averaging would give 1.0 here
    assert distinct_n(["a b", "a c"], 1) == 3 / 4


def test_bleu_identity():
    c = corpus(("the cat sat", ["the cat sat"]), ("a b c d e", ["a b c d e"]), ("x y z w", ["x y z w"]))
    b = bleu(c)
    for key in ("bleu_1", "bleu_2", "bleu_3", "bleu_4", "bleu"):
        assert b[key] == pytest.approx(100, abs=1e-6)
    assert rouge(c)["rouge_l"] == 1.0


def test_bleu_no_overlap_hits_floor():
    b = bleu(corpus(("a b", ["c d"])))
    assert b["bleu_1"] == pytest.approx(100 * BLEU_EPSILON)


def test_brevity_penalty():
    assert brevity_penalty(4, 4) == 1.0
    assert brevity_penalty(5, 4) == 1.0
    assert brevity_penalty(2, 4) == math.exp(-1)
    assert brevity_penalty(0, 4) == 0.0
    b = bleu(corpus(("a b", ["a b c d"])), max_n=2)
    assert b["bleu_2"] == pytest.approx(100 * math.exp(-1), abs=1e-12)


def test_bleu_closest_reference_length():
    # candidate length 3: references of length 2 and 4 tie, the shorter wins, so no penalty
    b = bleu(corpus(("a b c", ["a b", "a b c d"])), max_n=1)
    assert b["bleu_1"] == pytest.approx(100.0)


def test_bleu_clipping():
    b = bleu(corpus(("the the the", ["the cat"])), max_n=1)
    # clipped precision 1/3, reference length 2 < 3 so no penalty
    assert b["bleu_1"] == pytest.approx(100 / 3)


def test_bleu_weights():
    c = corpus(("a b c", ["a b d"]))
    even = bleu(c, 2, [1, 1])
    assert even["bleu"] == pytest.approx(even["bleu_2"])
    uni = bleu(c, 2, [1, 0])
    assert uni["bleu"] == pytest.approx(uni["bleu_1"])
    with pytest.raises(ValueError):
        bleu(c, 2, [1, 1, 1])


def test_rouge_hand_values():
    assert rouge_l_f1("a c".split(), "a b c".split()) == pytest.approx(0.8, abs=1e-15)
    r = rouge(corpus(("a c", ["a b c"])))
    assert r["rouge_l"] == pytest.approx(0.8, abs=1e-15)
    assert r["rouge_1"] == pytest.approx(0.8, abs=1e-15)
    assert r["rouge_2"] == 0.0
    same = rouge(corpus(("x y z", ["x y z"])))
    assert same == {"rouge_1": 1.0, "rouge_2": 1.0, "rouge_l": 1.0}
    assert rouge(corpus(("a b", ["c d"]))) == {"rouge_1": 0.0, "rouge_2": 0.0, "rouge_l": 0.0}


def test_rouge_best_reference():
    r = rouge(corpus(("a b", ["c d", "a b"])))
    assert r["rouge_l"] == 1.0


def test_lcs():
    assert lcs_length("abcbdab", "bdcaba") == 4
    assert lcs_length("", "abc") == 0


def test_toxicity_word_boundaries():
    words = ["fu", "damn"]
    assert lexical_toxicity(["FUmble"], words) == 0.0
    assert lexical_toxicity(["damnation"], words) == 0.0
    assert lexical_toxicity(["well DAMN!"], words) == 1.0
    assert lexical_toxicity(["fu, really"], words) == 1.0
    assert lexical_toxicity(["ok", "damn it", "fine", "fu"], words) == 0.5
    assert lexical_toxicity([], words) == 0.0
    with pytest.raises(EmptyWordList):
        lexical_toxicity(["x"], [" "])


def test_golden_fixture():
    c = EvalCorpus.from_jsonl(GOLDEN / "metric_fixture.jsonl")
    got = evaluate(c, ["damn"]).to_json()
    want = golden("metric_report.json")
    assert got.keys() == want.keys()
    for key, value in want.items():
        assert got[key] == pytest.approx(value, rel=1e-12, abs=1e-15), key


def test_golden_fixture_hand_precisions():
    # p1 = 10/12, p2 = 4/9, p3 = 1/6, p4 = 0 -> floor; candidate 12 tokens vs reference 13
    c = EvalCorpus.from_jsonl(GOLDEN / "metric_fixture.jsonl")
    b = bleu(c)
    bp = math.exp(1 - 13 / 12)
    assert b["bleu_1"] == pytest.approx(100 * bp * 5 / 6, rel=1e-12)
    assert b["bleu_3"] == pytest.approx(100 * bp * (5 / 6 * 4 / 9 * 1 / 6) ** (1 / 3), rel=1e-12)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        EvalCorpus.from_pairs(["a", "b"], [["a"]])


def test_bleu_n_can_rise_with_n_across_items():
    # the per-order precisions are pooled over the corpus, so a later order can
    # be more precise than an earlier one: p1 = 2/3, p2 = 1/1
    b = bleu(corpus(("x", ["y"]), ("a b", ["a b"])), max_n=2)
    assert b["bleu_2"] > b["bleu_1"]


WORDS = st.sampled_from(["a", "b", "c", "d", "damn", "x"])
SENT = st.lists(WORDS, min_size=1, max_size=6).map(" ".join)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(SENT, st.lists(SENT, min_size=1, max_size=3)), min_size=1, max_size=6), st.randoms())
def test_permutation_invariance(pairs, rnd):
    shuffled = pairs[:]
    rnd.shuffle(shuffled)
    a = evaluate(EvalCorpus(pairs), ["damn", "x"]).to_json()
    b = evaluate(EvalCorpus(shuffled), ["damn", "x"]).to_json()
    for key in a:
        assert a[key] == pytest.approx(b[key], rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(SENT, min_size=1, max_size=8), st.sets(WORDS, min_size=1), st.sets(WORDS))
def test_toxicity_monotone_in_word_list(cands, words, extra):
    assert lexical_toxicity(cands, words | extra) >= lexical_toxicity(cands, words)


def test_distinct_one_when_all_tokens_unique():
    rng = random.Random(0)
    vocab = [f"w{i}" for i in range(200)]
    rng.shuffle(vocab)
    cands = [" ".join(vocab[i:i + 7]) for i in range(0, 200, 7)]
    assert distinct_n(cands, 1) == 1.0
    assert distinct_n(cands, 2) == 1.0


def test_csv_row_format():
    assert format_csv_row([1, 0.123456, 100]) == "1.0000,0.1235,100.0000"
