import json
from pathlib import Path

import numpy as np
import pytest

from toxprune.lm import ScriptedLM
from toxprune.prunelist import load_wordlist
from toxprune.sweep import data_path
from toxprune.tokenizer import Vocabulary, load_vocab

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def toy_vocab():
    return load_vocab(data_path("vocab.json"), data_path("merges.txt"))


@pytest.fixture(scope="session")
def toy_words():
    return load_wordlist(data_path("toxic_words.txt"))


@pytest.fixture(scope="session")
def toy_expansion(toy_vocab, toy_words):
    return toy_vocab.expand_words(toy_words)


@pytest.fixture
def low_vocab():
    """Specials, the letters of "low", and the two merges l+o, lo+w</w>."""
    tokens = ("<bos>", "<eos>", "<unk>", "l", "o", "w", "l</w>", "o</w>", "w</w>", "lo", "low</w>")
    return Vocabulary(tokens, (("l", "o"), ("lo", "w</w>")))


def golden(name):
    return json.loads((GOLDEN / name).read_text(encoding="utf-8"))


def random_scripted_lm(rng, vocab_size, depth, *, integer_logits=False):
    """ScriptedLM with a distinct logit row for every prefix shorter than ``depth``."""
    table = {}
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for prefix in frontier:
            if integer_logits:
                table[prefix] = rng.integers(-2, 3, vocab_size).astype(float)
            else:
                table[prefix] = rng.normal(0, 2, vocab_size)
            nxt.extend(prefix + (t,) for t in range(vocab_size))
        frontier = nxt
    return ScriptedLM(table, rng.normal(0, 2, vocab_size))
