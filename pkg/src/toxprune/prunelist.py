"""Prune sets: banned token IDs derived from a word list."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import (
    AllSpecialTokens,
    EmptyExpansion,
    FingerprintMismatch,
    InvalidFraction,
    MalformedFile,
)
from .tokenizer import Vocabulary, WordExpansion

_FIELDS = ("ids", "fraction", "seed", "vocab_fingerprint", "full_size", "source_words", "dropped_special_count")


@dataclass(frozen=True)
class PruneSet:
    ids: frozenset[int]
    source_words: tuple[str, ...]
    fraction: float
    selection_seed: int
    vocab_fingerprint: str
    full_size: int
    dropped_special_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ids", frozenset(int(i) for i in self.ids))
        object.__setattr__(self, "source_words", tuple(self.source_words))

    def __contains__(self, token_id) -> bool:
        return token_id in self.ids

    def __len__(self):
        return len(self.ids)

    @classmethod
    def empty(cls, vocab: Vocabulary, source_words: Iterable[str] = ()) -> "PruneSet":
        """The fraction-0 baseline: nothing pruned."""
        return cls(frozenset(), tuple(source_words), 0.0, 0, vocab.fingerprint, 0)

    def to_json(self) -> dict:
        return {
            "ids": sorted(self.ids),
            "fraction": self.fraction,
            "seed": self.selection_seed,
            "vocab_fingerprint": self.vocab_fingerprint,
            "full_size": self.full_size,
            "source_words": list(self.source_words),
            "dropped_special_count": self.dropped_special_count,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, indent=2) + "\n"

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()


@dataclass
class CoverageReport:
    total_words: int
    fully_pruned_words: int
    coverage: float
    per_word: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "total_words": self.total_words,
            "fully_pruned_words": self.fully_pruned_words,
            "coverage": self.coverage,
            "per_word": self.per_word,
        }


def load_wordlist(path: str | Path) -> list[str]:
    """One word per line; ``#`` comment lines and blank lines are skipped."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return words


def selection_size(fraction: float, full_size: int) -> int:
    if fraction >= 1.0:
        return full_size
    # Decimal-exact product so 0.7 * 10 is 7, not 8.
    return math.ceil(Fraction(repr(float(fraction))) * full_size)


def selection_order(ids: Iterable[int], seed: int) -> list[int]:
    """Seeded shuffle of the ascending-ID list; fractions take prefixes of it."""
    ordered = np.array(sorted(ids), dtype=np.int64)
    rng = np.random.default_rng(seed)
    return [int(i) for i in rng.permutation(ordered)]


def subword_ids(expansion: WordExpansion) -> set[int]:
    return {i for seqs in expansion.values() for seq in seqs for i in seq}


def build_prune_set(expansion: WordExpansion, fraction: float, seed: int, vocab: Vocabulary) -> PruneSet:
    """Select the first ``ceil(fraction * N)`` subwords of a seeded shuffle.

    Special IDs (bos/eos/unk) are removed before N is counted, so
    ``len(ids) == ceil(fraction * full_size)`` holds exactly.
    """
    if isinstance(fraction, bool) or not isinstance(fraction, (int, float)) or not 0 < fraction <= 1:
        raise InvalidFraction(f"fraction must lie in (0, 1], got {fraction!r}")
    if not expansion:
        raise EmptyExpansion("expansion is empty")
    every = subword_ids(expansion)
    specials = vocab.special_ids
    candidates = every - specials
    if not candidates:
        raise AllSpecialTokens("every subword in the expansion is bos/eos/unk")
    order = selection_order(candidates, seed)
    n = selection_size(fraction, len(order))
    return PruneSet(
        ids=frozenset(order[:n]),
        source_words=tuple(expansion),
        fraction=float(fraction),
        selection_seed=int(seed),
        vocab_fingerprint=vocab.fingerprint,
        full_size=len(order),
        dropped_special_count=len(every & specials),
    )


def save_prune_set(p: PruneSet, path: str | Path) -> None:
    if not p.ids:
        raise MalformedFile("refusing to write a prune set with no ids")
    _atomic_write(Path(path), p.dumps())


def load_prune_set(path: str | Path, vocab: Vocabulary) -> PruneSet:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFile(f"{path}: {exc}") from exc
    if not isinstance(raw, dict) or set(raw) != set(_FIELDS):
        raise MalformedFile(f"{path}: expected keys {sorted(_FIELDS)}")
    ids = raw["ids"]
    if not isinstance(ids, list) or not all(_is_int(i) for i in ids):
        raise MalformedFile(f"{path}: ids must be a list of integers")
    if not ids:
        raise MalformedFile(f"{path}: ids is empty")
    if ids != sorted(set(ids)):
        raise MalformedFile(f"{path}: ids must be sorted ascending without duplicates")
    if not all(_is_int(raw[k]) for k in ("seed", "full_size", "dropped_special_count")):
        raise MalformedFile(f"{path}: seed, full_size and dropped_special_count must be integers")
    fraction = raw["fraction"]
    if not isinstance(fraction, (int, float)) or isinstance(fraction, bool) or not 0 < fraction <= 1:
        raise MalformedFile(f"{path}: fraction must lie in (0, 1]")
    words = raw["source_words"]
    if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
        raise MalformedFile(f"{path}: source_words must be a list of strings")
    if not isinstance(raw["vocab_fingerprint"], str):
        raise MalformedFile(f"{path}: vocab_fingerprint must be a string")

    if raw["vocab_fingerprint"] != vocab.fingerprint:
        raise FingerprintMismatch(
            f"{path} was built for vocabulary {raw['vocab_fingerprint'][:12]}…, "
            f"loaded vocabulary is {vocab.fingerprint[:12]}…"
        )
    if len(ids) != selection_size(fraction, raw["full_size"]):
        raise MalformedFile(f"{path}: {len(ids)} ids inconsistent with fraction {fraction} of {raw['full_size']}")
    if ids[0] < 0 or ids[-1] >= vocab.size or vocab.special_ids & set(ids):
        raise MalformedFile(f"{path}: ids out of range or containing special tokens")
    return PruneSet(
        ids=frozenset(ids),
        source_words=tuple(words),
        fraction=float(fraction),
        selection_seed=raw["seed"],
        vocab_fingerprint=raw["vocab_fingerprint"],
        full_size=raw["full_size"],
        dropped_special_count=raw["dropped_special_count"],
    )


def coverage_report(p: PruneSet, expansion: WordExpansion) -> CoverageReport:
    """A word is blocked when every one of its tokenizations contains a pruned ID."""
    per_word = {}
    blocked = 0
    for word, seqs in expansion.items():
        subwords = {i for seq in seqs for i in seq}
        pruned = subwords & p.ids
        if seqs and all(p.ids.intersection(seq) for seq in seqs):
            blocked += 1
        per_word[word] = {"pruned_subwords": len(pruned), "total_subwords": len(subwords)}
    total = len(expansion)
    return CoverageReport(
        total_words=total,
        fully_pruned_words=blocked,
        coverage=blocked / total if total else 0.0,
        per_word=per_word,
    )


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
