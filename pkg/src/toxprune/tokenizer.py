"""Character-level BPE with an explicit end-of-word marker.

Words are split on whitespace, turned into character symbols (the last one
carrying the marker, ``"</w>"`` by default) and merged greedily by rank.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DuplicateToken,
    EmptyWordList,
    InvalidTokenId,
    MalformedFile,
    NonContiguousIds,
    UnknownMergeSymbol,
)

DEFAULT_MARKER = "</w>"
BOS, EOS, UNK = "<bos>", "<eos>", "<unk>"
MARKER_KEY = "__eow__"

VARIANTS = ("lower", "capitalized", "original")
DEFAULT_VARIANTS = ("lower", "capitalized")

WordExpansion = dict[str, list[tuple[int, ...]]]


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    merges: tuple[tuple[str, str], ...]
    end_of_word_marker: str = DEFAULT_MARKER
    bos: int = 0
    eos: int = 1
    unk: int = 2
    _ids: dict = field(init=False, repr=False, compare=False)
    _ranks: dict = field(init=False, repr=False, compare=False)
    _cache: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "merges", tuple(tuple(m) for m in self.merges))
        ids = {}
        for i, tok in enumerate(self.tokens):
            if tok in ids:
                raise DuplicateToken(f"token {tok!r} appears twice")
            ids[tok] = i
        n = len(self.tokens)
        specials = (self.bos, self.eos, self.unk)
        if any(not 0 <= s < n for s in specials) or len(set(specials)) != 3:
            raise MalformedFile(f"special ids must be distinct and < {n}: {specials}")
        ranks = {}
        for rank, (left, right) in enumerate(self.merges):
            for sym in (left, right, left + right):
                if sym not in ids:
                    raise UnknownMergeSymbol(f"merge {left!r} {right!r}: {sym!r} not in vocabulary")
            ranks.setdefault((left, right), rank)
        object.__setattr__(self, "_ids", ids)
        object.__setattr__(self, "_ranks", ranks)
        object.__setattr__(self, "_cache", {})

    def __len__(self):
        return len(self.tokens)

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def special_ids(self) -> frozenset[int]:
        return frozenset((self.bos, self.eos, self.unk))

    @cached_property
    def fingerprint(self) -> str:
        """SHA-256 over a canonical serialization of tokens, merges and marker."""
        payload = json.dumps(
            {
                "tokens": list(self.tokens),
                "merges": [list(m) for m in self.merges],
                "marker": self.end_of_word_marker,
                "specials": [self.bos, self.eos, self.unk],
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def token_id(self, token: str) -> int:
        return self._ids[token]

    def id_of(self, symbol: str) -> int:
        return self._ids.get(symbol, self.unk)

    # -- encoding --------------------------------------------------------

    def bpe(self, word: str, trace: list | None = None) -> tuple[str, ...]:
        """Merge the symbols of one whitespace-free word.

        When ``trace`` is given, each merge application is appended to it as
        ``(symbols_before, pair, rank)``; the result is then not cached.
        """
        if trace is None and word in self._cache:
            return self._cache[word]
        symbols = list(word)
        symbols[-1] += self.end_of_word_marker
        ranks = self._ranks
        while len(symbols) > 1:
            best = None
            for pair in zip(symbols, symbols[1:]):
                r = ranks.get(pair)
                if r is not None and (best is None or r < best[1]):
                    best = (pair, r)
            if best is None:
                break
            pair, rank = best
            if trace is not None:
                trace.append((tuple(symbols), pair, rank))
            merged, i = [], 0
            while i < len(symbols):
                if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
                    merged.append(pair[0] + pair[1])
                    i += 2
                else:
                    merged.append(symbols[i])
                    i += 1
            symbols = merged
        out = tuple(symbols)
        if trace is None:
            self._cache[word] = out
        return out

    def encode(self, text: str) -> list[int]:
        ids = []
        for word in text.split():
            ids.extend(self.id_of(sym) for sym in self.bpe(word))
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        marker = self.end_of_word_marker
        n = len(self.tokens)
        parts = []
        for i in ids:
            if not 0 <= i < n:
                raise InvalidTokenId(f"token id {i} outside [0, {n})")
            if i == self.bos or i == self.eos:
                continue
            tok = self.tokens[i]
            if tok.endswith(marker) and len(tok) > len(marker):
                tok = tok[: -len(marker)] + " "
            parts.append(tok)
        text = "".join(parts)
        return text[:-1] if text.endswith(" ") else text

    def surface_variants(self, word: str, variants: Sequence[str] = DEFAULT_VARIANTS) -> list[str]:
        out = []
        for name in variants:
            if name == "lower":
                form = word.lower()
            elif name == "capitalized":
                low = word.lower()
                form = low[:1].upper() + low[1:]
            elif name == "original":
                form = word
            else:
                raise ValueError(f"unknown surface variant {name!r}; expected one of {VARIANTS}")
            if form not in out:
                out.append(form)
        return out

    def expand_words(self, words: Iterable[str], variants: Sequence[str] = DEFAULT_VARIANTS) -> WordExpansion:
        """Canonical tokenization of every surface variant of every word."""
        words = list(words)
        if not words:
            raise EmptyWordList("word list is empty")
        expansion: WordExpansion = {}
        for word in words:
            if not word.strip():
                raise EmptyWordList(f"blank entry in word list: {word!r}")
            seqs = []
            for form in self.surface_variants(word, variants):
                seq = tuple(self.encode(form))
                if seq not in seqs:
                    seqs.append(seq)
            expansion[word] = seqs
        return expansion


def load_vocab(vocab_path: str | Path, merges_path: str | Path) -> Vocabulary:
    """Read ``vocab.json`` + ``merges.txt``.

    Missing ``<bos>``/``<eos>``/``<unk>`` entries are appended after the last
    file ID, in that order.
    """
    try:
        raw = json.loads(Path(vocab_path).read_text(encoding="utf-8"), object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{vocab_path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedFile(f"{vocab_path}: expected a JSON object")
    marker = raw.pop(MARKER_KEY, DEFAULT_MARKER)
    if not isinstance(marker, str) or not marker:
        raise MalformedFile(f"{vocab_path}: {MARKER_KEY} must be a non-empty string")

    by_id = {}
    for tok, idx in raw.items():
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise MalformedFile(f"{vocab_path}: id for {tok!r} is not an integer")
        if idx in by_id:
            raise NonContiguousIds(f"id {idx} used by both {by_id[idx]!r} and {tok!r}")
        by_id[idx] = tok
    missing = sorted(set(range(len(by_id))) - by_id.keys())
    if missing or (by_id and min(by_id) < 0):
        gap = missing[0] if missing else min(by_id)
        raise NonContiguousIds(f"{vocab_path}: ids are not contiguous from 0 (gap at {gap})")
    tokens = [by_id[i] for i in range(len(by_id))]
    for special in (BOS, EOS, UNK):
        if special not in raw:
            tokens.append(special)
    index = {t: i for i, t in enumerate(tokens)}

    merges = []
    for lineno, line in enumerate(Path(merges_path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MalformedFile(f"{merges_path}:{lineno}: expected 'left right', got {line!r}")
        merges.append((parts[0], parts[1]))

    return Vocabulary(
        tokens=tuple(tokens),
        merges=tuple(merges),
        end_of_word_marker=marker,
        bos=index[BOS],
        eos=index[EOS],
        unk=index[UNK],
    )


def save_vocab(v: Vocabulary, vocab_path: str | Path, merges_path: str | Path) -> None:
    obj = {tok: i for i, tok in enumerate(v.tokens)}
    if v.end_of_word_marker != DEFAULT_MARKER:
        obj[MARKER_KEY] = v.end_of_word_marker
    Path(vocab_path).write_text(json.dumps(obj, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    lines = ["#version: toxprune char-bpe"] + [f"{a} {b}" for a, b in v.merges]
    Path(merges_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _no_duplicates(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise DuplicateToken(f"token {key!r} appears twice in vocab file")
        seen[key] = value
    return seen


def learn_merges(
    texts: Iterable[str],
    num_merges: int,
    marker: str = DEFAULT_MARKER,
) -> list[tuple[str, str]]:
    """Plain frequency BPE; ties go to the lexicographically smallest pair."""
    words = Counter(w for text in texts for w in text.split())
    segs = {}
    for w in words:
        syms = list(w)
        syms[-1] += marker
        segs[w] = syms
    merges = []
    for _ in range(num_merges):
        pairs = Counter()
        for w, syms in segs.items():
            for pair in zip(syms, syms[1:]):
                pairs[pair] += words[w]
        if not pairs:
            break
        best = min(pairs, key=lambda p: (-pairs[p], p))
        merges.append(best)
        for w, syms in segs.items():
            out, i = [], 0
            while i < len(syms):
                if i + 1 < len(syms) and (syms[i], syms[i + 1]) == best:
                    out.append(syms[i] + syms[i + 1])
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            segs[w] = out
    return merges
