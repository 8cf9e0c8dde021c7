"""Deterministic next-token scorers consumed by the decoding engine."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .errors import EmptyCorpus, InvalidAlpha, InvalidOrder, InvalidTokenId, MalformedFile


class LogitSource(Protocol):
    vocab_size: int

    def score(self, prefix: Sequence[int]) -> np.ndarray: ...


def _check_prefix(prefix: Sequence[int], vocab_size: int) -> None:
    for i in prefix:
        if not 0 <= i < vocab_size:
            raise InvalidTokenId(f"token id {i} outside [0, {vocab_size})")


def _frozen(vec) -> np.ndarray:
    arr = np.array(vec, dtype=np.float64)
    arr.setflags(write=False)
    return arr


class NgramLM:
    """Fixed-order n-gram model with add-alpha smoothing.

    Contexts are the last ``order - 1`` IDs of the bos-padded prefix; there is
    no backoff, so an unseen context scores uniformly.
    """

    def __init__(self, order: int, alpha: float, vocab_size: int, bos: int, eos: int,
                 counts: Mapping[tuple, Mapping[int, int]]):
        self.order = order
        self.alpha = alpha
        self.vocab_size = vocab_size
        self.bos = bos
        self.eos = eos
        self.counts = {tuple(ctx): dict(nxt) for ctx, nxt in counts.items()}
        self._totals = {ctx: sum(nxt.values()) for ctx, nxt in self.counts.items()}
        self._memo: dict[tuple, np.ndarray] = {}
        self._uniform = _frozen(np.full(vocab_size, -math.log(vocab_size)))

    def context(self, prefix: Sequence[int]) -> tuple[int, ...]:
        n = self.order - 1
        if n == 0:
            return ()
        tail = tuple(prefix[-n:]) if prefix else ()
        return (self.bos,) * (n - len(tail)) + tail

    def score(self, prefix: Sequence[int]) -> np.ndarray:
        _check_prefix(prefix, self.vocab_size)
        ctx = self.context(prefix)
        hit = self._memo.get(ctx)
        if hit is not None:
            return hit
        nxt = self.counts.get(ctx)
        if nxt is None:
            return self._uniform
        total = self._totals[ctx]
        counts = np.zeros(self.vocab_size)
        for tok, c in nxt.items():
            counts[tok] = c
        vec = _frozen(np.log((counts + self.alpha) / (total + self.alpha * self.vocab_size)))
        self._memo[ctx] = vec
        return vec

    def to_json(self) -> dict:
        counts = {}
        for ctx in sorted(self.counts):
            counts[",".join(map(str, ctx))] = {str(t): c for t, c in sorted(self.counts[ctx].items())}
        return {
            "order": self.order,
            "alpha": self.alpha,
            "vocab_size": self.vocab_size,
            "bos": self.bos,
            "eos": self.eos,
            "counts": counts,
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(self.to_json(), separators=(",", ":")) + "\n", encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "NgramLM":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            counts = {}
            for key, nxt in raw["counts"].items():
                ctx = tuple(int(x) for x in key.split(",")) if key else ()
                counts[ctx] = {int(t): int(c) for t, c in nxt.items()}
            model = cls(int(raw["order"]), float(raw["alpha"]), int(raw["vocab_size"]),
                        int(raw["bos"]), int(raw["eos"]), counts)
        except (OSError, ValueError, KeyError, TypeError, AttributeError) as exc:
            raise MalformedFile(f"{path}: not an n-gram model file ({exc})") from exc
        _validate_ngram(model.order, model.alpha)
        return model

    def __eq__(self, other):
        if not isinstance(other, NgramLM):
            return NotImplemented
        return self.to_json() == other.to_json()


def _validate_ngram(order, alpha):
    if isinstance(order, bool) or not isinstance(order, int) or order < 1:
        raise InvalidOrder(f"order must be an integer >= 1, got {order!r}")
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha) and alpha > 0):
        raise InvalidAlpha(f"alpha must be a finite number > 0, got {alpha!r}")


def train_ngram(corpus: Iterable[Sequence[int]], order: int = 3, alpha: float = 0.1, *,
                vocab_size: int, bos: int, eos: int) -> NgramLM:
    """Count n-grams over bos-padded, eos-terminated sequences."""
    _validate_ngram(order, alpha)
    corpus = [list(seq) for seq in corpus]
    if not corpus:
        raise EmptyCorpus("corpus has no sequences")
    counts: dict[tuple, dict[int, int]] = defaultdict(lambda: defaultdict(int))
    for seq in corpus:
        _check_prefix(seq, vocab_size)
        padded = [bos] * (order - 1) + seq + [eos]
        for i in range(order - 1, len(padded)):
            counts[tuple(padded[i - order + 1:i])][padded[i]] += 1
    return NgramLM(order, float(alpha), vocab_size, bos, eos, counts)


class ScriptedLM:
    """Table lookup on the exact prefix, with a default vector for misses."""

    def __init__(self, table: Mapping[tuple, Sequence[float]], default: Sequence[float]):
        self.default = _frozen(default)
        self.vocab_size = len(self.default)
        self.table = {tuple(k): _frozen(v) for k, v in table.items()}
        for key, vec in [((), self.default), *self.table.items()]:
            if vec.shape != (self.vocab_size,):
                raise ValueError(f"logit vector for {key} has length {vec.size}, expected {self.vocab_size}")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"logit vector for {key} has non-finite entries")

    def score(self, prefix: Sequence[int]) -> np.ndarray:
        _check_prefix(prefix, self.vocab_size)
        return self.table.get(tuple(prefix), self.default)


class BiasWrapper:
    """Adds a constant to the logits of selected IDs.

    Used to emulate a model that over-produces a word family. The bias must be
    finite: removing tokens is the decoder's job, not the model's.
    """

    def __init__(self, inner: LogitSource, biased_ids: Iterable[int], bias: float):
        if not math.isfinite(bias):
            raise ValueError("bias must be finite")
        self.inner = inner
        self.vocab_size = inner.vocab_size
        self.biased_ids = frozenset(int(i) for i in biased_ids)
        _check_prefix(sorted(self.biased_ids), self.vocab_size)
        self.bias = float(bias)
        self._offset = np.zeros(self.vocab_size)
        self._offset[sorted(self.biased_ids)] = self.bias
        self.eos = getattr(inner, "eos", None)

    def score(self, prefix: Sequence[int]) -> np.ndarray:
        return _frozen(self.inner.score(prefix) + self._offset)
