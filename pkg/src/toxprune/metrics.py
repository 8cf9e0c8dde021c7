"""Corpus metrics: BLEU, ROUGE F-measures, Distinct-N, lexicon toxicity rate.

All metrics share one tokenization: lowercase, then split on whitespace.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyWordList, LengthMismatch, MalformedFile

BLEU_EPSILON = 1e-9

CSV_COLUMNS = ("B-1", "B-2", "B-3", "B-4", "B", "R-1", "R-2", "R-L", "D-1", "D-2", "Toxicity")


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class EvalItem:
    candidate: str
    references: tuple[str, ...]


class EvalCorpus:
    def __init__(self, items: Iterable[EvalItem | tuple[str, Sequence[str]]]):
        out = []
        for item in items:
            if not isinstance(item, EvalItem):
                cand, refs = item
                refs = (refs,) if isinstance(refs, str) else tuple(refs)
                item = EvalItem(cand, refs)
            if not item.references:
                raise ValueError(f"item {len(out)} has no references")
            out.append(item)
        if not out:
            raise ValueError("evaluation corpus is empty")
        self.items = out

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def candidates(self) -> list[str]:
        return [it.candidate for it in self.items]

    @classmethod
    def from_pairs(cls, candidates: Sequence[str], references: Sequence[Sequence[str]]) -> "EvalCorpus":
        if len(candidates) != len(references):
            raise LengthMismatch(f"{len(candidates)} candidates vs {len(references)} references")
        return cls(zip(candidates, references))

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "EvalCorpus":
        items = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                items.append((obj["candidate"], reference_list(obj)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MalformedFile(f"{path}:{lineno}: {exc}") from exc
        return cls(items)


def reference_list(obj: dict) -> list[str]:
    refs = obj.get("references", obj.get("reference"))
    if isinstance(refs, str):
        refs = [refs]
    if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
        raise TypeError("references must be a string or a list of strings")
    return refs


# -- Distinct-N ---------------------------------------------------------------

def distinct_n(candidates: Iterable[str], n: int) -> float:
    """Distinct n-grams over total n-grams, pooled across the whole corpus."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pooled = Counter()
    for cand in candidates:
        pooled.update(ngrams(tokenize(cand), n))
    return len(pooled) / max(1, sum(pooled.values()))


# -- BLEU -----------------------------------------------------------------------

def bleu_statistics(corpus: EvalCorpus, max_n: int = 4) -> dict:
    """Clipped matches and totals per order, plus candidate/reference lengths.

    The reference length per item is the one closest to the candidate length
    (shorter wins ties).
    """
    matches = [0] * max_n
    totals = [0] * max_n
    cand_len = ref_len = 0
    for item in corpus:
        cand = tokenize(item.candidate)
        refs = [tokenize(r) for r in item.references]
        cand_len += len(cand)
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for n in range(1, max_n + 1):
            c = ngrams(cand, n)
            clip = Counter()
            for r in refs:
                clip |= ngrams(r, n)
            matches[n - 1] += sum(min(cnt, clip[g]) for g, cnt in c.items())
            totals[n - 1] += sum(c.values())
    return {"matches": matches, "totals": totals, "cand_len": cand_len, "ref_len": ref_len}


def brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len == 0:
        return 0.0
    if cand_len > ref_len:
        return 1.0
    return math.exp(1 - ref_len / cand_len)


def bleu(corpus: EvalCorpus, max_n: int = 4, weights: Sequence[float] | None = None) -> dict[str, float]:
    """Corpus BLEU on a 0-100 scale.

    ``bleu_n`` is the cumulative score with uniform weights over orders 1..n.
    ``bleu`` is the composite over orders 1..max_n, uniform unless ``weights``
    is given. A zero precision is floored at ``BLEU_EPSILON``.
    """
    st = bleu_statistics(corpus, max_n)
    bp = brevity_penalty(st["cand_len"], st["ref_len"])
    logp = []
    for m, t in zip(st["matches"], st["totals"]):
        p = m / t if m > 0 else BLEU_EPSILON
        logp.append(math.log(p))
    out = {}
    for n in range(1, max_n + 1):
        out[f"bleu_{n}"] = 100 * bp * math.exp(sum(logp[:n]) / n)
    if weights is None:
        out["bleu"] = out[f"bleu_{max_n}"]
    else:
        if len(weights) != max_n:
            raise ValueError(f"need {max_n} weights, got {len(weights)}")
        total = sum(weights)
        out["bleu"] = 100 * bp * math.exp(sum(w * lp for w, lp in zip(weights, logp)) / total)
    return out


# -- ROUGE ----------------------------------------------------------------------

def _f1(overlap: int, cand_total: int, ref_total: int) -> float:
    if overlap == 0 or cand_total == 0 or ref_total == 0:
        return 0.0
    p, r = overlap / cand_total, overlap / ref_total
    return 2 * p * r / (p + r)


def rouge_n_f1(cand: Sequence[str], ref: Sequence[str], n: int) -> float:
    c, r = ngrams(cand, n), ngrams(ref, n)
    return _f1(sum((c & r).values()), sum(c.values()), sum(r.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l_f1(cand: Sequence[str], ref: Sequence[str]) -> float:
    return _f1(lcs_length(cand, ref), len(cand), len(ref))


def rouge(corpus: EvalCorpus) -> dict[str, float]:
    """Per-item F1 against the best reference, averaged over items."""
    sums = {"rouge_1": 0.0, "rouge_2": 0.0, "rouge_l": 0.0}
    for item in corpus:
        cand = tokenize(item.candidate)
        refs = [tokenize(r) for r in item.references]
        sums["rouge_1"] += max(rouge_n_f1(cand, r, 1) for r in refs)
        sums["rouge_2"] += max(rouge_n_f1(cand, r, 2) for r in refs)
        sums["rouge_l"] += max(rouge_l_f1(cand, r) for r in refs)
    return {k: v / len(corpus) for k, v in sums.items()}


# -- toxicity -------------------------------------------------------------------

def toxicity_pattern(words: Iterable[str]) -> re.Pattern:
    words = sorted({w.strip().lower() for w in words if w.strip()}, key=lambda w: (-len(w), w))
    if not words:
        raise EmptyWordList("toxicity word list is empty")
    alternation = "|".join(re.escape(w) for w in words)
    return re.compile(rf"(?<!\w)(?:{alternation})(?!\w)", re.IGNORECASE)


def lexical_toxicity(candidates: Sequence[str], words: Iterable[str]) -> float:
    """Fraction of candidates containing a listed word as a whole word."""
    pattern = toxicity_pattern(words)
    candidates = list(candidates)
    if not candidates:
        return 0.0
    return sum(1 for c in candidates if pattern.search(c)) / len(candidates)


# -- report ---------------------------------------------------------------------

@dataclass
class MetricReport:
    bleu_1: float
    bleu_2: float
    bleu_3: float
    bleu_4: float
    bleu: float
    rouge_1: float
    rouge_2: float
    rouge_l: float
    distinct_1: float
    distinct_2: float
    toxicity_rate: float
    n_items: int

    def to_json(self) -> dict:
        return asdict(self)

    def csv_values(self) -> list[float]:
        return [self.bleu_1, self.bleu_2, self.bleu_3, self.bleu_4, self.bleu,
                self.rouge_1, self.rouge_2, self.rouge_l,
                self.distinct_1, self.distinct_2, self.toxicity_rate]


def evaluate(corpus: EvalCorpus, toxic_words: Iterable[str], bleu_weights: Sequence[float] | None = None
             ) -> MetricReport:
    b = bleu(corpus, 4, bleu_weights)
    r = rouge(corpus)
    cands = corpus.candidates
    return MetricReport(
        bleu_1=b["bleu_1"], bleu_2=b["bleu_2"], bleu_3=b["bleu_3"], bleu_4=b["bleu_4"], bleu=b["bleu"],
        rouge_1=r["rouge_1"], rouge_2=r["rouge_2"], rouge_l=r["rouge_l"],
        distinct_1=distinct_n(cands, 1), distinct_2=distinct_n(cands, 2),
        toxicity_rate=lexical_toxicity(cands, toxic_words),
        n_items=len(corpus),
    )


def format_csv_row(values: Iterable[float], digits: int = 4) -> str:
    return ",".join(f"{v:.{digits}f}" for v in values)
