"""Pruned decoding: mask banned IDs, then greedy / top-k / top-p / beam.

Masking happens before any truncation, so top-k always sees k live
candidates when that many exist, and the truncated distribution is
renormalized over what survives.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Collection, Sequence

import numpy as np

from .errors import AllMasked, InvalidConfig, InvalidTokenId, InvariantBreach, NoCandidates
from .lm import LogitSource
from .prunelist import PruneSet

STRATEGIES = ("greedy", "top_k", "top_p", "beam")


@dataclass(frozen=True)
class SamplingConfig:
    strategy: str = "top_k"
    k: int = 50
    p: float = 0.9
    beam_width: int = 4
    max_len: int = 64
    temperature: float = 1.0
    rng_seed: int = 0
    length_normalize: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidConfig(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not _posint(self.max_len):
            raise InvalidConfig(f"max_len must be an integer >= 1, got {self.max_len!r}")
        if not (isinstance(self.temperature, (int, float)) and math.isfinite(self.temperature)
                and self.temperature > 0):
            raise InvalidConfig(f"temperature must be > 0, got {self.temperature!r}")
        if self.strategy == "top_k" and not _posint(self.k):
            raise InvalidConfig(f"k must be an integer >= 1, got {self.k!r}")
        if self.strategy == "top_p" and not (isinstance(self.p, (int, float)) and 0 < self.p <= 1):
            raise InvalidConfig(f"p must lie in (0, 1], got {self.p!r}")
        if self.strategy == "beam" and not _posint(self.beam_width):
            raise InvalidConfig(f"beam_width must be an integer >= 1, got {self.beam_width!r}")
        if not isinstance(self.rng_seed, int) or self.rng_seed < 0:
            raise InvalidConfig(f"rng_seed must be a non-negative integer, got {self.rng_seed!r}")

    def replace(self, **changes) -> "SamplingConfig":
        return SamplingConfig(**{**asdict(self), **changes})


def _posint(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and x >= 1


@dataclass(frozen=True)
class MaskedDistribution:
    probs: np.ndarray
    support: tuple[int, ...]

    def __post_init__(self):
        if not self.support:
            raise NoCandidates("distribution has empty support")


@dataclass(frozen=True)
class BeamHypothesis:
    ids: tuple[int, ...]
    logprob: float
    finished: bool

    def score(self, length_normalize: bool = True) -> float:
        if length_normalize and self.ids:
            return self.logprob / len(self.ids)
        return self.logprob


@dataclass
class GenerationRecord:
    prompt_ids: list[int]
    output_ids: list[int]
    output_text: str
    config: SamplingConfig
    pruneset_fingerprint: str
    per_step_support_size: list[int] = field(default_factory=list)
    prompt_text: str = ""

    def to_json(self) -> dict:
        return {
            "prompt": self.prompt_text,
            "output_text": self.output_text,
            "output_ids": list(self.output_ids),
            "strategy": self.config.strategy,
            "k": self.config.k,
            "p": self.config.p,
            "beam_width": self.config.beam_width,
            "seed": self.config.rng_seed,
            "pruneset_fingerprint": self.pruneset_fingerprint,
            "support_sizes": list(self.per_step_support_size),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False)


# -- masking and filtering -------------------------------------------------

def _prune_ids(prune) -> Collection[int]:
    if prune is None:
        return ()
    return prune.ids if isinstance(prune, PruneSet) else prune


def _mask_index(prune, vocab_size: int) -> np.ndarray:
    idx = np.array(sorted(_prune_ids(prune)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= vocab_size):
        raise InvalidTokenId(f"prune ids must lie in [0, {vocab_size})")
    return idx


def apply_prune_mask(logits, prune) -> np.ndarray:
    """Copy of ``logits`` with every pruned entry set to -inf."""
    out = np.array(logits, dtype=np.float64)
    idx = prune if isinstance(prune, np.ndarray) else _mask_index(prune, out.size)
    out[idx] = -np.inf
    if not np.isfinite(out).any():
        raise AllMasked("every token is masked")
    return out


def _distribution(x: np.ndarray, keep: np.ndarray) -> MaskedDistribution:
    z = x[keep]
    e = np.exp(z - z.max())
    probs = np.zeros(x.size)
    probs[keep] = e / e.sum()
    return MaskedDistribution(probs, tuple(int(i) for i in np.sort(keep)))


def _ranked_live(logits, temperature: float) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(logits, dtype=np.float64) / temperature
    live = np.flatnonzero(np.isfinite(x))
    if live.size == 0:
        raise NoCandidates("no unmasked candidates")
    # descending logit, then ascending id
    order = live[np.lexsort((live, -x[live]))]
    return x, order


def top_k_distribution(logits, k: int, temperature: float = 1.0) -> MaskedDistribution:
    x, order = _ranked_live(logits, temperature)
    return _distribution(x, order[:k])


def top_p_distribution(logits, p: float, temperature: float = 1.0) -> MaskedDistribution:
    """Smallest probability-ordered prefix whose mass reaches ``p``."""
    x, order = _ranked_live(logits, temperature)
    z = x[order]
    e = np.exp(z - z[0])
    cum = np.cumsum(e / e.sum())
    n = min(int(np.searchsorted(cum, p - 1e-12, side="left")) + 1, order.size)
    return _distribution(x, order[:n])


def sample_next(d: MaskedDistribution, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over the support in ascending-ID order."""
    support = d.support
    if len(support) == 1:
        rng.random()  # keep the stream position independent of support size
        return support[0]
    cdf = np.cumsum(d.probs[list(support)])
    j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return support[min(j, len(support) - 1)]


# -- generation ------------------------------------------------------------

def pruneset_fingerprint(prune) -> str:
    if isinstance(prune, PruneSet):
        return prune.fingerprint
    ids = sorted(_prune_ids(prune))
    return hashlib.sha256(json.dumps(ids).encode()).hexdigest()


def _check_eos(mask: np.ndarray, eos: int) -> None:
    if eos is not None and np.any(mask == eos):
        raise InvalidConfig("eos cannot be pruned")


def generate(source: LogitSource, prompt: Sequence[int], cfg: SamplingConfig, prune=None, *,
             eos: int, vocab=None, prompt_text: str = "") -> GenerationRecord:
    """Decode one response; stops at eos (not emitted) or after ``max_len`` tokens."""
    if cfg.strategy == "beam":
        return _beam_record(source, prompt, cfg, prune, eos=eos, vocab=vocab, prompt_text=prompt_text)
    mask = _mask_index(prune, source.vocab_size)
    _check_eos(mask, eos)
    rng = np.random.default_rng(cfg.rng_seed)
    seq = list(prompt)
    out, sizes = [], []
    for _ in range(cfg.max_len):
        logits = apply_prune_mask(source.score(seq), mask)
        if cfg.strategy == "greedy":
            tok = int(np.argmax(logits))  # first max, i.e. lowest id on ties
            sizes.append(1)
        else:
            if cfg.strategy == "top_k":
                d = top_k_distribution(logits, cfg.k, cfg.temperature)
            else:
                d = top_p_distribution(logits, cfg.p, cfg.temperature)
            sizes.append(len(d.support))
            tok = sample_next(d, rng)
        if tok == eos:
            break
        out.append(tok)
        seq.append(tok)
    return _record(prompt, out, cfg, prune, sizes, vocab, prompt_text)


def _record(prompt, out, cfg, prune, sizes, vocab, prompt_text) -> GenerationRecord:
    banned = set(_prune_ids(prune))
    if banned.intersection(out):
        raise InvariantBreach(f"pruned ids emitted: {sorted(banned.intersection(out))}")
    return GenerationRecord(
        prompt_ids=list(prompt),
        output_ids=out,
        output_text=vocab.decode(out) if vocab is not None else "",
        config=cfg,
        pruneset_fingerprint=pruneset_fingerprint(prune),
        per_step_support_size=sizes,
        prompt_text=prompt_text,
    )


def _log_softmax(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    live = np.flatnonzero(np.isfinite(x))
    if live.size == 0:
        raise NoCandidates("no unmasked candidates")
    m = x[live].max()
    lse = m + math.log(np.exp(x[live] - m).sum())
    return x - lse, live


def beam_search(source: LogitSource, prompt: Sequence[int], cfg: SamplingConfig, prune=None, *,
                eos: int) -> list[BeamHypothesis]:
    """Beam search over the masked, renormalized distribution.

    Every hypothesis that ends in eos leaves the beam for the finished list
    and the beam shrinks by one. Search ends when the beam is empty or after
    ``max_len`` steps; hypotheses still open then are kept as unfinished.
    Returns all hypotheses, best first.
    """
    if not _posint(cfg.beam_width):
        raise InvalidConfig(f"beam_width must be an integer >= 1, got {cfg.beam_width!r}")
    mask = _mask_index(prune, source.vocab_size)
    _check_eos(mask, eos)
    prompt = tuple(prompt)
    width = cfg.beam_width
    active: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    finished: list[BeamHypothesis] = []
    for _ in range(cfg.max_len):
        if width == 0 or not active:
            break
        cands = []
        for lp, ids in active:
            x = apply_prune_mask(source.score(prompt + ids), mask) / cfg.temperature
            logp, live = _log_softmax(x)
            cands.extend((lp + float(logp[t]), ids + (int(t),)) for t in live)
        if not cands:
            raise NoCandidates("beam has no live continuations")
        cands.sort(key=lambda c: (-c[0], c[1]))
        active = []
        for lp, ids in cands[:width]:
            if ids[-1] == eos:
                finished.append(BeamHypothesis(ids, lp, True))
                width -= 1
            else:
                active.append((lp, ids))
    finished.extend(BeamHypothesis(ids, lp, False) for lp, ids in active)
    finished.sort(key=lambda h: (-h.score(cfg.length_normalize), h.ids))
    return finished


def _beam_record(source, prompt, cfg, prune, *, eos, vocab, prompt_text) -> GenerationRecord:
    best = beam_search(source, prompt, cfg, prune, eos=eos)[0]
    mask = _mask_index(prune, source.vocab_size)
    seq = list(prompt)
    sizes = []
    for tok in best.ids:
        logits = apply_prune_mask(source.score(seq), mask)
        sizes.append(int(np.isfinite(logits).sum()))
        seq.append(tok)
    out = [t for t in best.ids if t != eos]
    return _record(prompt, out, cfg, prune, sizes, vocab, prompt_text)
