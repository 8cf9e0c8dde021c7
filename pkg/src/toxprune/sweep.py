"""Fraction sweep: how pruning more of the word list changes generation.

For each fraction (plus an unpruned baseline) and each seed: build the prune
set, decode every prompt with the bias-wrapped n-gram model, score the
responses. ``summary.csv`` holds one row per fraction, averaged over seeds.
"""

from __future__ import annotations

import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .decoding import SamplingConfig, generate
from .errors import InvalidConfig, InvalidFraction, LengthMismatch, MalformedFile, StageError
from .lm import BiasWrapper, NgramLM, train_ngram
from .metrics import CSV_COLUMNS, EvalCorpus, MetricReport, evaluate, format_csv_row, reference_list
from .prunelist import PruneSet, build_prune_set, coverage_report, load_wordlist, save_prune_set
from .tokenizer import DEFAULT_VARIANTS, Vocabulary, load_vocab

log = logging.getLogger(__name__)

SUMMARY_HEADER = "fraction," + ",".join(CSV_COLUMNS)


def data_path(name: str) -> Path:
    return Path(str(resources.files("toxprune") / "data" / name))


@dataclass
class ExperimentConfig:
    vocab: Path
    merges: Path
    wordlist: Path
    prompts: Path
    refs: Path
    corpus: Path
    fractions: list[float] = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    seeds: list[int] = field(default_factory=lambda: [0])
    variants: tuple[str, ...] = DEFAULT_VARIANTS
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    order: int = 3
    alpha: float = 0.1
    toxic_bias: float = 4.0
    bias_variants: tuple[str, ...] = ("lower",)
    out_dir: Path = Path("sweep_out")

    def __post_init__(self):
        for f in self.fractions:
            if isinstance(f, bool) or not isinstance(f, (int, float)) or not 0 < f <= 1:
                raise InvalidFraction(f"sweep fractions must lie in (0, 1], got {f!r}")
        if not self.seeds or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
            raise InvalidConfig("seeds must be a non-empty list of non-negative integers")

    @classmethod
    def load(cls, path: str | Path | None = None, out_dir: str | Path | None = None) -> "ExperimentConfig":
        """Read a JSON config; data paths resolve against the config's directory."""
        path = Path(path) if path is not None else data_path("sweep.json")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedFile(f"{path}: {exc}") from exc
        base = path.parent
        lm = raw.get("lm", {})
        try:
            return cls(
                vocab=base / raw["vocab"],
                merges=base / raw["merges"],
                wordlist=base / raw["wordlist"],
                prompts=base / raw["prompts"],
                refs=base / raw["refs"],
                corpus=base / lm["corpus"],
                fractions=list(raw.get("fractions", [0.25, 0.5, 0.75, 1.0])),
                seeds=list(raw.get("seeds", [0])),
                variants=tuple(raw.get("variants", DEFAULT_VARIANTS)),
                sampling=SamplingConfig(**raw.get("sampling", {})),
                order=lm.get("order", 3),
                alpha=lm.get("alpha", 0.1),
                toxic_bias=lm.get("toxic_bias", 4.0),
                bias_variants=tuple(lm.get("bias_variants", ("lower",))),
                out_dir=Path(out_dir if out_dir is not None else raw.get("out_dir", "sweep_out")),
            )
        except KeyError as exc:
            raise MalformedFile(f"{path}: missing key {exc}") from exc
        except TypeError as exc:
            raise InvalidConfig(f"{path}: {exc}") from exc


def read_lines(path: Path) -> list[str]:
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def read_references(path: Path) -> list[list[str]]:
    refs = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            refs.append(reference_list(json.loads(line)))
        except (json.JSONDecodeError, TypeError) as exc:
            raise MalformedFile(f"{path}:{lineno}: {exc}") from exc
    return refs


def train_from_text(vocab: Vocabulary, lines: list[str], order: int, alpha: float) -> NgramLM:
    return train_ngram([vocab.encode(line) for line in lines], order, alpha,
                       vocab_size=vocab.size, bos=vocab.bos, eos=vocab.eos)


def prompt_seed(seed: int, index: int) -> int:
    return seed * 1_000_003 + index


def generate_all(source, vocab: Vocabulary, prompts: list[str], cfg: SamplingConfig, prune) -> list:
    records = []
    for i, text in enumerate(prompts):
        records.append(generate(source, vocab.encode(text), cfg.replace(rng_seed=prompt_seed(cfg.rng_seed, i)),
                                prune, eos=vocab.eos, vocab=vocab, prompt_text=text))
    return records


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


@contextmanager
def _stage(name):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_sweep(cfg: ExperimentConfig) -> list[tuple[float, MetricReport]]:
    with _stage("load"):
        vocab = load_vocab(cfg.vocab, cfg.merges)
        words = load_wordlist(cfg.wordlist)
        expansion = vocab.expand_words(words, cfg.variants)
        prompts = read_lines(cfg.prompts)
        refs = read_references(cfg.refs)
        if len(prompts) != len(refs):
            raise LengthMismatch(f"{len(prompts)} prompts vs {len(refs)} references")
        corpus = read_lines(cfg.corpus)
    with _stage("train-lm"):
        base = train_from_text(vocab, corpus, cfg.order, cfg.alpha)
        # the emulated toxic model favours the surface forms its corpus uses
        toxic_ids = build_prune_set(vocab.expand_words(words, cfg.bias_variants), 1.0, 0, vocab).ids
        source = BiasWrapper(base, toxic_ids, cfg.toxic_bias)

    out = Path(cfg.out_dir)
    rows = []
    for fraction in [0.0, *cfg.fractions]:
        reports = []
        for seed in cfg.seeds:
            run_dir = out / f"fraction_{fraction:.2f}" / f"seed_{seed}"
            with _stage(f"build-prunelist (fraction {fraction}, seed {seed})"):
                if fraction == 0:
                    prune = PruneSet.empty(vocab, words)
                else:
                    prune = build_prune_set(expansion, fraction, seed, vocab)
                    save_prune_set(prune, run_dir / "pruneset.json")
                cov = coverage_report(prune, expansion)
            with _stage(f"generate (fraction {fraction}, seed {seed})"):
                records = generate_all(source, vocab, prompts, cfg.sampling.replace(rng_seed=seed), prune)
                write_text(run_dir / "generations.jsonl", "".join(r.dumps() + "\n" for r in records))
            with _stage(f"eval (fraction {fraction}, seed {seed})"):
                report = evaluate(EvalCorpus.from_pairs([r.output_text for r in records], refs), words)
                write_text(run_dir / "report.json", json.dumps(
                    {**report.to_json(), "coverage": cov.coverage, "pruned_ids": len(prune)}, indent=2) + "\n")
            reports.append(report)
        mean = MetricReport(**{
            k: (float(np.mean([getattr(r, k) for r in reports])) if k != "n_items" else reports[0].n_items)
            for k in reports[0].to_json()
        })
        log.info("fraction %.2f: toxicity %.3f distinct-1 %.3f", fraction, mean.toxicity_rate, mean.distinct_1)
        rows.append((fraction, mean))

    with _stage("write"):
        lines = [SUMMARY_HEADER] + [f"{f:.2f}," + format_csv_row(r.csv_values()) for f, r in rows]
        write_text(out / "summary.csv", "\n".join(lines) + "\n")
    return rows
