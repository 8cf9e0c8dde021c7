"""Command-line entry point.

    toxprune build-prunelist --fraction 0.5 --out pruneset.json
    toxprune train-lm --out model.json
    toxprune generate --model model.json --pruneset pruneset.json --out gens.jsonl
    toxprune eval --generations gens.jsonl --out report.json
    toxprune sweep --out sweep_out

Every path flag defaults to the bundled toy fixtures. Exit codes: 0 success,
2 usage or validation error, 3 bad data or fingerprint, 4 invariant breach.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .decoding import STRATEGIES, SamplingConfig
from .errors import LengthMismatch, MalformedFile, ToxPruneError
from .lm import BiasWrapper, NgramLM
from .metrics import CSV_COLUMNS, EvalCorpus, evaluate, format_csv_row
from .prunelist import build_prune_set, coverage_report, load_prune_set, load_wordlist, save_prune_set
from .sweep import (ExperimentConfig, data_path, generate_all, read_lines, read_references, run_sweep,
                    train_from_text, write_text)
from .tokenizer import DEFAULT_VARIANTS, VARIANTS, load_vocab


def _add_vocab_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--vocab", type=Path, default=data_path("vocab.json"))
    p.add_argument("--merges", type=Path, default=data_path("merges.txt"))


def _variants(text: str) -> tuple[str, ...]:
    out = tuple(v.strip() for v in text.split(",") if v.strip())
    bad = [v for v in out if v not in VARIANTS]
    if not out or bad:
        raise argparse.ArgumentTypeError(f"variants must be a comma list drawn from {VARIANTS}")
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toxprune", description="Toxic subword pruning for constrained decoding.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-prunelist", help="expand a word list and select a fraction of its subwords")
    _add_vocab_args(p)
    p.add_argument("--wordlist", type=Path, default=data_path("toxic_words.txt"))
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variants", type=_variants, default=DEFAULT_VARIANTS)
    p.add_argument("--out", type=Path, default=Path("pruneset.json"))
    p.add_argument("--coverage-out", type=Path, help="also write the per-word coverage report as JSON")
    p.set_defaults(func=cmd_build_prunelist)

    p = sub.add_parser("train-lm", help="train an add-alpha n-gram model on a text corpus")
    _add_vocab_args(p)
    p.add_argument("--corpus", type=Path, default=data_path("corpus.txt"))
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--out", type=Path, default=Path("model.json"))
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("generate", help="decode one response per prompt")
    _add_vocab_args(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--pruneset", type=Path)
    p.add_argument("--prompts", type=Path, default=data_path("prompts.txt"))
    p.add_argument("--out", type=Path, default=Path("generations.jsonl"))
    p.add_argument("--strategy", choices=STRATEGIES, default="top_k")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--p", type=float, default=0.9)
    p.add_argument("--beam-width", type=int, default=4)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--toxic-bias", type=float, default=0.0,
                   help="add this to the logits of the word list's lowercase subwords")
    p.add_argument("--wordlist", type=Path, default=data_path("toxic_words.txt"))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="score generations against references")
    p.add_argument("--generations", type=Path, required=True)
    p.add_argument("--refs", type=Path, default=data_path("references.jsonl"))
    p.add_argument("--wordlist", type=Path, default=data_path("toxic_words.txt"))
    p.add_argument("--out", type=Path, help="write the full report as JSON here")
    p.add_argument("--csv", type=Path, help="write the CSV header and row here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run the pruning-fraction sweep")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.set_defaults(func=cmd_sweep)
    return ap


def cmd_build_prunelist(args) -> int:
    vocab = load_vocab(args.vocab, args.merges)
    words = load_wordlist(args.wordlist)
    expansion = vocab.expand_words(words, args.variants)
    prune = build_prune_set(expansion, args.fraction, args.seed, vocab)
    cov = coverage_report(prune, expansion)
    save_prune_set(prune, args.out)
    if args.coverage_out:
        write_text(args.coverage_out, json.dumps(cov.to_json(), indent=2) + "\n")
    print(f"subwords: {prune.full_size}")
    print(f"pruned: {len(prune)}")
    print(f"coverage: {cov.coverage:.4f} ({cov.fully_pruned_words}/{cov.total_words} words)")
    return 0


def cmd_train_lm(args) -> int:
    vocab = load_vocab(args.vocab, args.merges)
    model = train_from_text(vocab, read_lines(args.corpus), args.order, args.alpha)
    model.save(args.out)
    print(f"{len(model.counts)} contexts, order {model.order}, vocab {model.vocab_size}")
    return 0


def cmd_generate(args) -> int:
    vocab = load_vocab(args.vocab, args.merges)
    model = NgramLM.load(args.model)
    if model.vocab_size != vocab.size:
        raise MalformedFile(f"model has vocab_size {model.vocab_size}, vocabulary has {vocab.size}")
    source = model
    if args.toxic_bias:
        words = load_wordlist(args.wordlist)
        ids = build_prune_set(vocab.expand_words(words, ("lower",)), 1.0, 0, vocab).ids
        source = BiasWrapper(model, ids, args.toxic_bias)
    prune = load_prune_set(args.pruneset, vocab) if args.pruneset else None
    cfg = SamplingConfig(strategy=args.strategy, k=args.k, p=args.p, beam_width=args.beam_width,
                         max_len=args.max_len, temperature=args.temperature, rng_seed=args.seed)
    records = generate_all(source, vocab, read_lines(args.prompts), cfg, prune)
    write_text(args.out, "".join(r.dumps() + "\n" for r in records))
    print(f"{len(records)} generations written to {args.out}")
    return 0


def _read_generations(path: Path) -> list[str]:
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line)["output_text"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise MalformedFile(f"{path}:{lineno}: {exc}") from exc
    return out


def cmd_eval(args) -> int:
    cands = _read_generations(args.generations)
    refs = read_references(args.refs)
    if len(cands) != len(refs):
        raise LengthMismatch(f"{len(cands)} generations vs {len(refs)} references")
    report = evaluate(EvalCorpus.from_pairs(cands, refs), load_wordlist(args.wordlist))
    text = json.dumps(report.to_json(), indent=2) + "\n"
    row = ",".join(CSV_COLUMNS) + "\n" + format_csv_row(report.csv_values()) + "\n"
    if args.out:
        write_text(args.out, text)
    if args.csv:
        write_text(args.csv, row)
    sys.stdout.write(text + row)
    return 0


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.load(args.config, args.out)
    rows = run_sweep(cfg)
    print((Path(cfg.out_dir) / "summary.csv").read_text(encoding="utf-8"), end="")
    return 0 if rows else 4


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ToxPruneError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # anything else is a bug
        print(f"error: internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
