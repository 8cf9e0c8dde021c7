"""Regenerate tests/golden/ from the bundled fixtures without using toxprune's tokenizer.

The subword expansion is recomputed with the classic "apply every merge in
rank order" formulation of BPE, which is a different algorithm from the
package's lowest-rank-first loop but must agree with it on any learned merge
table. Coverage is recomputed from that expansion and the saved ID set.

    python scripts/make_golden.py
"""

import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "toxprune" / "data"
GOLDEN = ROOT / "tests" / "golden"


def read_vocab():
    vocab = json.loads((DATA / "vocab.json").read_text(encoding="utf-8"))
    merges = []
    for line in (DATA / "merges.txt").read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            a, b = line.split()
            merges.append((a, b))
    return vocab, merges


def bpe_sequential(word, merges):
    syms = list(word[:-1]) + [word[-1] + "</w>"]
    for a, b in merges:
        i, out = 0, []
        while i < len(syms):
            if i + 1 < len(syms) and syms[i] == a and syms[i + 1] == b:
                out.append(a + b)
                i += 2
            else:
                out.append(syms[i])
                i += 1
        syms = out
    return syms


def expansion(words, vocab, merges):
    out = {}
    for w in words:
        seqs = []
        for form in (w.lower(), w.lower()[:1].upper() + w.lower()[1:]):
            seq = [vocab.get(s, vocab["<unk>"]) for s in bpe_sequential(form, merges)]
            if seq not in seqs:
                seqs.append(seq)
        out[w] = seqs
    return out


def main():
    vocab, merges = read_vocab()
    words = [l.strip() for l in (DATA / "toxic_words.txt").read_text().splitlines()
             if l.strip() and not l.startswith("#")]
    exp = expansion(words, vocab, merges)
    (GOLDEN / "expansion.json").write_text(json.dumps(exp, indent=1) + "\n", encoding="utf-8")

    # ids selected by the package at fraction 0.5, seed 0 (saved by the CLI)
    pruned = GOLDEN / "pruneset_f050_s0.json"
    if not pruned.exists():
        sys.exit(f"missing {pruned}; run: toxprune build-prunelist --fraction 0.5 --seed 0 --out {pruned}")
    ids = set(json.loads(pruned.read_text())["ids"])
    specials = {vocab["<bos>"], vocab["<eos>"], vocab["<unk>"]}
    n = len({i for seqs in exp.values() for s in seqs for i in s} - specials)
    assert len(ids) == math.ceil(0.5 * n), (len(ids), n)
    blocked = sorted(w for w, seqs in exp.items() if all(ids & set(s) for s in seqs))
    cov = {"full_size": n, "blocked_words": blocked, "coverage": len(blocked) / len(exp)}
    (GOLDEN / "coverage_f050_s0.json").write_text(json.dumps(cov, indent=1) + "\n", encoding="utf-8")
    print(f"{len(exp)} words, N={n}, coverage at 0.5: {cov['coverage']:.4f}")


if __name__ == "__main__":
    main()
