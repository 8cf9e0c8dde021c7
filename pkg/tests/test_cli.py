import csv
import json
import subprocess
import sys

import pytest

from conftest import GOLDEN, golden
from toxprune.cli import main
from toxprune.sweep import SUMMARY_HEADER, data_path
from toxprune.tokenizer import load_vocab


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def model(tmp_path_factory):
    path = tmp_path_factory.mktemp("lm") / "model.json"
    assert main(["train-lm", "--out", str(path)]) == 0
    return path


@pytest.fixture
def ten_prompts(tmp_path):
    lines = data_path("prompts.txt").read_text().splitlines()[:10]
    path = tmp_path / "prompts.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_build_full_prunelist(tmp_path, capsys):
    code, out, _ = run(capsys, "build-prunelist", "--fraction", "1.0", "--out", tmp_path / "p.json")
    assert code == 0
    raw = json.loads((tmp_path / "p.json").read_text())
    assert len(raw["ids"]) == raw["full_size"] == 97
    assert "subwords: 97" in out and "pruned: 97" in out and "coverage: 1.0000" in out


def test_build_bad_fraction(tmp_path, capsys):
    code, _, err = run(capsys, "build-prunelist", "--fraction", "1.5", "--out", tmp_path / "p.json")
    assert code == 2
    assert "InvalidFraction" in err
    assert not (tmp_path / "p.json").exists()


def test_build_is_byte_identical(tmp_path, capsys):
    for name in ("a.json", "b.json"):
        assert run(capsys, "build-prunelist", "--fraction", "0.5", "--out", tmp_path / name)[0] == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (GOLDEN / "pruneset_f050_s0.json").read_bytes()


def test_build_coverage_file(tmp_path, capsys):
    run(capsys, "build-prunelist", "--fraction", "0.5", "--out", tmp_path / "p.json",
        "--coverage-out", tmp_path / "c.json")
    cov = json.loads((tmp_path / "c.json").read_text())
    assert cov["coverage"] == golden("coverage_f050_s0.json")["coverage"]


def test_missing_wordlist_is_data_error(tmp_path, capsys):
    code, _, err = run(capsys, "build-prunelist", "--wordlist", tmp_path / "nope.txt", "--out", tmp_path / "p.json")
    assert code == 3 and "error:" in err


def test_bad_variant_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["build-prunelist", "--variants", "upper"])
    assert exc.value.code == 2


def test_generate_ten_prompts(tmp_path, capsys, model, ten_prompts):
    p = tmp_path / "p.json"
    run(capsys, "build-prunelist", "--fraction", "1.0", "--out", p)
    banned = set(json.loads(p.read_text())["ids"])
    outs = []
    for name in ("a.jsonl", "b.jsonl"):
        code, _, _ = run(capsys, "generate", "--model", model, "--pruneset", p, "--prompts", ten_prompts,
                         "--toxic-bias", "3", "--seed", "4", "--out", tmp_path / name)
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    records = [json.loads(l) for l in outs[0].decode().splitlines()]
    assert len(records) == 10
    assert all(not banned.intersection(r["output_ids"]) for r in records)


@pytest.mark.parametrize("strategy", ["greedy", "top_p", "beam"])
def test_generate_strategies(tmp_path, capsys, model, ten_prompts, strategy):
    code, _, _ = run(capsys, "generate", "--model", model, "--prompts", ten_prompts, "--strategy", strategy,
                     "--max-len", "8", "--beam-width", "2", "--out", tmp_path / "g.jsonl")
    assert code == 0
    assert len((tmp_path / "g.jsonl").read_text().splitlines()) == 10


def test_generate_fingerprint_mismatch(tmp_path, capsys, model, ten_prompts):
    p = tmp_path / "p.json"
    run(capsys, "build-prunelist", "--out", p)
    raw = json.loads(p.read_text())
    raw["vocab_fingerprint"] = "f" * 64
    p.write_text(json.dumps(raw))
    code, _, err = run(capsys, "generate", "--model", model, "--pruneset", p, "--prompts", ten_prompts,
                       "--out", tmp_path / "g.jsonl")
    assert code == 3 and "FingerprintMismatch" in err


def _write_generations(path, texts):
    path.write_text("".join(json.dumps({"output_text": t}) + "\n" for t in texts))


def test_eval_identity(tmp_path, capsys):
    refs = [json.loads(l)["references"][0] for l in data_path("references.jsonl").read_text().splitlines()]
    gens = tmp_path / "g.jsonl"
    _write_generations(gens, refs)
    code, out, _ = run(capsys, "eval", "--generations", gens, "--out", tmp_path / "r.json", "--csv", tmp_path / "r.csv")
    assert code == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["bleu"] == pytest.approx(100, abs=1e-6)
    assert report["rouge_l"] == 1.0
    assert report["toxicity_rate"] == 0.0
    header, row = (tmp_path / "r.csv").read_text().splitlines()
    assert header == "B-1,B-2,B-3,B-4,B,R-1,R-2,R-L,D-1,D-2,Toxicity"
    assert row.split(",")[4] == "100.0000"


def test_eval_length_mismatch(tmp_path, capsys):
    gens = tmp_path / "g.jsonl"
    _write_generations(gens, ["only one"])
    code, _, err = run(capsys, "eval", "--generations", gens)
    assert code == 2 and "LengthMismatch" in err


def test_eval_golden_fixture(tmp_path, capsys):
    rows = [json.loads(l) for l in (GOLDEN / "metric_fixture.jsonl").read_text().splitlines()]
    _write_generations(tmp_path / "g.jsonl", [r["candidate"] for r in rows])
    (tmp_path / "refs.jsonl").write_text("".join(json.dumps({"references": r["references"]}) + "\n" for r in rows))
    (tmp_path / "w.txt").write_text("damn\n")
    code, _, _ = run(capsys, "eval", "--generations", tmp_path / "g.jsonl", "--refs", tmp_path / "refs.jsonl",
                     "--wordlist", tmp_path / "w.txt", "--out", tmp_path / "r.json")
    assert code == 0
    got = json.loads((tmp_path / "r.json").read_text())
    for key, value in golden("metric_report.json").items():
        assert got[key] == pytest.approx(value, rel=1e-12), key


@pytest.fixture(scope="module")
def sweep_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    assert main(["sweep", "--out", str(out)]) == 0
    return out


def _summary(out):
    with open(out / "summary.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_layout(sweep_dir):
    assert (sweep_dir / "summary.csv").read_text().splitlines()[0] == SUMMARY_HEADER
    rows = _summary(sweep_dir)
    assert [r["fraction"] for r in rows] == ["0.00", "0.25", "0.50", "0.75", "1.00"]
    for f in ("0.25", "1.00"):
        for seed in range(5):
            run_dir = sweep_dir / f"fraction_{f}" / f"seed_{seed}"
            assert {p.name for p in run_dir.iterdir()} == {"pruneset.json", "generations.jsonl", "report.json"}
    assert not (sweep_dir / "fraction_0.00" / "seed_0" / "pruneset.json").exists()


def test_sweep_trends(sweep_dir):
    rows = _summary(sweep_dir)
    tox = [float(r["Toxicity"]) for r in rows]
    d1 = [float(r["D-1"]) for r in rows]
    assert tox == sorted(tox, reverse=True) and tox[-1] == 0.0
    assert d1 == sorted(d1)


def test_sweep_full_pruning_emits_no_banned_ids(sweep_dir, toy_vocab):
    for seed_dir in (sweep_dir / "fraction_1.00").iterdir():
        banned = set(json.loads((seed_dir / "pruneset.json").read_text())["ids"])
        for line in (seed_dir / "generations.jsonl").read_text().splitlines():
            assert not banned.intersection(json.loads(line)["output_ids"])


def _config(tmp_path, **changes):
    cfg = json.loads(data_path("sweep.json").read_text())
    for key in ("vocab", "merges", "wordlist", "prompts", "refs"):
        cfg[key] = str(data_path(cfg[key]))
    cfg["lm"]["corpus"] = str(data_path(cfg["lm"]["corpus"]))
    cfg.update(changes)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_sweep_bad_fraction(tmp_path, capsys):
    code, _, err = run(capsys, "sweep", "--config", _config(tmp_path, fractions=[0.5, 1.5]), "--out", tmp_path / "o")
    assert code == 2 and "InvalidFraction" in err


def test_sweep_names_failing_stage(tmp_path, capsys):
    cfg = _config(tmp_path, prompts=str(tmp_path / "missing.txt"))
    code, _, err = run(capsys, "sweep", "--config", cfg, "--out", tmp_path / "o")
    assert code == 3
    assert "load:" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "toxprune", "build-prunelist", "--fraction", "0.25",
                           "--out", str(tmp_path / "p.json")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "pruned: 25" in proc.stdout
