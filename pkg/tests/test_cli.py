import json
import random
import subprocess
import sys

import pytest

from synth import SOURCE, TARGET, ToyGrammar, write_toy_experiment
from xinflect.cli import build_parser, main
from xinflect.conllu import load_treebank, save_treebank, write_conllu
from xinflect.schema import ConversionTable, format_table
from xinflect.unimorph import write_um

COMMANDS = ("split-um", "train-inflector", "inflect", "convert-feats", "induce-rules", "x-inflect", "merge",
            "train-parser", "parse", "eval", "zero-shot", "few-shot", "analyze")


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    rng = random.Random(1)
    grammar = ToyGrammar.random(rng)
    (root / "t.um").write_bytes(write_um(TARGET.unimorph(grammar.nouns, grammar.verbs, grammar.adjs)))
    save_treebank(grammar.treebank(rng, SOURCE, 30), root / "s.conllu")
    save_treebank(grammar.treebank(rng, TARGET, 10), root / "g.conllu")
    (root / "t.map").write_text(format_table(ConversionTable.default()), encoding="utf-8")
    return root


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_help_everywhere(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    top = capsys.readouterr().out
    assert all(c in top for c in COMMANDS)
    for command in COMMANDS:
        with pytest.raises(SystemExit) as exc:
            main([command, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--jobs" in out
        sub = build_parser()._subparsers._group_actions[0].choices[command]
        for action in sub._actions:
            for flag in action.option_strings:
                assert flag in out


def test_unknown_subcommand_and_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    assert "usage:" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["merge", "a", "--out", "b", "--bogus"])
    assert exc.value.code == 1


def test_split_um(capsys, files, tmp_path):
    code, out, err = run(capsys, "split-um", "--um", files / "t.um", "--out-dir", tmp_path, "--seed", 3)
    assert code == 0
    assert "seed: 3" in err
    sizes = dict(kv.split("=") for kv in out.split())
    assert sum(map(int, sizes.values())) == 500
    assert sorted(p.name for p in tmp_path.iterdir()) == ["t.dev.tsv", "t.test.tsv", "t.train.tsv"]


def test_inflector_round_trip(capsys, files, tmp_path):
    model = tmp_path / "m.infl"
    code, out, _ = run(capsys, "train-inflector", "--um", files / "t.um", "--out", model, "--eval", files / "t.um")
    assert code == 0 and "accuracy 100.00" in out
    lemma, form, tag = (files / "t.um").read_text(encoding="utf-8").splitlines()[0].split("\t")
    code, out, _ = run(capsys, "inflect", "--model", model, "--lemma", lemma, "--tag", tag)
    assert (code, out) == (0, form + "\n")
    queries = tmp_path / "q.tsv"
    queries.write_text(f"{lemma}\t{tag}\n", encoding="utf-8")
    code, out, _ = run(capsys, "inflect", "--model", model, "--input", queries, "--verbose")
    assert out == f"{lemma}\t{tag}\t{form}\tMEMORY\n"
    assert run(capsys, "inflect", "--model", model, "--lemma", lemma)[0] == 1
    assert run(capsys, "inflect", "--model", model, "--lemma", lemma, "--tag", ";SG")[0] == 1


def test_x_inflect_happy_path(capsys, files, tmp_path):
    model = tmp_path / "m.infl"
    assert run(capsys, "train-inflector", "--um", files / "t.um", "--out", model)[0] == 0
    out_path = tmp_path / "o.conllu"
    code, _, err = run(capsys, "x-inflect", "--source", files / "s.conllu", "--model", model,
                       "--table", files / "t.map", "--out", out_path, "--stats", tmp_path / "st.json")
    assert code == 0
    assert "% replaced" in err and "seed: 42" in err
    src, out = load_treebank(files / "s.conllu"), load_treebank(out_path)
    assert [t.head for s in src.sentences for t in s.tokens] == [t.head for s in out.sentences for t in s.tokens]
    assert json.loads((tmp_path / "st.json").read_text())["tokens_replaced"] > 0
    code, _, _ = run(capsys, "x-inflect", "--source", files / "s.conllu", "--model", model,
                     "--out", tmp_path / "id.conllu", "--covered", "")
    assert code == 0
    assert load_treebank(tmp_path / "id.conllu").sentences == src.sentences


def test_x_inflect_reproducible_with_jobs(capsys, files, tmp_path):
    model = tmp_path / "m.infl"
    run(capsys, "train-inflector", "--um", files / "t.um", "--out", model)
    a, b = tmp_path / "a.conllu", tmp_path / "b.conllu"
    run(capsys, "x-inflect", "--source", files / "s.conllu", "--model", model, "--out", a)
    run(capsys, "x-inflect", "--source", files / "s.conllu", "--model", model, "--out", b, "--jobs", 2)
    assert a.read_bytes() == b.read_bytes()


def test_convert_feats(capsys, files, tmp_path):
    code, out, _ = run(capsys, "convert-feats", "--upos", "VERB", "--feats", "Number=Sing|Person=3|Tense=Past")
    assert (code, out) == (0, "V;PST;3;SG\n")
    code, out, _ = run(capsys, "convert-feats", "--upos", "PUNCT")
    assert out == "NONE\n"
    code, out, _ = run(capsys, "convert-feats", "--treebank", files / "s.conllu", "--write-table", tmp_path / "x.map")
    assert code == 0 and out
    assert (tmp_path / "x.map").read_text(encoding="utf-8") == (files / "t.map").read_text(encoding="utf-8")
    assert run(capsys, "convert-feats")[0] == 1


def test_induce_rules(capsys, tmp_path):
    from synth import planted_fin_corpus
    tb, um = planted_fin_corpus()
    save_treebank(tb, tmp_path / "ud.conllu")
    (tmp_path / "um.tsv").write_bytes(write_um(um))
    code, out, err = run(capsys, "induce-rules", "--ud", tmp_path / "ud.conllu", "--um", tmp_path / "um.tsv")
    assert code == 0
    assert "rules=1" in err
    assert "FIN" in out


def test_parser_commands(capsys, files, tmp_path):
    model = tmp_path / "p.json"
    assert run(capsys, "train-parser", "--kind", "GB", "--train", files / "g.conllu", "--out", model, "--epochs", 3)[0] == 0
    pred = tmp_path / "pred.conllu"
    assert run(capsys, "parse", "--model", model, "--input", files / "g.conllu", "--out", pred)[0] == 0
    code, out, _ = run(capsys, "eval", "--gold", files / "g.conllu", "--pred", pred)
    assert code == 0 and out.startswith("UAS ")
    again = tmp_path / "p2.json"
    run(capsys, "train-parser", "--kind", "GB", "--train", files / "g.conllu", "--out", again, "--epochs", 3)
    assert model.read_bytes() == again.read_bytes()


def test_eval_identical(capsys, files):
    code, out, _ = run(capsys, "eval", "--gold", files / "g.conllu", "--pred", files / "g.conllu")
    assert (code, out) == (0, "UAS 100.00 LAS 100.00\n")


def test_merge(capsys, files, tmp_path):
    out = tmp_path / "m.conllu"
    assert run(capsys, "merge", files / "s.conllu", files / "g.conllu", "--out", out)[0] == 0
    assert len(load_treebank(out)) == 40


def test_exit_codes(capsys, files, tmp_path):
    code, _, err = run(capsys, "merge", tmp_path / "missing.conllu", "--out", tmp_path / "x")
    assert code == 1 and "missing.conllu" in err
    bad = tmp_path / "bad.conllu"
    bad.write_text("1\tw\tw\tX\t_\t_\tzero\troot\t_\t_\n\n", encoding="utf-8")
    code, _, err = run(capsys, "merge", bad, "--out", tmp_path / "x")
    assert code == 2 and "bad.conllu" in err and ":1" in err


def test_jobs_must_be_positive(capsys, files, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["merge", str(files / "g.conllu"), "--out", str(tmp_path / "x"), "--jobs", "0"])
    assert exc.value.code == 1


def test_experiments_and_analyze(capsys, tmp_path):
    cfg = write_toy_experiment(tmp_path, sources=("a", "b", "c"), n_source=15, n_test=10)
    out_dir = tmp_path / "zs"
    code, out, err = run(capsys, "zero-shot", "--config", cfg, "--out-dir", out_dir, "--epochs", 1, "--kinds", "GB,SL")
    assert code == 0 and "seed: 42" in err
    assert len(out_dir.joinpath("results.tsv").read_text().splitlines()) == 13
    code, out, _ = run(capsys, "analyze", out_dir / "analysis.tsv", "--tsv", tmp_path / "c.tsv", "--allow-undefined")
    assert code == 0
    assert len((tmp_path / "c.tsv").read_text().splitlines()) == 21
    # every pair shares the target UniMorph data, so um_forms has zero variance
    code, _, err = run(capsys, "analyze", out_dir / "analysis.tsv")
    assert code == 2 and "um_forms" in err and "zero variance" in err
    code, out, _ = run(capsys, "few-shot", "--config", cfg, "--epochs", 1, "--kinds", "GB", "--seed", 5)
    assert code == 0 and sum(line.startswith("few-shot") for line in out.splitlines()) == 3


def test_stdin_stdout_and_bytes_identical(files):
    data = (files / "g.conllu").read_bytes()
    cmd = [sys.executable, "-m", "xinflect", "merge", "-", "--out", "-"]
    first = subprocess.run(cmd, input=data, capture_output=True, check=True)
    second = subprocess.run(cmd, input=data, capture_output=True, check=True)
    assert first.stdout == second.stdout == write_conllu(load_treebank(files / "g.conllu"))
    assert b"seed: 42" in first.stderr
