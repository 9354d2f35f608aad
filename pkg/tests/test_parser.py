import random

import pytest

from synth import TARGET, ToyGrammar, is_tree, random_treebank, sentence_from_heads
from xinflect.conllu import Sentence, Token, Treebank
from xinflect.errors import DataError, UsageError
from xinflect.experiment import attachment_scores
from xinflect.parsing import GB, KINDS, SL, ParserModel, load_parser, parse, parse_treebank, save_parser, train_parser


@pytest.fixture(scope="module")
def toy():
    rng = random.Random(3)
    grammar = ToyGrammar.random(rng)
    return grammar.treebank(rng, TARGET, 60), grammar.treebank(rng, TARGET, 40)


@pytest.fixture(scope="module")
def trained(toy):
    train, _ = toy
    return {kind: train_parser(kind, train, epochs=10, seed=42) for kind in KINDS}


@pytest.mark.parametrize("kind", KINDS)
def test_memorises_single_sentence(kind):
    s = sentence_from_heads([2, 0, 2, 3, 2], ["nsubj", "root", "obj", "nmod", "punct"])
    model = train_parser(kind, Treebank((s,)), epochs=10)
    assert parse(model, s) == (s.heads, s.deprels)


@pytest.mark.parametrize("kind", KINDS)
def test_toy_grammar_accuracy(kind, toy, trained):
    _, test = toy
    result = attachment_scores(test, parse_treebank(trained[kind], test))
    assert result.uas >= 90.0
    assert result.las >= 85.0


@pytest.mark.parametrize("kind", KINDS)
def test_output_is_single_rooted_tree(kind, trained):
    rng = random.Random(11)
    for _ in range(10):
        for s in random_treebank(rng, 3).sentences:
            heads, rels = parse(trained[kind], s)
            assert len(heads) == len(rels) == len(s.tokens)
            if heads:
                assert is_tree(heads)
                assert rels[heads.index(0)] == trained[kind].root_deprel
                assert rels.count(trained[kind].root_deprel) == 1


@pytest.mark.parametrize("kind", KINDS)
def test_single_token_sentence(kind, trained):
    s = Sentence((Token(1, "hola", "hola", "INTJ"),))
    assert parse(trained[kind], s) == ([0], ["root"])
    assert parse(trained[kind], Sentence(())) == ([], [])


@pytest.mark.parametrize("kind", KINDS)
def test_same_seed_same_weights(kind, toy):
    train = Treebank(toy[0].sentences[:15])
    a = train_parser(kind, train, epochs=3, seed=7)
    b = train_parser(kind, train, epochs=3, seed=7)
    assert a.weights == b.weights
    assert a.to_json() == b.to_json()


@pytest.mark.parametrize("kind", KINDS)
def test_save_load_round_trip(kind, trained, toy, tmp_path):
    path = tmp_path / f"{kind}.json"
    save_parser(trained[kind], path)
    loaded = load_parser(path)
    assert loaded.kind == kind and loaded.labels == trained[kind].labels
    test = Treebank(toy[1].sentences[:10])
    assert parse_treebank(loaded, test) == parse_treebank(trained[kind], test)


def test_parse_treebank_keeps_everything_but_tree(trained, toy):
    test = toy[1]
    out = parse_treebank(trained[GB], test)
    for a, b in zip(test.sentences, out.sentences):
        assert [t.form for t in a.tokens] == [t.form for t in b.tokens]
        assert [t.feats for t in a.tokens] == [t.feats for t in b.tokens]


def test_labels_recorded(trained):
    assert "nsubj" in trained[SL].labels and "nsubj" in trained[GB].labels


def test_errors(tmp_path):
    s = sentence_from_heads([0])
    with pytest.raises(UsageError):
        train_parser("XX", Treebank((s,)))
    with pytest.raises(UsageError):
        train_parser(SL, Treebank(()))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(DataError):
        load_parser(bad)
    with pytest.raises(DataError):
        ParserModel.from_json('{"format": "other", "version": 1}')
