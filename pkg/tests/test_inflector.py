import logging
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synth import CONJUGATIONS, conjugation_lexicon
from xinflect.errors import DataError, UsageError
from xinflect.inflector import (
    InflectorModel,
    Provenance,
    backoff_tags,
    evaluate_inflector,
    extract_rule,
    extract_rules,
    inflect,
    load_inflector,
    save_inflector,
    train_inflector,
)
from xinflect.unimorph import MorphTag, UMLexicon, UMTriple

PST3SG = MorphTag.parse("V;PST;3;SG")


def lex(*triples) -> UMLexicon:
    return UMLexicon(tuple(UMTriple(l, f, MorphTag.parse(t)) for l, f, t in triples))


def test_rule_extraction_example():
    model = train_inflector(lex(("cantar", "cantou", "V;PST;3;SG")), context=0)
    assert model.suffix_rules["V;PST;3;SG"] == [("ar", "ou", 1)]
    assert extract_rule("x", "x") == ("", "")


def test_context_variants():
    assert extract_rules("cantar", "cantou") == [("ar", "ou"), ("tar", "tou"), ("ntar", "ntou")]
    assert extract_rules("partir", "partieron") == [("r", "eron"), ("ir", "ieron"), ("tir", "tieron")]
    assert extract_rules("ab", "xy", context=2) == [("ab", "xy")]
    model = train_inflector(lex(("partir", "partieron", "V;PST;3;PL"), ("amar", "amaron", "V;PST;3;PL"),
                                ("cantar", "cantaron", "V;PST;3;PL")))
    # without context the ir-verb rule "r -> eron" would win for -ar lemmas
    assert inflect(model, "falar", MorphTag.parse("V;PST;3;PL"))[0] == "falaron"
    assert inflect(model, "subir", MorphTag.parse("V;PST;3;PL"))[0] == "subieron"


def test_inflect_examples():
    model = train_inflector(lex(("cantar", "cantou", "V;PST;3;SG")))
    assert inflect(model, "falar", PST3SG) == ("falou", Provenance.RULE)
    assert inflect(model, "cantar", PST3SG) == ("cantou", Provenance.MEMORY)
    assert inflect(model, "xyz", MorphTag.parse("N;DAT;PL")) == ("xyz", Provenance.COPY)


def test_identity_rule():
    model = train_inflector(lex(("x", "x", "T")), context=0)
    assert model.suffix_rules["T"] == [("", "", 1)]


def test_rule_order_longest_then_support_then_form_suffix():
    model = train_inflector(lex(
        ("amar", "amou", "V;PST;3;SG"),
        ("bater", "bateu", "V;PST;3;SG"),
        ("comer", "comeu", "V;PST;3;SG"),
        ("xar", "xo", "V;PST;3;SG"),
        ("yar", "yb", "V;PST;3;SG"),
    ), context=0)
    assert model.suffix_rules["V;PST;3;SG"] == [("ar", "b", 1), ("ar", "o", 1), ("ar", "ou", 1), ("r", "u", 2)]
    assert inflect(model, "zzar", PST3SG)[0] == "zzb"


def test_backoff_drops_last_feature():
    assert backoff_tags(MorphTag.parse("V;SG;PST;3")) == ["V;PST;3", "V;PST", "V"]
    model = train_inflector(lex(("cantar", "cantou", "V;PST")))
    assert inflect(model, "falar", MorphTag.parse("V;PST;3;SG")) == ("falou", Provenance.BACKOFF)


def test_tag_order_is_irrelevant():
    model = train_inflector(lex(("cantar", "cantou", "V;SG;3;PST")))
    assert inflect(model, "cantar", PST3SG) == ("cantou", Provenance.MEMORY)


def test_conflicting_triples_last_wins(caplog):
    with caplog.at_level(logging.WARNING):
        model = train_inflector(lex(("a", "b", "N;PL"), ("a", "c", "N;PL")))
    assert inflect(model, "a", MorphTag.parse("N;PL"))[0] == "c"
    assert "conflicting" in caplog.text


def test_training_recall_and_count():
    rng = random.Random(0)
    train, _ = conjugation_lexicon(rng, 100)
    model = train_inflector(train)
    assert len(model.memory) == len(train.deduplicated())
    assert evaluate_inflector(model, train) == 1.0


def test_accuracy_counting():
    model = train_inflector(lex(("cantar", "cantou", "V;PST;3;SG")))
    test = lex(("falar", "falou", "V;PST;3;SG"), ("amar", "amou", "V;PST;3;SG"),
               ("cantar", "cantou", "V;PST;3;SG"), ("ser", "foi", "V;PST;3;SG"))
    assert evaluate_inflector(model, test) == 0.75
    with pytest.raises(UsageError):
        evaluate_inflector(model, UMLexicon(()))
    with pytest.raises(UsageError):
        train_inflector(UMLexicon(()))


def test_synthetic_paradigm_generalises():
    rng = random.Random(11)
    full, classes = conjugation_lexicon(rng, 250)
    lemmas = list(classes)
    train_lemmas = set(lemmas[:200])
    train = UMLexicon(tuple(t for t in full if t.lemma in train_lemmas))
    test = UMLexicon(tuple(t for t in full if t.lemma not in train_lemmas))
    assert len(test.lemmas()) == 50
    assert evaluate_inflector(train_inflector(train), test) >= 0.95


def test_serialization_round_trip(tmp_path):
    rng = random.Random(4)
    train, _ = conjugation_lexicon(rng, 30)
    model = train_inflector(train)
    path = tmp_path / "m.infl"
    save_inflector(model, path)
    again = load_inflector(path)
    assert again == model
    assert path.read_text().splitlines()[0].startswith("#xinflect-inflector\tv1\t")


def test_corrupt_model_names_line(tmp_path):
    path = tmp_path / "bad.infl"
    path.write_text("#xinflect-inflector\tv1\tlanguage=\tmemory=1\trules=0\tbackoff=drop-last\nQ\tx\n")
    with pytest.raises(DataError) as err:
        load_inflector(path)
    assert err.value.lineno == 2


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=6), st.sampled_from(sorted({t for c in CONJUGATIONS.values() for t in c}) + ["N;PL", "ADJ"]))
def test_inflect_total_on_random_strings(lemma, tag):
    rng = random.Random(1)
    model = train_inflector(conjugation_lexicon(rng, 20)[0])
    form, prov = model.inflect(lemma, MorphTag.parse(tag))
    assert isinstance(form, str)
    if prov is Provenance.COPY:
        assert form == lemma


def test_empty_model_copies():
    model = InflectorModel()
    assert model.inflect("falar", PST3SG) == ("falar", Provenance.COPY)
