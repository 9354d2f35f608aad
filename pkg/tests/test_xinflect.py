import json
import random

import pytest

from synth import SOURCE, TARGET, ToyGrammar, random_treebank
from xinflect.conllu import Sentence, Token, Treebank, parse_feats, read_conllu, write_conllu
from xinflect.inflector import InflectorModel, train_inflector
from xinflect.schema import ConversionTable
from xinflect.unimorph import MorphTag, UMLexicon, UMTriple, covered_pos
from xinflect.xinflect import MISC_MARK, XInflectionStats, xinflect_report, xinflect_sentence, xinflect_treebank

TABLE = ConversionTable.default()
GALICIAN = train_inflector(UMLexicon((UMTriple("cantar", "cantou", MorphTag.parse("V;PST;3;SG")),), "gl"))


def one(form, lemma, upos, feats="_", misc=""):
    return Treebank((Sentence((Token(1, form, lemma, upos, "", parse_feats(feats), 0, "root", "", misc),)),), "es")


@pytest.fixture(scope="module")
def toy():
    rng = random.Random(5)
    grammar = ToyGrammar.random(rng)
    um = TARGET.unimorph(grammar.nouns, grammar.verbs, grammar.adjs)
    source = grammar.treebank(rng, SOURCE, 500)
    return source, train_inflector(um), covered_pos(um)


def test_example_falar():
    tb = one("habló", "falar", "VERB", "Number=Sing|Person=3|Tense=Past")
    out, stats = xinflect_treebank(tb, GALICIAN, TABLE, {"VERB"})
    tok = out.sentences[0].tokens[0]
    assert tok.form == "falou"
    assert tok.misc == MISC_MARK
    assert stats.tokens_replaced == 1 and stats.provenance_histogram["RULE"] == 1


def test_gating_skips_uncovered_pos():
    out, stats = xinflect_treebank(one("casa", "casa", "NOUN", "Number=Sing"), GALICIAN, TABLE, {"VERB"})
    assert out.sentences[0].tokens[0].form == "casa"
    assert stats.tokens_skipped_pos == 1


def test_empty_model_copies_lemma():
    tb = one("habló", "hablar", "VERB", "Tense=Past")
    out, stats = xinflect_treebank(tb, InflectorModel(), TABLE, {"VERB"})
    assert out.sentences[0].tokens[0].form == "hablar"
    assert stats.provenance_histogram["COPY"] == 1


def test_skip_reasons():
    tokens = (
        Token(1, "Habló", "_", "VERB", head=0, deprel="root"),
        Token(2, ".", ".", "PUNCT", head=1, deprel="punct"),
        Token(3, "y", "y", "CCONJ", head=1, deprel="cc"),
    )
    tb = Treebank((Sentence(tokens),))
    _, stats = xinflect_treebank(tb, GALICIAN, TABLE, {"VERB", "PUNCT", "CCONJ"})
    assert stats.tokens_empty_lemma == 1
    assert stats.tokens_skipped_noconv == 1  # PUNCT maps to no UniMorph POS
    assert stats.tokens_eligible == 1  # CCONJ converts to CONJ and is copied unchanged
    assert stats.tokens_total == (
        stats.tokens_replaced + stats.tokens_copied + stats.tokens_skipped_pos
        + stats.tokens_skipped_noconv + stats.tokens_empty_lemma
    )


def test_sentence_initial_recasing():
    tb = one("Cantó", "cantar", "VERB", "Number=Sing|Person=3|Tense=Past")
    out, _ = xinflect_treebank(tb, GALICIAN, TABLE, {"VERB"})
    assert out.sentences[0].tokens[0].form == "Cantou"


def test_existing_misc_kept(toy):
    tb = one("habló", "falar", "VERB", "Number=Sing|Person=3|Tense=Past", misc="SpaceAfter=No")
    out, _ = xinflect_treebank(tb, GALICIAN, TABLE, {"VERB"})
    assert out.sentences[0].tokens[0].misc == f"SpaceAfter=No|{MISC_MARK}"
    out, _ = xinflect_treebank(tb, GALICIAN, TABLE, {"VERB"}, mark_misc=False)
    assert out.sentences[0].tokens[0].misc == "SpaceAfter=No"


def test_structure_preserved_and_recount(toy):
    source, model, covered = toy
    out, stats = xinflect_treebank(source, model, TABLE, covered)
    assert len(out) == len(source)
    changed = 0
    for s, o in zip(source.sentences, out.sentences):
        assert (s.comments, s.mwt_ranges, s.empty_nodes) == (o.comments, o.mwt_ranges, o.empty_nodes)
        for a, b in zip(s.tokens, o.tokens, strict=True):
            assert (a.id, a.head, a.deprel, a.lemma, a.upos, a.feats, a.xpos, a.deps) == (
                b.id, b.head, b.deprel, b.lemma, b.upos, b.feats, b.xpos, b.deps)
            changed += a.form != b.form
    assert stats.tokens_replaced == changed > 0
    assert xinflect_report(stats).startswith(f"{100 * changed / source.n_tokens:.1f}% replaced")


def test_forms_match_target_grammar(toy):
    source, model, covered = toy
    out, _ = xinflect_treebank(source, model, TABLE, covered)
    for s in out.sentences:
        for t in s.tokens:
            fd = t.feats_dict
            if t.upos in ("NOUN", "ADJ"):
                assert t.form == TARGET.noun_form(t.lemma, fd["Case"], fd["Number"])
            elif t.upos == "VERB":
                assert t.form == TARGET.verb_form(t.lemma, fd["Tense"], fd["Number"])


def test_identity_when_nothing_covered(toy):
    source, model, _ = toy
    out, stats = xinflect_treebank(source, model, TABLE, set())
    assert out.sentences == source.sentences
    assert stats.tokens_replaced == 0 and stats.tokens_skipped_pos == source.n_tokens


def test_parallel_output_identical(toy):
    source, model, covered = toy
    a, sa = xinflect_treebank(source, model, TABLE, covered)
    b, sb = xinflect_treebank(source, model, TABLE, covered, jobs=3)
    assert write_conllu(a) == write_conllu(b)
    assert sa == sb


def test_mwt_and_empty_nodes_verbatim():
    rng = random.Random(9)
    tb = random_treebank(rng, 5)
    out, _ = xinflect_treebank(tb, GALICIAN, TABLE, {"NOUN", "VERB", "ADJ"})
    for s, o in zip(tb.sentences, out.sentences):
        assert s.mwt_ranges == o.mwt_ranges and s.empty_nodes == o.empty_nodes
    assert read_conllu(write_conllu(out)).sentences == out.sentences


def test_report_examples():
    assert xinflect_report(XInflectionStats(tokens_total=10, tokens_replaced=4)).startswith("40.0% replaced")
    assert xinflect_report(XInflectionStats(tokens_total=5, tokens_skipped_pos=5)).startswith("0.0% replaced")
    assert xinflect_report(XInflectionStats()).startswith("0.0% replaced")


def test_stats_serialisations():
    stats = XInflectionStats(tokens_total=3, tokens_eligible=2, tokens_replaced=1, tokens_copied=1, tokens_skipped_pos=1)
    stats.provenance_histogram["RULE"] = 2
    data = json.loads(stats.to_json())
    assert data["tokens_replaced"] == 1 and data["provenance_histogram"]["RULE"] == 2
    text = stats.to_text()
    assert "tokens_total=3" in text and "provenance.RULE=2" in text


def test_sentence_level_matches_treebank_level(toy):
    source, model, covered = toy
    s = source.sentences[0]
    out, _ = xinflect_sentence(s, model, TABLE, covered)
    assert out == xinflect_treebank(Treebank((s,)), model, TABLE, covered)[0].sentences[0]
