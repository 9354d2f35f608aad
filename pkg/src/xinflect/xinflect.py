"""Re-inflect the word forms of a source treebank with a target-language inflector."""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import AbstractSet

from .conllu import EMPTY, Sentence, Token, Treebank
from .inflector import InflectorModel, Provenance
from .schema import ConversionTable, ud_to_um

MISC_MARK = "XInflected=Yes"

STAT_KEYS = (
    "tokens_total",
    "tokens_eligible",
    "tokens_replaced",
    "tokens_copied",
    "tokens_skipped_pos",
    "tokens_skipped_noconv",
    "tokens_empty_lemma",
)


@dataclass
class XInflectionStats:
    """Per-token outcome counts.

    ``tokens_replaced`` counts eligible tokens whose FORM actually changed and
    ``tokens_copied`` eligible tokens whose FORM stayed the same (including
    every COPY fallback), so that ``tokens_eligible = replaced + copied``.
    """

    tokens_total: int = 0
    tokens_eligible: int = 0
    tokens_replaced: int = 0
    tokens_copied: int = 0
    tokens_skipped_pos: int = 0
    tokens_skipped_noconv: int = 0
    tokens_empty_lemma: int = 0
    provenance_histogram: Counter = field(default_factory=Counter)

    def __iadd__(self, other: "XInflectionStats") -> "XInflectionStats":
        for key in STAT_KEYS:
            setattr(self, key, getattr(self, key) + getattr(other, key))
        self.provenance_histogram.update(other.provenance_histogram)
        return self

    @property
    def replacement_rate(self) -> float:
        return self.tokens_replaced / self.tokens_total if self.tokens_total else 0.0

    def to_dict(self) -> dict:
        out = {key: getattr(self, key) for key in STAT_KEYS}
        out["replacement_rate"] = self.replacement_rate
        out["provenance_histogram"] = {p.value: self.provenance_histogram.get(p.value, 0) for p in Provenance}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        d = self.to_dict()
        hist = d.pop("provenance_histogram")
        lines = [f"{k}={d[k]:.6f}" if k == "replacement_rate" else f"{k}={d[k]}" for k in sorted(d)]
        lines += [f"provenance.{k}={v}" for k, v in hist.items()]
        return "\n".join(lines) + "\n"


def _recase(original: str, inflected: str) -> str:
    if original[:1].isupper() and inflected[:1].islower():
        return inflected[:1].upper() + inflected[1:]
    return inflected


def _mark(misc: str) -> str:
    items = [] if not misc else misc.split("|")
    if MISC_MARK not in items:
        items.append(MISC_MARK)
    return "|".join(items)


def xinflect_sentence(
    sent: Sentence,
    model: InflectorModel,
    table: ConversionTable,
    covered: AbstractSet[str],
    mark_misc: bool = True,
) -> tuple[Sentence, XInflectionStats]:
    stats = XInflectionStats()
    tokens = []
    for i, tok in enumerate(sent.tokens):
        stats.tokens_total += 1
        if tok.upos not in covered:
            stats.tokens_skipped_pos += 1
            tokens.append(tok)
            continue
        if tok.lemma in ("", EMPTY):
            stats.tokens_empty_lemma += 1
            tokens.append(tok)
            continue
        tag = ud_to_um(tok.upos, tok.feats, table)
        if tag is None:
            stats.tokens_skipped_noconv += 1
            tokens.append(tok)
            continue
        form, prov = model.inflect(tok.lemma, tag)
        stats.tokens_eligible += 1
        stats.provenance_histogram[prov.value] += 1
        if i == 0:
            form = _recase(tok.form, form)
        if form == tok.form:
            stats.tokens_copied += 1
            tokens.append(tok)
            continue
        stats.tokens_replaced += 1
        misc = _mark(tok.misc) if mark_misc else tok.misc
        tokens.append(
            Token(tok.id, form, tok.lemma, tok.upos, tok.xpos, tok.feats, tok.head, tok.deprel, tok.deps, misc)
        )
    return Sentence(tuple(tokens), sent.comments, sent.mwt_ranges, sent.empty_nodes), stats


def _chunk(sentences, model, table, covered, mark_misc):
    return [xinflect_sentence(s, model, table, covered, mark_misc) for s in sentences]


def xinflect_treebank(
    source: Treebank,
    model: InflectorModel,
    table: ConversionTable,
    covered: AbstractSet[str],
    *,
    mark_misc: bool = True,
    jobs: int = 1,
    name: str | None = None,
) -> tuple[Treebank, XInflectionStats]:
    """Replace FORM of every eligible basic token with the inflector's output.

    A token is eligible when its UPOS is in ``covered``, its lemma is not
    empty, and its annotation converts to a UniMorph tag. Everything but
    FORM (and the MISC marker on changed tokens) is left untouched.
    """
    covered = frozenset(covered)
    sentences = source.sentences
    if jobs > 1 and len(sentences) > jobs:
        size = -(-len(sentences) // jobs)
        chunks = [sentences[i : i + size] for i in range(0, len(sentences), size)]
        work = partial(_chunk, model=model, table=table, covered=covered, mark_misc=mark_misc)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = [r for part in pool.map(work, chunks) for r in part]
    else:
        results = _chunk(sentences, model, table, covered, mark_misc)
    total = XInflectionStats()
    for _, stats in results:
        total += stats
    out = Treebank(
        tuple(s for s, _ in results),
        language=model.language or source.language,
        name=name if name is not None else f"{source.name}.xinfl",
    )
    return out, total


def xinflect_report(stats: XInflectionStats) -> str:
    """Human-readable summary, leading with the replacement rate."""
    lines = [
        f"{100 * stats.replacement_rate:.1f}% replaced ({stats.tokens_replaced} of {stats.tokens_total} tokens)",
        f"  eligible: {stats.tokens_eligible} (unchanged after inflection: {stats.tokens_copied})",
        f"  skipped, UPOS not covered: {stats.tokens_skipped_pos}",
        f"  skipped, no UniMorph tag: {stats.tokens_skipped_noconv}",
        f"  skipped, empty lemma: {stats.tokens_empty_lemma}",
    ]
    if stats.provenance_histogram:
        hist = ", ".join(f"{p.value}={stats.provenance_histogram.get(p.value, 0)}" for p in Provenance)
        lines.append(f"  provenance: {hist}")
    return "\n".join(lines) + "\n"
