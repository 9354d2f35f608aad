"""Lemma + UniMorph tag -> word form transduction.

The model memorizes its training triples and learns suffix-rewrite rules
keyed by tag: the longest common prefix of lemma and form is the stem, and
the remainders give a ``lemma-suffix -> form-suffix`` rule. Each rule is
also stored with up to ``context`` trailing stem characters attached to both
sides, so endings shared by several inflection classes can be told apart by
the stem. Unseen pairs are
inflected by the longest matching rule under the exact tag, then under
progressively coarser tags, then copied.
"""

from __future__ import annotations

import enum
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from os.path import commonprefix
from typing import Union

from .errors import DataError, UsageError
from .unimorph import MorphTag, UMLexicon

logger = logging.getLogger(__name__)

FORMAT_VERSION = "v1"
MAGIC = "#xinflect-inflector"


class Provenance(str, enum.Enum):
    MEMORY = "MEMORY"
    RULE = "RULE"
    BACKOFF = "BACKOFF"
    COPY = "COPY"


Rule = tuple[str, str, int]  # (lemma suffix, form suffix, support)


def tag_key(tag: MorphTag) -> str:
    return str(tag.canonical())


def backoff_tags(tag: MorphTag) -> list[str]:
    """Coarser tags obtained by dropping the last canonical feature until only the POS is left."""
    canon = tag.canonical()
    return [str(MorphTag(canon.pos, canon.features[:k])) for k in range(len(canon.features) - 1, -1, -1)]


def extract_rule(lemma: str, form: str) -> tuple[str, str]:
    stem = len(commonprefix([lemma, form]))
    return lemma[stem:], form[stem:]


def extract_rules(lemma: str, form: str, context: int = 2) -> list[tuple[str, str]]:
    """The LCP rule plus variants that keep up to ``context`` trailing stem characters.

    The longest common prefix can swallow a letter that belongs to the
    ending (``partir -> partieron`` gives ``r -> eron``); the context variants
    (``ir -> ieron``) let the longest-match lookup tell such classes apart.
    """
    stem = len(commonprefix([lemma, form]))
    return [(lemma[stem - k :], form[stem - k :]) for k in range(min(context, stem) + 1)]


def _sort_rules(rules: list[Rule]) -> list[Rule]:
    return sorted(rules, key=lambda r: (-len(r[0]), -r[2], r[1], r[0]))


@dataclass
class InflectorModel:
    memory: dict[tuple[str, str], str] = field(default_factory=dict)
    suffix_rules: dict[str, list[Rule]] = field(default_factory=dict)
    backoff_order: str = "drop-last"
    language: str = ""

    def pos_tags(self) -> set[str]:
        return {MorphTag.parse(tag).pos for _, tag in self.memory} | {
            MorphTag.parse(tag).pos for tag in self.suffix_rules
        }

    def _apply_rules(self, lemma: str, tag: str) -> str | None:
        for lsuf, fsuf, _ in self.suffix_rules.get(tag, ()):
            if lemma.endswith(lsuf):
                return lemma[: len(lemma) - len(lsuf)] + fsuf
        return None

    def inflect(self, lemma: str, tag: MorphTag) -> tuple[str, Provenance]:
        key = tag_key(tag)
        if (lemma, key) in self.memory:
            return self.memory[(lemma, key)], Provenance.MEMORY
        form = self._apply_rules(lemma, key)
        if form is not None:
            return form, Provenance.RULE
        for coarser in backoff_tags(tag):
            form = self._apply_rules(lemma, coarser)
            if form is not None:
                return form, Provenance.BACKOFF
        return lemma, Provenance.COPY

    # serialization: header, then M (memory) and R (rule) lines, tab-separated

    def dumps(self) -> str:
        n_rules = sum(len(r) for r in self.suffix_rules.values())
        lines = [
            f"{MAGIC}\t{FORMAT_VERSION}\tlanguage={self.language}\tmemory={len(self.memory)}"
            f"\trules={n_rules}\tbackoff={self.backoff_order}"
        ]
        for (lemma, tag), form in self.memory.items():
            lines.append(f"M\t{lemma}\t{tag}\t{form}")
        for tag, rules in self.suffix_rules.items():
            for lsuf, fsuf, support in rules:
                lines.append(f"R\t{tag}\t{lsuf}\t{fsuf}\t{support}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, source: str = "<inflector>") -> "InflectorModel":
        lines = text.split("\n")
        header = lines[0].split("\t")
        if len(header) < 2 or header[0] != MAGIC:
            raise DataError("not an inflector model file", source=source, lineno=1)
        if header[1] != FORMAT_VERSION:
            raise DataError(f"unsupported model version {header[1]!r}", source=source, lineno=1)
        meta = dict(item.partition("=")[::2] for item in header[2:])
        model = cls(language=meta.get("language", ""), backoff_order=meta.get("backoff", "drop-last"))
        for lineno, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            cols = line.split("\t")
            try:
                if cols[0] == "M" and len(cols) == 4:
                    model.memory[(cols[1], cols[2])] = cols[3]
                elif cols[0] == "R" and len(cols) == 5:
                    model.suffix_rules.setdefault(cols[1], []).append((cols[2], cols[3], int(cols[4])))
                else:
                    raise ValueError
            except ValueError:
                raise DataError("malformed model line", source=source, lineno=lineno) from None
        counts = (len(model.memory), sum(len(r) for r in model.suffix_rules.values()))
        if counts != (int(meta.get("memory", -1)), int(meta.get("rules", -1))):
            raise DataError(f"header counts do not match body {counts}", source=source, lineno=1)
        model.suffix_rules = {tag: _sort_rules(r) for tag, r in model.suffix_rules.items()}
        return model


def load_inflector(path: Union[str, os.PathLike]) -> InflectorModel:
    with open(path, encoding="utf-8") as f:
        return InflectorModel.loads(f.read(), str(path))


def save_inflector(model: InflectorModel, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(model.dumps())


def train_inflector(train: UMLexicon, context: int = 2) -> InflectorModel:
    """Memorize ``train`` and collect suffix rules with up to ``context`` stem characters."""
    if context < 0:
        raise UsageError("context must be >= 0")
    if not len(train):
        raise UsageError("cannot train an inflector on an empty lexicon")
    model = InflectorModel(language=train.language)
    support: dict[str, Counter] = {}
    for lemma, form, tag in train.triples:
        key = tag_key(tag)
        old = model.memory.get((lemma, key))
        if old is not None and old != form:
            logger.warning("conflicting forms for (%s, %s): %r replaced by %r", lemma, key, old, form)
        model.memory[(lemma, key)] = form
        support.setdefault(key, Counter()).update(extract_rules(lemma, form, context))
    model.suffix_rules = {
        key: _sort_rules([(lsuf, fsuf, n) for (lsuf, fsuf), n in counts.items()])
        for key, counts in support.items()
    }
    return model


def inflect(model: InflectorModel, lemma: str, tag: MorphTag) -> tuple[str, Provenance]:
    return model.inflect(lemma, tag)


def evaluate_inflector(model: InflectorModel, test: UMLexicon) -> float:
    """Exact-match accuracy over test triples (duplicates count each time)."""
    if not len(test):
        raise UsageError("cannot evaluate on an empty test set")
    correct = sum(model.inflect(t.lemma, t.tag)[0] == t.form for t in test.triples)
    return correct / len(test)
