"""UD UPOS+FEATS to UniMorph tag conversion, with induced post-editing rules."""

from __future__ import annotations

import logging
import os
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence, Union

from .conllu import Feats, Treebank
from .errors import DataError, UsageError
from .unimorph import (
    DEFAULT_DIMENSIONS,
    Dimensions,
    MorphTag,
    UMLexicon,
    _data_text,
    feature_rank,
    parse_dimensions,
)

logger = logging.getLogger(__name__)

DROP = "DROP"
NONE = "NONE"
EMPTY_SET = "_"

FeatureMap = Mapping[tuple[str, str], Union[tuple[str, ...], None]]


@dataclass(frozen=True)
class PostEditRule:
    """If every feature in ``match`` is present, remove ``remove`` and add ``add``."""

    match: frozenset[str]
    remove: frozenset[str]
    add: frozenset[str]
    support: int = 0

    def apply(self, features: frozenset[str]) -> frozenset[str]:
        if self.match <= features:
            return (features - self.remove) | self.add
        return features

    def same_edit(self, other: "PostEditRule") -> bool:
        return (self.match, self.remove, self.add) == (other.match, other.remove, other.add)


@dataclass(frozen=True)
class ConversionTable:
    feature_map: FeatureMap
    upos_map: Mapping[str, Union[str, None]]
    dimensions: Dimensions = DEFAULT_DIMENSIONS
    postedit_rules: tuple[PostEditRule, ...] = ()
    _rank: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        rank = feature_rank(self.dimensions)
        object.__setattr__(self, "_rank", rank)
        for (name, value), um in self.feature_map.items():
            for f in um or ():
                if f not in rank:
                    raise DataError(f"{name}={value} maps to {f!r}, which is in no UniMorph dimension")
        for rule in self.postedit_rules:
            for f in rule.add:
                if f not in rank:
                    raise DataError(f"post-edit rule adds {f!r}, which is in no UniMorph dimension")

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(self._rank)

    def with_rules(self, rules: Iterable[PostEditRule]) -> "ConversionTable":
        return replace(self, postedit_rules=tuple(rules))

    def order(self, features: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted(features, key=lambda f: self._rank.get(f, (len(self._rank), 0))))

    def map_features(
        self, feats: Feats, dropped: Counter | None = None, unmapped: Counter | None = None
    ) -> frozenset[str]:
        out: set[str] = set()
        for name, value in feats:
            key = f"{name}={value}"
            if "[" in name:
                if dropped is not None:
                    dropped[key] += 1
                continue
            if (name, value) not in self.feature_map:
                if unmapped is not None:
                    unmapped[key] += 1
                continue
            um = self.feature_map[(name, value)]
            if um is None:
                if dropped is not None:
                    dropped[key] += 1
                continue
            out.update(um)
        return frozenset(out)

    @classmethod
    def default(cls) -> "ConversionTable":
        return cls(
            parse_feature_map(_data_text("feature_map.tsv"), "feature_map.tsv"),
            parse_upos_map(_data_text("upos_map.tsv"), "upos_map.tsv"),
            DEFAULT_DIMENSIONS,
        )


def apply_rules(features: frozenset[str], rules: Sequence[PostEditRule]) -> frozenset[str]:
    for rule in rules:
        features = rule.apply(features)
    return features


def ud_to_um(
    upos: str,
    feats: Feats,
    table: ConversionTable,
    dropped: Counter | None = None,
    unmapped: Counter | None = None,
) -> MorphTag | None:
    """Convert one UD token annotation into a UniMorph tag.

    Returns ``None`` when the UPOS maps to no UniMorph POS. Unknown UD
    features are counted in ``unmapped`` (if given) and dropped.
    """
    pos = table.upos_map.get(upos)
    if pos is None:
        return None
    features = apply_rules(table.map_features(feats, dropped, unmapped), table.postedit_rules)
    return MorphTag(pos, table.order(features))


# --- file formats ------------------------------------------------------------


def _rows(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        yield lineno, line.split("\t")


def parse_feature_map(text: str, source: str = "<feature_map>") -> dict[tuple[str, str], tuple[str, ...] | None]:
    fmap: dict[tuple[str, str], tuple[str, ...] | None] = {}
    for lineno, cols in _rows(text):
        if len(cols) != 2 or "=" not in cols[0]:
            raise DataError("expected UDFeature=Value<TAB>UMFeature|DROP", source=source, lineno=lineno)
        name, _, value = cols[0].partition("=")
        fmap[(name, value)] = None if cols[1] == DROP else tuple(f for f in cols[1].split(";") if f)
    return fmap


def parse_upos_map(text: str, source: str = "<upos_map>") -> dict[str, str | None]:
    umap: dict[str, str | None] = {}
    for lineno, cols in _rows(text):
        if len(cols) != 2:
            raise DataError("expected UPOS<TAB>UMPOS|NONE", source=source, lineno=lineno)
        umap[cols[0]] = None if cols[1] == NONE else cols[1]
    return umap


def _fmt_set(features: frozenset[str], table: ConversionTable | None) -> str:
    if not features:
        return EMPTY_SET
    ordered = table.order(features) if table is not None else sorted(features)
    return ";".join(ordered)


def _parse_set(text: str) -> frozenset[str]:
    text = text.strip()
    return frozenset() if text == EMPTY_SET else frozenset(f for f in text.split(";") if f)


def format_rules(rules: Sequence[PostEditRule], table: ConversionTable | None = None) -> str:
    """``match -> remove / add<TAB>support``, one rule per line; ``_`` is the empty set."""
    return "".join(
        f"{_fmt_set(r.match, table)} -> {_fmt_set(r.remove, table)} / {_fmt_set(r.add, table)}\t{r.support}\n"
        for r in rules
    )


def parse_rules(text: str, source: str = "<rules>") -> list[PostEditRule]:
    rules = []
    for lineno, cols in _rows(text):
        try:
            body, support = cols
            match, _, edit = body.partition(" -> ")
            remove, _, add = edit.partition(" / ")
            if not _ or not edit:
                raise ValueError
            rules.append(PostEditRule(_parse_set(match), _parse_set(remove), _parse_set(add), int(support)))
        except ValueError:
            raise DataError("expected 'match -> remove / add<TAB>support'", source=source, lineno=lineno) from None
    return rules


def format_table(table: ConversionTable) -> str:
    """Single-file table: ``[upos]``, ``[features]``, ``[dimensions]``, ``[rules]`` sections."""
    lines = ["# xinflect conversion table v1", "[upos]"]
    lines += [f"{u}\t{NONE if p is None else p}" for u, p in table.upos_map.items()]
    lines.append("[features]")
    lines += [f"{n}={v}\t{DROP if um is None else ';'.join(um)}" for (n, v), um in table.feature_map.items()]
    lines.append("[dimensions]")
    lines += [f"{d}\t{','.join(vals)}" for d, vals in table.dimensions]
    lines.append("[rules]")
    out = "\n".join(lines) + "\n"
    return out + format_rules(table.postedit_rules, table)


def parse_table(text: str, source: str = "<table>") -> ConversionTable:
    sections: dict[str, list[str]] = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]") and "\t" not in line:
            current = stripped[1:-1]
            sections[current] = []
            continue
        if not stripped or line.startswith("#"):
            continue
        if current is None:
            raise DataError("content before the first [section] header", source=source, lineno=lineno)
        sections[current].append(line)
    unknown = set(sections) - {"upos", "features", "dimensions", "rules"}
    if unknown:
        raise DataError(f"unknown table section(s) {sorted(unknown)}", source=source)
    default = ConversionTable.default()
    upos_map = parse_upos_map("\n".join(sections["upos"]), source) if "upos" in sections else default.upos_map
    fmap = parse_feature_map("\n".join(sections["features"]), source) if "features" in sections else default.feature_map
    dims = parse_dimensions("\n".join(sections["dimensions"]), source) if "dimensions" in sections else default.dimensions
    rules = parse_rules("\n".join(sections.get("rules", [])), source)
    return ConversionTable(fmap, upos_map, dims, tuple(rules))


def load_table(
    table: Union[str, os.PathLike, None] = None,
    feature_map: Union[str, os.PathLike, None] = None,
    upos_map: Union[str, os.PathLike, None] = None,
    rules: Union[str, os.PathLike, None] = None,
) -> ConversionTable:
    """Build a table from a combined file and/or separate component files.

    Components given separately override those of the combined file, which
    in turn overrides the bundled defaults. Rules from ``rules`` are appended.
    """

    def read(path) -> str:
        with open(path, encoding="utf-8") as f:
            return f.read()

    base = parse_table(read(table), str(table)) if table else ConversionTable.default()
    if feature_map:
        base = replace(base, feature_map=parse_feature_map(read(feature_map), str(feature_map)))
    if upos_map:
        base = replace(base, upos_map=parse_upos_map(read(upos_map), str(upos_map)))
    if rules:
        base = base.with_rules(base.postedit_rules + tuple(parse_rules(read(rules), str(rules))))
    return base


# --- post-editing rule induction ---------------------------------------------

Tag = tuple[str, frozenset[str]]


@dataclass
class RuleInducer:
    """Iteratively induce post-editing rules from (lemma, form) pairs attested in both resources.

    Each iteration compares converted tags against UniMorph gold tags on the
    anchor tokens, proposes edits with enough support and keeps every
    proposal that strictly raises exact-tag accuracy. ``history`` holds the
    anchor accuracy before the first iteration and after each one.
    """

    table: ConversionTable
    min_support: int = 5
    max_iters: int = 10
    rules: list[PostEditRule] = field(default_factory=list)
    history: list[float] = field(default_factory=list)

    def anchors(self, ud: Treebank, um: UMLexicon) -> Counter:
        gold: dict[tuple[str, str], set[Tag]] = {}
        for t in um.triples:
            gold.setdefault((t.lemma, t.form), set()).add((t.tag.pos, t.tag.feature_set()))
        groups: Counter = Counter()
        for sent in ud.sentences:
            for tok in sent.tokens:
                options = gold.get((tok.lemma, tok.form)) or gold.get((tok.lemma, tok.form.lower()))
                if not options:
                    continue
                tag = ud_to_um(tok.upos, tok.feats, self.table)
                if tag is None:
                    continue
                groups[(tag.pos, tag.feature_set(), frozenset(options))] += 1
        return groups

    @staticmethod
    def accuracy(groups: Counter, rules: Sequence[PostEditRule]) -> float:
        total = sum(groups.values())
        hits = sum(n for (pos, fs, golds), n in groups.items() if (pos, apply_rules(fs, rules)) in golds)
        return hits / total if total else 0.0

    def _closest(self, pos: str, fs: frozenset[str], golds: frozenset[Tag]) -> Tag:
        return min(
            golds,
            key=lambda g: (g[0] != pos, len(fs ^ g[1]), g[0], self.table.order(g[1])),
        )

    def candidates(self, groups: Counter) -> list[PostEditRule]:
        by_key: dict[frozenset[str], Counter] = {}
        by_edit: dict[tuple[frozenset[str], frozenset[str]], list] = {}
        vocab = self.table.vocabulary
        for (pos, raw, golds), n in groups.items():
            fs = apply_rules(raw, self.rules)
            if (pos, fs) in golds:
                continue
            gpos, gfs = self._closest(pos, fs, golds)
            remove, add = fs - gfs, gfs - fs
            if not add <= vocab:
                add = add & vocab
            if not remove and not add:
                continue
            by_key.setdefault(fs, Counter())[(remove, add)] += n
            entry = by_edit.setdefault((remove, add), [fs, 0])
            entry[0] = entry[0] & fs
            entry[1] += n

        general = [PostEditRule(match, rm, ad, n) for (rm, ad), (match, n) in by_edit.items()]
        specific = []
        for key, edits in by_key.items():
            (rm, ad), n = min(edits.items(), key=lambda e: (-e[1], self._edit_key(e[0])))
            specific.append(PostEditRule(key, rm, ad, n))
        ranked = [(r, 0) for r in general] + [(r, 1) for r in specific]
        ranked.sort(key=lambda p: (-p[0].support, p[1], self._rule_key(p[0])))
        return [r for r, _ in ranked if r.support >= self.min_support]

    def _edit_key(self, edit) -> tuple:
        return tuple(self.table.order(s) for s in edit)

    def _rule_key(self, rule: PostEditRule) -> tuple:
        return (len(rule.match),) + self._edit_key((rule.match, rule.remove, rule.add))

    def run(self, ud: Treebank, um: UMLexicon) -> list[PostEditRule]:
        groups = self.anchors(ud, um)
        if not groups:
            logger.warning("no (lemma, form) pairs shared between treebank and lexicon; no rules induced")
            return []
        acc = self.accuracy(groups, self.rules)
        self.history = [acc]
        existing = list(self.table.postedit_rules)
        for _ in range(self.max_iters):
            accepted = False
            for cand in self.candidates(groups):
                if any(cand.same_edit(r) for r in existing + self.rules):
                    continue
                new_acc = self.accuracy(groups, self.rules + [cand])
                if new_acc > acc:
                    self.rules.append(cand)
                    acc = new_acc
                    accepted = True
            if not accepted:
                break
            self.history.append(acc)
        return list(self.rules)


def induce_postedit_rules(
    ud: Treebank,
    um: UMLexicon,
    table: ConversionTable,
    min_support: int = 5,
    max_iters: int = 10,
) -> list[PostEditRule]:
    """Return the post-editing rules to append to ``table.postedit_rules``."""
    if min_support < 1 or max_iters < 0:
        raise UsageError("min_support must be >= 1 and max_iters >= 0")
    if ud.language and um.language and ud.language != um.language:
        logger.warning("inducing rules across languages %s (UD) and %s (UM)", ud.language, um.language)
    return RuleInducer(table, min_support, max_iters).run(ud, um)


@dataclass
class ConversionReport:
    tokens: int = 0
    converted: int = 0
    none_pos: int = 0
    dropped: Counter = field(default_factory=Counter)
    unmapped: Counter = field(default_factory=Counter)
    unmapped_upos: Counter = field(default_factory=Counter)
    tags: Counter = field(default_factory=Counter)

    def format(self) -> str:
        lines = [
            f"tokens\t{self.tokens}",
            f"converted\t{self.converted}",
            f"none_pos\t{self.none_pos}",
        ]
        for label, hist in (("dropped", self.dropped), ("unmapped", self.unmapped), ("unmapped_upos", self.unmapped_upos)):
            for key, n in sorted(hist.items(), key=lambda kv: (-kv[1], kv[0])):
                lines.append(f"{label}\t{key}\t{n}")
        return "\n".join(lines) + "\n"


def conversion_report(ud: Treebank, table: ConversionTable) -> ConversionReport:
    """Count converted tokens, NONE-POS tokens and dropped UD features."""
    report = ConversionReport()
    for sent in ud.sentences:
        for tok in sent.tokens:
            report.tokens += 1
            if tok.upos not in table.upos_map:
                report.unmapped_upos[tok.upos] += 1
            tag = ud_to_um(tok.upos, tok.feats, table, report.dropped, report.unmapped)
            if tag is None:
                report.none_pos += 1
            else:
                report.converted += 1
                report.tags[str(tag)] += 1
    return report
