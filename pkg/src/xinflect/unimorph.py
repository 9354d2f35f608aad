"""UniMorph lexicons: tags, loading, dialect concatenation, splitting, POS coverage."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable, Mapping, NamedTuple, Sequence, Union

from .errors import UniMorphError, UsageError

logger = logging.getLogger(__name__)

Dimensions = tuple[tuple[str, tuple[str, ...]], ...]


def _data_text(filename: str) -> str:
    return resources.files("xinflect").joinpath("data").joinpath(filename).read_text(encoding="utf-8")


def _config_lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        yield lineno, line.rstrip("\n").split("\t")


def parse_dimensions(text: str, source: str = "<dimensions>") -> Dimensions:
    dims = []
    for lineno, cols in _config_lines(text):
        if len(cols) != 2:
            raise UniMorphError("expected Dimension<TAB>FEAT,FEAT,...", source=source, lineno=lineno)
        dims.append((cols[0], tuple(f for f in cols[1].split(",") if f)))
    return tuple(dims)


DEFAULT_DIMENSIONS: Dimensions = parse_dimensions(_data_text("um_dimensions.tsv"), "um_dimensions.tsv")


def feature_rank(dimensions: Dimensions) -> dict[str, tuple[int, int]]:
    rank = {}
    for i, (_, values) in enumerate(dimensions):
        for j, value in enumerate(values):
            rank.setdefault(value, (i, j))
    return rank


_DEFAULT_RANK = feature_rank(DEFAULT_DIMENSIONS)


@dataclass(frozen=True)
class MorphTag:
    """A UniMorph tag: a POS symbol plus feature strings, e.g. ``V;PST;3;SG``.

    Features keep the order they were given in; :meth:`canonical` sorts them
    by dimension order. Composite features such as ``IN+ESS`` are opaque.
    """

    pos: str
    features: tuple[str, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "MorphTag":
        parts = text.split(";")
        if not parts[0]:
            raise ValueError(f"empty POS in UniMorph tag {text!r}")
        # stray separators ("V;;PST", "N;SG;") occur in released data
        return cls(parts[0], tuple(f for f in parts[1:] if f))

    def __str__(self) -> str:
        return ";".join((self.pos,) + self.features)

    def canonical(self, dimensions: Dimensions | None = None) -> "MorphTag":
        """Features sorted by dimension order; unknown features follow, in input order."""
        rank = _DEFAULT_RANK if dimensions is None else feature_rank(dimensions)
        unknown = (len(rank) + 1, 0)
        ordered = sorted(
            enumerate(self.features),
            key=lambda p: (rank.get(p[1], unknown), p[0] if p[1] not in rank else 0),
        )
        return MorphTag(self.pos, tuple(f for _, f in ordered))

    def feature_set(self) -> frozenset[str]:
        return frozenset(self.features)


class UMTriple(NamedTuple):
    lemma: str
    form: str
    tag: MorphTag


@dataclass(frozen=True)
class UMLexicon:
    triples: tuple[UMTriple, ...]
    language: str = ""

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    def deduplicated(self) -> "UMLexicon":
        seen: dict[UMTriple, None] = dict.fromkeys(self.triples)
        return UMLexicon(tuple(seen), self.language)

    def lemmas(self) -> set[str]:
        return {t.lemma for t in self.triples}

    def pos_tags(self) -> set[str]:
        return {t.tag.pos for t in self.triples}


class UMSplit(NamedTuple):
    train: UMLexicon
    dev: UMLexicon
    test: UMLexicon


def load_um(data: Union[bytes, str, IO], language: str = "", source: str = "<unimorph>") -> UMLexicon:
    """Parse ``lemma<TAB>form<TAB>tag`` lines; blank lines are skipped."""
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    triples = []
    for lineno, line in enumerate(data.replace("\r\n", "\n").split("\n"), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise UniMorphError(f"expected 3 tab-separated columns, found {len(cols)}", source=source, lineno=lineno)
        lemma, form, tag = cols
        if not lemma or not form:
            raise UniMorphError("empty lemma or form", source=source, lineno=lineno)
        try:
            triples.append(UMTriple(lemma, form, MorphTag.parse(tag)))
        except ValueError as err:
            raise UniMorphError(str(err), source=source, lineno=lineno) from None
    return UMLexicon(tuple(triples), language)


def load_um_file(path: Union[str, os.PathLike], language: str = "") -> UMLexicon:
    with open(path, "rb") as f:
        return load_um(f.read(), language, source=str(path))


def write_um(lex: UMLexicon) -> bytes:
    return "".join(f"{t.lemma}\t{t.form}\t{t.tag}\n" for t in lex.triples).encode("utf-8")


def concat_dialects(lexicons: Sequence[UMLexicon], language: str) -> UMLexicon:
    """Concatenate the forms of several dialect files into one lexicon."""
    if not lexicons:
        raise UsageError("concat_dialects needs at least one lexicon")
    return UMLexicon(tuple(t for lex in lexicons for t in lex.triples), language)


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood 2014).

    Part of the split file interface: any implementation seeded with the same
    integer produces the same stream, hence the same splits.
    """

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)


def seeded_permutation(n: int, seed: int) -> list[int]:
    """Fisher-Yates: for i = n-1 .. 1, swap i with ``next() mod (i + 1)``."""
    rng = SplitMix64(seed)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.next() % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def split_sizes(n: int) -> tuple[int, int, int]:
    train = (8 * n + 5) // 10
    dev = (n + 5) // 10
    return train, dev, n - train - dev


def split_um(lex: UMLexicon, seed: int) -> UMSplit:
    """Deduplicate, shuffle and cut 80/10/10 into train/dev/test.

    The unit is the triple, so a lemma's forms may land in several parts.
    """
    triples = lex.deduplicated().triples
    if len(triples) < 10:
        raise UsageError(f"need at least 10 distinct triples to split, got {len(triples)}")
    shuffled = [triples[i] for i in seeded_permutation(len(triples), seed)]
    n_train, n_dev, _ = split_sizes(len(shuffled))
    return UMSplit(
        UMLexicon(tuple(shuffled[:n_train]), lex.language),
        UMLexicon(tuple(shuffled[n_train : n_train + n_dev]), lex.language),
        UMLexicon(tuple(shuffled[n_train + n_dev :]), lex.language),
    )


PosMap = Mapping[str, frozenset[str]]


def parse_pos_map(text: str, source: str = "<pos_map>") -> dict[str, frozenset[str]]:
    pos_map = {}
    for lineno, cols in _config_lines(text):
        if len(cols) != 2:
            raise UniMorphError("expected UM-POS<TAB>UPOS[,UPOS...]", source=source, lineno=lineno)
        pos_map[cols[0]] = frozenset(u for u in cols[1].split(",") if u)
    return pos_map


def default_pos_map() -> dict[str, frozenset[str]]:
    return parse_pos_map(_data_text("pos_map.tsv"), "pos_map.tsv")


def covered_upos(um_pos: Iterable[str], pos_map: PosMap) -> set[str]:
    covered: set[str] = set()
    for pos in sorted(set(um_pos)):
        if pos not in pos_map:
            logger.warning("UniMorph POS %r has no UPOS mapping; skipped", pos)
            continue
        covered |= pos_map[pos]
    return covered


def covered_pos(lex: UMLexicon, pos_map: PosMap | None = None) -> set[str]:
    """UPOS values whose tokens the lexicon's inflector can re-inflect."""
    return covered_upos(lex.pos_tags(), default_pos_map() if pos_map is None else pos_map)
