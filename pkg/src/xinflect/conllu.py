"""Lossless CoNLL-U data model, reader/writer, tree validation and merging.

Only basic token lines are ever parsed into fields. Multiword-token ranges
and empty nodes are kept as their original column tuples and re-emitted
verbatim at the position they came from.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple, Sequence, Union

from .errors import ConlluError, UsageError

Feats = tuple[tuple[str, Union[str, None]], ...]

EMPTY = "_"
N_COLUMNS = 10


def parse_feats(raw: str) -> Feats:
    """Parse a FEATS column into pairs sorted case-insensitively by name.

    An entry without ``=`` is kept with a value of ``None``.
    """
    if raw in ("", EMPTY):
        return ()
    pairs = []
    for item in raw.split("|"):
        name, sep, value = item.partition("=")
        pairs.append((name, value if sep else None))
    return sort_feats(pairs)


def sort_feats(pairs: Iterable[tuple[str, str | None]]) -> Feats:
    return tuple(sorted(pairs, key=lambda p: (p[0].lower(), p[0])))


def format_feats(feats: Feats) -> str:
    if not feats:
        return EMPTY
    return "|".join(name if value is None else f"{name}={value}" for name, value in feats)


@dataclass(frozen=True)
class Token:
    """A basic (integer-id) token line.

    ``xpos``, ``deps`` and ``misc`` use ``""`` for the empty marker; the other
    string columns are kept exactly as read.
    """

    id: int
    form: str
    lemma: str
    upos: str
    xpos: str = ""
    feats: Feats = ()
    head: int = 0
    deprel: str = "_"
    deps: str = ""
    misc: str = ""

    @property
    def feats_dict(self) -> dict[str, str | None]:
        return dict(self.feats)

    def misc_items(self) -> list[str]:
        return [] if not self.misc else self.misc.split("|")

    def to_line(self) -> str:
        cols = (
            str(self.id),
            self.form,
            self.lemma,
            self.upos,
            self.xpos,
            format_feats(self.feats),
            str(self.head),
            self.deprel,
            self.deps,
            self.misc,
        )
        return "\t".join(c if c != "" else EMPTY for c in cols)


@dataclass(frozen=True)
class MultiwordToken:
    """An ``i-j`` range line, carried as its raw columns."""

    start: int
    end: int
    columns: tuple[str, ...]

    @property
    def form(self) -> str:
        return self.columns[1]

    @property
    def misc(self) -> str:
        return self.columns[9]

    def to_line(self) -> str:
        return "\t".join(self.columns)


@dataclass(frozen=True)
class EmptyNode:
    """An ``i.j`` empty-node line anchored after basic token ``anchor``."""

    anchor: int
    columns: tuple[str, ...]

    def to_line(self) -> str:
        return "\t".join(self.columns)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()
    mwt_ranges: tuple[MultiwordToken, ...] = ()
    empty_nodes: tuple[EmptyNode, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def heads(self) -> list[int]:
        return [t.head for t in self.tokens]

    @property
    def deprels(self) -> list[str]:
        return [t.deprel for t in self.tokens]

    def with_tree(self, heads: Sequence[int], deprels: Sequence[str]) -> "Sentence":
        """Return a copy with HEAD and DEPREL replaced."""
        if len(heads) != len(self.tokens) or len(deprels) != len(self.tokens):
            raise UsageError("heads/deprels length does not match sentence length")
        tokens = tuple(
            Token(t.id, t.form, t.lemma, t.upos, t.xpos, t.feats, h, r, t.deps, t.misc)
            for t, h, r in zip(self.tokens, heads, deprels)
        )
        return Sentence(tokens, self.comments, self.mwt_ranges, self.empty_nodes)

    def lines(self) -> list[str]:
        out = list(self.comments)
        mwts: dict[int, list[MultiwordToken]] = {}
        for m in self.mwt_ranges:
            mwts.setdefault(m.start, []).append(m)
        empties: dict[int, list[EmptyNode]] = {}
        for e in self.empty_nodes:
            empties.setdefault(e.anchor, []).append(e)
        out.extend(e.to_line() for e in empties.get(0, ()))
        for tok in self.tokens:
            out.extend(m.to_line() for m in mwts.get(tok.id, ()))
            out.append(tok.to_line())
            out.extend(e.to_line() for e in empties.get(tok.id, ()))
        return out


@dataclass(frozen=True)
class Treebank:
    sentences: tuple[Sentence, ...]
    language: str = ""
    name: str = ""

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


def _int(value: str, what: str, source: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConlluError(f"non-integer {what} {value!r}", source=source, lineno=lineno) from None


def _parse_token(cols: list[str], source: str, lineno: int) -> Token:
    tid = _int(cols[0], "id", source, lineno)
    head = _int(cols[6], "head", source, lineno)
    if tid < 1:
        raise ConlluError(f"token id must be >= 1, got {tid}", source=source, lineno=lineno)
    if head < 0:
        raise ConlluError(f"head must be >= 0, got {head}", source=source, lineno=lineno)

    def opt(v: str) -> str:
        return "" if v == EMPTY else v

    return Token(
        id=tid,
        form=cols[1],
        lemma=cols[2],
        upos=cols[3],
        xpos=opt(cols[4]),
        feats=parse_feats(cols[5]),
        head=head,
        deprel=cols[7],
        deps=opt(cols[8]),
        misc=opt(cols[9]),
    )


def _decode(data: Union[bytes, str, IO]) -> str:
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data.replace("\r\n", "\n")


def read_conllu(data: Union[bytes, str, IO], name: str = "", language: str = "") -> Treebank:
    """Parse CoNLL-U text (bytes, str or a readable stream) into a Treebank.

    Raises :class:`ConlluError` with the line number when a line does not
    have 10 tab-separated columns or an id/head is not an integer.
    """
    text = _decode(data)
    source = name or "<conllu>"
    sentences: list[Sentence] = []
    comments: list[str] = []
    tokens: list[Token] = []
    mwts: list[MultiwordToken] = []
    empties: list[EmptyNode] = []

    def flush() -> None:
        if comments or tokens or mwts or empties:
            sentences.append(Sentence(tuple(tokens), tuple(comments), tuple(mwts), tuple(empties)))
        comments.clear()
        tokens.clear()
        mwts.clear()
        empties.clear()

    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise ConlluError(
                f"expected {N_COLUMNS} tab-separated columns, found {len(cols)}",
                source=source,
                lineno=lineno,
            )
        tid = cols[0]
        if "-" in tid:
            start, _, end = tid.partition("-")
            mwts.append(
                MultiwordToken(
                    _int(start, "range start", source, lineno),
                    _int(end, "range end", source, lineno),
                    tuple(cols),
                )
            )
        elif "." in tid:
            anchor, _, _ = tid.partition(".")
            empties.append(EmptyNode(_int(anchor, "empty-node anchor", source, lineno), tuple(cols)))
        else:
            tokens.append(_parse_token(cols, source, lineno))
    flush()
    return Treebank(tuple(sentences), language=language, name=name)


def write_conllu(tb: Treebank) -> bytes:
    """Serialize a treebank; every sentence is followed by one blank line."""
    buf = io.StringIO()
    for sent in tb.sentences:
        for line in sent.lines():
            buf.write(line)
            buf.write("\n")
        buf.write("\n")
    return buf.getvalue().encode("utf-8")


def load_treebank(path: Union[str, os.PathLike], language: str = "", name: str | None = None) -> Treebank:
    if str(path) == "-":
        import sys

        return read_conllu(sys.stdin.buffer.read(), name or "<stdin>", language)
    with open(path, "rb") as f:
        return read_conllu(f.read(), name if name is not None else str(path), language)


def save_treebank(tb: Treebank, path: Union[str, os.PathLike]) -> None:
    payload = write_conllu(tb)
    if str(path) == "-":
        import sys

        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
        return
    with open(path, "wb") as f:
        f.write(payload)


class Violation(NamedTuple):
    kind: str  # "ids" | "head-range" | "cycle" | "no-root" | "multiple-roots"
    token_ids: tuple[int, ...]
    message: str


def validate_heads(heads: Sequence[int]) -> list[Violation]:
    """Tree well-formedness of a 1-indexed head vector (``heads[i-1]`` is the head of i)."""
    n = len(heads)
    violations: list[Violation] = []
    bad = tuple(i for i, h in enumerate(heads, 1) if not 0 <= h <= n)
    if bad:
        violations.append(Violation("head-range", bad, f"heads out of range 0..{n} at {list(bad)}"))
    roots = tuple(i for i, h in enumerate(heads, 1) if h == 0)
    if len(roots) > 1:
        violations.append(Violation("multiple-roots", roots, f"{len(roots)} tokens attach to 0: {list(roots)}"))

    # Follow head pointers; a walk that revisits a node of its own path found a cycle.
    state = [0] * (n + 1)  # 0 unseen, 1 on current path, 2 done
    cycles = []
    for start in range(1, n + 1):
        path = []
        node = start
        while 1 <= node <= n and state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node - 1]
        if 1 <= node <= n and state[node] == 1:
            cycles.append(tuple(sorted(path[path.index(node):])))
        for p in path:
            state[p] = 2
    for cyc in cycles:
        violations.append(Violation("cycle", cyc, f"cycle through tokens {list(cyc)}"))
    if n and not roots and not cycles:
        violations.append(Violation("no-root", (), "no token attaches to 0"))
    return violations


def validate_tree(s: Sentence) -> list[Violation]:
    """Return tree violations of a sentence; an empty list means well-formed."""
    violations = []
    ids = [t.id for t in s.tokens]
    if ids != list(range(1, len(ids) + 1)):
        violations.append(Violation("ids", tuple(ids), "token ids are not 1..n contiguous"))
    return violations + validate_heads(s.heads)


def merge_treebanks(tbs: Sequence[Treebank], name: str = "merged") -> Treebank:
    """Concatenate treebanks in order.

    The language of the result is the shared language of the inputs, or
    ``"+"``-joined distinct languages when they differ.
    """
    if not tbs:
        raise UsageError("merge_treebanks needs at least one treebank")
    langs: list[str] = []
    for tb in tbs:
        for lang in tb.language.split("+"):
            if lang and lang not in langs:
                langs.append(lang)
    sentences = tuple(s for tb in tbs for s in tb.sentences)
    return Treebank(sentences, language="+".join(langs), name=name)
