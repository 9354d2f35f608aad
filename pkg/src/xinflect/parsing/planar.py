"""2-planar bracketing encoding of dependency trees for sequence-labeling parsers.

Each arc lives on one of two planes. On a plane, a rightward arc ``h -> d``
(``h < d``) writes ``/`` on ``h`` and ``>`` on ``d``; a leftward arc
(``h > d``) writes ``<`` on ``d`` and ``\\`` on ``h``. The root arc is a
rightward arc from a virtual position 0 on plane 1, so only its ``>`` is
written. A token's bracket string per plane is ordered ``<``, ``\\``, ``/``,
``>``; in the combined label, each plane-2 bracket is followed by ``*``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..conllu import Sentence

Arc = tuple[int, int]  # (head, dependent)

PLANE2_MARK = "*"
BRACKET_ORDER = "<\\/>"
ROOT_LABEL = "root"
FALLBACK_LABEL = "dep"


def crosses(a: Arc, b: Arc) -> bool:
    """True iff the endpoints of the two arcs strictly interleave."""
    l1, r1 = sorted(a)
    l2, r2 = sorted(b)
    return l1 < l2 < r1 < r2 or l2 < l1 < r2 < r1


def arcs_of(heads: Sequence[int]) -> list[Arc]:
    return [(h, d) for d, h in enumerate(heads, start=1)]


def plane_assignment(arcs: Iterable[Arc]) -> tuple[set[Arc], set[Arc], set[Arc]]:
    """Split arcs into two crossing-free planes plus the arcs that fit in neither.

    Each connected component of the crossing graph is 2-coloured by BFS; the
    component holding the root arc starts with the root arc on plane 1, the
    others with their lowest-dependent arc. Components that are not
    bipartite are assigned greedily by dependent index (plane 1, else plane
    2, else dropped).
    """
    arcs = sorted(set(arcs), key=lambda a: (a[0] != 0, a[1], a[0]))
    neighbours = {a: [b for b in arcs if b != a and crosses(a, b)] for a in arcs}
    plane1: set[Arc] = set()
    plane2: set[Arc] = set()
    dropped: set[Arc] = set()
    seen: set[Arc] = set()
    for seed in arcs:
        if seed in seen:
            continue
        colour = {seed: 0}
        component = [seed]
        queue = deque([seed])
        bipartite = True
        while queue:
            a = queue.popleft()
            for b in neighbours[a]:
                if b not in colour:
                    colour[b] = 1 - colour[a]
                    component.append(b)
                    queue.append(b)
                elif colour[b] == colour[a]:
                    bipartite = False
        seen.update(component)
        if bipartite:
            for a in component:
                (plane1 if colour[a] == 0 else plane2).add(a)
            continue
        for a in sorted(component, key=lambda a: (a[0] != 0, a[1], a[0])):
            if not any(crosses(a, b) for b in plane1):
                plane1.add(a)
            elif not any(crosses(a, b) for b in plane2):
                plane2.add(a)
            else:
                dropped.add(a)
    return plane1, plane2, dropped


@dataclass(frozen=True)
class EncodedSentence:
    labels: tuple[tuple[str, str, str], ...]  # (plane-1 brackets, plane-2 brackets, deprel)
    dropped: tuple[Arc, ...] = ()

    def __len__(self) -> int:
        return len(self.labels)

    def bracket_labels(self) -> list[str]:
        return [p1 + "".join(c + PLANE2_MARK for c in p2) for p1, p2, _ in self.labels]

    @classmethod
    def from_bracket_labels(cls, brackets: Sequence[str], deprels: Sequence[str]) -> "EncodedSentence":
        labels = []
        for text, rel in zip(brackets, deprels):
            p1, p2 = [], []
            for i, c in enumerate(text):
                if c == PLANE2_MARK:
                    continue
                (p2 if text[i + 1 : i + 2] == PLANE2_MARK else p1).append(c)
            labels.append((_canonical(p1), _canonical(p2), rel))
        return cls(tuple(labels))


def _canonical(chars: Iterable[str]) -> str:
    return "".join(sorted((c for c in chars if c in BRACKET_ORDER), key=BRACKET_ORDER.index))


def encode_heads(heads: Sequence[int], deprels: Sequence[str]) -> EncodedSentence:
    n = len(heads)
    plane1, plane2, dropped = plane_assignment(arcs_of(heads))
    counts = [[[0] * 4 for _ in range(n + 1)] for _ in range(2)]
    for p, plane in enumerate((plane1, plane2)):
        for h, d in plane:
            if h < d:
                counts[p][h][2] += 1
                counts[p][d][3] += 1
            else:
                counts[p][d][0] += 1
                counts[p][h][1] += 1
    labels = tuple(
        (
            "".join(c * k for c, k in zip(BRACKET_ORDER, counts[0][i])),
            "".join(c * k for c, k in zip(BRACKET_ORDER, counts[1][i])),
            deprels[i - 1],
        )
        for i in range(1, n + 1)
    )
    return EncodedSentence(labels, tuple(sorted(dropped, key=lambda a: (a[1], a[0]))))


def encode_2planar(s: Sentence) -> EncodedSentence:
    """Encode a well-formed sentence tree; arcs fitting neither plane are dropped."""
    return encode_heads(s.heads, s.deprels)


def decode_2planar(e: EncodedSentence, root_label: str = ROOT_LABEL) -> tuple[list[int], list[str]]:
    """Decode bracket labels into a well-formed tree.

    Accepts any label sequence. Unmatched brackets are discarded and a token
    keeps the first head it receives (plane 1 before plane 2). Then extra
    root attachments are moved under the first root, cycles are broken by
    detaching their lowest token, and headless tokens are attached to the
    root (the first headless token becomes the root if there is none). The
    root token is labelled ``root_label``; any other token carrying that
    label is relabelled ``dep``.
    """
    n = len(e.labels)
    heads: list[int | None] = [None] * (n + 1)
    for plane in (0, 1):
        right = [0] if plane == 0 else []
        left: list[int] = []
        for i, label in enumerate(e.labels, start=1):
            text = label[plane]
            # closing brackets first, then opening ones
            for _ in range(text.count("\\")):
                if left:
                    d = left.pop()
                    if heads[d] is None:
                        heads[d] = i
            for _ in range(text.count(">")):
                if right:
                    h = right.pop()
                    if heads[i] is None:
                        heads[i] = h
            if "<" in text:
                left.extend([i] * text.count("<"))
            right.extend([i] * text.count("/"))

    roots = [d for d in range(1, n + 1) if heads[d] == 0]
    for d in roots[1:]:
        heads[d] = roots[0]

    for start in range(1, n + 1):
        path = []
        node: int | None = start
        while node is not None and node != 0 and node not in path:
            path.append(node)
            node = heads[node]
        if node is not None and node != 0:
            cycle = path[path.index(node):]
            heads[min(cycle)] = None

    root = next((d for d in range(1, n + 1) if heads[d] == 0), None)
    if root is None and n:
        root = next(d for d in range(1, n + 1) if heads[d] is None)
        heads[root] = 0
    out_heads = [root if h is None else h for h in heads[1:]]
    deprels = []
    for d, (_, _, rel) in enumerate(e.labels, start=1):
        if d == root:
            deprels.append(root_label)
        elif rel == root_label:
            deprels.append(FALLBACK_LABEL)
        else:
            deprels.append(rel)
    return out_heads, deprels
