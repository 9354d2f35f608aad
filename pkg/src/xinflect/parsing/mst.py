"""Maximum spanning arborescence decoding (Chu-Liu/Edmonds) for graph-based parsing.

Score matrices follow the ``(n+1) x n`` layout: ``m[h, d-1]`` scores the arc
from head ``h`` (0 is the virtual root) to dependent ``d``. Square
``(n+1) x (n+1)`` matrices indexed ``[h, d]`` are accepted too; their column
0 is ignored.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def _square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    rows, cols = m.shape
    if cols == rows - 1:
        sq = np.empty((rows, rows))
        sq[:, 1:] = m
    elif cols == rows:
        sq = m.copy()
    else:
        raise ValueError(f"score matrix must be (n+1)x n or (n+1)x(n+1), got {m.shape}")
    sq[:, 0] = -np.inf
    np.fill_diagonal(sq, -np.inf)
    return sq


def _best_heads(scores: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the smallest head index on ties
    heads = scores.argmax(axis=0)
    heads[0] = -1
    return heads


def _find_cycle(heads: np.ndarray) -> list[int] | None:
    n = len(heads)
    state = np.zeros(n, dtype=np.int8)
    state[0] = 2
    for start in range(1, n):
        path = []
        node = start
        while state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node]
        if state[node] == 1:
            return path[path.index(node):]
        for p in path:
            state[p] = 2
    return None


def _chu_liu_edmonds(scores: np.ndarray) -> np.ndarray:
    heads = _best_heads(scores)
    cycle = _find_cycle(heads)
    if cycle is None:
        return heads
    n = len(heads)
    cyc = np.array(sorted(cycle))
    in_cycle = np.zeros(n, dtype=bool)
    in_cycle[cyc] = True
    rest = np.flatnonzero(~in_cycle)  # includes the root at position 0

    cycle_arc = scores[heads[cyc], cyc]
    enter = scores[np.ix_(rest, cyc)] - cycle_arc[None, :]
    enter_via = enter.argmax(axis=1)
    leave = scores[np.ix_(cyc, rest)]
    leave_from = leave.argmax(axis=0)

    k = len(rest)
    contracted = np.full((k + 1, k + 1), -np.inf)
    contracted[:k, :k] = scores[np.ix_(rest, rest)]
    contracted[:k, k] = enter.max(axis=1)
    contracted[k, :k] = leave.max(axis=0)
    contracted[:, 0] = -np.inf
    sub = _chu_liu_edmonds(contracted)

    out = np.full(n, -1)
    for j in range(1, k):
        h = sub[j]
        out[rest[j]] = cyc[leave_from[j]] if h == k else rest[h]
    out[cyc] = heads[cyc]
    entry_head = sub[k]
    out[cyc[enter_via[entry_head]]] = rest[entry_head]
    return out


def mst_decode(m: np.ndarray) -> list[int]:
    """Heads of the maximum-score arborescence rooted at 0 (any number of root children).

    When several heads tie for a dependent, the smaller head index wins.
    """
    scores = _square(m)
    if scores.shape[0] < 2:
        return []
    return [int(h) for h in _chu_liu_edmonds(scores)[1:]]


def tree_score(heads: Sequence[int], m: np.ndarray) -> float:
    scores = _square(m)
    return float(sum(scores[h, d] for d, h in enumerate(heads, start=1)))


def _subtree(heads: Sequence[int], node: int) -> set[int]:
    children: dict[int, list[int]] = {}
    for d, h in enumerate(heads, start=1):
        children.setdefault(h, []).append(d)
    out = {node}
    stack = [node]
    while stack:
        for c in children.get(stack.pop(), ()):
            if c not in out:
                out.add(c)
                stack.append(c)
    return out


def enforce_single_root(heads: Sequence[int], m: np.ndarray) -> list[int]:
    """Keep the highest-scoring root child and re-attach the others at least cost.

    Each extra root child moves to the best-scoring head outside its own
    subtree; the kept root child is always such a head, so the result is a
    tree.
    """
    scores = _square(m)
    heads = list(heads)
    children = [d for d, h in enumerate(heads, start=1) if h == 0]
    if len(children) <= 1:
        return heads
    keep = max(children, key=lambda d: (scores[0, d], -d))
    for d in children:
        if d == keep:
            continue
        blocked = _subtree(heads, d)
        candidates = [h for h in range(1, len(heads) + 1) if h not in blocked]
        heads[d - 1] = max(candidates, key=lambda h: (scores[h, d], -h))
    return heads


def decode_single_root(m: np.ndarray) -> list[int]:
    return enforce_single_root(mst_decode(m), m)
