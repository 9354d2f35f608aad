"""Feature extraction for the tagger-style and arc-factored parsers."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from ..conllu import Sentence, format_feats

ROOT = "<root>"
PAD = "<pad>"

DIST_BINS = np.array([0, 1, 2, 3, 4, 5, 6, 11])  # |h-d| buckets: 1,2,3,4,5,6-10,11+


@dataclass(frozen=True)
class TokenView:
    """Per-position attributes with the virtual root at index 0."""

    forms: tuple[str, ...]
    lemmas: tuple[str, ...]
    upos: tuple[str, ...]
    feats: tuple[str, ...]

    @classmethod
    def of(cls, s: Sentence) -> "TokenView":
        return cls(
            (ROOT,) + tuple(t.form.lower() for t in s.tokens),
            (ROOT,) + tuple(t.lemma.lower() for t in s.tokens),
            (ROOT,) + tuple(t.upos for t in s.tokens),
            (ROOT,) + tuple(format_feats(t.feats) for t in s.tokens),
        )

    def __len__(self) -> int:
        return len(self.forms)


def _at(values: tuple[str, ...], i: int) -> str:
    return values[i] if 0 <= i < len(values) else PAD


def token_features(view: TokenView, i: int) -> list[str]:
    """Window features around position ``i`` (1-based) for bracket+deprel tagging."""
    f = ["bias"]
    for o in (-2, -1, 0, 1, 2):
        w, l, p, x = (_at(v, i + o) for v in (view.forms, view.lemmas, view.upos, view.feats))
        f += [f"w{o}={w}", f"l{o}={l}", f"p{o}={p}", f"f{o}={x}"]
        f += [f"fv{o}={p}|{fv}" for fv in x.split("|") if fv != "_"]
    p = [_at(view.upos, j) for j in range(i - 2, i + 3)]
    f += [f"p-1p0={p[1]}|{p[2]}", f"p0p1={p[2]}|{p[3]}", f"p-1p0p1={p[1]}|{p[2]}|{p[3]}", f"p-2p-1p0={p[0]}|{p[1]}|{p[2]}"]
    f += [f"p0p1p2={p[2]}|{p[3]}|{p[4]}"]
    form = view.forms[i]
    for k in (1, 2, 3):
        f += [f"suf{k}={form[-k:]}", f"pre{k}={form[:k]}"]
    padded = f"^{form}$"
    f += [f"c3={padded[k:k + 3]}" for k in range(max(len(padded) - 2, 0))]
    f += [f"p0w0={p[2]}|{form}", f"first={i == 1}", f"last={i == len(view) - 1}"]
    # bracket counts depend on how many dependents lie further away, so add
    # capped counts of what occurs on each side of the focus token
    for side, span in (("L", range(1, i)), ("R", range(i + 1, len(view)))):
        counts: dict[str, int] = {}
        for j in span:
            keys = [view.upos[j], f"{view.upos[j]}|{view.forms[j][-2:]}"]
            keys += [f"{view.upos[j]}|{fv}" for fv in view.feats[j].split("|") if fv != "_"]
            for key in keys:
                counts[key] = counts.get(key, 0) + 1
        f += [f"{side}#{key}={min(c, 4)}" for key, c in counts.items()]
        f += [f"{side}#{key}={p[2]}|{min(c, 4)}" for key, c in counts.items()]
    return f


def label_features(view: TokenView, h: int, d: int) -> list[str]:
    """Features of an arc for the deprel classifier."""
    direction = "R" if h < d else "L"
    dist = min(abs(h - d), 6)
    hw, hl, hp = view.forms[h], view.lemmas[h], view.upos[h]
    dw, dl, dp, df = view.forms[d], view.lemmas[d], view.upos[d], view.feats[d]
    return [
        "bias",
        f"hp={hp}",
        f"dp={dp}",
        f"hw={hw}",
        f"dw={dw}",
        f"hl={hl}",
        f"dl={dl}",
        f"df={df}",
        f"hp,dp={hp}|{dp}",
        f"hp,dp,dir={hp}|{dp}|{direction}",
        f"hw,dp={hw}|{dp}",
        f"hp,dw={hp}|{dw}",
        f"hl,dl={hl}|{dl}",
        f"dp,df={dp}|{df}",
        f"hp,df={hp}|{df}",
        f"dir,dist={direction}{dist}",
        f"dp,dir,dist={dp}|{direction}{dist}",
        f"dsuf3={dw[-3:]}",
        f"dp,dpn={dp}|{_at(view.upos, d + 1)}",
    ]


# --- hashed arc features ------------------------------------------------------

_M1 = np.uint64(0x9E3779B97F4A7C15)
_S = np.uint64(31)


def _seed(template: int) -> np.uint64:
    return np.uint64(((template + 1) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF)


def atom(s: str) -> int:
    return zlib.crc32(s.encode("utf-8"))


def _atoms(values: tuple[str, ...]) -> np.ndarray:
    return np.array([atom(v) for v in values], dtype=np.uint64)


def _mix(acc: np.ndarray, value) -> np.ndarray:
    acc = (acc ^ value) * _M1
    return acc ^ (acc >> _S)


@dataclass(frozen=True)
class ArcTemplates:
    """Hashed arc feature templates for the graph-based scorer.

    Every template exists twice: plain, and conjoined with arc direction and
    bucketed distance. Feature ids are stable across runs (CRC32 atoms mixed
    with fixed 64-bit constants) and reduced modulo ``2**bits``.
    """

    bits: int = 22

    width = 2 * 26 + 1  # ids per (head, dependent) pair

    @property
    def size(self) -> int:
        return 1 << self.bits

    def ids(self, view: TokenView) -> np.ndarray:
        """Return an ``(N, N, K)`` array of feature ids for every (head, dependent) pair."""
        n = len(view)
        w, l, p, f = (_atoms(v) for v in (view.forms, view.lemmas, view.upos, view.feats))
        pad = np.uint64(atom(PAD))
        p_prev = np.concatenate([[pad], p[:-1]])
        p_next = np.concatenate([p[1:], [pad]])
        suf = _atoms(tuple(x[-3:] for x in view.forms))
        suf1 = _atoms(tuple(x[-1:] for x in view.forms))
        suf2 = _atoms(tuple(x[-2:] for x in view.forms))

        H = (slice(None), None)
        D = (None, slice(None))
        head_dep = [
            (w[H],),
            (p[H],),
            (w[H], p[H]),
            (l[H],),
            (w[D],),
            (p[D],),
            (w[D], p[D]),
            (l[D],),
            (suf[D],),
            (p[H], p[D]),
            (w[H], p[D]),
            (p[H], w[D]),
            (w[H], w[D]),
            (l[H], l[D]),
            (p[H], f[D]),
            (f[H], p[D]),
            (p[H], p[D], f[D]),
            (p[H], p[D], suf1[D]),
            (p[H], p[D], suf2[D]),
            (p[H], suf1[H], p[D], suf1[D]),
            (p[H], p_next[H], p_prev[D], p[D]),
            (p_prev[H], p[H], p_prev[D], p[D]),
            (p[H], p_next[H], p[D], p_next[D]),
            (p_prev[H], p[H], p[D], p_next[D]),
            (p[H], p_prev[D], p[D]),
            (p[H], p[D], p_next[D]),
        ]
        idx = np.arange(n)
        direction = (idx[:, None] < idx[None, :]).astype(np.uint64) + np.uint64(1)
        dist = np.digitize(np.abs(idx[:, None] - idx[None, :]), DIST_BINS).astype(np.uint64)
        ctx = direction * np.uint64(16) + dist

        out = np.empty((n, n, self.width), dtype=np.int64)
        mask = np.uint64(self.size - 1)
        base = np.zeros((n, n), dtype=np.uint64)
        for t, parts in enumerate(head_dep):
            acc = base + _seed(t)
            for part in parts:
                acc = _mix(acc, part)
            out[:, :, 2 * t] = (acc & mask).astype(np.int64)
            out[:, :, 2 * t + 1] = (_mix(acc, ctx) & mask).astype(np.int64)
        out[:, :, -1] = (_mix(base + _seed(len(head_dep)), ctx) & mask).astype(np.int64)
        return out
