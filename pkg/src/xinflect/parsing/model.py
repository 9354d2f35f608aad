"""Trainable sequence-labeling (SL) and graph-based (GB) dependency parsers.

SL tags every token with a combined ``brackets@deprel`` label from an
averaged perceptron and decodes the 2-planar brackets into a tree. GB scores
every arc with an averaged structured perceptron over hashed arc features,
decodes the maximum spanning arborescence with a single root, and labels
the arcs with a separate averaged perceptron.
"""

from __future__ import annotations

import json
import os
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..conllu import Sentence, Treebank
from ..errors import DataError, UsageError
from .features import ArcTemplates, TokenView, label_features, token_features
from .mst import decode_single_root
from .perceptron import AveragedPerceptron
from .planar import FALLBACK_LABEL, EncodedSentence, decode_2planar, encode_2planar

SL = "SL"
GB = "GB"
KINDS = (SL, GB)
FORMAT = "xinflect-parser"
VERSION = 1
LABEL_SEP = "@"

# Cache arc feature ids across epochs while their total size stays under this many ids.
_CACHE_BUDGET = 40_000_000


@dataclass
class ParserModel:
    kind: str
    labels: list[str]
    root_deprel: str = "root"
    epochs: int = 0
    seed: int = 0
    tagger: AveragedPerceptron | None = None  # SL: brackets@deprel; GB: deprel
    arc_weights: dict[int, float] = field(default_factory=dict)  # GB only
    hash_bits: int = 22
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def weights(self) -> dict:
        """All feature weights, for equality checks and serialization."""
        return {
            "tagger": self.tagger.weights if self.tagger is not None else {},
            "arcs": self.arc_weights,
        }

    def dense_arc_weights(self) -> np.ndarray:
        if self._dense is None:
            dense = np.zeros(1 << self.hash_bits)
            if self.arc_weights:
                idx = np.fromiter(self.arc_weights.keys(), dtype=np.int64)
                dense[idx] = np.fromiter(self.arc_weights.values(), dtype=float)
            self._dense = dense
        return self._dense

    def to_json(self) -> str:
        payload = {
            "format": FORMAT,
            "version": VERSION,
            "kind": self.kind,
            "labels": self.labels,
            "root_deprel": self.root_deprel,
            "epochs": self.epochs,
            "seed": self.seed,
            "hash_bits": self.hash_bits,
            "tagger": self.tagger.to_dict() if self.tagger is not None else None,
            "arc_weights": [[k, self.arc_weights[k]] for k in sorted(self.arc_weights)],
        }
        return json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str, source: str = "<parser model>") -> "ParserModel":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise DataError(f"invalid model file: {err.msg}", source=source, lineno=err.lineno) from None
        if data.get("format") != FORMAT or data.get("version") != VERSION:
            raise DataError("not a version-1 parser model", source=source)
        return cls(
            kind=data["kind"],
            labels=data["labels"],
            root_deprel=data["root_deprel"],
            epochs=data["epochs"],
            seed=data["seed"],
            tagger=AveragedPerceptron.from_dict(data["tagger"]) if data["tagger"] else None,
            arc_weights={int(k): float(v) for k, v in data["arc_weights"]},
            hash_bits=data["hash_bits"],
        )


def save_parser(model: ParserModel, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(model.to_json())


def load_parser(path: Union[str, os.PathLike]) -> ParserModel:
    with open(path, encoding="utf-8") as f:
        return ParserModel.from_json(f.read(), str(path))


def _by_frequency(counts: Counter) -> list[str]:
    return [label for label, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]


def _root_deprel(sentences) -> str:
    counts = Counter(t.deprel for s in sentences for t in s.tokens if t.head == 0)
    return _by_frequency(counts)[0] if counts else "root"


# --- SL ------------------------------------------------------------------------


def _sl_gold(s: Sentence) -> list[str]:
    enc = encode_2planar(s)
    return [f"{b}{LABEL_SEP}{r}" for b, r in zip(enc.bracket_labels(), s.deprels)]


def _train_sl(sentences: list[Sentence], epochs: int, rng: random.Random) -> ParserModel:
    data = [(TokenView.of(s), _sl_gold(s)) for s in sentences]
    counts = Counter(label for _, gold in data for label in gold)
    tagger = AveragedPerceptron(_by_frequency(counts))
    examples = [(token_features(view, i), label) for view, gold in data for i, label in enumerate(gold, 1)]
    order = list(range(len(examples)))
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            feats, label = examples[k]
            tagger.update(label, tagger.predict(feats), feats)
    tagger.average()
    return ParserModel(SL, sorted({l.split(LABEL_SEP, 1)[1] for l in counts}), tagger=tagger)


def _parse_sl(model: ParserModel, s: Sentence) -> tuple[list[int], list[str]]:
    view = TokenView.of(s)
    labels = [model.tagger.predict(token_features(view, i)) for i in range(1, len(view))]
    brackets, deprels = zip(*(l.split(LABEL_SEP, 1) for l in labels)) if labels else ((), ())
    enc = EncodedSentence.from_bracket_labels(brackets, deprels)
    return decode_2planar(enc, root_label=model.root_deprel)


# --- GB ------------------------------------------------------------------------


def _arc_scores(weights: np.ndarray, ids: np.ndarray) -> np.ndarray:
    return weights[ids].sum(axis=-1)


def _train_gb(sentences: list[Sentence], epochs: int, rng: random.Random, bits: int) -> ParserModel:
    templates = ArcTemplates(bits)
    views = [TokenView.of(s) for s in sentences]
    golds = [np.array([0] + s.heads) for s in sentences]
    rel_counts = Counter(t.deprel for s in sentences for t in s.tokens)
    labeller = AveragedPerceptron(_by_frequency(rel_counts))
    label_examples = [
        (label_features(view, t.head, t.id), t.deprel) for view, s in zip(views, sentences) for t in s.tokens
    ]

    size = sum(len(v) ** 2 for v in views) * templates.width
    cache: list[np.ndarray | None] = [None] * len(views)
    use_cache = size <= _CACHE_BUDGET

    weights = np.zeros(templates.size)
    totals = np.zeros(templates.size)  # sum of step * update, for averaging
    step = 1
    order = list(range(len(sentences)))
    label_order = list(range(len(label_examples)))
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            ids = cache[k]
            if ids is None:
                ids = templates.ids(views[k])
                if use_cache:
                    cache[k] = ids
            gold = golds[k]
            pred = np.array([0] + decode_single_root(_arc_scores(weights, ids)))
            wrong = np.flatnonzero(pred != gold)
            wrong = wrong[wrong > 0]
            if len(wrong):
                plus = ids[gold[wrong], wrong].ravel()
                minus = ids[pred[wrong], wrong].ravel()
                np.add.at(weights, plus, 1.0)
                np.add.at(weights, minus, -1.0)
                np.add.at(totals, plus, float(step))
                np.add.at(totals, minus, -float(step))
            step += 1
        rng.shuffle(label_order)
        for k in label_order:
            feats, rel = label_examples[k]
            labeller.update(rel, labeller.predict(feats), feats)
    labeller.average()
    averaged = weights - totals / step
    nz = np.flatnonzero(averaged)
    model = ParserModel(GB, sorted(rel_counts), tagger=labeller, hash_bits=bits)
    model.arc_weights = {int(i): float(averaged[i]) for i in nz}
    model._dense = averaged
    return model


def _parse_gb(model: ParserModel, s: Sentence) -> tuple[list[int], list[str]]:
    view = TokenView.of(s)
    ids = ArcTemplates(model.hash_bits).ids(view)
    heads = decode_single_root(_arc_scores(model.dense_arc_weights(), ids))
    deprels = []
    for d, h in enumerate(heads, start=1):
        if h == 0:
            deprels.append(model.root_deprel)
        else:
            rel = model.tagger.predict(label_features(view, h, d), exclude=(model.root_deprel,))
            deprels.append(FALLBACK_LABEL if rel == model.root_deprel else rel)
    return heads, deprels


# --- public API ----------------------------------------------------------------


def train_parser(kind: str, train: Treebank, epochs: int = 10, seed: int = 42, hash_bits: int = 22) -> ParserModel:
    """Train an SL or GB parser; identical (data, epochs, seed) give identical weights."""
    if kind not in KINDS:
        raise UsageError(f"unknown parser kind {kind!r}; expected one of {KINDS}")
    sentences = [s for s in train.sentences if s.tokens]
    if not sentences:
        raise UsageError("cannot train a parser on an empty treebank")
    rng = random.Random(seed)
    model = _train_sl(sentences, epochs, rng) if kind == SL else _train_gb(sentences, epochs, rng, hash_bits)
    model.root_deprel = _root_deprel(sentences)
    model.epochs = epochs
    model.seed = seed
    return model


def parse(model: ParserModel, s: Sentence) -> tuple[list[int], list[str]]:
    """Predict heads and deprels; the result is always a single-rooted tree."""
    if not s.tokens:
        return [], []
    return _parse_sl(model, s) if model.kind == SL else _parse_gb(model, s)


def parse_treebank(model: ParserModel, tb: Treebank) -> Treebank:
    sentences = tuple(s.with_tree(*parse(model, s)) for s in tb.sentences)
    return Treebank(sentences, tb.language, tb.name)
