"""Averaged multi-class perceptron over string features."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Sequence


class AveragedPerceptron:
    """Multi-class perceptron with lazily accumulated weight averages.

    ``labels`` fixes the label inventory and its order; on equal scores the
    earlier label wins, so callers should list labels by decreasing training
    frequency.
    """

    def __init__(self, labels: Sequence[str]):
        self.labels = list(labels)
        self._order = {label: i for i, label in enumerate(self.labels)}
        self.weights: dict[str, dict[str, float]] = {}
        self._totals: dict[tuple[str, str], float] = defaultdict(float)
        self._stamps: dict[tuple[str, str], int] = defaultdict(int)
        self.instances = 0
        self.averaged = False

    def scores(self, features: Iterable[str]) -> dict[str, float]:
        scores = dict.fromkeys(self.labels, 0.0)
        for f in features:
            for label, w in self.weights.get(f, {}).items():
                scores[label] += w
        return scores

    def predict(self, features: Iterable[str], exclude: Iterable[str] = ()) -> str:
        scores = self.scores(features)
        excluded = set(exclude)
        candidates = [l for l in self.labels if l not in excluded] or self.labels
        return max(candidates, key=lambda l: (scores[l], -self._order[l]))

    def _bump(self, f: str, label: str, delta: float) -> None:
        key = (f, label)
        row = self.weights.setdefault(f, {})
        w = row.get(label, 0.0)
        self._totals[key] += (self.instances - self._stamps[key]) * w
        self._stamps[key] = self.instances
        row[label] = w + delta

    def update(self, truth: str, guess: str, features: Sequence[str]) -> None:
        self.instances += 1
        if truth == guess:
            return
        for f in features:
            self._bump(f, truth, 1.0)
            self._bump(f, guess, -1.0)

    def average(self) -> None:
        if self.averaged:
            return
        for f, row in self.weights.items():
            new_row = {}
            for label, w in row.items():
                key = (f, label)
                total = self._totals[key] + (self.instances - self._stamps[key]) * w
                avg = total / self.instances if self.instances else w
                if avg:
                    new_row[label] = avg
            row.clear()
            row.update(new_row)
        self.weights = {f: row for f, row in self.weights.items() if row}
        self._totals.clear()
        self._stamps.clear()
        self.averaged = True

    def to_dict(self) -> dict:
        return {"labels": self.labels, "weights": self.weights}

    @classmethod
    def from_dict(cls, data: dict) -> "AveragedPerceptron":
        model = cls(data["labels"])
        model.weights = {f: dict(row) for f, row in data["weights"].items()}
        model.averaged = True
        return model
