"""From labeled training decisions to calibrated (human augmented) labels."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import AnnotationCorpus, DecisionKey, Key
from .errors import InsufficientPopulation
from .features import FeatureMask, featurize_corpus
from .zoo import (DEFAULT_POOL, ModelSpec, SelectionReport, TrainedModel, constant_model,
                  predict, select_model, with_seed)


@dataclass(frozen=True, eq=False)
class CalibrationRun:
    mask: FeatureMask
    selection: SelectionReport | None  # None when the constant fallback was used
    model: TrainedModel
    keys: tuple[DecisionKey, ...]
    predictions: np.ndarray  # aligned with the test corpus' decisions
    seed: int
    fallback: str | None = None

    @property
    def labels(self) -> dict[DecisionKey, int]:
        return {k: int(p) for k, p in zip(self.keys, self.predictions)}

    @property
    def model_kind(self) -> str:
        return self.model.kind


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def calibrate(train: AnnotationCorpus, test: AnnotationCorpus, mask: FeatureMask | None = None,
              specs: Sequence[ModelSpec] = DEFAULT_POOL, seed: int = 0, folds: int = 5,
              selection: str = "cv") -> CalibrationRun:
    """Fit a classifier on ``train`` profiles and relabel every ``test`` decision.

    Peer statistics are computed inside each corpus separately, so nothing
    from ``test`` reaches the training features.
    """
    mask = mask or FeatureMask.all()
    if len(train) == 0:
        raise InsufficientPopulation("empty training corpus")
    y = train.truth_array
    X_train = featurize_corpus(train, mask)
    X_test = featurize_corpus(test, mask)
    keys = tuple(d.key for d in test.decisions)

    if len(np.unique(y)) < 2:
        reason = f"training truth is all {int(y[0])}; constant predictor used"
        model = constant_model(int(y[0]), mask, len(mask.columns), reason)
        return CalibrationRun(mask, None, model, keys, predict(model, X_test), seed, reason)

    seeded = [with_seed(s, derive_seed(seed, s.seed, i)) for i, s in enumerate(specs)]
    report = select_model(seeded, X_train, y, folds=folds, seed=derive_seed(seed, 7919),
                          strategy=selection)
    preds = predict(report.model, X_test) if len(test) else np.zeros(0, dtype=np.int64)
    return CalibrationRun(mask, report, report.model, keys, preds, seed, report.fallback)


def baseline_labels(corpus: AnnotationCorpus) -> dict[DecisionKey, int]:
    """Each decision's own binary answer."""
    return {d.key: int(d.label) for d in corpus.decisions}


def majority_vote_labels(corpus: AnnotationCorpus, tie: int = 1) -> dict[Key, int]:
    """Per-sample mode of the annotators' labels; ``tie`` breaks even splits."""
    votes: dict[Key, list[int]] = defaultdict(lambda: [0, 0])
    for d in corpus.decisions:
        votes[d.sample_key][d.label] += 1
    return {k: (1 if v[1] > v[0] else 0 if v[0] > v[1] else tie) for k, v in votes.items()}
