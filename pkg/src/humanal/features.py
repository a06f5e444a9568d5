"""Behavioral profile of a single decision.

Every decision becomes a fixed-order vector of 13 slots, grouped into five
named feature sets. Slots that are masked out, or that cannot be computed
(too few peers, zero variance), hold ``ABSENT`` (NaN) rather than zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Sequence

import numpy as np

from .core import AnnotationCorpus, Decision
from .errors import DomainError

ABSENT = float("nan")

SLOTS = (
    "user_label",
    "reported_confidence",
    "smoothed_confidence",
    "decision_time",
    "external_time_z",
    "internal_time_z",
    "overall_session_time",
    "position_norm",
    "riddle_prior",
    "peer_majority_label",
    "peer_agreement",
    "peer_mean_confidence",
    "peer_mean_smoothed_confidence",
)
SLOT_INDEX = {name: i for i, name in enumerate(SLOTS)}

FEATURE_SETS: dict[str, tuple[str, ...]] = {
    "UserDecision": ("user_label",),
    "Confidence": ("reported_confidence", "smoothed_confidence"),
    "Time": ("decision_time", "external_time_z", "internal_time_z",
             "overall_session_time", "position_norm"),
    "Majority": ("peer_majority_label", "peer_agreement",
                 "peer_mean_confidence", "peer_mean_smoothed_confidence"),
    "Priors": ("riddle_prior",),
}
SET_NAMES = tuple(FEATURE_SETS)


@dataclass(frozen=True)
class FeatureMask:
    """Non-empty set of enabled feature-set names."""

    sets: frozenset

    def __post_init__(self):
        sets = frozenset(self.sets)
        unknown = sets - set(SET_NAMES)
        if unknown:
            raise ValueError(f"unknown feature set(s): {sorted(unknown)}; expected {SET_NAMES}")
        if not sets:
            raise ValueError("feature mask must enable at least one feature set")
        object.__setattr__(self, "sets", sets)

    @classmethod
    def of(cls, *names: str) -> "FeatureMask":
        return cls(frozenset(names))

    @classmethod
    def all(cls) -> "FeatureMask":
        return cls(frozenset(SET_NAMES))

    @classmethod
    def parse(cls, text: str | Iterable[str]) -> "FeatureMask":
        """Parse ``"Time,Majority"`` (case-insensitive) or ``"all"``."""
        items = text.split(",") if isinstance(text, str) else list(text)
        lookup = {n.lower(): n for n in SET_NAMES}
        names = set()
        for raw in items:
            item = raw.strip().lower()
            if not item:
                continue
            if item == "all":
                names.update(SET_NAMES)
            elif item in lookup:
                names.add(lookup[item])
            else:
                raise ValueError(f"unknown feature set {raw.strip()!r}; expected one of {SET_NAMES}")
        return cls(frozenset(names))

    def without(self, *names: str) -> "FeatureMask":
        return FeatureMask(self.sets - set(names))

    def __contains__(self, name: str) -> bool:
        return name in self.sets

    @property
    def names(self) -> tuple[str, ...]:
        """Enabled set names in canonical order."""
        return tuple(n for n in SET_NAMES if n in self.sets)

    @property
    def slots(self) -> tuple[str, ...]:
        enabled = {s for n in self.sets for s in FEATURE_SETS[n]}
        return tuple(s for s in SLOTS if s in enabled)

    @property
    def columns(self) -> np.ndarray:
        return np.array([SLOT_INDEX[s] for s in self.slots], dtype=np.int64)

    def __str__(self) -> str:
        return ",".join(self.names)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    mask: FeatureMask

    def __getitem__(self, slot: str) -> float:
        return float(self.values[SLOT_INDEX[slot]])

    def present(self, slot: str) -> bool:
        return not math.isnan(self[slot])

    def as_dict(self) -> dict[str, float]:
        return {s: float(v) for s, v in zip(SLOTS, self.values)}


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray  # (n_decisions, len(SLOTS)), NaN = absent
    mask: FeatureMask

    def __len__(self) -> int:
        return self.values.shape[0]

    def row(self, i: int) -> FeatureVector:
        return FeatureVector(self.values[i].copy(), self.mask)

    def enabled(self) -> np.ndarray:
        return self.values[:, self.mask.columns]

    def take(self, rows) -> "FeatureMatrix":
        return FeatureMatrix(self.values[rows], self.mask)


# ---------------------------------------------------------------- primitives


def smoothed_confidence(c: float) -> float:
    """Fold the [0, 1] confidence scale at 0.5 into a decisiveness score.

    The fold is evaluated on the shortest decimal form of ``c`` and rounded
    once, so 0.7 maps to exactly 0.4 rather than 0.3999999999999999.
    """
    if not (0.0 <= c <= 1.0):
        raise DomainError(f"confidence {c!r} outside [0, 1]")
    return float(abs(2 * Decimal(repr(float(c))) - 1))


def smoothed_confidences(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.size and not (np.all(c >= 0.0) and np.all(c <= 1.0)):
        raise DomainError("confidence outside [0, 1]")
    # few distinct slider values in practice: fold each once
    uniq, inverse = np.unique(c, return_inverse=True)
    folded = np.array([smoothed_confidence(v) for v in uniq.tolist()], dtype=float)
    return folded[inverse].reshape(c.shape)


def _z(t: float, others: Sequence[float]) -> float:
    others = np.asarray(others, dtype=float)
    if others.size < 2 or others.max() == others.min():
        return ABSENT
    return float((t - others.mean()) / others.std())


def _time_of(decision) -> float:
    return decision.decision_time if isinstance(decision, Decision) else float(decision)


def external_time_z(decision: Decision | float, peer_times: Sequence[float]) -> float:
    """Decision time z-scored against other annotators' times on the same sample.

    Population standard deviation; ABSENT with fewer than two peers or when
    every peer time is identical.
    """
    return _z(_time_of(decision), peer_times)


def internal_time_z(decision: Decision | float, own_other_times: Sequence[float]) -> float:
    """Decision time z-scored against the same annotator's other decisions."""
    return _z(_time_of(decision), own_other_times)


def majority_features(decision: Decision | None,
                      peer_decisions: Iterable[Decision]) -> tuple[float, float, float, float]:
    """(majority label, agreement, mean confidence, mean smoothed confidence) of the peers.

    Peers from the decision's own annotator are ignored. Ties give 0.5 for
    both the majority label and the agreement.
    """
    own = decision.annotator_id if decision is not None else None
    peers = [p for p in peer_decisions if p.annotator_id != own]
    if not peers:
        return (ABSENT, ABSENT, ABSENT, ABSENT)
    ones = sum(p.label for p in peers)
    zeros = len(peers) - ones
    if ones > zeros:
        majority, agreement = 1.0, ones / len(peers)
    elif zeros > ones:
        majority, agreement = 0.0, zeros / len(peers)
    else:
        majority, agreement = 0.5, 0.5
    conf = np.array([p.confidence for p in peers], dtype=float)
    return (majority, agreement, float(conf.mean()), float(smoothed_confidences(conf).mean()))


# ---------------------------------------------------------------- profiles


def _resolve(decision, corpus: AnnotationCorpus) -> int:
    if isinstance(decision, (int, np.integer)):
        return int(decision)
    try:
        return corpus.index_of[decision.key]
    except KeyError:
        raise ValueError(f"decision {decision.key} is not part of the corpus") from None


def build_profile(decision: Decision | int, corpus: AnnotationCorpus,
                  mask: FeatureMask | None = None) -> FeatureVector:
    """Behavioral profile of one decision, computed against ``corpus``.

    ``decision`` may be a Decision from the corpus or its index.
    """
    mask = mask or FeatureMask.all()
    i = _resolve(decision, corpus)
    d = corpus.decisions[i]
    v = np.full(len(SLOTS), ABSENT)

    def put(slot, value):
        v[SLOT_INDEX[slot]] = value

    if "UserDecision" in mask:
        put("user_label", float(d.label))
    if "Confidence" in mask:
        put("reported_confidence", d.confidence)
        put("smoothed_confidence", smoothed_confidence(d.confidence))
    if "Time" in mask:
        meta = corpus.annotators[d.annotator_id]
        peers = [corpus.decisions[j] for j in corpus.by_sample[d.sample_key]
                 if corpus.decisions[j].annotator_id != d.annotator_id]
        own = [corpus.decisions[j].decision_time for j in corpus.by_annotator[d.annotator_id] if j != i]
        put("decision_time", d.decision_time)
        put("external_time_z", external_time_z(d, [p.decision_time for p in peers]))
        put("internal_time_z", internal_time_z(d, own))
        put("overall_session_time", meta.total_session_time)
        put("position_norm", d.position / corpus.session_length(d.annotator_id))
    if "Priors" in mask:
        put("riddle_prior", corpus.annotators[d.annotator_id].riddle_score)
    if "Majority" in mask:
        peers = [corpus.decisions[j] for j in corpus.by_sample[d.sample_key]]
        for slot, value in zip(FEATURE_SETS["Majority"], majority_features(d, peers)):
            put(slot, value)
    return FeatureVector(v, mask)


def _leave_one_out(values: np.ndarray) -> np.ndarray:
    """Row i holds ``values`` with entry i removed, shape (g, g-1)."""
    g = len(values)
    keep = ~np.eye(g, dtype=bool)
    return np.broadcast_to(values, (g, g))[keep].reshape(g, g - 1)


def _loo_z(values: np.ndarray) -> np.ndarray:
    g = len(values)
    if g < 3:
        return np.full(g, ABSENT)
    others = _leave_one_out(values)
    mean = others.mean(axis=1)
    std = others.std(axis=1)
    flat = others.max(axis=1) == others.min(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (values - mean) / std
    z[flat] = ABSENT
    return z


def featurize_corpus(corpus: AnnotationCorpus, mask: FeatureMask | None = None) -> FeatureMatrix:
    """Feature matrix whose row i is the profile of ``corpus.decisions[i]``.

    Vectorized over groups; agrees with :func:`build_profile` row by row.
    """
    mask = mask or FeatureMask.all()
    n = len(corpus)
    X = np.full((n, len(SLOTS)), ABSENT)
    if n == 0:
        return FeatureMatrix(X, mask)
    col = SLOT_INDEX
    labels = corpus.labels.astype(float)
    conf = corpus.confidences
    times = corpus.times

    if "UserDecision" in mask:
        X[:, col["user_label"]] = labels
    if "Confidence" in mask:
        X[:, col["reported_confidence"]] = conf
        X[:, col["smoothed_confidence"]] = smoothed_confidences(conf)
    if "Time" in mask or "Priors" in mask:
        for a, idx in corpus.by_annotator.items():
            idx = np.asarray(idx)
            meta = corpus.annotators[a]
            if "Priors" in mask:
                X[idx, col["riddle_prior"]] = meta.riddle_score
            if "Time" in mask:
                X[idx, col["overall_session_time"]] = meta.total_session_time
                pos = np.array([corpus.decisions[j].position for j in idx], dtype=float)
                X[idx, col["position_norm"]] = pos / corpus.session_length(a)
                X[idx, col["internal_time_z"]] = _loo_z(times[idx])
    if "Time" in mask:
        X[:, col["decision_time"]] = times
    if "Time" in mask or "Majority" in mask:
        smooth = smoothed_confidences(conf)
        for idx in corpus.by_sample.values():
            idx = np.asarray(idx)
            g = len(idx)
            if "Time" in mask:
                X[idx, col["external_time_z"]] = _loo_z(times[idx])
            if "Majority" in mask and g > 1:
                ones = labels[idx].sum() - labels[idx]
                zeros = (g - 1) - ones
                maj = np.where(ones > zeros, 1.0, np.where(zeros > ones, 0.0, 0.5))
                agree = np.where(ones == zeros, 0.5, np.maximum(ones, zeros) / (g - 1))
                X[idx, col["peer_majority_label"]] = maj
                X[idx, col["peer_agreement"]] = agree
                X[idx, col["peer_mean_confidence"]] = _leave_one_out(conf[idx]).mean(axis=1)
                X[idx, col["peer_mean_smoothed_confidence"]] = _leave_one_out(smooth[idx]).mean(axis=1)
    return FeatureMatrix(X, mask)
