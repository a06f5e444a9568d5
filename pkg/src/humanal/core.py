"""Annotation data model: decisions, annotators, ground truth and corpus checks."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import HumanALError, MissingTruth

KNOWN_DOMAINS = ("SM", "EM", "TM")

Key = tuple[str, str]  # (domain, sample_id)
DecisionKey = tuple[str, str, str]  # (annotator_id, domain, sample_id)


@dataclass(frozen=True)
class Decision:
    annotator_id: str
    domain: str
    sample_id: str
    label: int
    confidence: float
    decision_time: float  # seconds
    position: int  # 1-based index within the annotator's session

    @property
    def sample_key(self) -> Key:
        return (self.domain, self.sample_id)

    @property
    def key(self) -> DecisionKey:
        return (self.annotator_id, self.domain, self.sample_id)


@dataclass(frozen=True)
class AnnotatorMeta:
    annotator_id: str
    riddle_score: float
    total_session_time: float  # seconds
    # Length of the full session; None means "as many decisions as the corpus holds".
    session_length: int | None = None


@dataclass(frozen=True)
class GroundTruthEntry:
    domain: str
    sample_id: str
    truth: int


class DuplicateTruth(HumanALError):
    pass


@dataclass(frozen=True)
class AnnotationCorpus:
    decisions: tuple[Decision, ...] = ()
    annotators: Mapping[str, AnnotatorMeta] = field(default_factory=dict)
    truths: Mapping[Key, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "decisions", tuple(self.decisions))
        object.__setattr__(self, "annotators", dict(self.annotators))
        if self.truths is not None:
            object.__setattr__(self, "truths", dict(self.truths))

    def __len__(self) -> int:
        return len(self.decisions)

    @cached_property
    def domains(self) -> tuple[str, ...]:
        """Domains in order of first appearance."""
        return tuple(dict.fromkeys(d.domain for d in self.decisions))

    @cached_property
    def labels(self) -> np.ndarray:
        return np.array([d.label for d in self.decisions], dtype=np.int64)

    @cached_property
    def confidences(self) -> np.ndarray:
        return np.array([d.confidence for d in self.decisions], dtype=float)

    @cached_property
    def times(self) -> np.ndarray:
        return np.array([d.decision_time for d in self.decisions], dtype=float)

    @cached_property
    def truth_array(self) -> np.ndarray:
        """Ground truth aligned with ``decisions``; raises MissingTruth if incomplete."""
        if self.truths is None:
            raise MissingTruth({d.sample_key for d in self.decisions})
        missing = {d.sample_key for d in self.decisions if d.sample_key not in self.truths}
        if missing:
            raise MissingTruth(missing)
        return np.array([self.truths[d.sample_key] for d in self.decisions], dtype=np.int64)

    @cached_property
    def by_sample(self) -> dict[Key, list[int]]:
        return group_indices([d.sample_key for d in self.decisions])

    @cached_property
    def by_annotator(self) -> dict[str, list[int]]:
        return group_indices([d.annotator_id for d in self.decisions])

    @cached_property
    def index_of(self) -> dict[DecisionKey, int]:
        return {d.key: i for i, d in enumerate(self.decisions)}

    def session_length(self, annotator_id: str) -> int:
        meta = self.annotators.get(annotator_id)
        if meta is not None and meta.session_length is not None:
            return meta.session_length
        return self._decision_counts[annotator_id]

    @cached_property
    def _decision_counts(self) -> dict[str, int]:
        counts: dict[str, int] = defaultdict(int)
        for d in self.decisions:
            counts[d.annotator_id] += 1
        return dict(counts)

    def subset(self, indices: Iterable[int]) -> "AnnotationCorpus":
        """Corpus restricted to the given decision indices (order kept as given)."""
        decisions = [self.decisions[i] for i in indices]
        used = {d.annotator_id for d in decisions}
        annotators = {a: m for a, m in self.annotators.items() if a in used}
        truths = None
        if self.truths is not None:
            keys = {d.sample_key for d in decisions}
            truths = {k: v for k, v in self.truths.items() if k in keys}
        return AnnotationCorpus(decisions, annotators, truths)

    def where(self, predicate) -> "AnnotationCorpus":
        return self.subset(i for i, d in enumerate(self.decisions) if predicate(d))

    def for_domain(self, domain: str) -> "AnnotationCorpus":
        return self.where(lambda d: d.domain == domain)


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    kind: str
    record: str
    message: str


def _decision_ref(i: int, d: Decision) -> str:
    return f"decision[{i}] {d.annotator_id}/{d.domain}/{d.sample_id}"


def validate_corpus(corpus: AnnotationCorpus, require_contiguous: bool = True) -> list[Violation]:
    """Return every invariant violation in ``corpus``; an empty list means valid.

    ``require_contiguous=False`` relaxes the positions-are-1..n rule, which
    only holds for complete sessions (splits keep a subset of each session).
    """
    out: list[Violation] = []

    def add(kind, record, message):
        out.append(Violation(kind, record, message))

    seen: dict[DecisionKey, int] = {}
    positions: dict[str, list[int]] = defaultdict(list)
    time_sums: dict[str, float] = defaultdict(float)

    for i, d in enumerate(corpus.decisions):
        ref = _decision_ref(i, d)
        if not d.annotator_id or not d.domain or not d.sample_id:
            add("EmptyIdentifier", ref, "annotator_id, domain and sample_id must be non-empty")
        if d.annotator_id not in corpus.annotators:
            add("MissingAnnotator", ref, f"annotator {d.annotator_id!r} has no metadata")
        label_ok = d.label in (0, 1) and not isinstance(d.label, bool)
        if not label_ok:
            add("LabelNotBinary", ref, f"label {d.label!r} not in {{0, 1}}")
        conf_ok = isinstance(d.confidence, (int, float)) and 0.0 <= d.confidence <= 1.0
        if not conf_ok:
            add("ConfidenceOutOfRange", ref, f"confidence {d.confidence!r} outside [0, 1]")
        if label_ok and conf_ok and d.label != int(d.confidence >= 0.5):
            add("LabelConfidenceMismatch", ref,
                f"label {d.label} inconsistent with confidence {d.confidence}")
        if not (isinstance(d.decision_time, (int, float)) and math.isfinite(d.decision_time)
                and d.decision_time > 0):
            add("NonPositiveTime", ref, f"decision_time {d.decision_time!r} must be > 0")
        else:
            time_sums[d.annotator_id] += d.decision_time
        if not isinstance(d.position, int) or isinstance(d.position, bool) or d.position < 1:
            add("BadPosition", ref, f"position {d.position!r} must be an integer >= 1")
        else:
            positions[d.annotator_id].append(d.position)
        if d.key in seen:
            add("DuplicateDecision", ref, f"duplicates decision[{seen[d.key]}]")
        else:
            seen[d.key] = i
        if corpus.truths is not None and d.sample_key not in corpus.truths:
            add("MissingTruth", ref, "no ground-truth entry for this sample")

    for a, pos in positions.items():
        meta = corpus.annotators.get(a)
        ordered = sorted(pos)
        if len(set(ordered)) != len(ordered):
            add("DuplicatePosition", f"annotator {a}", "positions repeat within the session")
        elif require_contiguous and ordered != list(range(1, len(ordered) + 1)):
            add("NonContiguousPositions", f"annotator {a}", "positions are not the run 1..n")
        if meta is not None and meta.session_length is not None and ordered[-1] > meta.session_length:
            add("PositionBeyondSession", f"annotator {a}",
                f"position {ordered[-1]} exceeds session_length {meta.session_length}")

    for a, meta in corpus.annotators.items():
        ref = f"annotator {a}"
        if meta.annotator_id != a:
            add("AnnotatorKeyMismatch", ref, f"metadata is for {meta.annotator_id!r}")
        if not (isinstance(meta.riddle_score, (int, float)) and 0.0 <= meta.riddle_score <= 1.0):
            add("RiddleOutOfRange", ref, f"riddle_score {meta.riddle_score!r} outside [0, 1]")
        total = meta.total_session_time
        if not (isinstance(total, (int, float)) and math.isfinite(total) and total > 0):
            add("NonPositiveSessionTime", ref, f"total_session_time {total!r} must be > 0")
        elif total < time_sums.get(a, 0.0) - 1e-9:
            add("SessionTimeTooShort", ref,
                f"total_session_time {total} < summed decision times {time_sums[a]:.3f}")
        if meta.session_length is not None and meta.session_length < 1:
            add("BadSessionLength", ref, f"session_length {meta.session_length!r} must be >= 1")

    if corpus.truths is not None:
        for k, v in corpus.truths.items():
            if v not in (0, 1) or isinstance(v, bool):
                add("TruthNotBinary", f"truth {k[0]}/{k[1]}", f"truth {v!r} not in {{0, 1}}")
    return out


# ---------------------------------------------------------------- statistics


@dataclass(frozen=True)
class DomainStats:
    count: int
    mean_time: float | None
    mean_confidence: float | None
    mean_smoothed_confidence: float | None
    correlation: float | None  # Pearson(decision_time, confidence); None when undefined
    undefined_reason: str | None = None


@dataclass(frozen=True)
class SummaryStats:
    overall: DomainStats
    per_domain: dict[str, DomainStats]

    @property
    def degenerate(self) -> list[str]:
        """Groups (``"overall"`` or domain names) whose correlation is undefined."""
        names = [] if self.overall.correlation is not None or self.overall.count == 0 else ["overall"]
        return names + [d for d, s in self.per_domain.items() if s.correlation is None]

    def to_dict(self) -> dict:
        from dataclasses import asdict
        return {"overall": asdict(self.overall),
                "per_domain": {d: asdict(s) for d, s in self.per_domain.items()}}


def pearson(x: np.ndarray, y: np.ndarray) -> tuple[float | None, str | None]:
    if len(x) < 2:
        return None, "fewer than 2 decisions"
    if np.all(x == x[0]) or np.all(y == y[0]):
        return None, "zero variance"
    if len(x) == 2:  # exact, avoids centering round-off
        return (1.0 if (x[1] - x[0]) * (y[1] - y[0]) > 0 else -1.0), None
    xc = x - x.mean()
    yc = y - y.mean()
    r = float(np.dot(xc, yc) / math.sqrt(float(np.dot(xc, xc)) * float(np.dot(yc, yc))))
    return max(-1.0, min(1.0, r)), None


def _group_stats(t: np.ndarray, c: np.ndarray) -> DomainStats:
    n = len(t)
    if n == 0:
        return DomainStats(0, None, None, None, None, "no decisions")
    smoothed = np.abs(2.0 * (c - 0.5))
    r, why = pearson(t, c)
    return DomainStats(n, float(np.mean(t)), float(np.mean(c)), float(np.mean(smoothed)), r, why)


def corpus_stats(corpus: AnnotationCorpus) -> SummaryStats:
    """Per-domain and overall population statistics (Pearson on raw values)."""
    t, c = corpus.times, corpus.confidences
    dom = np.array([d.domain for d in corpus.decisions], dtype=object)
    per = {}
    for name in sorted(corpus.domains):
        sel = dom == name
        per[name] = _group_stats(t[sel], c[sel])
    return SummaryStats(_group_stats(t, c), per)


# ---------------------------------------------------------------- ground truth


def truth_map(truths: Iterable[GroundTruthEntry] | Mapping[Key, int]) -> dict[Key, int]:
    if isinstance(truths, Mapping):
        return {tuple(k): int(v) for k, v in truths.items()}
    out: dict[Key, int] = {}
    for e in truths:
        k = (e.domain, e.sample_id)
        if k in out and out[k] != e.truth:
            raise DuplicateTruth(f"conflicting truth entries for {e.domain}/{e.sample_id}")
        out[k] = int(e.truth)
    return out


def join_ground_truth(corpus: AnnotationCorpus,
                      truths: Iterable[GroundTruthEntry] | Mapping[Key, int]) -> AnnotationCorpus:
    """Attach ground truth to ``corpus``; every decision's sample must be covered."""
    table = dict(corpus.truths or {})
    table.update(truth_map(truths))
    missing = {d.sample_key for d in corpus.decisions if d.sample_key not in table}
    if missing:
        raise MissingTruth(missing)
    return AnnotationCorpus(corpus.decisions, corpus.annotators, table)


def label_from_confidence(confidence: float) -> int:
    """Binary answer implied by the confidence slider (0.5 counts as a match)."""
    return int(confidence >= 0.5)


def group_indices(keys: Sequence) -> dict:
    """Map each distinct key to the list of positions where it occurs."""
    groups: dict = defaultdict(list)
    for i, k in enumerate(keys):
        groups[k].append(i)
    return dict(groups)
