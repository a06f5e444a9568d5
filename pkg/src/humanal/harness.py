"""Cross-validation settings V1-V4, repeated runs and feature-set ablation."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import AnnotationCorpus, Key
from .errors import HumanALError, InsufficientPopulation, MissingTruth
from .features import SET_NAMES, FeatureMask
from .pipeline import calibrate, derive_seed
from .simulator import SimTruth, bayes_oracle_accuracy
from .zoo import DEFAULT_POOL, ModelSpec, spec_to_dict

FORMAT_VERSION = 1


class SplitSetting(enum.Enum):
    # value: (same_domain, same_samples, same_users)
    V1 = (True, True, False)
    V2 = (True, False, True)
    V3 = (True, False, False)
    V4 = (False, False, False)

    @property
    def same_domain(self) -> bool:
        return self.value[0]

    @property
    def same_samples(self) -> bool:
        return self.value[1]

    @property
    def same_users(self) -> bool:
        return self.value[2]

    @classmethod
    def parse(cls, text: str) -> list["SplitSetting"]:
        items = [t.strip().upper() for t in text.split(",") if t.strip()]
        if items == ["ALL"]:
            return list(cls)
        try:
            return [cls[t] for t in items]
        except KeyError as exc:
            raise ValueError(f"unknown setting {exc.args[0]!r}; expected v1..v4 or all") from None


ALL_SETTINGS = tuple(SplitSetting)


def _partition(items: Sequence, train_frac: float, rng: np.random.Generator, what: str):
    items = sorted(items)
    if len(items) < 2:
        raise InsufficientPopulation(f"need at least 2 {what} to split, have {len(items)}")
    n_train = min(max(int(round(train_frac * len(items))), 1), len(items) - 1)
    order = rng.permutation(len(items))
    train = {items[i] for i in order[:n_train]}
    return train, set(items) - train


def make_split(corpus: AnnotationCorpus, setting: SplitSetting, domain: str | None = None,
               train_frac: float = 0.7, seed: int = 0) -> tuple[AnnotationCorpus, AnnotationCorpus]:
    """Train/test corpora for one setting.

    V1-V3 work inside ``domain`` (users, samples or both split 70/30); for V4
    ``domain`` is the held-out test domain and training uses all others.
    """
    domains = corpus.domains
    if domain is None:
        if setting is SplitSetting.V4 or len(domains) != 1:
            raise ValueError(f"{setting.name}: a domain must be given (corpus has {list(domains)})")
        domain = domains[0]
    if domain not in domains:
        raise InsufficientPopulation(f"domain {domain!r} has no decisions")
    rng = np.random.default_rng(seed)

    if setting is SplitSetting.V4:
        if len(domains) < 2:
            raise InsufficientPopulation("V4 needs decisions from at least 2 domains")
        train = corpus.where(lambda d: d.domain != domain)
        test = corpus.for_domain(domain)
    else:
        sub = corpus.for_domain(domain)
        users = {d.annotator_id for d in sub.decisions}
        samples = {d.sample_id for d in sub.decisions}
        if setting is SplitSetting.V1:
            tr_u, _ = _partition(users, train_frac, rng, "annotators")
            train = sub.where(lambda d: d.annotator_id in tr_u)
            test = sub.where(lambda d: d.annotator_id not in tr_u)
        elif setting is SplitSetting.V2:
            tr_s, _ = _partition(samples, train_frac, rng, "samples")
            train = sub.where(lambda d: d.sample_id in tr_s)
            test = sub.where(lambda d: d.sample_id not in tr_s)
        else:
            tr_u, _ = _partition(users, train_frac, rng, "annotators")
            tr_s, _ = _partition(samples, train_frac, rng, "samples")
            train = sub.where(lambda d: d.annotator_id in tr_u and d.sample_id in tr_s)
            test = sub.where(lambda d: d.annotator_id not in tr_u and d.sample_id not in tr_s)
    if len(train) == 0 or len(test) == 0:
        raise InsufficientPopulation(
            f"{setting.name}/{domain}: empty {'train' if len(train) == 0 else 'test'} side")
    return train, test


def accuracy(predicted: Mapping[tuple, int], truths: Mapping[Key, int]) -> float:
    """Fraction of predictions equal to the truth of their sample.

    Keys are ``(domain, sample_id)`` or any tuple ending in those two fields,
    such as ``(annotator_id, domain, sample_id)``.
    """
    if not predicted:
        raise ValueError("no predictions to score")
    missing = {tuple(k[-2:]) for k in predicted if tuple(k[-2:]) not in truths}
    if missing:
        raise MissingTruth(missing)
    hits = sum(int(v) == truths[tuple(k[-2:])] for k, v in predicted.items())
    return hits / len(predicted)


# ---------------------------------------------------------------- experiments


@dataclass(frozen=True)
class RunResult:
    setting: str
    domain: str
    run: int
    split_seed: int
    model_seed: int
    mask: str
    baseline: float | None = None
    humanal: float | None = None
    oracle: float | None = None
    model_kind: str | None = None
    n_train: int = 0
    n_test: int = 0
    error: str | None = None


@dataclass(frozen=True)
class CellResult:
    setting: str
    domain: str
    baseline: float | None
    humanal: float | None
    improvement_pct: float | None
    oracle: float | None
    runs: int
    skipped: int


@dataclass(frozen=True)
class SettingResult:
    setting: str
    baseline: float | None
    humanal: float | None
    improvement_pct: float | None
    domains: int


@dataclass(frozen=True)
class AblationRow:
    mode: str  # "isolate" | "drop" | "full"
    feature_set: str
    mask: str
    baseline: float | None
    accuracy: float | None
    improvement_pct: float | None


@dataclass
class EvalReport:
    seed: int
    runs: int
    cells: list[CellResult] = field(default_factory=list)
    settings: list[SettingResult] = field(default_factory=list)
    run_results: list[RunResult] = field(default_factory=list)
    ablation: list[AblationRow] = field(default_factory=list)
    options: dict = field(default_factory=dict)

    def cell(self, setting, domain: str) -> CellResult:
        name = setting.name if isinstance(setting, SplitSetting) else setting
        return next(c for c in self.cells if c.setting == name and c.domain == domain)

    def setting(self, setting) -> SettingResult:
        name = setting.name if isinstance(setting, SplitSetting) else setting
        return next(s for s in self.settings if s.setting == name)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "seed": self.seed,
            "runs": self.runs,
            "options": self.options,
            "settings": [asdict(s) for s in self.settings],
            "cells": [asdict(c) for c in self.cells],
            "ablation": [asdict(a) for a in self.ablation],
            "run_results": [asdict(r) for r in self.run_results],
        }


def improvement_pct(baseline: float | None, humanal: float | None) -> float | None:
    if baseline is None or humanal is None or baseline == 0:
        return None
    return (humanal - baseline) / baseline * 100.0


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


@dataclass(frozen=True)
class _Job:
    setting: SplitSetting
    domain: str
    run: int
    split_seed: int
    model_seed: int
    mask: FeatureMask | None  # None: mask became empty after forced exclusions


def _run_row(corpus, job: _Job, specs, train_frac, folds, selection, sim_truth) -> RunResult:
    base = dict(setting=job.setting.name, domain=job.domain, run=job.run,
                split_seed=job.split_seed, model_seed=job.model_seed,
                mask=str(job.mask) if job.mask else "")
    if job.mask is None:
        return RunResult(**base, error="feature mask is empty after excluding Majority")
    try:
        train, test = make_split(corpus, job.setting, job.domain, train_frac, job.split_seed)
        cal = calibrate(train, test, job.mask, specs, job.model_seed, folds, selection)
    except HumanALError as exc:
        return RunResult(**base, error=f"{type(exc).__name__}: {exc}")
    truth = test.truth_array
    oracle = bayes_oracle_accuracy(sim_truth, test) if sim_truth is not None else None
    return RunResult(**base, baseline=float(np.mean(test.labels == truth)),
                     humanal=float(np.mean(cal.predictions == truth)), oracle=oracle,
                     model_kind=cal.model_kind, n_train=len(train), n_test=len(test))


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("HUMANAL_THREADS")
    cap = int(env) if env else 1
    return max(1, min(cap, os.cpu_count() or 1))


def _execute(corpus, jobs, specs, train_frac, folds, selection, sim_truth, workers):
    n = _workers(workers)
    args = (specs, train_frac, folds, selection, sim_truth)
    if n == 1 or len(jobs) < 2:
        return [_run_row(corpus, j, *args) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(_run_row, corpus, j, *args) for j in jobs]
        return [f.result() for f in futures]


def _setting_domains(corpus: AnnotationCorpus, domains: Sequence[str] | None) -> list[str]:
    return list(domains) if domains is not None else sorted(corpus.domains)


def run_experiment(corpus: AnnotationCorpus, settings: Sequence[SplitSetting] = ALL_SETTINGS,
                   runs: int = 20, specs: Sequence[ModelSpec] = DEFAULT_POOL,
                   base_mask: FeatureMask | None = None, seed: int = 0,
                   domains: Sequence[str] | None = None, sim_truth: SimTruth | None = None,
                   train_frac: float = 0.7, folds: int = 5, selection: str = "cv",
                   vary_split: bool = True, vary_model_seed: bool = True,
                   workers: int | None = None) -> EvalReport:
    """Baseline vs. calibrated accuracy for every (setting, domain, run).

    Each run redraws the split and the classifier seeds from ``seed`` unless
    ``vary_split`` / ``vary_model_seed`` is switched off. V1 rows never see
    the Majority features. Rows that cannot be split are recorded as skipped.
    """
    base_mask = base_mask or FeatureMask.all()
    doms = _setting_domains(corpus, domains)
    jobs = []
    for setting in settings:
        s_idx = list(SplitSetting).index(setting)
        mask: FeatureMask | None = base_mask
        if setting is SplitSetting.V1:
            rest = base_mask.sets - {"Majority"}
            mask = FeatureMask(rest) if rest else None
        for d_idx, dom in enumerate(doms):
            for r in range(runs):
                split_seed = derive_seed(seed, 0, s_idx, d_idx, r if vary_split else 0)
                model_seed = derive_seed(seed, 1, s_idx, d_idx, r if vary_model_seed else 0)
                jobs.append(_Job(setting, dom, r, split_seed, model_seed, mask))
    rows = _execute(corpus, jobs, tuple(specs), train_frac, folds, selection, sim_truth, workers)

    report = EvalReport(seed=seed, runs=runs, run_results=rows, options={
        "settings": [s.name for s in settings], "domains": doms, "mask": str(base_mask),
        "train_frac": train_frac, "folds": folds, "selection": selection,
        "vary_split": vary_split, "vary_model_seed": vary_model_seed,
        "classifiers": [spec_to_dict(s) for s in specs]})
    for setting in settings:
        cells = []
        for dom in doms:
            ok = [r for r in rows if r.setting == setting.name and r.domain == dom and r.error is None]
            b, h = _mean(r.baseline for r in ok), _mean(r.humanal for r in ok)
            o = _mean(r.oracle for r in ok)
            cell = CellResult(setting.name, dom, b, h, improvement_pct(b, h), o, len(ok), runs - len(ok))
            cells.append(cell)
        report.cells.extend(cells)
        b = _mean(c.baseline for c in cells)
        h = _mean(c.humanal for c in cells)
        report.settings.append(SettingResult(setting.name, b, h, improvement_pct(b, h),
                                             sum(c.runs > 0 for c in cells)))
    return report


def ablation(corpus: AnnotationCorpus, mode: str = "drop", setting: SplitSetting = SplitSetting.V4,
             runs: int = 20, specs: Sequence[ModelSpec] = DEFAULT_POOL, seed: int = 0,
             feature_sets: Sequence[str] = SET_NAMES, include_full: bool = True,
             **kwargs) -> list[AblationRow]:
    """Accuracy with each feature set isolated (``mode="isolate"``) or dropped.

    Every mask sees the same splits and classifier seeds, so rows are paired.
    Accuracy and baseline are averaged over domains and runs.
    """
    if mode not in ("isolate", "drop"):
        raise ValueError(f"mode must be 'isolate' or 'drop', got {mode!r}")
    full = FeatureMask.all()
    masks = []
    if include_full:
        masks.append(("full", "all", full))
    for name in feature_sets:
        m = FeatureMask.of(name) if mode == "isolate" else full.without(name)
        masks.append((mode, name, m))
    out = []
    for row_mode, name, m in masks:
        rep = run_experiment(corpus, [setting], runs, specs, m, seed, **kwargs)
        s = rep.settings[0]
        out.append(AblationRow(row_mode, name, str(m), s.baseline, s.humanal,
                               improvement_pct(s.baseline, s.humanal)))
    return out


def summarize(report: EvalReport) -> str:
    lines = [f"{'setting':<8}{'baseline':>10}{'HumanAL':>10}{'impr %':>9}"]
    for s in report.settings:
        fmt = lambda v: "   n/a" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.3f}"
        imp = "n/a" if s.improvement_pct is None else f"{s.improvement_pct:+.1f}"
        lines.append(f"{s.setting:<8}{fmt(s.baseline):>10}{fmt(s.humanal):>10}{imp:>9}")
    return "\n".join(lines)
