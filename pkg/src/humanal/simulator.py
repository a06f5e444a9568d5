"""Synthetic annotator populations with known generative parameters.

Each domain has a pool of binary samples (truth + difficulty). Each annotator
works through 30-50 of them in random order. Per decision:

* correctness ~ Bernoulli(sigmoid(logit(skill) - difficulty))
* smoothed confidence ~ Beta around a mean that rises for correct answers
  (scaled by ``informativeness``) and for match answers (``match_confidence_shift``)
* the slider value (0..100) is the smoothed confidence unfolded on the side
  of the given label
* decision time = lognormal(median, sigma) * (1 + coupling * smoothed)
  * (1 + fatigue * position / session length), floored at 1 s, stored in ms.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping

import numpy as np
from scipy import stats
from scipy.special import expit

from .core import AnnotationCorpus, AnnotatorMeta, Decision, Key, corpus_stats
from .errors import ConfigError


@dataclass(frozen=True)
class DomainProfile:
    name: str
    match_rate: float
    skill_alpha: float
    skill_beta: float
    difficulty_mean: float
    difficulty_sd: float
    time_median: float  # seconds
    confidence_base: float  # mean smoothed confidence before the shifts
    match_confidence_shift: float
    n_annotators: int = 100
    min_decisions: int = 30
    max_decisions: int = 50
    task_pool_size: int = 60
    skill_fixed: float | None = None


DEFAULT_DOMAINS = (
    DomainProfile("SM", match_rate=0.25, skill_alpha=6.0, skill_beta=2.6,
                  difficulty_mean=0.35, difficulty_sd=1.3, time_median=15.4,
                  confidence_base=0.42, match_confidence_shift=0.08),
    DomainProfile("EM", match_rate=0.55, skill_alpha=9.0, skill_beta=1.6,
                  difficulty_mean=0.1, difficulty_sd=1.2, time_median=10.9,
                  confidence_base=0.48, match_confidence_shift=0.14),
    DomainProfile("TM", match_rate=0.68, skill_alpha=9.0, skill_beta=1.8,
                  difficulty_mean=0.1, difficulty_sd=1.2, time_median=13.3,
                  confidence_base=0.5, match_confidence_shift=0.17),
)


@dataclass(frozen=True)
class Target:
    group: str  # "overall" or a domain name
    statistic: str  # "mean_time" | "mean_confidence" | "correlation" | "count"
    value: float
    tolerance: float


DEFAULT_TARGETS = (
    Target("overall", "mean_time", 11.5, 1.0),
    Target("overall", "mean_confidence", 0.59, 0.03),
    Target("overall", "correlation", -0.103, 0.03),
    Target("overall", "count", 12000, 2400),
    Target("SM", "mean_time", 14.5, 1.0),
    Target("SM", "mean_confidence", 0.48, 0.03),
    Target("EM", "mean_time", 10.0, 1.0),
    Target("EM", "mean_confidence", 0.60, 0.03),
    Target("TM", "mean_time", 12.0, 1.0),
    Target("TM", "mean_confidence", 0.65, 0.03),
)


@dataclass(frozen=True)
class SimConfig:
    domains: tuple[DomainProfile, ...] = DEFAULT_DOMAINS
    informativeness: float = 0.8  # how strongly confidence tracks correctness, in [0, 1]
    confidence_gap: float = 0.22  # half-gap of mean smoothed confidence, correct vs wrong, at full informativeness
    confidence_concentration: float = 5.0
    time_sigma: float = 0.45
    time_coupling: float = -0.2  # <= 0: decisive answers are faster
    fatigue: float = -0.15  # relative speed-up by the end of the session
    riddle_correlation: float = 0.3
    n_riddles: int = 10
    skill_floor: float = 0.0
    overhead_mean: float = 300.0  # instructions + riddles, seconds
    overhead_sd: float = 60.0
    targets: tuple[Target, ...] = DEFAULT_TARGETS

    def validate(self) -> None:
        if not self.domains:
            raise ConfigError("simulator needs at least one domain")
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate domain names: {names}")
        unit = {"informativeness": self.informativeness, "skill_floor": self.skill_floor}
        for k, v in unit.items():
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{k} must lie in [0, 1], got {v}")
        if not -1.0 <= self.riddle_correlation <= 1.0:
            raise ConfigError("riddle_correlation must lie in [-1, 1]")
        if self.time_coupling > 0 or self.time_coupling <= -1.0:
            raise ConfigError("time_coupling must lie in (-1, 0]")
        if self.fatigue <= -1.0:
            raise ConfigError("fatigue must be > -1")
        positive = {"confidence_concentration": self.confidence_concentration,
                    "n_riddles": self.n_riddles, "overhead_mean": self.overhead_mean}
        for k, v in positive.items():
            if not v > 0:
                raise ConfigError(f"{k} must be positive, got {v}")
        if self.time_sigma < 0 or self.overhead_sd < 0 or self.confidence_gap < 0:
            raise ConfigError("time_sigma, overhead_sd and confidence_gap must be >= 0")
        for d in self.domains:
            if not 0.0 <= d.match_rate <= 1.0:
                raise ConfigError(f"{d.name}: match_rate must lie in [0, 1]")
            if not (d.skill_alpha > 0 and d.skill_beta > 0):
                raise ConfigError(f"{d.name}: Beta parameters must be positive")
            if d.skill_fixed is not None and not 0.0 <= d.skill_fixed <= 1.0:
                raise ConfigError(f"{d.name}: skill_fixed must lie in [0, 1]")
            if d.difficulty_sd < 0 or d.time_median <= 0:
                raise ConfigError(f"{d.name}: difficulty_sd >= 0 and time_median > 0 required")
            if not 0.0 < d.confidence_base < 1.0:
                raise ConfigError(f"{d.name}: confidence_base must lie in (0, 1)")
            if not 1 <= d.min_decisions <= d.max_decisions <= d.task_pool_size:
                raise ConfigError(f"{d.name}: need 1 <= min_decisions <= max_decisions <= task_pool_size")
            if d.n_annotators < 1:
                raise ConfigError(f"{d.name}: n_annotators must be >= 1")


@dataclass(frozen=True, eq=False)
class SimTruth:
    """Generator parameters behind a simulated corpus."""

    seed: int
    config: SimConfig
    skills: dict[str, float]
    sample_truths: dict[Key, int]
    difficulties: dict[Key, float]
    correct: np.ndarray  # aligned with the generated corpus' decisions

    def p_correct(self, corpus: AnnotationCorpus) -> np.ndarray:
        skill = np.array([self.skills[d.annotator_id] for d in corpus.decisions])
        diff = np.array([self.difficulties[d.sample_key] for d in corpus.decisions])
        return correct_probability(skill, diff)

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "seed": self.seed,
            "config": config_to_dict(self.config),
            "skills": self.skills,
            "samples": [{"domain": k[0], "sample_id": k[1], "truth": self.sample_truths[k],
                         "difficulty": self.difficulties[k]} for k in self.sample_truths],
            "correct": self.correct.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimTruth":
        samples = d["samples"]
        return cls(
            seed=int(d["seed"]),
            config=config_from_dict(d["config"]),
            skills={k: float(v) for k, v in d["skills"].items()},
            sample_truths={(s["domain"], s["sample_id"]): int(s["truth"]) for s in samples},
            difficulties={(s["domain"], s["sample_id"]): float(s["difficulty"]) for s in samples},
            correct=np.asarray(d["correct"], dtype=bool),
        )


def correct_probability(skill, difficulty):
    with np.errstate(divide="ignore"):
        logit = np.log(skill) - np.log1p(-np.asarray(skill, dtype=float))
    return expit(logit - difficulty)


def confidence_mean(config: SimConfig, domain: DomainProfile, correct, label):
    """Mean of the smoothed-confidence Beta for each (correct, label) pair."""
    sc = np.where(correct, 1.0, -1.0)
    sl = np.where(label == 1, 1.0, -1.0)
    mu = (domain.confidence_base + config.informativeness * config.confidence_gap * sc
          + domain.match_confidence_shift * sl)
    return np.clip(mu, 0.02, 0.98)


def slider_value(smoothed, label):
    """Integer 0..100 slider position for a smoothed confidence and a label."""
    up = np.floor(50.0 + 50.0 * smoothed + 0.5)
    down = np.minimum(49.0, np.floor(50.0 - 50.0 * smoothed + 0.5))
    return np.where(label == 1, up, down).astype(np.int64)


def slider_bin(value, label):
    """Range of smoothed confidences that land on ``value`` given ``label``."""
    value = np.asarray(value, dtype=float)
    lo_up, hi_up = (value - 50.5) / 50.0, (value - 49.5) / 50.0
    lo_dn, hi_dn = (49.5 - value) / 50.0, (50.5 - value) / 50.0
    lo_dn = np.where(value == 49, 0.0, lo_dn)
    lo = np.where(label == 1, lo_up, lo_dn)
    hi = np.where(label == 1, hi_up, hi_dn)
    return np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)


def generate_corpus(config: SimConfig | None = None, seed: int = 0) -> tuple[AnnotationCorpus, SimTruth]:
    """Draw a corpus with ground truth, plus the parameters that produced it."""
    config = config or SimConfig()
    config.validate()
    root = np.random.SeedSequence(seed)
    decisions: list[Decision] = []
    annotators: dict[str, AnnotatorMeta] = {}
    truths: dict[Key, int] = {}
    difficulties: dict[Key, float] = {}
    skills: dict[str, float] = {}
    correct_all: list[np.ndarray] = []

    for dom, dom_seq in zip(config.domains, root.spawn(len(config.domains))):
        sample_seq, annot_seq = dom_seq.spawn(2)
        rng_s = np.random.default_rng(sample_seq)
        P = dom.task_pool_size
        truth = (rng_s.random(P) < dom.match_rate).astype(np.int64)
        difficulty = rng_s.normal(dom.difficulty_mean, dom.difficulty_sd, P)
        sample_ids = [f"{dom.name.lower()}-{j:04d}" for j in range(P)]
        for j, sid in enumerate(sample_ids):
            truths[(dom.name, sid)] = int(truth[j])
            difficulties[(dom.name, sid)] = float(difficulty[j])

        for a, a_seq in enumerate(annot_seq.spawn(dom.n_annotators)):
            rng = np.random.default_rng(a_seq)
            aid = f"{dom.name.lower()}-a{a:03d}"
            if dom.skill_fixed is not None:
                skill, skill_q = dom.skill_fixed, 0.5
            else:
                skill = float(rng.beta(dom.skill_alpha, dom.skill_beta))
                skill_q = float(stats.beta.cdf(skill, dom.skill_alpha, dom.skill_beta))
            skill = max(skill, config.skill_floor)
            rho = config.riddle_correlation
            z = rho * stats.norm.ppf(min(max(skill_q, 1e-12), 1 - 1e-12)) \
                + math.sqrt(1.0 - rho * rho) * rng.standard_normal()
            riddle = round(float(stats.norm.cdf(z)) * config.n_riddles) / config.n_riddles

            n = int(rng.integers(dom.min_decisions, dom.max_decisions + 1))
            picks = rng.choice(P, n, replace=False)
            p = correct_probability(skill, difficulty[picks])
            correct = rng.random(n) < p
            labels = np.where(correct, truth[picks], 1 - truth[picks])
            mu = confidence_mean(config, dom, correct, labels)
            kappa = config.confidence_concentration
            smooth_raw = rng.beta(mu * kappa, (1.0 - mu) * kappa)
            slider = slider_value(smooth_raw, labels)
            conf = slider / 100.0
            smooth = np.where(conf >= 0.5, 2.0 * (conf - 0.5), 2.0 * (0.5 - conf))
            positions = np.arange(1, n + 1)
            base = dom.time_median * np.exp(config.time_sigma * rng.standard_normal(n))
            t = base * (1.0 + config.time_coupling * smooth) * (1.0 + config.fatigue * positions / n)
            t_ms = np.maximum(1000, np.rint(t * 1000.0)).astype(np.int64)
            overhead = max(30.0, rng.normal(config.overhead_mean, config.overhead_sd))
            total_ms = int(t_ms.sum()) + int(round(overhead * 1000.0))

            skills[aid] = float(skill)
            annotators[aid] = AnnotatorMeta(aid, riddle, total_ms / 1000.0, n)
            for k in range(n):
                decisions.append(Decision(aid, dom.name, sample_ids[picks[k]], int(labels[k]),
                                          float(conf[k]), int(t_ms[k]) / 1000.0, int(positions[k])))
            correct_all.append(correct)

    corpus = AnnotationCorpus(decisions, annotators, truths)
    correct = np.concatenate(correct_all) if correct_all else np.zeros(0, dtype=bool)
    return corpus, SimTruth(seed, config, skills, truths, difficulties, correct)


# ---------------------------------------------------------------- targets


@dataclass(frozen=True)
class TargetCheck:
    group: str
    statistic: str
    target: float
    observed: float | None
    delta: float | None
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class TargetReport:
    checks: tuple[TargetCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def observed_statistics(corpus: AnnotationCorpus) -> dict[str, dict[str, float | None]]:
    s = corpus_stats(corpus)
    out = {}
    for group, ds in [("overall", s.overall), *s.per_domain.items()]:
        out[group] = {"mean_time": ds.mean_time, "mean_confidence": ds.mean_confidence,
                      "mean_smoothed_confidence": ds.mean_smoothed_confidence,
                      "correlation": ds.correlation, "count": float(ds.count)}
    return out


def verify_targets(corpus_or_stats, targets=DEFAULT_TARGETS) -> TargetReport:
    """Compare observed statistics against ``targets``.

    Accepts a corpus, or a ``{group: {statistic: value}}`` mapping (for
    example seed-averaged statistics).
    """
    if isinstance(corpus_or_stats, AnnotationCorpus):
        observed = observed_statistics(corpus_or_stats)
    else:
        observed = corpus_or_stats
    checks = []
    for t in targets:
        value = observed.get(t.group, {}).get(t.statistic)
        if value is None:
            checks.append(TargetCheck(t.group, t.statistic, t.value, None, None, t.tolerance, False))
            continue
        delta = float(value) - t.value
        checks.append(TargetCheck(t.group, t.statistic, t.value, float(value), delta, t.tolerance,
                                  abs(delta) <= t.tolerance))
    return TargetReport(tuple(checks))


def mean_statistics(corpora) -> dict[str, dict[str, float]]:
    """Average :func:`observed_statistics` over several corpora."""
    per = [observed_statistics(c) for c in corpora]
    out: dict[str, dict[str, float]] = {}
    for group in per[0]:
        out[group] = {}
        for stat in per[0][group]:
            vals = [p[group][stat] for p in per if p.get(group, {}).get(stat) is not None]
            out[group][stat] = float(np.mean(vals)) if vals else None
    return out


# ---------------------------------------------------------------- oracle


def bayes_posterior_log_odds(sim_truth: SimTruth, corpus: AnnotationCorpus) -> dict[Key, float]:
    """Log posterior odds of a match per sample, from every decision in ``corpus``
    and the generator's true parameters."""
    config = sim_truth.config
    profiles = {d.name: d for d in config.domains}
    p = np.clip(sim_truth.p_correct(corpus), 1e-15, 1.0 - 1e-15)
    labels = corpus.labels
    slider = np.rint(corpus.confidences * 100.0)
    lo, hi = slider_bin(slider, labels)
    kappa = config.confidence_concentration
    domains = np.array([d.domain for d in corpus.decisions], dtype=object)

    loglik = np.zeros((len(corpus), 2))
    for y in (0, 1):
        correct = labels == y
        ll = np.where(correct, np.log(p), np.log1p(-p))
        for name, prof in profiles.items():
            sel = domains == name
            if not sel.any():
                continue
            mu = confidence_mean(config, prof, correct[sel], labels[sel])
            a, b = mu * kappa, (1.0 - mu) * kappa
            mass = stats.beta.cdf(hi[sel], a, b) - stats.beta.cdf(lo[sel], a, b)
            ll[sel] += np.log(np.maximum(mass, 1e-300))
        loglik[:, y] = ll

    out = {}
    for key, idx in corpus.by_sample.items():
        rate = min(max(profiles[key[0]].match_rate, 1e-15), 1 - 1e-15)
        prior = math.log(rate) - math.log1p(-rate)
        out[key] = prior + float(loglik[idx, 1].sum() - loglik[idx, 0].sum())
    return out


def bayes_oracle_labels(sim_truth: SimTruth, corpus: AnnotationCorpus) -> dict[Key, int]:
    return {k: int(v >= 0.0) for k, v in bayes_posterior_log_odds(sim_truth, corpus).items()}


def bayes_oracle_accuracy(sim_truth: SimTruth, corpus: AnnotationCorpus | None = None) -> float:
    """Accuracy, over the decisions of ``corpus``, of the Bayes-optimal label
    given the true generator parameters and every observation in ``corpus``.

    Without ``corpus`` the full simulated corpus is regenerated from the seed.
    """
    if corpus is None:
        corpus, _ = generate_corpus(sim_truth.config, sim_truth.seed)
    if len(corpus) == 0:
        return float("nan")
    labels = bayes_oracle_labels(sim_truth, corpus)
    pred = np.array([labels[d.sample_key] for d in corpus.decisions])
    truth = np.array([sim_truth.sample_truths[d.sample_key] for d in corpus.decisions])
    return float(np.mean(pred == truth))


# ---------------------------------------------------------------- (de)serialization


def config_to_dict(config: SimConfig) -> dict:
    d = asdict(config)
    d["domains"] = [asdict(x) for x in config.domains]
    d["targets"] = [asdict(x) for x in config.targets]
    return d


def config_from_dict(d: Mapping | None) -> SimConfig:
    """Build a SimConfig from a (possibly partial) mapping.

    ``domains`` entries may name a default domain and override some fields,
    e.g. ``{"name": "SM", "n_annotators": 20}``.
    """
    d = dict(d or {})
    known = {f for f in SimConfig.__dataclass_fields__}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown simulator option(s): {sorted(unknown)}")
    defaults = {p.name: p for p in DEFAULT_DOMAINS}
    if "domains" in d:
        doms = []
        for item in d["domains"]:
            item = dict(item)
            base = defaults.get(item.get("name"))
            try:
                doms.append(replace(base, **item) if base else DomainProfile(**item))
            except TypeError as exc:
                raise ConfigError(f"bad simulator domain entry {item}: {exc}") from None
        d["domains"] = tuple(doms)
    if "targets" in d:
        d["targets"] = tuple(Target(**t) for t in d["targets"])
    config = SimConfig(**d)
    config.validate()
    return config
