import math

import numpy as np
import pytest

from humanal.core import AnnotationCorpus, AnnotatorMeta, Decision
from humanal.errors import InsufficientPopulation, MissingTruth
from humanal.features import FeatureMask
from humanal.harness import (ALL_SETTINGS, SplitSetting, ablation, accuracy, improvement_pct,
                             make_split, run_experiment, summarize)
from humanal.simulator import generate_corpus
from humanal.zoo import Constant, DecisionTree, GaussianNB, MajorityClass

from oracles import small_config

FAST_POOL = (GaussianNB(), DecisionTree())


def _sets(corpus):
    return ({d.annotator_id for d in corpus.decisions}, {d.sample_key for d in corpus.decisions},
            set(corpus.domains))


@pytest.mark.parametrize("setting", ALL_SETTINGS, ids=lambda s: s.name)
def test_split_respects_flags(small_sim, setting):
    corpus, _ = small_sim
    train, test = make_split(corpus, setting, "EM", seed=3)
    tu, ts, td = _sets(train)
    vu, vs, vd = _sets(test)
    assert vd == {"EM"}
    assert (td == vd) == setting.same_domain
    if not setting.same_users:
        assert not tu & vu
    if not setting.same_samples:
        assert not ts & vs
    if setting is SplitSetting.V4:
        assert len(test) == len(corpus.for_domain("EM"))
        assert len(train) + len(test) == len(corpus)


def test_split_fraction_of_users(small_sim):
    train, test = make_split(small_sim[0], SplitSetting.V1, "SM", seed=0)
    assert len(_sets(train)[0]) == round(0.7 * 12) and len(_sets(test)[0]) == 12 - 8


def test_split_errors(small_sim):
    corpus, _ = small_sim
    with pytest.raises(ValueError):
        make_split(corpus, SplitSetting.V2)
    with pytest.raises(InsufficientPopulation):
        make_split(corpus, SplitSetting.V4, "XX")
    with pytest.raises(InsufficientPopulation):
        make_split(corpus.for_domain("SM"), SplitSetting.V4, "SM")


def test_parse_settings():
    assert SplitSetting.parse("all") == list(ALL_SETTINGS)
    assert SplitSetting.parse("v3, V1") == [SplitSetting.V3, SplitSetting.V1]
    with pytest.raises(ValueError):
        SplitSetting.parse("v5")


def test_accuracy_examples():
    truths = {("SM", "a"): 1, ("SM", "b"): 0}
    assert accuracy({("SM", "a"): 1, ("SM", "b"): 1}, truths) == 0.5
    assert accuracy({("u", "SM", "a"): 1, ("v", "SM", "a"): 1, ("u", "SM", "b"): 0}, truths) == 1.0
    with pytest.raises(MissingTruth):
        accuracy({("SM", "c"): 1}, truths)
    with pytest.raises(ValueError):
        accuracy({}, truths)


def test_improvement_pct():
    assert improvement_pct(0.8, 0.88) == pytest.approx(10.0)
    assert improvement_pct(0.0, 0.5) is None
    assert improvement_pct(None, 0.5) is None


@pytest.fixture(scope="module")
def small_report(small_sim):
    corpus, truth = small_sim
    return run_experiment(corpus, ALL_SETTINGS, runs=2, specs=FAST_POOL, seed=1, sim_truth=truth)


def test_report_aggregates_recompute(small_report):
    rep = small_report
    for cell in rep.cells:
        rows = [r for r in rep.run_results if r.setting == cell.setting and r.domain == cell.domain]
        assert cell.runs + cell.skipped == len(rows) == 2
        assert cell.baseline == pytest.approx(np.mean([r.baseline for r in rows]))
        assert cell.humanal == pytest.approx(np.mean([r.humanal for r in rows]))
        assert cell.improvement_pct == pytest.approx((cell.humanal - cell.baseline) / cell.baseline * 100)
    for s in rep.settings:
        cells = [c for c in rep.cells if c.setting == s.setting]
        assert s.baseline == pytest.approx(np.mean([c.baseline for c in cells]))
        assert s.humanal == pytest.approx(np.mean([c.humanal for c in cells]))


def test_run_rows_recompute_baseline(small_sim, small_report):
    corpus, _ = small_sim
    r = small_report.run_results[5]
    _, test = make_split(corpus, SplitSetting[r.setting], r.domain, seed=r.split_seed)
    assert r.n_test == len(test)
    assert r.baseline == np.mean(test.labels == test.truth_array)


def test_v1_never_uses_majority(small_report):
    for r in small_report.run_results:
        assert ("Majority" in r.mask) == (r.setting != "V1")


def test_oracle_recorded_per_run(small_report):
    assert all(r.oracle is not None and 0 <= r.oracle <= 1 for r in small_report.run_results)


def test_report_reproducible(small_sim, small_report):
    corpus, truth = small_sim
    again = run_experiment(corpus, ALL_SETTINGS, runs=2, specs=FAST_POOL, seed=1, sim_truth=truth)
    assert again.to_dict() == small_report.to_dict()


def test_perfect_annotators_score_one():
    corpus, _ = generate_corpus(small_config(6, skill_fixed=1.0), seed=2)
    rep = run_experiment(corpus, [SplitSetting.V3, SplitSetting.V4], runs=2, specs=FAST_POOL)
    for c in rep.cells:
        assert c.baseline == 1.0 and c.humanal == 1.0


def test_constant_pool_floor(small_sim):
    corpus, _ = small_sim
    rep = run_experiment(corpus, [SplitSetting.V4], runs=1, specs=(MajorityClass(),))
    for r in rep.run_results:
        _, test = make_split(corpus, SplitSetting.V4, r.domain)
        train_majority = int(corpus.where(lambda d: d.domain != r.domain).truth_array.mean() >= 0.5)
        assert r.humanal == np.mean(test.truth_array == train_majority)


def test_unsplittable_rows_are_skipped():
    ann = {"a": AnnotatorMeta("a", 0.5, 100.0)}
    ds = [Decision("a", "SM", f"s{i}", i % 2, 0.9 if i % 2 else 0.1, 4.0, i + 1) for i in range(6)]
    corpus = AnnotationCorpus(ds, ann, {("SM", f"s{i}"): i % 2 for i in range(6)})
    rep = run_experiment(corpus, [SplitSetting.V1, SplitSetting.V4], runs=3, specs=FAST_POOL)
    assert all(c.runs == 0 and c.skipped == 3 for c in rep.cells)
    assert all(r.error for r in rep.run_results)
    assert "n/a" in summarize(rep)


def test_v1_with_only_majority_is_skipped(small_sim):
    rep = run_experiment(small_sim[0], [SplitSetting.V1], runs=1, specs=FAST_POOL,
                         base_mask=FeatureMask.of("Majority"), domains=["SM"])
    assert rep.cells[0].skipped == 1 and "empty" in rep.run_results[0].error


def test_ablation_rows_are_paired(small_sim):
    rows = ablation(small_sim[0], "isolate", SplitSetting.V4, runs=1, specs=FAST_POOL,
                    feature_sets=["UserDecision", "Time"])
    assert [(r.mode, r.feature_set) for r in rows] == [
        ("full", "all"), ("isolate", "UserDecision"), ("isolate", "Time")]
    assert len({r.baseline for r in rows}) == 1
    with pytest.raises(ValueError):
        ablation(small_sim[0], "shuffle")


def test_summarize_lists_settings(small_report):
    text = summarize(small_report)
    assert all(s.name in text for s in ALL_SETTINGS)
    assert not any(math.isnan(c.baseline) for c in small_report.cells)


def test_constant_spec_in_report_options(small_sim):
    rep = run_experiment(small_sim[0], [SplitSetting.V2], runs=1, specs=(Constant(label=1),),
                         domains=["TM"])
    assert rep.options["classifiers"] == [{"kind": "constant", "label": 1, "seed": 0}]
