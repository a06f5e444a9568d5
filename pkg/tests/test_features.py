import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from humanal.core import AnnotationCorpus, AnnotatorMeta, Decision
from humanal.errors import DomainError
from humanal.features import (FEATURE_SETS, SLOTS, FeatureMask, build_profile,
                              external_time_z, featurize_corpus, internal_time_z,
                              majority_features, smoothed_confidence)

from oracles import random_corpus, reference_profile, slot_matches

unit = st.floats(0.0, 1.0, allow_nan=False)


# ---- smoothed confidence


@pytest.mark.parametrize("c, expected", [(0.7, 0.4), (0.1, 0.8), (0.5, 0.0), (1.0, 1.0), (0.0, 1.0)])
def test_smoothed_confidence_examples(c, expected):
    assert smoothed_confidence(c) == expected


@pytest.mark.parametrize("c", [-0.01, 1.01, math.nan])
def test_smoothed_confidence_domain(c):
    with pytest.raises(DomainError):
        smoothed_confidence(c)


@given(unit)
def test_smoothed_symmetric_and_bounded(c):
    s = smoothed_confidence(c)
    assert 0.0 <= s <= 1.0
    assert s == pytest.approx(smoothed_confidence(1.0 - c), abs=1e-12)


@given(unit, unit)
def test_smoothed_is_2_lipschitz(a, b):
    assert abs(smoothed_confidence(a) - smoothed_confidence(b)) <= 2 * abs(a - b) + 1e-12


# ---- z-scores


def test_external_z_examples():
    assert external_time_z(10.0, [12.0, 14.0]) == pytest.approx(-3.0)
    assert external_time_z(13.0, [12.0, 14.0]) == 0.0
    assert math.isnan(external_time_z(10.0, [12.0]))


def test_internal_z_examples():
    assert math.isnan(internal_time_z(5.0, [5.0, 5.0]))
    assert math.isnan(internal_time_z(20.0, [10.0, 10.0]))
    assert internal_time_z(12.0, [10.0, 14.0]) == 0.0


@given(st.lists(st.floats(0.5, 100.0), min_size=2, max_size=8), st.floats(0.5, 100.0),
       st.floats(-50.0, 50.0), st.floats(0.1, 10.0))
def test_z_shift_and_scale_invariant(peers, t, shift, scale):
    z = external_time_z(t, peers)
    if math.isnan(z) or np.ptp(peers) < 1e-6 * max(peers):
        return
    assert external_time_z(t + shift, [p + shift for p in peers]) == pytest.approx(z, rel=1e-6, abs=1e-6)
    assert external_time_z(t * scale, [p * scale for p in peers]) == pytest.approx(z, rel=1e-6, abs=1e-6)


# ---- peer majority


def _d(annotator, label, conf, sample="s"):
    return Decision(annotator, "SM", sample, label, conf, 5.0, 1)


def test_majority_worked_example():
    me = _d("me", 0, 0.1)
    peers = [_d("p1", 1, 0.9), _d("p2", 1, 0.8), _d("p3", 0, 0.2)]
    maj, agree, mc, msc = majority_features(me, peers)
    assert (maj, agree) == (1.0, pytest.approx(2 / 3))
    assert mc == pytest.approx(1.9 / 3)
    assert msc == pytest.approx(2.0 / 3)


def test_majority_tie_and_empty():
    assert majority_features(None, [_d("p1", 1, 0.9), _d("p2", 0, 0.3)])[:2] == (0.5, 0.5)
    assert all(math.isnan(v) for v in majority_features(None, []))


def test_majority_ignores_own_annotator():
    me = _d("me", 1, 0.9)
    peers = [_d("p1", 0, 0.1), me]
    assert majority_features(me, peers) == majority_features(me, peers[:1])


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(0, 1), unit), min_size=1, max_size=7), st.randoms())
def test_majority_permutation_invariant(raw, rnd):
    peers = [_d(f"p{i}", int(c >= 0.5), c) for i, (_, c) in enumerate(raw)]
    shuffled = list(peers)
    rnd.shuffle(shuffled)
    a, b = majority_features(None, peers), majority_features(None, shuffled)
    assert a[:2] == b[:2]
    assert a[2:] == pytest.approx(b[2:], abs=1e-12)


# ---- masks


def test_feature_sets_partition_slots():
    listed = [s for slots in FEATURE_SETS.values() for s in slots]
    assert sorted(listed) == sorted(SLOTS) and len(listed) == len(set(listed))


def test_mask_parse_and_errors():
    assert FeatureMask.parse("time, majority").names == ("Time", "Majority")
    assert FeatureMask.parse("all") == FeatureMask.all()
    with pytest.raises(ValueError):
        FeatureMask.parse("Colour")
    with pytest.raises(ValueError):
        FeatureMask.of()
    assert str(FeatureMask.all().without("Majority")) == "UserDecision,Confidence,Time,Priors"


# ---- profiles


def _tiny():
    ds = [Decision("a", "SM", "s1", 1, 0.9, 10.0, 1), Decision("a", "SM", "s2", 0, 0.3, 4.0, 2),
          Decision("b", "SM", "s1", 1, 0.6, 12.0, 1), Decision("c", "SM", "s1", 0, 0.2, 14.0, 1)]
    ann = {x: AnnotatorMeta(x, 0.7, 100.0) for x in "abc"}
    return AnnotationCorpus(ds, ann)


def test_user_decision_mask_only_sets_label():
    v = build_profile(0, _tiny(), FeatureMask.of("UserDecision"))
    assert v["user_label"] == 1.0
    assert [s for s in SLOTS if v.present(s)] == ["user_label"]


def test_v1_mask_leaves_peer_slots_absent():
    v = build_profile(0, _tiny(), FeatureMask.all().without("Majority"))
    assert not any(v.present(s) for s in FEATURE_SETS["Majority"])
    assert v.present("external_time_z")


def test_full_profile_hand_computed():
    v = build_profile(0, _tiny())
    assert v["external_time_z"] == pytest.approx(-3.0)
    assert math.isnan(v["internal_time_z"])
    assert v["position_norm"] == 0.5
    assert (v["peer_majority_label"], v["peer_agreement"]) == (0.5, 0.5)
    assert v["peer_mean_confidence"] == pytest.approx(0.4)


def test_build_profile_accepts_decision_object():
    c = _tiny()
    assert np.array_equal(build_profile(c.decisions[2], c).values, build_profile(2, c).values,
                          equal_nan=True)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sets(st.sampled_from(list(FEATURE_SETS)), min_size=1))
def test_matrix_equals_reference_under_any_mask(seed, sets):
    corpus = random_corpus(random.Random(seed))
    mask = FeatureMask(frozenset(sets))
    X = featurize_corpus(corpus, mask).values
    enabled = set(mask.slots)
    for i in range(len(corpus)):
        ref = reference_profile(corpus, i)
        for j, slot in enumerate(SLOTS):
            assert slot_matches(X[i, j], ref[slot] if slot in enabled else None), (i, slot)


def test_matrix_agrees_with_build_profile(small_sim):
    corpus, _ = small_sim
    X = featurize_corpus(corpus).values
    for i in range(0, len(corpus), 97):
        assert np.allclose(X[i], build_profile(i, corpus).values, rtol=0, atol=1e-12, equal_nan=True)
