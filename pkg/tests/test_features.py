import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutguard.distance import DistanceConfig, stream_distances
from cutguard.embed_io import embeddings_from_array
from cutguard.errors import InvalidFeature, LengthMismatch, TooShort
from cutguard.features import (MdrState, StreamFeaturizer, featurize_stream, first_order, mdrt, update_mdr)

from oracles import distance_loop, run_lengths


def test_first_order_ratio_prefilter_value():
    ratio, diff = first_order(2.14, 2.0)
    assert ratio == pytest.approx(1.07, abs=1e-12)
    assert diff == pytest.approx(0.14, abs=1e-12)


def test_first_order_steady():
    assert first_order(3.3, 3.3) == (1.0, 0.0)


def test_first_order_zero_previous():
    ratio, diff = first_order(5.0, 0.0)
    assert ratio == pytest.approx(5e9)
    assert diff == 5.0


def test_update_mdr_new_max():
    mdr, state = update_mdr(MdrState(4.0, 3), 5.0)
    assert mdr == 1.25
    assert state == MdrState(5.0, 4)


def test_update_mdr_at_max():
    mdr, state = update_mdr(MdrState(5.0, 3), 5.0)
    assert mdr == 1.0
    assert state.max_distance_seen == 5.0


def test_update_mdr_first_distance():
    mdr, state = update_mdr(MdrState(), 3.0)
    assert mdr == pytest.approx(3e9)
    assert state == MdrState(3.0, 1)


def test_mdrt_values():
    assert mdrt(0) == 0.86
    assert mdrt(120) == pytest.approx(0.50, abs=1e-12)
    assert mdrt(60) == pytest.approx(0.68, abs=1e-12)
    assert mdrt(10_000) == 0.50


@given(st.integers(0, 5000))
def test_mdrt_shape(l):
    assert mdrt(l + 1) <= mdrt(l)
    if l <= 120:
        assert abs(mdrt(l) - (0.86 - 0.003 * l)) <= 1e-12
    else:
        assert mdrt(l) == 0.50


def test_constant_stream():
    frames = embeddings_from_array(np.ones((8, 3)))
    feats = featurize_stream(frames)
    assert len(feats) == 7
    for f in feats:
        assert f.st0 == f.lt0 == 0.0
        assert (f.st1_ratio, f.lt1_ratio, f.st1_diff, f.lt1_diff) == (1.0, 1.0, 0.0, 0.0)


def test_first_order_invalid_on_frame_one():
    frames = embeddings_from_array(np.random.default_rng(0).standard_normal((4, 3)))
    feats = featurize_stream(frames)
    assert not feats[0].first_order_valid and feats[1].first_order_valid
    with pytest.raises(InvalidFeature):
        feats[0].get("lt1_ratio")
    assert feats[1].get("lt1_ratio") == pytest.approx(feats[1].lt0 / feats[0].lt0)


def test_mdr_valid_from_second_distance():
    frames = embeddings_from_array(np.random.default_rng(0).standard_normal((4, 3)))
    feats = featurize_stream(frames)
    with pytest.raises(InvalidFeature):
        feats[0].get("mdr")
    assert feats[1].get("mdr") == pytest.approx(feats[1].lt0 / feats[0].lt0)


def test_unknown_feature_name():
    frames = embeddings_from_array(np.zeros((3, 2)))
    with pytest.raises(InvalidFeature):
        featurize_stream(frames)[0].get("st7")


def test_all_clean_matches_stream_distances():
    frames = embeddings_from_array(np.random.default_rng(4).standard_normal((20, 5)))
    feats = featurize_stream(frames, 1, 5)
    np.testing.assert_allclose([f.st0 for f in feats], stream_distances(frames, DistanceConfig(1)), rtol=1e-12)
    np.testing.assert_allclose([f.lt0 for f in feats], stream_distances(frames, DistanceConfig(5)), rtol=1e-12)


def test_flagged_frames_leave_the_window():
    data = np.random.default_rng(6).standard_normal((10, 4))
    flags = [False, False, True, True, False, False, False, False, False]
    feats = featurize_stream(embeddings_from_array(data), 1, 5, verdicts=flags)
    kept = [0]
    for i in range(1, 10):
        f = feats[i - 1]
        x = data[i].astype(np.float32)
        window = data.astype(np.float32)[kept[-5:]]
        assert f.lt0 == pytest.approx(distance_loop(x, window), rel=1e-9)
        assert f.st0 == pytest.approx(distance_loop(x, window[-1:]), rel=1e-9)
        if not flags[i - 1]:
            kept.append(i)


def test_include_all_mode_ignores_flags():
    frames = embeddings_from_array(np.random.default_rng(6).standard_normal((10, 4)))
    flags = [True] * 9
    a = featurize_stream(frames, verdicts=flags, exclude_flagged=False)
    b = featurize_stream(frames)
    assert [f.lt0 for f in a] == [f.lt0 for f in b]


def test_run_length_follows_feedback():
    frames = embeddings_from_array(np.random.default_rng(1).standard_normal((12, 2)))
    flags = [False, True, True, False, True, True, True, False, False, True, False]
    feats = featurize_stream(frames, verdicts=flags)
    assert [f.run_length for f in feats] == run_lengths(flags)


def test_freeze_mdr_keeps_max_during_interjection():
    data = np.zeros((6, 2))
    data[3] = 100.0
    fz = StreamFeaturizer(freeze_mdr=True)
    fz.push(data[0])
    for i in range(1, 6):
        fz.push(data[i] + 0.01 * i)
        fz.commit(i == 3)
    assert fz.mdr_state.max_distance_seen < 50


def test_commit_protocol():
    fz = StreamFeaturizer()
    with pytest.raises(RuntimeError):
        fz.commit(False)
    fz.push(np.zeros(2))
    fz.push(np.ones(2))
    with pytest.raises(RuntimeError):
        fz.push(np.ones(2))


def test_errors():
    with pytest.raises(TooShort):
        featurize_stream(embeddings_from_array(np.zeros((1, 2))))
    with pytest.raises(LengthMismatch):
        featurize_stream(embeddings_from_array(np.zeros((4, 2))), verdicts=[False])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 10**6))
def test_mdr_max_is_max_of_long_distances(n, seed):
    frames = embeddings_from_array(np.random.default_rng(seed).standard_normal((n, 3)))
    fz = StreamFeaturizer()
    fz.push(frames[0])
    longs = []
    for f in frames[1:]:
        longs.append(fz.push(f).lt0)
        fz.commit(False)
    assert fz.mdr_state.max_distance_seen == max(longs)
    assert fz.mdr_state.initialized_from == n - 1


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 20), st.integers(0, 10**6), st.data())
def test_features_are_deterministic(n, seed, data):
    frames = embeddings_from_array(np.random.default_rng(seed).standard_normal((n, 3)))
    flags = data.draw(st.lists(st.booleans(), min_size=n - 1, max_size=n - 1))
    assert featurize_stream(frames, verdicts=flags) == featurize_stream(frames, verdicts=flags)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_first_order_arithmetic(cur, prev):
    ratio, diff = first_order(cur, prev)
    assert ratio == pytest.approx(cur / max(prev, 1e-9) if cur != prev else 1.0, rel=1e-9)
    assert diff == pytest.approx(cur - prev, rel=1e-9, abs=1e-9)
