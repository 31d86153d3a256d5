import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutguard.dataset import SynthSpec, synth_sample
from cutguard.embed_io import BinaryMask, RegionLabel
from cutguard.errors import DimMismatch, EmptyRegion, LengthMismatch
from cutguard.evaluate import (RegionReport, ReportRow, aggregate, boundary_f, evaluate_sample, false_positive_pct,
                               frame_jf, jaccard, pixel_f1, report_tables)

from oracles import boundary_f_loop, jaccard_loop


def _box(h, w, y0, y1, x0, x1):
    m = np.zeros((h, w), dtype=bool)
    m[y0:y1, x0:x1] = True
    return BinaryMask(m)


def test_jaccard_cases():
    a = _box(8, 8, 2, 6, 2, 6)
    assert jaccard(a, a) == 1.0
    assert jaccard(a, _box(8, 8, 0, 1, 0, 1)) == 0.0
    assert jaccard(_box(8, 8, 2, 4, 2, 6), a) == 0.5
    assert jaccard(BinaryMask.empty(3, 3), BinaryMask.empty(3, 3)) == 1.0


def test_shape_mismatch():
    with pytest.raises(DimMismatch):
        jaccard(BinaryMask.empty(3, 3), BinaryMask.empty(4, 3))


def test_boundary_f_cases():
    a = _box(10, 10, 2, 7, 2, 7)
    assert boundary_f(a, a) == 1.0
    assert boundary_f(BinaryMask.empty(10, 10), a) == 0.0
    assert boundary_f(a, BinaryMask.empty(10, 10)) == 0.0
    shifted = _box(10, 10, 2, 7, 3, 8)
    assert boundary_f(shifted, a, tolerance=1) == 1.0
    assert boundary_f(shifted, a, tolerance=0) < 1.0
    assert boundary_f(shifted, a, tolerance=0) == pytest.approx(boundary_f_loop(shifted.pixels, a.pixels, 0))
    with pytest.raises(ValueError):
        boundary_f(a, a, tolerance=-1)


def test_boundary_counts_image_border():
    full = BinaryMask(np.ones((4, 4), dtype=bool))
    assert boundary_f(full, _box(4, 4, 1, 3, 1, 3), tolerance=0) == 0.0
    assert boundary_f(full, _box(4, 4, 1, 3, 1, 3), tolerance=1) == pytest.approx(
        boundary_f_loop(full.pixels, _box(4, 4, 1, 3, 1, 3).pixels, 1))


def test_pixel_f1():
    a = _box(8, 8, 2, 6, 2, 6)
    assert pixel_f1(a, a) == 1.0
    assert pixel_f1(_box(8, 8, 2, 4, 2, 6), a) == pytest.approx(2 * 8 / (2 * 8 + 8))
    assert frame_jf(_box(8, 8, 2, 4, 2, 6), a, f_mode="pixel") == pytest.approx((0.5 + 2 / 3) / 2)
    with pytest.raises(ValueError):
        frame_jf(a, a, f_mode="region")


def test_false_positive_pct():
    assert false_positive_pct([BinaryMask.empty(5, 5)] * 3) == 0.0
    assert false_positive_pct([BinaryMask(np.ones((5, 5), dtype=bool))] * 2) == 100.0
    thirteen = np.zeros(100, dtype=bool)
    thirteen[:13] = True
    assert false_positive_pct([BinaryMask(thirteen.reshape(10, 10))]) == pytest.approx(13.0)
    with pytest.raises(EmptyRegion):
        false_positive_pct([])


@pytest.fixture
def sample():
    return synth_sample(SynthSpec(interjection_len=4, dim=8, seed=1))


def test_perfect_predictions(sample):
    r = evaluate_sample(sample, sample.masks)
    assert (r.full_jf, r.interjection_fp_pct, r.suffix_jf, r.prefix_jf) == (100.0, 0.0, 100.0, 100.0)


def test_empty_predictions(sample):
    empty = [BinaryMask.empty(32, 24)] * len(sample)
    r = evaluate_sample(sample, empty)
    assert r.interjection_fp_pct == 0.0
    assert r.prefix_jf == 0.0 and r.suffix_jf == 0.0
    assert r.full_jf == pytest.approx(100 * 4 / 28)


def test_leaky_interjection(sample):
    blob = _box(24, 32, 0, 4, 0, 4)
    preds = [blob if lab is RegionLabel.INTERJECTION else m for m, lab in zip(sample.masks, sample.labels)]
    r = evaluate_sample(sample, preds)
    assert r.interjection_fp_pct == pytest.approx(100 * 16 / (24 * 32))
    assert r.full_jf == pytest.approx(100 * 24 / 28)
    assert r.suffix_jf == 100.0


def test_clean_sample_has_no_regions():
    clean = synth_sample(SynthSpec(interjection_len=0, dim=8))
    r = evaluate_sample(clean, clean.masks)
    assert r.full_jf == 100.0
    assert math.isnan(r.interjection_fp_pct) and math.isnan(r.suffix_jf) and math.isnan(r.prefix_jf)


def test_length_mismatch(sample):
    with pytest.raises(LengthMismatch):
        evaluate_sample(sample, sample.masks[:-1])


def test_report_tables_empty():
    text, csv_text = report_tables([])
    assert text.count("| Model ") == 3
    assert "ungated" not in text
    assert csv_text == "config,length,full_jf,fp_pct,suffix_jf,prefix_jf,n_samples\n"


def test_report_tables_single_cell(sample):
    text, csv_text = report_tables([("cutie+", 4, evaluate_sample(sample, sample.masks))])
    assert "Full Video Performance (J&F Scores)" in text
    assert "Video Interjection Performance (False Positive %)" in text
    assert "Video Suffix Performance (J&F Scores)" in text
    body = [line for line in text.splitlines() if line.startswith("| cutie+")]
    assert len(body) == 3
    assert body[1].split("|")[3].strip() == "0.00"
    assert csv_text.splitlines()[1] == "cutie+,4,100.0,0.0,100.0,100.0,1"


def test_aggregate_means():
    rows = aggregate([("m", 4, _report(50.0, 1.0)), ("m", 4, _report(100.0, 3.0))])
    assert rows == [ReportRow("m", 4, 75.0, 2.0, 75.0, 75.0, 2)]


def _report(jf, fp):
    return RegionReport(jf, fp, jf, jf)


masks = st.tuples(st.integers(1, 32), st.integers(1, 32), st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))


def _random_pair(h, w, seed, density):
    rng = np.random.default_rng(seed)
    return rng.random((h, w)) < density, rng.random((h, w)) < density


@settings(max_examples=60, deadline=None)
@given(masks)
def test_jaccard_properties(args):
    a, b = (BinaryMask(m) for m in _random_pair(*args))
    assert jaccard(a, b) == jaccard(b, a)
    assert jaccard(a, a) == 1.0
    assert jaccard(a, b) == jaccard_loop(a.pixels.tolist(), b.pixels.tolist())


@settings(max_examples=60, deadline=None)
@given(masks, st.integers(0, 3))
def test_boundary_f_properties(args, tol):
    a, b = (BinaryMask(m) for m in _random_pair(*args))
    assert boundary_f(a, a, tol) == 1.0
    assert boundary_f(a, b, tol) == pytest.approx(boundary_f(b, a, tol), abs=1e-12)
    assert boundary_f(a, b, tol) == pytest.approx(boundary_f_loop(a.pixels.tolist(), b.pixels.tolist(), tol),
                                                  abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 16), st.integers(1, 16))
def test_all_zero_fp_is_zero(n, h, w):
    assert false_positive_pct([BinaryMask.empty(w, h)] * n) == 0.0
