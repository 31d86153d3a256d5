import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutguard.classifier import Verdict
from cutguard.embed_io import BinaryMask
from cutguard.errors import LengthMismatch
from cutguard.gate import Emitted, GateRecord, apply_gate_to_masks, read_trace, run_gate, write_trace


def _verdicts(flags):
    """Verdicts for frames 1..n-1 from per-frame flags that include frame 0."""
    return [Verdict(i, bool(f), "t") for i, f in enumerate(flags) if i > 0]


def test_clean_schedule():
    buffer, _ = run_gate(16, _verdicts([False] * 16), 5)
    assert buffer.frame_indices == [0, 5, 10, 15]


def test_everything_flagged():
    buffer, trace = run_gate(10, _verdicts([False] + [True] * 9), 5)
    assert buffer.frame_indices == [0]
    assert [r.emitted for r in trace[1:]] == [Emitted.FORCED_EMPTY] * 9


def test_deferred_cadence_example():
    flags = [False] * 12 + [True] * 4 + [False] * 12
    buffer, _ = run_gate(28, _verdicts(flags), 5)
    assert buffer.frame_indices == [0, 5, 10, 16, 21, 26]


def test_strict_cadence_forfeits_slots():
    flags = [False] * 12 + [True] * 4 + [False] * 12
    buffer, _ = run_gate(28, _verdicts(flags), 5, strict_cadence=True)
    assert buffer.frame_indices == [0, 5, 10, 20, 25]


def test_capacity_evicts_oldest():
    buffer, _ = run_gate(30, _verdicts([False] * 30), 5, capacity=2)
    assert buffer.frame_indices == [20, 25]


def test_buffer_keeps_frame_references():
    frames = [np.full(2, i) for i in range(7)]
    buffer, _ = run_gate(frames, _verdicts([False] * 7), 3)
    assert [ref[0] for _, ref in buffer.entries] == [0, 3, 6]


def test_length_checks():
    with pytest.raises(LengthMismatch):
        run_gate(5, _verdicts([False] * 4), 5)
    with pytest.raises(LengthMismatch):
        run_gate(3, [Verdict(2, False, "t"), Verdict(1, False, "t")])
    with pytest.raises(ValueError):
        run_gate(3, _verdicts([False] * 3), 0)


def test_apply_gate_to_masks():
    full = BinaryMask(np.ones((3, 4), dtype=bool))
    _, trace = run_gate(3, _verdicts([False, True, False]), 5)
    out = apply_gate_to_masks([full] * 3, trace)
    assert out[0] is full and out[2] is full
    assert out[1] == BinaryMask.empty(4, 3)
    with pytest.raises(LengthMismatch):
        apply_gate_to_masks([full], trace)


def test_trace_file(tmp_path):
    _, trace = run_gate(3, _verdicts([False, True, False]), 2)
    write_trace(tmp_path / "t.txt", trace)
    assert (tmp_path / "t.txt").read_text() == "0 N 1 P\n1 I 0 E\n2 N 1 P\n"
    assert read_trace(tmp_path / "t.txt") == trace
    assert trace[1] == GateRecord(1, True, False, Emitted.FORCED_EMPTY)


@settings(max_examples=100)
@given(st.lists(st.booleans(), min_size=1, max_size=80), st.integers(1, 9), st.booleans())
def test_flagged_frames_never_written(flags, period, strict):
    flags = [False] + flags
    buffer, trace = run_gate(len(flags), _verdicts(flags), period, strict_cadence=strict)
    assert not any(flags[i] for i in buffer.frame_indices)
    assert [r.frame_index for r in trace if r.wrote_memory] == buffer.frame_indices


@settings(max_examples=100)
@given(st.integers(1, 200), st.integers(1, 9))
def test_gate_is_noop_on_clean_streams(n, period):
    gated, _ = run_gate(n, _verdicts([False] * n), period)
    assert gated.frame_indices == list(range(0, n, period))


@settings(max_examples=100)
@given(st.integers(1, 40), st.integers(0, 60), st.integers(1, 40), st.integers(1, 9))
def test_write_count_matches_stream_without_interjection(p, n, s, period):
    flags = [False] * p + [True] * n + [False] * s
    with_cut, _ = run_gate(len(flags), _verdicts(flags), period)
    without, _ = run_gate(p + s, _verdicts([False] * (p + s)), period)
    assert abs(len(with_cut.entries) - len(without.entries)) <= 1
