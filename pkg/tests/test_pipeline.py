import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from cutguard.classifier import Verdict, preset
from cutguard.dataset import SynthSpec, synth_sample
from cutguard.gate import run_gate
from cutguard.pipeline import UNGATED, memory_before_each_frame, no_verdicts, run_corpus, run_sample


def test_memory_before_each_frame():
    flags = [False] * 6 + [True] * 2 + [False] * 4
    _, trace = run_gate(12, [Verdict(i, flags[i], "t") for i in range(1, 12)], 5)
    memory = memory_before_each_frame(trace)
    assert memory[0] == [] and memory[1] == [0] and memory[6] == [0, 5]
    assert memory[11] == [0, 5, 10]
    assert memory_before_each_frame(trace, capacity=1)[11] == [10]


def test_no_verdicts():
    assert no_verdicts(3) == [Verdict(1, False, UNGATED), Verdict(2, False, UNGATED)]


def test_perfect_gate_scores_100():
    sample = synth_sample(SynthSpec(interjection_len=16, seed=2))
    run = run_sample(sample, preset("cutie"))
    assert run.report.full_jf == 100.0
    assert run.report.interjection_fp_pct == 0.0


def test_ungated_memory_is_contaminated():
    sample = synth_sample(SynthSpec(interjection_len=16, seed=2))
    run = run_sample(sample, None)
    assert any(12 <= i < 28 for i in run.buffer.frame_indices)
    assert run.report.suffix_jf < 100.0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_silent_classifier_is_a_noop(seed):
    # any config that flags nothing reproduces the ungated run exactly
    sample = synth_sample(SynthSpec(interjection_len=0, seed=seed, dim=32))
    base = run_sample(sample, None)
    gated = run_sample(sample, preset("cutie"))
    assert not any(v.is_interjection for v in gated.verdicts)
    assert gated.predictions == base.predictions
    assert gated.report.frame_jf == base.report.frame_jf


def test_run_corpus_rows():
    corpus = {4: [synth_sample(SynthSpec(dim=16), k) for k in range(2)]}
    rows = run_corpus(corpus, {UNGATED: None, "cutie+": preset("cutie")})
    assert [(name, n) for name, n, _ in rows] == [(UNGATED, 4)] * 2 + [("cutie+", 4)] * 2
    assert all(np.isfinite(r.full_jf) for _, _, r in rows)
