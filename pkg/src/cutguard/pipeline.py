"""End-to-end runs over synthetic or on-disk corpora: detect, gate, predict, score."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

from .classifier import ClassifierConfig, Verdict, classify_stream
from .dataset import SplicedSequence, simulate_predictions
from .embed_io import BinaryMask
from .evaluate import RegionReport, evaluate_sample
from .gate import DEFAULT_WRITE_PERIOD, GateRecord, MemoryBuffer, apply_gate_to_masks, run_gate

UNGATED = "ungated"


@dataclass
class SampleRun:
    verdicts: list[Verdict]
    buffer: MemoryBuffer
    trace: list[GateRecord]
    raw_predictions: list[BinaryMask]
    predictions: list[BinaryMask]
    report: RegionReport


def memory_before_each_frame(trace: Sequence[GateRecord], capacity: int | None = None) -> list[list[int]]:
    """Frame indices held in memory when each frame is predicted."""
    memory: deque = deque(maxlen=capacity)
    out = []
    for record in trace:
        out.append(list(memory))
        if record.wrote_memory:
            memory.append(record.frame_index)
    return out


def no_verdicts(n_frames: int) -> list[Verdict]:
    return [Verdict(i, False, UNGATED) for i in range(1, n_frames)]


def run_sample(sample: SplicedSequence, config: ClassifierConfig | None = None,
               write_period: int = DEFAULT_WRITE_PERIOD, capacity: int | None = None,
               strict_cadence: bool = False, tolerance: int = 1, seed: int = 0) -> SampleRun:
    """Run one sample; ``config=None`` is the ungated baseline model."""
    if config is None:
        verdicts = no_verdicts(len(sample))
    else:
        verdicts = classify_stream(sample.embeddings, config)
    buffer, trace = run_gate(sample.embeddings, verdicts, write_period, capacity, strict_cadence)
    raw = simulate_predictions(sample, memory_before_each_frame(trace, capacity), seed=seed)
    preds = apply_gate_to_masks(raw, trace)
    return SampleRun(verdicts, buffer, trace, raw, preds, evaluate_sample(sample, preds, tolerance))


def run_corpus(corpus: Mapping[int, Sequence[SplicedSequence]],
               configs: Mapping[str, ClassifierConfig | None], **options) -> list[tuple[str, int, RegionReport]]:
    """Reports for every (config, sample) pair, ready for :func:`cutguard.evaluate.report_tables`."""
    rows = []
    for name, config in configs.items():
        for length, samples in corpus.items():
            for sample in samples:
                rows.append((name, length, run_sample(sample, config, **options).report))
    return rows
