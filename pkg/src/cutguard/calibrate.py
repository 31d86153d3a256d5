"""Fit the free constants of a classifier template against a labelled corpus.

Candidates are ranked lexicographically: no false positives on clean frames
first, then interjection recall, then margin. Margin is the smallest relative
gap, over correctly classified frames, between the two sides of any guard on
the frame's decision path that involves a free constant. The search is a grid over
all free constants followed by one coordinate-wise refinement pass.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .classifier import (COMPARISONS, Branch, ClassifierConfig, Op, _names, classify_with_features, decision_path,
                         eval_expr)
from .dataset import SplicedSequence
from .errors import EmptyCorpus, InvalidFeature, NoFreeConstants

GRID_BUDGET = 512


@dataclass
class CalibrationResult:
    config: ClassifierConfig
    train_accuracy: float
    false_positive_count: int
    recall: float
    margin: float
    evaluated: int

    @property
    def separable(self) -> bool:
        return self.false_positive_count == 0 and self.recall == 1.0


@dataclass
class _Score:
    fp: int
    tp: int
    positives: int
    correct: int
    total: int
    margin: float

    @property
    def recall(self) -> float:
        return self.tp / self.positives if self.positives else 1.0

    def key(self):
        return (-self.fp, self.recall, self.margin)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CUTGUARD_THREADS", "1")))
    except ValueError:
        return 1


def default_grid(value: float, points: int) -> np.ndarray:
    if value > 0:
        return value * np.logspace(-2, 2, points)
    return value + np.linspace(-10.0, 10.0, points)


def _guard_gap(branch: Branch, features, constants, free: set[str]) -> float | None:
    guard = branch.guard
    if not (isinstance(guard, Op) and guard.op in COMPARISONS and _names(guard) & free):
        return None
    try:
        lhs = eval_expr(guard.args[0], features, constants)
        rhs = eval_expr(guard.args[1], features, constants)
    except InvalidFeature:
        return None
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)


def score(config: ClassifierConfig, corpus: Sequence[SplicedSequence], caches: Sequence[dict] | None = None) -> _Score:
    free = set(config.free_constants())
    constants = config.constant_values()
    fp = tp = positives = correct = total = 0
    margin = math.inf
    for k, sample in enumerate(corpus):
        cache = caches[k] if caches is not None else None
        verdicts, features = classify_with_features(sample.embeddings, config, cache)
        truth = sample.interjection_flags()[1:]
        for verdict, feats, actual in zip(verdicts, features, truth):
            total += 1
            positives += actual
            if verdict.is_interjection == actual:
                correct += 1
                tp += actual
                if verdict.fired_rule != "warmup":
                    _, path = decision_path(config, feats)
                    for branch, _ in path:
                        gap = _guard_gap(branch, feats, constants, free)
                        if gap is not None:
                            margin = min(margin, gap)
            elif verdict.is_interjection:
                fp += 1
    return _Score(fp, tp, positives, correct, total, margin)


def _flatten(corpus) -> list[SplicedSequence]:
    if isinstance(corpus, Mapping):
        return [s for samples in corpus.values() for s in samples]
    return list(corpus)


def calibrate(corpus, template: ClassifierConfig, grid: Mapping[str, Sequence[float]] | None = None,
              refine: bool = True, refine_points: int = 9, threads: int | None = None) -> CalibrationResult:
    """Search the free constants of ``template`` for the best-ranked config.

    ``grid`` maps constant names to candidate values; constants left out get
    a log-spaced sweep around their template value sized to keep the full
    product near ``GRID_BUDGET`` points.
    """
    samples = _flatten(corpus)
    if not samples:
        raise EmptyCorpus("calibration needs at least one sample")
    free = template.free_constants()
    if not free:
        raise NoFreeConstants(f"config {template.name!r} has no free constants")
    grid = dict(grid or {})
    points = max(5, int(GRID_BUDGET ** (1 / len(free))))
    axes = [np.asarray(sorted(grid[name]) if name in grid else default_grid(template.constants[name].value, points),
                       dtype=float) for name in free]
    caches = [dict() for _ in samples]
    threads = threads or thread_count()

    def run(values):
        cfg = template.with_constants(dict(zip(free, values)))
        return score(cfg, samples, caches)

    def best_of(candidates):
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scores = list(pool.map(run, candidates))
        best = max(range(len(candidates)), key=lambda k: (scores[k].key(), -k))
        return candidates[best], scores[best], len(candidates)

    candidates = [tuple(float(v) for v in combo) for combo in itertools.product(*axes)]
    best_values, best_score, evaluated = best_of(candidates)

    if refine:
        for d, axis in enumerate(axes):
            pos = int(np.searchsorted(axis, best_values[d]))
            lo = axis[max(pos - 1, 0)]
            hi = axis[min(pos + 1, len(axis) - 1)]
            if lo == hi:
                continue
            local = [best_values[:d] + (float(v),) + best_values[d + 1:] for v in np.linspace(lo, hi, refine_points)]
            values, local_score, n = best_of([best_values] + local)
            evaluated += n
            if local_score.key() > best_score.key():
                best_values, best_score = values, local_score

    config = template.with_constants(dict(zip(free, best_values)))
    return CalibrationResult(config, best_score.correct / best_score.total, best_score.fp,
                             best_score.recall, best_score.margin, evaluated)


def calibrate_per_length(corpus: Mapping[int, Sequence[SplicedSequence]], template: ClassifierConfig,
                         **options) -> dict[int, CalibrationResult]:
    """One fit per interjection length instead of a single global config."""
    return {length: calibrate(samples, template, **options) for length, samples in corpus.items()}
