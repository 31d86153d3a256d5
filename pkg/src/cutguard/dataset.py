"""Interjection sequences: splicing real sources and generating synthetic ones.

A spliced sample is ``prefix + interjection + suffix`` where prefix and suffix
are consecutive frames of source ``a`` and the interjection is a run of
frames taken from an unrelated source ``b``. The object annotated in ``a`` is
absent during the interjection, so those ground-truth masks are empty.

On disk a sample is a directory holding ``emb.bin`` (CUTGEMB1), ``mask.bin``
(CUTGMSK1), ``labels.txt`` and ``manifest.json``.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .embed_io import (BinaryMask, FrameEmbedding, RegionLabel, read_labels, read_masks, read_sequence,
                       write_labels, write_masks, write_sequence)
from .errors import DimMismatch, InvalidSpec, LengthMismatch, SourceTooShort

STANDARD_LENGTHS = (4, 16, 128, 512)


@dataclass
class SourceVideo:
    embeddings: list[FrameEmbedding]
    masks: list[BinaryMask]
    name: str = "source"

    def __post_init__(self):
        if len(self.embeddings) != len(self.masks):
            raise LengthMismatch(f"{self.name}: {len(self.embeddings)} embeddings, {len(self.masks)} masks")

    def __len__(self):
        return len(self.embeddings)


@dataclass(frozen=True)
class SpliceSpec:
    prefix_len: int = 12
    suffix_len: int = 12
    interjection_len: int = 4
    source_a: str = "a"
    source_b: str = "b"
    seed: int = 0


@dataclass
class SplicedSequence:
    embeddings: list[FrameEmbedding]
    masks: list[BinaryMask]
    labels: list[RegionLabel]
    prefix_len: int
    interjection_len: int
    suffix_len: int
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.embeddings)

    def region(self, label: RegionLabel) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab is label]

    def interjection_flags(self) -> list[bool]:
        return [lab is RegionLabel.INTERJECTION for lab in self.labels]


def _reindex(frames: Sequence[FrameEmbedding]) -> list[FrameEmbedding]:
    return [FrameEmbedding(i, f.values) for i, f in enumerate(frames)]


def splice(spec: SpliceSpec, a: SourceVideo, b: SourceVideo) -> SplicedSequence:
    """Insert ``spec.interjection_len`` frames of ``b`` after the prefix of ``a``.

    The window taken from ``b`` starts at an offset drawn from ``spec.seed``.
    """
    if min(spec.prefix_len, spec.suffix_len) < 1 or spec.interjection_len < 0:
        raise InvalidSpec("prefix and suffix must be positive, interjection non-negative")
    if spec.prefix_len + spec.suffix_len > len(a):
        raise SourceTooShort(f"{spec.source_a}: need {spec.prefix_len + spec.suffix_len} frames, have {len(a)}")
    if spec.interjection_len > len(b):
        raise SourceTooShort(f"{spec.source_b}: need {spec.interjection_len} frames, have {len(b)}")
    if a.embeddings and b.embeddings and a.embeddings[0].dim != b.embeddings[0].dim:
        raise DimMismatch(f"source dims differ: {a.embeddings[0].dim} vs {b.embeddings[0].dim}")
    if a.masks and b.masks and a.masks[0].pixels.shape != b.masks[0].pixels.shape:
        raise DimMismatch("source mask sizes differ")

    p, n, s = spec.prefix_len, spec.interjection_len, spec.suffix_len
    rng = np.random.default_rng(spec.seed)
    start = int(rng.integers(0, len(b) - n + 1))
    width, height = a.masks[0].width, a.masks[0].height

    embeddings = list(a.embeddings[:p]) + list(b.embeddings[start:start + n]) + list(a.embeddings[p:p + s])
    masks = (list(a.masks[:p]) + [BinaryMask.empty(width, height)] * n + list(a.masks[p:p + s]))
    if n:
        labels = [RegionLabel.PREFIX] * p + [RegionLabel.INTERJECTION] * n + [RegionLabel.SUFFIX] * s
    else:
        labels = [RegionLabel.CLEAN] * (p + s)
    meta = {"source_a": spec.source_a, "source_b": spec.source_b, "seed": spec.seed, "b_start": start}
    return SplicedSequence(_reindex(embeddings), masks, labels, p, n, s, meta)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic embedding generator.

    ``within_video_step`` is the per-element standard deviation of the frame
    to frame drift; ``cross_video_gap`` is the per-element scale of the
    offset between the two source videos, so the offset norm is
    ``cross_video_gap * sqrt(dim)``. ``pan_spike`` is ``(frame_index,
    magnitude)`` in spliced-sample coordinates and adds a one-off camera jump
    of norm ``magnitude * sqrt(dim)`` that persists for later frames.

    Within a video the frames follow a mean-reverting drift
    ``r[t] = persistence * r[t-1] + step`` around the video's base vector, so
    long videos wander but stay near their own content. ``persistence=1``
    gives a pure random walk.
    """

    dim: int = 256
    prefix_len: int = 12
    interjection_len: int = 4
    suffix_len: int = 12
    within_video_step: float = 1.0
    cross_video_gap: float = 10.0
    drift_persistence: float = 0.95
    pan_spike: tuple[int, float] | None = None
    seed: int = 0
    mask_width: int = 32
    mask_height: int = 24

    def validate(self) -> None:
        if self.dim < 1 or self.prefix_len < 1 or self.suffix_len < 1 or self.interjection_len < 0:
            raise InvalidSpec("dim, prefix and suffix must be positive; interjection non-negative")
        if not self.cross_video_gap > 0:
            raise InvalidSpec("cross_video_gap must be > 0")
        if not self.within_video_step >= 0:
            raise InvalidSpec("within_video_step must be >= 0")
        if not 0 <= self.drift_persistence <= 1:
            raise InvalidSpec("drift_persistence must be in [0, 1]")
        if self.mask_width < 4 or self.mask_height < 4:
            raise InvalidSpec("masks must be at least 4x4")
        if self.pan_spike is not None:
            index, magnitude = self.pan_spike
            n_total = self.prefix_len + self.interjection_len + self.suffix_len
            in_interjection = self.prefix_len <= index < self.prefix_len + self.interjection_len
            if not 1 <= index < n_total or in_interjection:
                raise InvalidSpec(f"pan spike at frame {index} is not a clean frame after frame 0")
            if magnitude < 0:
                raise InvalidSpec("pan spike magnitude must be >= 0")


def _unit(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _drift(steps: np.ndarray, persistence: float) -> np.ndarray:
    out = np.empty_like(steps)
    acc = np.zeros(steps.shape[1:])
    for t, step in enumerate(steps):
        acc = persistence * acc + step
        out[t] = acc
    return out


def _rect_masks(rng, n, width, height):
    rh, rw = max(2, height // 3), max(2, width // 4)
    y = int(rng.integers(0, height - rh + 1))
    x = int(rng.integers(0, width - rw + 1))
    masks = []
    for _ in range(n):
        m = np.zeros((height, width), dtype=bool)
        m[y:y + rh, x:x + rw] = True
        masks.append(BinaryMask(m))
        y = int(np.clip(y + rng.integers(-1, 2), 0, height - rh))
        x = int(np.clip(x + rng.integers(-1, 2), 0, width - rw))
    return masks


def synth_sources(spec: SynthSpec, sample: int = 0) -> tuple[SourceVideo, SourceVideo]:
    """The two source videos behind one synthetic sample."""
    spec.validate()
    rng = np.random.default_rng([spec.seed, spec.interjection_len, sample])
    d = spec.dim
    n_a = spec.prefix_len + spec.suffix_len
    n_b = spec.interjection_len

    base_a = rng.standard_normal(d)
    base_b = base_a + spec.cross_video_gap * np.sqrt(d) * _unit(rng, d)
    steps_a = spec.within_video_step * rng.standard_normal((n_a, d))
    steps_a[0] = 0.0
    if spec.pan_spike is not None:
        index, magnitude = spec.pan_spike
        a_index = index if index < spec.prefix_len else index - spec.interjection_len
        steps_a[a_index] += magnitude * np.sqrt(d) * _unit(rng, d)
    steps_b = spec.within_video_step * rng.standard_normal((n_b, d))
    if n_b:
        steps_b[0] = 0.0
    a = base_a + _drift(steps_a, spec.drift_persistence)
    b = base_b + _drift(steps_b, spec.drift_persistence)

    masks_a = _rect_masks(rng, n_a, spec.mask_width, spec.mask_height)
    empty = BinaryMask.empty(spec.mask_width, spec.mask_height)
    src_a = SourceVideo([FrameEmbedding(i, v) for i, v in enumerate(a)], masks_a, f"synth{sample}a")
    src_b = SourceVideo([FrameEmbedding(i, v) for i, v in enumerate(b)], [empty] * n_b, f"synth{sample}b")
    return src_a, src_b


def synth_sample(spec: SynthSpec, sample: int = 0) -> SplicedSequence:
    a, b = synth_sources(spec, sample)
    out = splice(SpliceSpec(spec.prefix_len, spec.suffix_len, spec.interjection_len, a.name, b.name,
                            seed=spec.seed), a, b)
    out.meta.update(sample=sample, synth=asdict(spec))
    return out


def synth_corpus(spec: SynthSpec, n_samples: int = 25) -> list[SplicedSequence]:
    if n_samples < 1:
        raise InvalidSpec("n_samples must be positive")
    spec.validate()
    return [synth_sample(spec, k) for k in range(n_samples)]


def standard_corpus(lengths: Sequence[int] = STANDARD_LENGTHS, n_samples: int = 25, seed: int = 0,
                    **synth_options) -> dict[int, list[SplicedSequence]]:
    """One synthetic corpus per interjection length, keyed by length."""
    return {n: synth_corpus(SynthSpec(interjection_len=n, seed=seed, **synth_options), n_samples)
            for n in lengths}


# -- simulated VOS predictor ------------------------------------------------

def simulate_predictions(sample: SplicedSequence, written: Sequence[Sequence[int]] | None = None,
                         max_bleed: int = 3, latch_rate: float = 0.35, seed: int = 0) -> list[BinaryMask]:
    """Stand-in for a memory-based VOS model's raw mask output.

    On a ``latch_rate`` share of interjection frames the model latches onto a
    distractor blob and predicts nothing on the rest. On the
    other frames it returns the ground truth, dilated in proportion to the
    share of interjection frames in its memory at that point. ``written[i]``
    lists the frame indices held in memory when frame ``i`` is predicted.
    """
    h, w = sample.masks[0].height, sample.masks[0].width
    rng = np.random.default_rng([seed, len(sample), int(sample.meta.get("sample", 0))])
    dh, dw = max(1, h // 5), max(1, w // 5)
    y, x = int(rng.integers(0, h - dh + 1)), int(rng.integers(0, w - dw + 1))
    distractor = np.zeros((h, w), dtype=bool)
    distractor[y:y + dh, x:x + dw] = True
    flags = sample.interjection_flags()
    latched = rng.random(len(sample)) < latch_rate
    empty = BinaryMask.empty(w, h)

    preds = []
    for i, (mask, flagged) in enumerate(zip(sample.masks, flags)):
        if flagged:
            preds.append(BinaryMask(distractor) if latched[i] else empty)
            continue
        memory = written[i] if written is not None else []
        contamination = sum(flags[j] for j in memory) / len(memory) if memory else 0.0
        bleed = int(round(contamination * max_bleed))
        if bleed and mask.count():
            grown = ndimage.binary_dilation(mask.pixels, iterations=bleed)
            preds.append(BinaryMask(grown))
        else:
            preds.append(mask)
    return preds


# -- corpus layout ----------------------------------------------------------

def sample_id(interjection_len: int, k: int) -> str:
    return f"len{interjection_len:04d}_{k:03d}"


def write_sample(directory, sample: SplicedSequence) -> None:
    os.makedirs(directory, exist_ok=True)
    write_sequence(os.path.join(directory, "emb.bin"), sample.embeddings)
    write_masks(os.path.join(directory, "mask.bin"), sample.masks)
    write_labels(os.path.join(directory, "labels.txt"), sample.labels)
    manifest = {"prefix_len": sample.prefix_len, "interjection_len": sample.interjection_len,
                "suffix_len": sample.suffix_len, "frames": len(sample),
                "dim": sample.embeddings[0].dim, "meta": sample.meta}
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_sample(directory) -> SplicedSequence:
    embeddings = read_sequence(os.path.join(directory, "emb.bin"))
    masks = read_masks(os.path.join(directory, "mask.bin"))
    labels = read_labels(os.path.join(directory, "labels.txt"))
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    if not len(embeddings) == len(masks) == len(labels):
        raise LengthMismatch(f"{directory}: {len(embeddings)} embeddings, {len(masks)} masks, {len(labels)} labels")
    return SplicedSequence(embeddings, masks, labels, manifest["prefix_len"], manifest["interjection_len"],
                           manifest["suffix_len"], manifest.get("meta", {}))


def write_corpus(directory, corpus: dict[int, list[SplicedSequence]]) -> list[str]:
    ids = []
    for length, samples in corpus.items():
        for k, sample in enumerate(samples):
            sid = sample_id(length, k)
            write_sample(os.path.join(directory, sid), sample)
            ids.append(sid)
    return ids


def read_corpus(directory) -> dict[str, SplicedSequence]:
    """All samples under ``directory`` keyed by sample id, in sorted order."""
    out = {}
    for name in sorted(os.listdir(directory)):
        path = os.path.join(directory, name)
        if os.path.isfile(os.path.join(path, "manifest.json")):
            out[name] = read_sample(path)
    return out
