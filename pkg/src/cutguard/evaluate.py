"""Region-wise segmentation metrics and the summary report tables.

Scores follow the DAVIS convention: J is the mask IoU, F the contour
F-measure with a small pixel tolerance, and J&F their mean on a 0-100 scale.
An empty prediction against an empty ground truth scores 1 on both.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .dataset import SplicedSequence
from .embed_io import BinaryMask, RegionLabel
from .errors import DimMismatch, EmptyRegion, LengthMismatch

TABLE_LENGTHS = (0, 4, 16, 128, 512)
_CROSS = ndimage.generate_binary_structure(2, 1)


def _pair(pred: BinaryMask, truth: BinaryMask):
    if pred.pixels.shape != truth.pixels.shape:
        raise DimMismatch(f"mask shapes differ: {pred.pixels.shape} vs {truth.pixels.shape}")
    return pred.pixels, truth.pixels


def jaccard(pred: BinaryMask, truth: BinaryMask) -> float:
    p, t = _pair(pred, truth)
    union = np.count_nonzero(p | t)
    if union == 0:
        return 1.0
    return np.count_nonzero(p & t) / union


def boundary_pixels(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels with a 4-neighbour that is background or off-image."""
    return mask & ~ndimage.binary_erosion(mask, structure=_CROSS, border_value=0)


def _near(boundary: np.ndarray, tolerance: int) -> np.ndarray:
    if tolerance == 0 or not boundary.any():
        return boundary
    square = np.ones((2 * tolerance + 1, 2 * tolerance + 1), dtype=bool)
    return ndimage.binary_dilation(boundary, structure=square)


def boundary_f(pred: BinaryMask, truth: BinaryMask, tolerance: int = 1) -> float:
    """Contour F-measure; boundary pixels match within Chebyshev ``tolerance``."""
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    p, t = _pair(pred, truth)
    pb, tb = boundary_pixels(p), boundary_pixels(t)
    n_pred, n_truth = np.count_nonzero(pb), np.count_nonzero(tb)
    if n_pred == 0 and n_truth == 0:
        return 1.0
    if n_pred == 0 or n_truth == 0:
        return 0.0
    precision = np.count_nonzero(pb & _near(tb, tolerance)) / n_pred
    recall = np.count_nonzero(tb & _near(pb, tolerance)) / n_truth
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def pixel_f1(pred: BinaryMask, truth: BinaryMask) -> float:
    p, t = _pair(pred, truth)
    tp = np.count_nonzero(p & t)
    wrong = np.count_nonzero(p ^ t)
    if tp == 0 and wrong == 0:
        return 1.0
    return 2 * tp / (2 * tp + wrong)


def false_positive_pct(preds: Sequence[BinaryMask]) -> float:
    """Share of pixels predicted as object over a region whose truth is empty."""
    if not preds:
        raise EmptyRegion("no frames in region")
    positive = sum(m.count() for m in preds)
    total = sum(m.pixels.size for m in preds)
    return 100.0 * positive / total


@dataclass
class RegionReport:
    """Scores of one sample; a region that is absent scores ``nan``."""

    full_jf: float
    interjection_fp_pct: float
    suffix_jf: float
    prefix_jf: float
    frame_jf: list[float] = field(default_factory=list, repr=False)


def frame_jf(pred: BinaryMask, truth: BinaryMask, tolerance: int = 1, f_mode: str = "contour") -> float:
    if f_mode == "contour":
        f = boundary_f(pred, truth, tolerance)
    elif f_mode == "pixel":
        f = pixel_f1(pred, truth)
    else:
        raise ValueError(f"unknown f_mode {f_mode!r}")
    return (jaccard(pred, truth) + f) / 2


def evaluate_sample(sample: SplicedSequence, preds: Sequence[BinaryMask], tolerance: int = 1,
                    f_mode: str = "contour") -> RegionReport:
    if len(preds) != len(sample):
        raise LengthMismatch(f"{len(preds)} predictions for {len(sample)} frames")
    scores = [frame_jf(p, t, tolerance, f_mode) for p, t in zip(preds, sample.masks)]

    def region_mean(label):
        idx = sample.region(label)
        return 100.0 * float(np.mean([scores[i] for i in idx])) if idx else math.nan

    interjection = sample.region(RegionLabel.INTERJECTION)
    fp = false_positive_pct([preds[i] for i in interjection]) if interjection else math.nan
    return RegionReport(
        full_jf=100.0 * float(np.mean(scores)),
        interjection_fp_pct=fp,
        suffix_jf=region_mean(RegionLabel.SUFFIX),
        prefix_jf=region_mean(RegionLabel.PREFIX),
        frame_jf=scores,
    )


# -- tables -----------------------------------------------------------------

@dataclass
class ReportRow:
    config: str
    length: int
    full_jf: float
    fp_pct: float
    suffix_jf: float
    prefix_jf: float
    n_samples: int


def aggregate(reports: Iterable[tuple[str, int, RegionReport]]) -> list[ReportRow]:
    """Average per-sample reports into one row per (config, length)."""
    groups: dict[tuple[str, int], list[RegionReport]] = {}
    for config, length, report in reports:
        groups.setdefault((config, int(length)), []).append(report)

    def mean(values):
        values = [v for v in values if not math.isnan(v)]
        return float(np.mean(values)) if values else math.nan

    return [ReportRow(config, length,
                      mean(r.full_jf for r in group),
                      mean(r.interjection_fp_pct for r in group),
                      mean(r.suffix_jf for r in group),
                      mean(r.prefix_jf for r in group),
                      len(group))
            for (config, length), group in groups.items()]


def _cell(value: float, digits: int) -> str:
    return "-" if value is None or math.isnan(value) else f"{value:.{digits}f}"


def _table(title: str, rows: list[ReportRow], lengths: list[int], attr: str, digits: int) -> str:
    configs = list(dict.fromkeys(r.config for r in rows))
    cells = {(r.config, r.length): getattr(r, attr) for r in rows}
    header = ["Model"] + [f"{n}-Frames" + (" (Clean Video)" if n == 0 else "") for n in lengths]
    body = [[c] + [_cell(cells.get((c, n), math.nan), digits) for n in lengths] for c in configs]
    widths = [max(len(line[k]) for line in [header] + body) for k in range(len(header))]

    def fmt(line):
        return "| " + " | ".join(s.rjust(w) if k else s.ljust(w) for k, (s, w) in enumerate(zip(line, widths))) + " |"

    rule = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    out = [title, rule, fmt(header), rule] + [fmt(line) for line in body] + [rule]
    return "\n".join(out)


def report_tables(reports: Iterable[tuple[str, int, RegionReport]] | Sequence[ReportRow]) -> tuple[str, str]:
    """Three aligned text tables (full J&F, interjection FP %, suffix J&F) plus CSV."""
    reports = list(reports)
    rows = reports if reports and isinstance(reports[0], ReportRow) else aggregate(reports)
    extra = sorted({r.length for r in rows} - set(TABLE_LENGTHS))
    lengths = list(TABLE_LENGTHS) + extra
    text = "\n\n".join([
        _table("Full Video Performance (J&F Scores)", rows, lengths, "full_jf", 1),
        _table("Video Interjection Performance (False Positive %)", rows, lengths, "fp_pct", 2),
        _table("Video Suffix Performance (J&F Scores)", rows, lengths, "suffix_jf", 1),
    ]) + "\n"

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["config", "length", "full_jf", "fp_pct", "suffix_jf", "prefix_jf", "n_samples"])
    order = {c: k for k, c in enumerate(dict.fromkeys(r.config for r in rows))}
    for r in sorted(rows, key=lambda r: (order[r.config], r.length)):
        writer.writerow([r.config, r.length] + [("" if math.isnan(v) else repr(v))
                                                for v in (r.full_jf, r.fp_pct, r.suffix_jf, r.prefix_jf)]
                        + [r.n_samples])
    return text, buf.getvalue()
