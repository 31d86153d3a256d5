"""Per-frame classifier features derived from the distance streams.

Features are computed in streaming order and depend on earlier
classifications: the interjection run length feeds the MDR threshold, and by
default frames flagged as interjections are kept out of the context window.
:class:`StreamFeaturizer` holds that state; :func:`featurize_stream` replays a
fixed verdict sequence through it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distance import DistanceConfig, WindowStats, regularized_distance
from .embed_io import FrameEmbedding
from .errors import DimMismatch, InvalidFeature, LengthMismatch, TooShort

RATIO_EPS = 1e-9
MDRT_START = 0.86
MDRT_SLOPE = 0.003
MDRT_FLOOR = 0.50

FEATURE_NAMES = (
    "st0", "lt0", "st1_ratio", "st1_diff", "lt1_ratio", "lt1_diff",
    "mdr", "mdr_st", "run_length",
)
_FIRST_ORDER = frozenset({"st1_ratio", "st1_diff", "lt1_ratio", "lt1_diff"})


@dataclass(frozen=True)
class FrameFeatures:
    frame_index: int
    st0: float
    lt0: float
    st1_ratio: float = 1.0
    st1_diff: float = 0.0
    lt1_ratio: float = 1.0
    lt1_diff: float = 0.0
    mdr: float = 0.0
    mdr_st: float = 0.0
    run_length: int = 0
    first_order_valid: bool = False
    mdr_valid: bool = False
    mdr_st_valid: bool = False

    def get(self, name: str) -> float:
        """Look up a feature by name, refusing values that are still placeholders."""
        if name not in FEATURE_NAMES:
            raise InvalidFeature(f"unknown feature {name!r}")
        if name in _FIRST_ORDER and not self.first_order_valid:
            raise InvalidFeature(f"{name} is not valid at frame {self.frame_index}")
        if name == "mdr" and not self.mdr_valid:
            raise InvalidFeature(f"mdr is not valid at frame {self.frame_index}")
        if name == "mdr_st" and not self.mdr_st_valid:
            raise InvalidFeature(f"mdr_st is not valid at frame {self.frame_index}")
        return getattr(self, name)


@dataclass(frozen=True)
class MdrState:
    max_distance_seen: float = 0.0
    initialized_from: int = 0


def first_order(current: float, previous: float) -> tuple[float, float]:
    """Ratio and difference between consecutive distances of one window size.

    Equal distances give a ratio of exactly 1, including two zeros.
    """
    if current == previous:
        return 1.0, 0.0
    return current / max(previous, RATIO_EPS), current - previous


def update_mdr(state: MdrState, current_distance: float) -> tuple[float, MdrState]:
    mdr = current_distance / max(state.max_distance_seen, RATIO_EPS)
    new_state = MdrState(max(state.max_distance_seen, current_distance), state.initialized_from + 1)
    return mdr, new_state


def mdrt(run_length) -> float:
    """MDR threshold for an interjection that has lasted ``run_length`` frames."""
    return max(MDRT_START - MDRT_SLOPE * run_length, MDRT_FLOOR)


class StreamFeaturizer:
    """Incremental feature extraction for one stream.

    Call :meth:`push` with each frame in order and :meth:`commit` with the
    verdict for that frame before pushing the next one. Frame 0 needs no
    commit; it is the annotated frame and always joins the history.

    With ``exclude_flagged`` set, frames committed as interjections do not
    enter the context window and do not become the "previous" distance of
    the first-order features. ``freeze_mdr`` additionally keeps their
    distances out of the running MDR maximum.
    """

    def __init__(self, short_window: int = 1, long_window: int = 5, variance_floor: float = 1e-6,
                 exclude_flagged: bool = True, freeze_mdr: bool = False, cache: dict | None = None):
        self.short_cfg = DistanceConfig(short_window, variance_floor)
        self.long_cfg = DistanceConfig(long_window, variance_floor)
        self.exclude_flagged = exclude_flagged
        self.freeze_mdr = freeze_mdr
        self.cache = cache
        self._frames: list[np.ndarray] = []
        self._history: list[int] = []
        self._prev: tuple[float, float] | None = None
        self._mdr_long = MdrState()
        self._mdr_short = MdrState()
        self._pending = None
        self.run_length = 0

    @property
    def mdr_state(self) -> MdrState:
        return self._mdr_long

    @property
    def short_mdr_state(self) -> MdrState:
        return self._mdr_short

    def _distance(self, index: int, window: tuple[int, ...], cfg: DistanceConfig) -> float:
        key = (index, window)
        if self.cache is not None and key in self.cache:
            return self.cache[key]
        block = np.stack([self._frames[j] for j in window])
        stats = WindowStats(block.mean(axis=0), block.var(axis=0), len(window))
        d = regularized_distance(self._frames[index], stats, cfg)
        if self.cache is not None:
            self.cache[key] = d
        return d

    def push(self, frame: FrameEmbedding | np.ndarray) -> FrameFeatures | None:
        if self._pending is not None:
            raise RuntimeError("commit the previous frame before pushing another")
        values = frame.values if isinstance(frame, FrameEmbedding) else frame
        values = np.asarray(values, dtype=np.float64)
        if self._frames and values.shape != self._frames[0].shape:
            raise DimMismatch(f"frame dim {values.shape} != stream dim {self._frames[0].shape}")
        index = len(self._frames)
        self._frames.append(values)
        if index == 0:
            self._history.append(0)
            return None

        st0 = self._distance(index, tuple(self._history[-self.short_cfg.window:]), self.short_cfg)
        lt0 = self._distance(index, tuple(self._history[-self.long_cfg.window:]), self.long_cfg)
        fields = dict(frame_index=index, st0=st0, lt0=lt0, run_length=self.run_length)
        if self._prev is not None:
            fields["st1_ratio"], fields["st1_diff"] = first_order(st0, self._prev[0])
            fields["lt1_ratio"], fields["lt1_diff"] = first_order(lt0, self._prev[1])
            fields["first_order_valid"] = True
        mdr, long_state = update_mdr(self._mdr_long, lt0)
        mdr_st, short_state = update_mdr(self._mdr_short, st0)
        fields.update(mdr=mdr, mdr_valid=long_state.initialized_from >= 2,
                      mdr_st=mdr_st, mdr_st_valid=short_state.initialized_from >= 2)
        features = FrameFeatures(**fields)
        self._pending = (features, long_state, short_state)
        return features

    def commit(self, is_interjection: bool) -> None:
        if self._pending is None:
            raise RuntimeError("nothing to commit")
        features, long_state, short_state = self._pending
        self._pending = None
        keep = not (is_interjection and self.exclude_flagged)
        if keep:
            self._history.append(features.frame_index)
            self._prev = (features.st0, features.lt0)
        if not (is_interjection and self.freeze_mdr):
            self._mdr_long, self._mdr_short = long_state, short_state
        self.run_length = self.run_length + 1 if is_interjection else 0


def featurize_stream(frames: Sequence[FrameEmbedding], short_window: int = 1, long_window: int = 5,
                     verdicts: Sequence[bool] | None = None, **options) -> list[FrameFeatures]:
    """Features for frames ``1..n-1`` given the classifications fed back so far.

    ``verdicts[k]`` is the interjection flag of frame ``k + 1``; by default
    every frame is treated as non-interjection.
    """
    if len(frames) < 2:
        raise TooShort("need at least 2 frames")
    if verdicts is None:
        verdicts = [False] * (len(frames) - 1)
    if len(verdicts) != len(frames) - 1:
        raise LengthMismatch(f"{len(verdicts)} verdicts for {len(frames) - 1} frames")
    fz = StreamFeaturizer(short_window, long_window, **options)
    fz.push(frames[0])
    out = []
    for frame, flag in zip(frames[1:], verdicts):
        out.append(fz.push(frame))
        fz.commit(bool(flag))
    return out

