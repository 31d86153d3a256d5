"""Simulated working-memory buffer gated by interjection verdicts."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .classifier import Verdict
from .embed_io import BinaryMask
from .errors import LengthMismatch

DEFAULT_WRITE_PERIOD = 5


class Emitted(enum.Enum):
    PREDICTED = "P"
    FORCED_EMPTY = "E"


@dataclass
class MemoryBuffer:
    write_period: int = DEFAULT_WRITE_PERIOD
    capacity: int | None = None
    entries: deque = field(default_factory=deque)

    def write(self, frame_index: int, ref=None) -> None:
        self.entries.append((frame_index, ref))
        if self.capacity is not None and len(self.entries) > self.capacity:
            self.entries.popleft()

    @property
    def frame_indices(self) -> list[int]:
        return [i for i, _ in self.entries]


@dataclass(frozen=True)
class GateRecord:
    frame_index: int
    is_interjection: bool
    wrote_memory: bool
    emitted: Emitted


def run_gate(frames: Sequence | int, verdicts: Sequence[Verdict], write_period: int = DEFAULT_WRITE_PERIOD,
             capacity: int | None = None, strict_cadence: bool = False) -> tuple[MemoryBuffer, list[GateRecord]]:
    """Replay the memory-write schedule of a stream under ``verdicts``.

    Frame 0 is always written. A later frame is written once ``write_period``
    frames have passed since the last write and it is not flagged; a flagged
    frame defers the write to the next clean frame. ``strict_cadence`` instead
    writes only on multiples of the period, so flagged frames forfeit their slot.

    ``frames`` may be the frame list (entries keep a reference to each
    written frame) or just the frame count.
    """
    n = frames if isinstance(frames, int) else len(frames)
    if write_period < 1:
        raise ValueError("write_period must be >= 1")
    if len(verdicts) != n - 1:
        raise LengthMismatch(f"{len(verdicts)} verdicts for {n} frames")
    for k, v in enumerate(verdicts, 1):
        if v.frame_index != k:
            raise LengthMismatch(f"verdict {k - 1} is for frame {v.frame_index}, expected {k}")
    flags = [False] + [v.is_interjection for v in verdicts]
    buffer = MemoryBuffer(write_period, capacity)
    trace = []
    last_write = None
    for i, flagged in enumerate(flags):
        if i == 0:
            write = n > 0
        elif flagged:
            write = False
        elif strict_cadence:
            write = i % write_period == 0
        else:
            write = i - last_write >= write_period
        if write:
            buffer.write(i, None if isinstance(frames, int) else frames[i])
            last_write = i
        trace.append(GateRecord(i, flagged, write, Emitted.FORCED_EMPTY if flagged else Emitted.PREDICTED))
    return buffer, trace


def apply_gate_to_masks(predicted_masks: Sequence[BinaryMask], trace: Sequence[GateRecord]) -> list[BinaryMask]:
    if len(predicted_masks) != len(trace):
        raise LengthMismatch(f"{len(predicted_masks)} masks for {len(trace)} trace records")
    return [BinaryMask.empty(m.width, m.height) if r.emitted is Emitted.FORCED_EMPTY else m
            for m, r in zip(predicted_masks, trace)]


def write_trace(path, trace: Sequence[GateRecord]) -> None:
    """One ``frame_index verdict wrote emitted`` line per frame, e.g. ``12 I 0 E``."""
    with open(path, "w") as fh:
        for r in trace:
            fh.write(f"{r.frame_index} {'I' if r.is_interjection else 'N'} {int(r.wrote_memory)} {r.emitted.value}\n")


def read_trace(path) -> list[GateRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            idx, verdict, wrote, emitted = parts
            out.append(GateRecord(int(idx), verdict == "I", wrote == "1", Emitted(emitted)))
    return out
