"""Truncated backpropagation through time.

A sequence is cut into consecutive windows of ``segment_len`` steps (the last
one may be shorter). Each window starts from the final hidden state of the
previous one, evaluated under the parameters current at that moment and
treated as a constant, so gradients never cross a window boundary. Every window
is scored against the sequence label through the readout of its last state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

from .batch import SequenceBatch
from .cells import ForwardTrace, forward
from .params import ParamSet

__all__ = ["Segment", "tbptt_segments", "tbptt_forward"]


@dataclass(frozen=True)
class Segment:
    index: int
    start: int
    stop: int
    batch: SequenceBatch

    @property
    def length(self) -> int:
        return self.stop - self.start


def tbptt_segments(batch: SequenceBatch, segment_len: int) -> List[Segment]:
    if segment_len < 1:
        raise ValueError(f"segment length must be >= 1, got {segment_len}")
    steps = batch.steps
    bounds = [(s, min(s + segment_len, steps)) for s in range(0, steps, segment_len)]
    return [Segment(i, a, b, batch.window(a, b)) for i, (a, b) in enumerate(bounds)]


def tbptt_forward(params: ParamSet, batch: SequenceBatch, segment_len: int) -> List[ForwardTrace]:
    """Forward traces of every segment with carried states and fixed parameters."""
    traces, h0 = [], None
    for seg in tbptt_segments(batch, segment_len):
        trace = forward(params, seg.batch, h0)
        traces.append(trace)
        h0 = trace.final_states
    return traces

