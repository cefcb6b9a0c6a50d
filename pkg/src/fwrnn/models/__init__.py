from .batch import SequenceBatch
from .cells import (
    ForwardTrace,
    backward,
    batch_loss,
    bptt,
    forward,
    indrnn_bptt,
    indrnn_forward,
    predict,
    rnn_bptt,
    rnn_forward,
)
from .params import ModelSpec, ParamSet, init_params, zero_params
from .tbptt import Segment, tbptt_forward, tbptt_segments

__all__ = [
    "ForwardTrace",
    "ModelSpec",
    "ParamSet",
    "Segment",
    "SequenceBatch",
    "backward",
    "batch_loss",
    "bptt",
    "forward",
    "indrnn_bptt",
    "indrnn_forward",
    "init_params",
    "predict",
    "rnn_bptt",
    "rnn_forward",
    "tbptt_forward",
    "tbptt_segments",
    "zero_params",
]
