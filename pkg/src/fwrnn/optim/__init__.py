from .baselines import AdamState, adam_step, clip_gradient, clip_step, sgd_step, step_decay
from .frank_wolfe import FwConfig, StepReport, fw_inner_loop, fw_outer_step, fw_step
from .trainer import OPTIMIZERS, TIMING_COLUMNS, TrainConfig, TrainingAborted, TrainRecord, evaluate, train

__all__ = [
    "AdamState",
    "FwConfig",
    "OPTIMIZERS",
    "StepReport",
    "TIMING_COLUMNS",
    "TrainConfig",
    "TrainRecord",
    "TrainingAborted",
    "adam_step",
    "clip_gradient",
    "clip_step",
    "evaluate",
    "fw_inner_loop",
    "fw_outer_step",
    "fw_step",
    "sgd_step",
    "step_decay",
    "train",
]
