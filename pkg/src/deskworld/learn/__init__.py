"""Desk-scale learning stack: autodiff, MLPs, Adam, SAC variants, PCGrad."""

from deskworld.learn.autodiff import Tensor, as_tensor, backward, param
from deskworld.learn.errors import ParameterError, TrainingError
from deskworld.learn.nets import (
    init_mlp,
    init_multihead_actor,
    mlp_backward,
    mlp_forward,
    multihead_action,
)
from deskworld.learn.optim import Adam
from deskworld.learn.pcgrad import pcgrad_project, project_gradient
from deskworld.learn.replay import Batch, ReplayBuffer
from deskworld.learn.sac import SoftActorCritic
from deskworld.learn.checkpoint import (
    CHECKPOINT_VERSION,
    load_checkpoint,
    save_checkpoint,
)
from deskworld.learn.training import TrainConfig, TrainResult, train

__all__ = [
    "Adam",
    "Batch",
    "CHECKPOINT_VERSION",
    "ParameterError",
    "ReplayBuffer",
    "SoftActorCritic",
    "Tensor",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "as_tensor",
    "backward",
    "init_mlp",
    "init_multihead_actor",
    "load_checkpoint",
    "mlp_backward",
    "mlp_forward",
    "multihead_action",
    "param",
    "pcgrad_project",
    "project_gradient",
    "save_checkpoint",
    "train",
]
