"""MLPs and the multi-head actor over the autodiff engine.

Parameters live in flat ``dict[str, np.ndarray]`` maps with dotted names
(``"trunk.W0"``, ``"head3.Wm"``).  Forward passes come in two flavours: plain
numpy (for action selection and targets, no graph) and Tensor (for losses).
A parity test pins the two to identical outputs.

The multi-head actor shares a trunk across tasks and routes its features
through one affine head per task, selected by the task's one-hot descriptor.
Routing multiplies every head's output by its descriptor column, so gradients
reaching unselected heads are exactly zero.
"""

from __future__ import annotations

import numpy as np

from deskworld.learn import autodiff as ad
from deskworld.learn.autodiff import Tensor
from deskworld.learn.errors import ParameterError

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

__all__ = [
    "LOG_STD_MIN",
    "LOG_STD_MAX",
    "init_mlp",
    "init_multihead_actor",
    "mlp_forward",
    "mlp_forward_t",
    "mlp_backward",
    "multihead_action",
    "multihead_action_t",
    "head_count",
    "check_descriptor",
]


def _init_affine(rng: np.random.Generator, fan_in: int, fan_out: int):
    """Uniform fan-in init, the standard default for small dense layers."""
    bound = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    b = rng.uniform(-bound, bound, size=(fan_out,))
    return w, b


def init_mlp(
    rng: np.random.Generator,
    sizes: tuple[int, ...],
    prefix: str = "",
) -> dict[str, np.ndarray]:
    """Affine stack ``sizes[0] -> ... -> sizes[-1]`` named ``{prefix}W{i}/b{i}``."""
    if len(sizes) < 2:
        raise ParameterError("an MLP needs at least an input and an output size")
    params: dict[str, np.ndarray] = {}
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w, b = _init_affine(rng, fan_in, fan_out)
        params[f"{prefix}W{i}"] = w
        params[f"{prefix}b{i}"] = b
    return params


def _layer_count(params: dict, prefix: str) -> int:
    n = 0
    while f"{prefix}W{n}" in params:
        n += 1
    if n == 0:
        raise ParameterError(f"no layers found under prefix {prefix!r}")
    return n


def _check_input(x: np.ndarray, fan_in: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != fan_in:
        raise ParameterError(
            f"input must have shape (batch, {fan_in}), got {x.shape}"
        )
    return x


def mlp_forward(
    params: dict[str, np.ndarray],
    x: np.ndarray,
    prefix: str = "",
    activation: str = "relu",
) -> np.ndarray:
    """Plain-numpy forward: hidden activations, linear final layer."""
    n = _layer_count(params, prefix)
    x = _check_input(x, params[f"{prefix}W0"].shape[0])
    for i in range(n):
        x = x @ params[f"{prefix}W{i}"] + params[f"{prefix}b{i}"]
        if i < n - 1:
            if activation == "relu":
                x = np.maximum(x, 0.0)
            elif activation == "identity":
                pass
            else:
                raise ParameterError(f"unknown activation {activation!r}")
    return x


def mlp_forward_t(
    params: dict[str, Tensor],
    x,
    prefix: str = "",
    activation: str = "relu",
) -> Tensor:
    """Tensor forward mirroring ``mlp_forward`` for gradient computation."""
    n = _layer_count(params, prefix)
    h = ad.as_tensor(x)
    for i in range(n):
        h = ad.matmul(h, params[f"{prefix}W{i}"]) + params[f"{prefix}b{i}"]
        if i < n - 1:
            if activation == "relu":
                h = ad.relu(h)
            elif activation == "identity":
                pass
            else:
                raise ParameterError(f"unknown activation {activation!r}")
    return h


def _as_param_tensors(params: dict[str, np.ndarray]) -> dict[str, Tensor]:
    return {name: ad.param(value) for name, value in params.items()}


def mlp_backward(
    params: dict[str, np.ndarray],
    x: np.ndarray,
    output_grad: np.ndarray,
    prefix: str = "",
    activation: str = "relu",
) -> dict[str, np.ndarray]:
    """Exact parameter gradients of ``<mlp_forward(params, x), output_grad>``."""
    tensors = _as_param_tensors(params)
    out = mlp_forward_t(tensors, x, prefix=prefix, activation=activation)
    output_grad = np.asarray(output_grad, dtype=np.float64)
    if output_grad.shape != out.value.shape:
        raise ParameterError(
            f"output_grad must have shape {out.value.shape}, got {output_grad.shape}"
        )
    ad.backward(out, seed=output_grad)
    return {
        name: (t.grad if t.grad is not None else np.zeros_like(t.value))
        for name, t in tensors.items()
    }


def head_count(params: dict) -> int:
    k = 0
    while f"head{k}.Wm" in params:
        k += 1
    if k == 0:
        raise ParameterError("no action heads found")
    return k


def init_multihead_actor(
    rng: np.random.Generator,
    obs_dim: int,
    action_dim: int,
    task_count: int,
    hidden: tuple[int, ...],
) -> dict[str, np.ndarray]:
    """Shared trunk on obs+descriptor, one (mu, log_std) affine pair per task.

    The log-std head biases start at -0.5 so early exploration noise is
    moderate instead of unit scale.
    """
    if task_count < 1:
        raise ParameterError("need at least one task head")
    params = init_mlp(rng, (obs_dim + task_count, *hidden), prefix="trunk.")
    feat = hidden[-1]
    for k in range(task_count):
        wm, bm = _init_affine(rng, feat, action_dim)
        ws, bs = _init_affine(rng, feat, action_dim)
        params[f"head{k}.Wm"] = wm
        params[f"head{k}.bm"] = bm
        params[f"head{k}.Ws"] = ws
        params[f"head{k}.bs"] = bs - 0.5
    return params


def check_descriptor(descriptor: np.ndarray, task_count: int) -> np.ndarray:
    """Validate a batch of one-hot rows of length ``task_count``."""
    descriptor = np.asarray(descriptor, dtype=np.float64)
    if descriptor.ndim != 2 or descriptor.shape[1] != task_count:
        raise ParameterError(
            f"descriptor must have shape (batch, {task_count}), "
            f"got {descriptor.shape}"
        )
    ok = np.all(np.isin(descriptor, (0.0, 1.0))) and np.all(
        descriptor.sum(axis=1) == 1.0
    )
    if not ok:
        raise ParameterError("descriptor rows must be one-hot")
    return descriptor


def multihead_action(
    params: dict[str, np.ndarray],
    observation: np.ndarray,
    descriptor: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Squashed-Gaussian parameters (mu, log_std) routed by the descriptor."""
    k = head_count(params)
    descriptor = check_descriptor(descriptor, k)
    trunk_in_dim = params["trunk.W0"].shape[0]
    observation = _check_input(np.asarray(observation, float), trunk_in_dim - k)
    feats = mlp_forward(params, np.hstack([observation, descriptor]), prefix="trunk.")
    feats = np.maximum(feats, 0.0)
    mu = np.zeros((observation.shape[0], params["head0.Wm"].shape[1]))
    log_std = np.zeros_like(mu)
    for h in range(k):
        col = descriptor[:, h : h + 1]
        mu += col * (feats @ params[f"head{h}.Wm"] + params[f"head{h}.bm"])
        log_std += col * (feats @ params[f"head{h}.Ws"] + params[f"head{h}.bs"])
    return mu, np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)


def multihead_action_t(
    params: dict[str, Tensor],
    observation: np.ndarray,
    descriptor: np.ndarray,
) -> tuple[Tensor, Tensor]:
    """Tensor twin of ``multihead_action``; gradients to unselected heads are 0."""
    k = head_count(params)
    descriptor = check_descriptor(descriptor, k)
    x = np.hstack([np.asarray(observation, dtype=np.float64), descriptor])
    feats = ad.relu(mlp_forward_t(params, x, prefix="trunk."))
    mu = None
    log_std = None
    for h in range(k):
        col = descriptor[:, h : h + 1]
        head_mu = ad.mul(col, ad.matmul(feats, params[f"head{h}.Wm"]) + params[f"head{h}.bm"])
        head_ls = ad.mul(col, ad.matmul(feats, params[f"head{h}.Ws"]) + params[f"head{h}.bs"])
        mu = head_mu if mu is None else mu + head_mu
        log_std = head_ls if log_std is None else log_std + head_ls
    return mu, ad.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)
