"""Standard RL environment bindings for the deskworld benchmark core.

Importing this package registers the "Meta-World/..." environment IDs
(idempotently); :func:`make` then builds any registered ID into a handle
whose observable values are byte-identical to the core's native outputs.
"""

from bridgeworld.bridge import (
    ENV_REGISTRY,
    NAMESPACE,
    BridgedEnv,
    BridgedVectorEnv,
    RegisteredId,
    UnknownIdError,
    attach_to_gymnasium,
    make,
    register_ids,
    registered_ids,
)
from bridgeworld.spaces import Box, action_space, observation_space

__all__ = [
    "ENV_REGISTRY",
    "NAMESPACE",
    "Box",
    "BridgedEnv",
    "BridgedVectorEnv",
    "RegisteredId",
    "UnknownIdError",
    "action_space",
    "attach_to_gymnasium",
    "make",
    "observation_space",
    "register_ids",
    "registered_ids",
]

register_ids()
