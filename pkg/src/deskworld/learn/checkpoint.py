"""Versioned checkpoints: a compressed archive of named tensors + metadata."""

from __future__ import annotations

import json

import numpy as np

CHECKPOINT_VERSION = 1

__all__ = ["CHECKPOINT_VERSION", "save_checkpoint", "load_checkpoint"]


def save_checkpoint(path, params: dict[str, np.ndarray], metadata: dict | None = None) -> None:
    """Write named tensors plus a JSON metadata record to ``path`` (.npz)."""
    payload = {f"param::{name}": np.asarray(value) for name, value in params.items()}
    header = {
        "checkpoint_version": CHECKPOINT_VERSION,
        "metadata": metadata or {},
    }
    payload["__header__"] = np.frombuffer(
        json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **payload)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint, validating its version; returns (params, metadata)."""
    with np.load(path) as archive:
        if "__header__" not in archive:
            raise ValueError("not a checkpoint: missing header")
        header = json.loads(bytes(archive["__header__"]).decode("utf-8"))
        version = header.get("checkpoint_version")
        if version != CHECKPOINT_VERSION:
            raise ValueError(
                f"unsupported checkpoint version {version!r}; "
                f"this build reads version {CHECKPOINT_VERSION}"
            )
        params = {
            name[len("param::") :]: archive[name]
            for name in archive.files
            if name.startswith("param::")
        }
    return params, header["metadata"]
