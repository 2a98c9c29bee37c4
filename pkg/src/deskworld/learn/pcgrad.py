"""Gradient surgery: project conflicting per-task gradients before summing."""

from __future__ import annotations

import numpy as np

__all__ = ["pcgrad_project", "project_gradient"]


def project_gradient(g: np.ndarray, against: np.ndarray) -> np.ndarray:
    """One pairwise surgery step: remove from ``g`` its component along
    ``against`` when the two conflict (negative dot product).

    Non-conflicting inputs come back as a bit-identical copy.  A conflicting
    partner with exactly zero norm cannot define a projection direction, so
    ``g`` is also returned unchanged in that case.
    """
    g = np.asarray(g, dtype=np.float64)
    against = np.asarray(against, dtype=np.float64)
    if g.shape != against.shape or g.ndim != 1:
        raise ValueError("gradients must be 1-D and share one dimensionality")
    dot = g @ against
    if dot < 0.0:
        norm_sq = against @ against
        if norm_sq != 0.0:
            return g - (dot / norm_sq) * against
    return g.copy()


def pcgrad_project(grads, rng_seed) -> np.ndarray:
    """Combine per-task flattened gradients with pairwise conflict projection.

    For each task i, the other tasks are visited in a random order drawn from
    ``rng_seed`` (a fresh permutation per task).  Whenever the running gradient
    g_i conflicts with an original g_j (negative dot product), g_i loses its
    component along g_j: ``g_i <- g_i - (g_i.g_j / |g_j|^2) g_j``, leaving it
    orthogonal to that g_j.  The surgered gradients are summed in task order.

    A conflicting partner with exactly zero norm cannot define a projection
    direction, so that pair is skipped.  When no pair conflicts the result is
    bit-identical to summing the inputs in task order.
    """
    gs = [np.asarray(g, dtype=np.float64) for g in grads]
    if not gs:
        raise ValueError("need at least one gradient")
    dim = gs[0].shape
    for g in gs:
        if g.ndim != 1 or g.shape != dim:
            raise ValueError("gradients must be 1-D and share one dimensionality")
        if not np.all(np.isfinite(g)):
            raise ValueError("gradients must be finite")
    if len(gs) == 1:
        return gs[0].copy()

    rng = np.random.default_rng(rng_seed)
    combined = np.zeros_like(gs[0])
    n = len(gs)
    for i in range(n):
        gi = gs[i].copy()
        for j in rng.permutation(n):
            if j != i:
                gi = project_gradient(gi, gs[j])
        combined += gi
    return combined
