"""Satisfaction calculus for composing dense manipulation rewards.

Each geometric condition ("gripper near handle", "object at goal") is mapped
to a satisfaction degree in (0, 1], where 1 means the condition holds.
Degrees are combined with the Hamacher product (conjunction) and weighted
sums (disjunction), then scaled by 10, so a fully satisfied constraint tree
yields exactly 10 and every reachable state yields a value in (0, 10].

All operations accept either Python floats or numpy arrays and broadcast
elementwise, which is what the batched range checks rely on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ToleranceSpec",
    "long_tail_sigmoid",
    "tolerance",
    "hamacher_product",
    "weighted_disjunction",
    "scale_reward",
    "ToleranceNode",
    "ConjunctionNode",
    "DisjunctionNode",
    "RewardTree",
]

REWARD_SCALE = 10.0
WEIGHT_SUM_TOL = 1e-9


def _maybe_scalar(out):
    """Collapse 0-d numpy results back to plain floats."""
    arr = np.asarray(out)
    return float(arr) if arr.ndim == 0 else arr


def long_tail_sigmoid(x, value_at_1: float):
    """Map a normalized violation distance x >= 0 into (0, 1].

    Returns 1 at x=0, ``value_at_1`` at x=1, and decays like 1/x^2 for large
    violations, so a badly violated condition still contributes a small
    positive degree (the long tail) instead of flattening to zero.
    """
    if not 0.0 < value_at_1 < 1.0:
        raise ValueError(f"value_at_1 must lie in (0, 1), got {value_at_1}")
    if np.any(np.asarray(x) < 0):
        raise ValueError("violation distance must be non-negative")
    scale_sq = 1.0 / value_at_1 - 1.0
    return _maybe_scalar(1.0 / (1.0 + np.square(x) * scale_sq))


@dataclass(frozen=True)
class ToleranceSpec:
    """Acceptance band [lower, upper] plus a decay margin outside it.

    ``margin`` is the distance past a bound at which the satisfaction degree
    has fallen to ``value_at_margin``. ``upper`` may be ``inf`` for one-sided
    (keep-out style) conditions.
    """

    lower: float
    upper: float
    margin: float
    value_at_margin: float = 0.1

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        if not self.margin > 0:
            raise ValueError(f"margin must be positive, got {self.margin}")
        if not 0.0 < self.value_at_margin < 1.0:
            raise ValueError(
                f"value_at_margin must lie in (0, 1), got {self.value_at_margin}"
            )


def tolerance(x, spec: ToleranceSpec):
    """Satisfaction degree of ``x`` against an acceptance band.

    1 inside [lower, upper]; outside, the long-tail sigmoid of the distance
    to the nearest bound, normalized by the margin.
    """
    x = np.asarray(x, dtype=float)
    # skip infinite bounds entirely so no inf ever enters the arithmetic
    zero = np.zeros_like(x)
    below = np.maximum(spec.lower - x, zero) if np.isfinite(spec.lower) else zero
    above = np.maximum(x - spec.upper, zero) if np.isfinite(spec.upper) else zero
    distance = below + above
    return _maybe_scalar(long_tail_sigmoid(distance / spec.margin, spec.value_at_margin))


def _check_unit_interval(name, value):
    arr = np.asarray(value)
    if np.any(arr <= 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in (0, 1]")


def hamacher_product(a, b):
    """Fuzzy conjunction T(a, b) = ab / (a + b - ab) on (0, 1].

    1 is the exact identity, the product is commutative, monotone in each
    argument and bounded above by min(a, b).
    """
    _check_unit_interval("a", a)
    _check_unit_interval("b", b)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    prod = a * b
    general = prod / (a + b - prod)
    # (a + b) - ab can round a hair below 1 when one input is 1, which would
    # break the exact identity law; restore it explicitly
    return _maybe_scalar(np.where(a == 1.0, b, np.where(b == 1.0, a, general)))


def weighted_disjunction(values: Sequence, weights: Sequence[float]):
    """Fuzzy disjunction: convex combination of satisfaction degrees."""
    if len(values) == 0 or len(values) != len(weights):
        raise ValueError(
            f"need matching non-empty lists, got {len(values)} values "
            f"and {len(weights)} weights"
        )
    weights = [float(w) for w in weights]
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    if abs(sum(weights) - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1, got {sum(weights)}")
    for v in values:
        _check_unit_interval("value", v)
    total = weights[0] * np.asarray(values[0], dtype=float)
    for v, w in zip(values[1:], weights[1:]):
        total = total + w * np.asarray(v, dtype=float)
    return _maybe_scalar(total)


def scale_reward(f):
    """Final rescale of a satisfaction degree into the (0, 10] reward range."""
    _check_unit_interval("f", f)
    return _maybe_scalar(REWARD_SCALE * np.asarray(f, dtype=float))


# ---------------------------------------------------------------------------
# Constraint trees
#
# A task's reward is a small tree whose leaves read named scalar features of
# the state (distances, closure amounts) and whose internal nodes are the
# conjunction/disjunction operators above.  Trees serialize to JSON so the
# CLI can dump the exact reward structure of every task.


class ToleranceNode:
    """Leaf: tolerance of a named state feature."""

    kind = "tolerance"

    def __init__(self, feature: str, spec: ToleranceSpec):
        self.feature = feature
        self.spec = spec

    def evaluate(self, features):
        return tolerance(features[self.feature], self.spec)

    def to_json(self):
        return {
            "kind": self.kind,
            "feature": self.feature,
            "lower": self.spec.lower,
            "upper": self.spec.upper,
            "margin": self.spec.margin,
            "value_at_margin": self.spec.value_at_margin,
        }

    def required_features(self):
        return {self.feature}


class ConjunctionNode:
    """Hamacher conjunction of two or more children (left fold)."""

    kind = "conjunction"

    def __init__(self, children: Sequence):
        if len(children) < 2:
            raise ValueError("conjunction needs at least two children")
        self.children = list(children)

    def evaluate(self, features):
        acc = self.children[0].evaluate(features)
        for child in self.children[1:]:
            acc = hamacher_product(acc, child.evaluate(features))
        return acc

    def to_json(self):
        return {"kind": self.kind, "children": [c.to_json() for c in self.children]}

    def required_features(self):
        return set().union(*(c.required_features() for c in self.children))


class DisjunctionNode:
    """Weighted-sum disjunction of children; weights must sum to 1."""

    kind = "disjunction"

    def __init__(self, children: Sequence, weights: Sequence[float]):
        if len(children) != len(weights) or not children:
            raise ValueError("children and weights must match and be non-empty")
        if abs(sum(weights) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {sum(weights)}")
        self.children = list(children)
        self.weights = [float(w) for w in weights]

    def evaluate(self, features):
        return weighted_disjunction(
            [c.evaluate(features) for c in self.children], self.weights
        )

    def to_json(self):
        return {
            "kind": self.kind,
            "weights": self.weights,
            "children": [c.to_json() for c in self.children],
        }

    def required_features(self):
        return set().union(*(c.required_features() for c in self.children))


def _node_from_json(doc) -> ToleranceNode | ConjunctionNode | DisjunctionNode:
    kind = doc["kind"]
    if kind == "tolerance":
        spec = ToleranceSpec(
            lower=float(doc["lower"]),
            upper=float(doc["upper"]),
            margin=float(doc["margin"]),
            value_at_margin=float(doc.get("value_at_margin", 0.1)),
        )
        return ToleranceNode(doc["feature"], spec)
    if kind == "conjunction":
        return ConjunctionNode([_node_from_json(c) for c in doc["children"]])
    if kind == "disjunction":
        return DisjunctionNode(
            [_node_from_json(c) for c in doc["children"]], doc["weights"]
        )
    raise ValueError(f"unknown constraint node kind {kind!r}")


class RewardTree:
    """A constraint tree plus the final x10 scaling."""

    SCHEMA_VERSION = 1

    def __init__(self, root):
        self.root = root

    def unscaled(self, features):
        """Satisfaction degree in (0, 1] for a feature mapping."""
        return self.root.evaluate(features)

    def evaluate(self, features):
        """Reward in (0, 10] for a feature mapping (scalars or arrays)."""
        return scale_reward(self.root.evaluate(features))

    def required_features(self):
        return self.root.required_features()

    def to_json(self):
        return {"version": self.SCHEMA_VERSION, "root": self.root.to_json()}

    @classmethod
    def from_json(cls, doc) -> "RewardTree":
        version = doc.get("version")
        if version != cls.SCHEMA_VERSION:
            raise ValueError(f"unsupported reward tree schema version {version!r}")
        return cls(_node_from_json(doc["root"]))

    def dumps(self, **kwargs) -> str:
        return json.dumps(self.to_json(), **kwargs)

    @classmethod
    def loads(cls, text: str) -> "RewardTree":
        return cls.from_json(json.loads(text))


def saturated(tree: RewardTree, features) -> bool:
    """True when every constraint in the tree evaluates to exactly 1."""
    return tree.unscaled(features) == 1.0


def reach_band(upper: float, margin: float, value_at_margin: float = 0.1) -> ToleranceSpec:
    """Common spec: satisfied at or below ``upper``, decaying over ``margin``."""
    return ToleranceSpec(lower=0.0, upper=upper, margin=margin, value_at_margin=value_at_margin)


def keep_out_band(radius: float, margin: float, value_at_margin: float = 0.1) -> ToleranceSpec:
    """Spec satisfied at or beyond ``radius`` from something to avoid."""
    return ToleranceSpec(lower=radius, upper=math.inf, margin=margin, value_at_margin=value_at_margin)
