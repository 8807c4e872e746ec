"""Tree scoring: prioritize merged, annotated trees for composition.

A weighted average of three signals: fraction of node weight with exact
matches (weight 3), fraction with matches under relaxed conditions
(weight 1), and the ratio of remaining nodes to pre-merge nodes (weight 2).
Node weight is its token count, damped by a multiplier depending on what
kind of match the node carries.
"""

from __future__ import annotations

from dataclasses import dataclass

from .deptree import DepNode, DepTree

__all__ = ["TreeScore", "score_tree"]

DEFAULT_WEIGHTS = (3.0, 1.0, 2.0)
DEFAULT_MULTIPLIERS = (1.0, 0.9, 0.8)  # lexical entry, entity/numeral, special word


@dataclass(frozen=True, slots=True)
class TreeScore:
    exact_fraction: float
    relaxed_fraction: float
    node_ratio: float
    total: float


def _node_multiplier(node: DepNode, exact_only: bool, multipliers) -> float:
    entry_mult, entity_mult, special_mult = multipliers
    entries = node.entry_candidates
    entities = node.entity_candidates
    if exact_only:
        if any(m.exact for m in entries):
            return entry_mult
        if any(m.similarity >= 1.0 for m in entities) or node.numeric_value is not None:
            return entity_mult
    else:
        if entries:
            return entry_mult
        if entities or node.numeric_value is not None:
            return entity_mult
    if node.special_mark is not None:
        return special_mult
    return 0.0


def score_tree(
    tree: DepTree,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
    multipliers: tuple[float, float, float] = DEFAULT_MULTIPLIERS,
) -> TreeScore:
    """Score an annotated tree; requires matcher annotations to be present."""
    total_weight = 0.0
    exact_sum = 0.0
    relaxed_sum = 0.0
    for node in tree.nodes:
        weight = float(len(node.tokens))
        total_weight += weight
        exact_sum += weight * _node_multiplier(node, exact_only=True, multipliers=multipliers)
        relaxed_sum += weight * _node_multiplier(node, exact_only=False, multipliers=multipliers)
    exact_fraction = exact_sum / total_weight if total_weight else 0.0
    relaxed_fraction = relaxed_sum / total_weight if total_weight else 0.0
    node_ratio = len(tree.nodes) / tree.original_node_count
    w_exact, w_relaxed, w_ratio = weights
    total = (
        w_exact * exact_fraction + w_relaxed * relaxed_fraction + w_ratio * node_ratio
    ) / (w_exact + w_relaxed + w_ratio)
    return TreeScore(
        exact_fraction=exact_fraction,
        relaxed_fraction=relaxed_fraction,
        node_ratio=node_ratio,
        total=total,
    )
