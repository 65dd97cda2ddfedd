"""Dynamic max pooling over variable tree topologies.

Three slot-assignment heuristics compress a per-node feature map into a
fixed number of slots:

* global: every node into one slot;
* 3-slot (constituency): nodes above the depth threshold alpha*d go to
  TOP, the rest split LOWER_LEFT / LOWER_RIGHT by which root subtree
  holds them;
* k-slot (dependency): words allocated to k equal spans by position.

Pooling takes the per-dimension maximum within each slot and records
which node won every dimension (the provenance used for visualization
and for routing gradients).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .corpus_io import CONSTITUENCY, DEPENDENCY, ParseTree
from .errors import ContractError
from .tensor_core import Tape, Tensor
from .tree_conv import FeatureMap

GLOBAL = "global"
THREE_SLOT = "3slot"
K_SLOT = "kslot"

TOP, LOWER_LEFT, LOWER_RIGHT = 0, 1, 2
THREE_SLOT_NAMES = ("TOP", "LOWER_LEFT", "LOWER_RIGHT")

DEFAULT_ALPHA = 0.6


@dataclass
class SlotAssignment:
    strategy: str
    slot_of: List[int]   # node index -> slot id
    slot_count: int
    alpha: Optional[float] = None
    k: Optional[int] = None

    def members(self, slot: int) -> List[int]:
        return [v for v, s in enumerate(self.slot_of) if s == slot]


@dataclass
class PooledVector:
    """Per-slot pooled features; empty slots hold zero vectors."""

    slots: List[Tensor]

    @property
    def slot_count(self) -> int:
        return len(self.slots)

    @property
    def n_c(self) -> int:
        return self.slots[0].data.shape[0]

    def as_array(self) -> np.ndarray:
        return np.stack([s.data for s in self.slots])


@dataclass
class PoolProvenance:
    """Winning node index per slot and dimension (None for empty slots)."""

    winners: List[Optional[np.ndarray]]
    n_c: int

    @property
    def slot_count(self) -> int:
        return len(self.winners)

    def credited(self) -> Iterator[Tuple[int, int, int]]:
        """Yield (slot, dimension, winning node) for every credited dim."""
        for slot, arr in enumerate(self.winners):
            if arr is None:
                continue
            for dim, node in enumerate(arr):
                yield slot, dim, int(node)


def assign_global(tree: ParseTree) -> SlotAssignment:
    """Everything into one slot; applicable to any structure."""
    return SlotAssignment(strategy=GLOBAL, slot_of=[0] * len(tree.nodes),
                          slot_count=1)


def assign_three_slot(tree: ParseTree,
                      alpha: float = DEFAULT_ALPHA) -> SlotAssignment:
    """Depth-thresholded TOP plus lower-left / lower-right split.

    Nodes with depth_layer < alpha*d pool to TOP; lower nodes go by
    which of the root's child subtrees contains them.  The root itself
    is always TOP, which only matters for degenerate trees where
    alpha*d <= 1.
    """
    if tree.kind != CONSTITUENCY:
        raise ContractError("3-slot pooling is defined for constituency trees")
    threshold = alpha * tree.depth()
    side = {}  # node -> LOWER_LEFT or LOWER_RIGHT

    def paint(v: int, mark: int) -> None:
        side[v] = mark
        for c in tree.nodes[v].children:
            paint(c, mark)

    kids = tree.nodes[tree.root].children
    if kids:
        paint(kids[0], LOWER_LEFT)
    if len(kids) > 1:
        paint(kids[1], LOWER_RIGHT)

    slot_of = []
    for v, node in enumerate(tree.nodes):
        if v == tree.root or node.depth_layer < threshold:
            slot_of.append(TOP)
        else:
            slot_of.append(side[v])
    return SlotAssignment(strategy=THREE_SLOT, slot_of=slot_of,
                          slot_count=3, alpha=alpha)


def assign_k_slot(tree: ParseTree, k: int) -> SlotAssignment:
    """Equal allocation by word position: position i lands in slot
    ceil(i*k/n); positions on a boundary stay in the lower slot."""
    if tree.kind != DEPENDENCY:
        raise ContractError("k-slot pooling is defined for dependency trees")
    n = len(tree.nodes)
    if not 1 <= k <= n:
        raise ContractError(f"k-slot pooling needs 1 <= k <= n, got k={k}, n={n}")
    slot_of = []
    for node in tree.nodes:
        i = node.position
        slot_of.append((i * k + n - 1) // n - 1)  # ceil(i*k/n), 0-based
    return SlotAssignment(strategy=K_SLOT, slot_of=slot_of, slot_count=k, k=k)


def pool(tape: Tape, features: FeatureMap,
         assignment: SlotAssignment) -> Tuple[PooledVector, PoolProvenance]:
    """Dimension-wise max within each slot, with argmax provenance.

    Ties go to the lowest node index.  Empty slots pool to zero vectors
    and record no provenance.  Gradient flows only to winning entries.
    """
    if len(assignment.slot_of) != len(features):
        raise ContractError(
            f"assignment covers {len(assignment.slot_of)} nodes, "
            f"feature map has {len(features)}"
        )
    n_c = features.n_c
    slots: List[Tensor] = []
    winners: List[Optional[np.ndarray]] = []
    for slot in range(assignment.slot_count):
        members = assignment.members(slot)
        if not members:
            slots.append(Tensor(np.zeros(n_c)))
            winners.append(None)
            continue
        pooled, arg = tape.dimwise_max([features.vectors[v] for v in members])
        slots.append(pooled)
        winners.append(np.asarray(members)[arg])
    return PooledVector(slots=slots), PoolProvenance(winners=winners, n_c=n_c)
