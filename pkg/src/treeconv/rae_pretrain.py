"""Recursive-autoencoder vectors for constituency non-leaf nodes.

Constituency constituents have no word embedding of their own, so each
non-leaf vector is composed from its children, p = tanh(W.[c1;c2] + b),
and the composition weights are pretrained to reconstruct the children
from p.  After pretraining the per-node vectors are frozen: tree
convolution reads them as constants and no gradient ever reaches them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .corpus_io import CONSTITUENCY, EmbeddingTable, ParseTree
from .errors import ContractError, ShapeError
from .tensor_core import Tape, Tensor, grad_of, parameter


@dataclass
class CompositionParams:
    """Composition and reconstruction weights for the recursive encoder."""

    W_comp: Tensor  # (n_e, 2*n_e)
    b_comp: Tensor  # (n_e,)
    W_rec: Tensor   # (2*n_e, n_e)
    b_rec: Tensor   # (2*n_e,)

    @property
    def n_e(self) -> int:
        return self.W_comp.data.shape[0]

    def named(self) -> List[Tuple[str, Tensor]]:
        return [
            ("rae.W_comp", self.W_comp),
            ("rae.b_comp", self.b_comp),
            ("rae.W_rec", self.W_rec),
            ("rae.b_rec", self.b_rec),
        ]


@dataclass
class PretrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 100
    max_epochs: int = 30
    holdout_fraction: float = 0.1
    patience: Optional[int] = 3  # epochs without held-out improvement; None = off
    seed: int = 0


def _uniform_init(rng, shape):
    bound = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-bound, bound, size=shape)


def init_composition(n_e: int, rng) -> CompositionParams:
    return CompositionParams(
        W_comp=parameter(_uniform_init(rng, (n_e, 2 * n_e)), "rae.W_comp"),
        b_comp=parameter(np.zeros(n_e), "rae.b_comp"),
        W_rec=parameter(_uniform_init(rng, (2 * n_e, n_e)), "rae.W_rec"),
        b_rec=parameter(np.zeros(2 * n_e), "rae.b_rec"),
    )


def compose(c1: np.ndarray, c2: np.ndarray, params: CompositionParams) -> np.ndarray:
    """tanh(W.[c1;c2] + b) for two child vectors."""
    c1 = np.asarray(c1, dtype=np.float64)
    c2 = np.asarray(c2, dtype=np.float64)
    n_e = params.n_e
    if c1.shape != (n_e,) or c2.shape != (n_e,):
        raise ShapeError(
            f"compose: children must have dim {n_e}, "
            f"got {c1.shape} and {c2.shape}"
        )
    return np.tanh(params.W_comp.data @ np.concatenate([c1, c2])
                   + params.b_comp.data)


def annotate(tree: ParseTree, params: CompositionParams,
             table: EmbeddingTable) -> np.ndarray:
    """Frozen per-node vectors: embedding rows at leaves, compositions above.

    A unary non-leaf composes its only child with a zero vector, matching
    the absent-child convention used by the convolution window.  Returns
    an (n_nodes, n_e) array aligned with the tree's node indices.
    """
    if tree.kind != CONSTITUENCY:
        raise ContractError("annotate expects a constituency tree")
    n_e = params.n_e
    if table.dim != n_e:
        raise ShapeError(f"embedding dim {table.dim} != composition dim {n_e}")
    out = np.zeros((len(tree.nodes), n_e))

    def visit(v: int) -> np.ndarray:
        node = tree.nodes[v]
        if not node.children:
            if node.embedding_index is None:
                raise ContractError(
                    f"leaf {node.word!r} has no embedding index; "
                    "bind_vocabulary first"
                )
            vec = table.row(node.embedding_index)
        else:
            kids = [visit(c) for c in node.children]
            c2 = kids[1] if len(kids) > 1 else np.zeros(n_e)
            vec = compose(kids[0], c2, params)
        out[v] = vec
        return out[v]

    visit(tree.root)
    return out


def _tree_recon_loss(tape: Tape, tree: ParseTree, params: CompositionParams,
                     table: EmbeddingTable) -> Tuple[List[Tensor], int]:
    """Per-non-leaf reconstruction losses, built bottom-up on one tape."""
    n_e = params.n_e
    zero = Tensor(np.zeros(n_e))
    losses: List[Tensor] = []

    def visit(v: int) -> Tensor:
        node = tree.nodes[v]
        if not node.children:
            if node.embedding_index is None:
                raise ContractError(
                    f"leaf {node.word!r} has no embedding index; "
                    "bind_vocabulary first"
                )
            return Tensor(table.row(node.embedding_index))
        kids = [visit(c) for c in node.children]
        c1 = kids[0]
        c2 = kids[1] if len(kids) > 1 else zero
        target = tape.concat([c1, c2])
        p = tape.tanh(tape.add(tape.matvec(params.W_comp, target), params.b_comp))
        recon = tape.tanh(tape.add(tape.matvec(params.W_rec, p), params.b_rec))
        losses.append(tape.sumsq(tape.sub(target, recon)))
        return p

    visit(tree.root)
    return losses, len(losses)


def reconstruction_loss(trees: Sequence[ParseTree], params: CompositionParams,
                        table: EmbeddingTable) -> float:
    """Mean reconstruction loss per non-leaf node over a corpus."""
    total = 0.0
    count = 0
    for tree in trees:
        tape = Tape()
        losses, n = _tree_recon_loss(tape, tree, params, table)
        total += sum(l.item() for l in losses)
        count += n
    if count == 0:
        raise ContractError("corpus has no non-leaf nodes to reconstruct")
    return total / count


def pretrain(trees: Sequence[ParseTree], table: EmbeddingTable,
             config: PretrainConfig = PretrainConfig(),
             n_e: Optional[int] = None) -> CompositionParams:
    """Minibatch SGD on the children-reconstruction objective.

    Holds out a fraction of the corpus and returns the parameters from
    the epoch with the best held-out loss, so the returned held-out loss
    never exceeds the initial one.  Gradients are averaged per non-leaf
    node in the batch.
    """
    trees = [t for t in trees]
    for t in trees:
        if t.kind != CONSTITUENCY:
            raise ContractError("pretraining expects constituency trees")
    if not any(node.children for t in trees for node in t.nodes):
        raise ContractError("corpus has no non-leaf nodes to reconstruct")

    rng = np.random.default_rng(config.seed)
    params = init_composition(n_e if n_e is not None else table.dim, rng)

    if len(trees) >= 2:
        order = rng.permutation(len(trees))
        n_hold = max(1, round(config.holdout_fraction * len(trees)))
        holdout = [trees[i] for i in order[:n_hold]]
        train = [trees[i] for i in order[n_hold:]]
        if not any(node.children for t in train for node in t.nodes):
            train = trees
    else:
        holdout = train = trees

    named = params.named()
    best_loss = reconstruction_loss(holdout, params, table)
    best_state = {name: p.data.copy() for name, p in named}
    stale = 0

    for _ in range(config.max_epochs):
        order = rng.permutation(len(train))
        for start in range(0, len(order), config.batch_size):
            batch = [train[i] for i in order[start:start + config.batch_size]]
            sums = {name: np.zeros_like(p.data) for name, p in named}
            node_count = 0
            for tree in batch:
                tape = Tape()
                losses, n = _tree_recon_loss(tape, tree, params, table)
                if not losses:
                    continue
                total = tape.weighted_sum(losses)
                grads = tape.backward(total)
                node_count += n
                for name, p in named:
                    sums[name] += grad_of(grads, p)
            if node_count == 0:
                continue
            for name, p in named:
                p.data -= config.learning_rate * (sums[name] / node_count)
        held = reconstruction_loss(holdout, params, table)
        if held < best_loss:
            best_loss = held
            best_state = {name: p.data.copy() for name, p in named}
            stale = 0
        else:
            stale += 1
            if config.patience is not None and stale >= config.patience:
                break

    for name, p in named:
        p.data = best_state[name]
    return params
