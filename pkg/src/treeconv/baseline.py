"""Flat bag-of-embeddings baseline: the same hidden+softmax head fed by
the mean word vector, with no tree structure anywhere.  Serves as the
control in the structural-signal experiment."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import classifier_head
from .classifier_head import HeadParams, PredictionOutput
from .config import TrainConfig
from .corpus_io import EmbeddingTable, ParseTree
from .errors import ConfigError, ContractError
from .tensor_core import Tape, Tensor, parameter
from .trainer import TrainReport, evaluate, iter_batches


class BagOfEmbeddings:
    """Mean of word vectors into ReLU hidden into softmax."""

    def __init__(self, head: HeadParams, table: EmbeddingTable,
                 embeddings: Optional[Tensor] = None):
        self.head = head
        self.table = table
        self.embeddings = embeddings

    def named(self) -> List[Tuple[str, Tensor]]:
        out = list(self.head.named())
        if self.embeddings is not None:
            out.append(("embeddings", self.embeddings))
        return out

    def _mean_vector(self, tape: Tape, tree: ParseTree) -> Tensor:
        rows = []
        for node in tree.nodes:
            if node.word is None:
                continue
            if node.embedding_index is None:
                raise ContractError("bind_vocabulary before using the baseline")
            if self.embeddings is not None:
                rows.append(tape.take_row(self.embeddings, node.embedding_index))
            else:
                rows.append(Tensor(self.table.row(node.embedding_index)))
        if not rows:
            raise ContractError("sentence has no words")
        total = rows[0]
        for r in rows[1:]:
            total = tape.add(total, r)
        return tape.scale(total, 1.0 / len(rows))

    def _forward(self, tape: Tape, tree: ParseTree) -> PredictionOutput:
        mean = self._mean_vector(tape, tree)
        h = tape.relu(tape.add(tape.matvec(self.head.W_h, mean), self.head.b_h))
        logits = tape.add(tape.matvec(self.head.W_o, h), self.head.b_o)
        from .tensor_core import softmax_probs
        probs = softmax_probs(logits.data)
        return PredictionOutput(probabilities=probs,
                                predicted=int(np.argmax(probs)),
                                logits=logits)

    def predict(self, tree: ParseTree) -> PredictionOutput:
        return self._forward(Tape(), tree)


def train_bag_baseline(train_trees: Sequence[ParseTree],
                       val_trees: Sequence[ParseTree],
                       table: EmbeddingTable, config: TrainConfig,
                       ) -> Tuple[BagOfEmbeddings, TrainReport]:
    """SGD loop for the baseline, mirroring the tree model's regime."""
    if not train_trees or not val_trees:
        raise ConfigError("train and validation splits must both be non-empty")
    rng = np.random.default_rng(config.seed)
    head = classifier_head.init_head(config.n_h, config.n_e, config.classes, rng)
    embeddings = None
    if config.train_embeddings:
        embeddings = parameter(table.vectors.copy(), "embeddings")
    model = BagOfEmbeddings(head, table, embeddings)
    named = model.named()

    report = TrainReport()
    best_acc = -1.0
    best = {name: p.data.copy() for name, p in named}
    for epoch in range(1, config.max_epochs + 1):
        epoch_loss = 0.0
        for batch in iter_batches(len(train_trees), config.batch_size, rng):
            sums = {name: np.zeros_like(p.data) for name, p in named}
            for i in batch:
                tree = train_trees[int(i)]
                tape = Tape()
                pred = model._forward(tape, tree)
                value = classifier_head.loss(
                    tape, pred, tree.sentence_label,
                    [model.head.W_h, model.head.W_o], config.l2)
                epoch_loss += value.total
                grads = tape.backward(value.node)
                for name, p in named:
                    g = grads.get(p)
                    if g is not None:
                        sums[name] += g
            scale = config.learning_rate / len(batch)
            for name, p in named:
                p.data -= scale * sums[name]
        report.train_loss.append(epoch_loss / len(train_trees))
        acc = evaluate(model, val_trees).accuracy
        report.val_accuracy.append(acc)
        if acc > best_acc:
            best_acc = acc
            report.best_epoch = epoch
            best = {name: p.data.copy() for name, p in named}
    for name, p in named:
        p.data = best[name]
    return model, report
