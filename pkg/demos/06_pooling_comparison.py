#!/usr/bin/env python3
"""Pooling comparison protocol: five random initializations per
{variant x pooling} configuration, reported as mean +- std.

The shared hyperparameters are fixed in advance rather than tuned per
cell, so the table compares pooling strategies on equal footing.
"""

from treeconv.config import TrainConfig
from treeconv.protocols import format_comparison_table, pooling_comparison
from treeconv.rae_pretrain import PretrainConfig, pretrain
from treeconv.synthetic import make_overfit_corpus

corpus = make_overfit_corpus(n_sentences=30, classes=3, n_e=8, seed=1)
rae = pretrain(corpus.con_trees, corpus.table,
               PretrainConfig(max_epochs=3, seed=1))

base = TrainConfig(variant="d", n_e=8, n_c=12, n_h=8, classes=3,
                   batch_size=10, learning_rate=0.2, l2=0.0,
                   max_epochs=8, k=2, seed=0, train_embeddings=True)

print("training 4 configurations x 5 seeds on the toy corpus ...\n")
rows = pooling_comparison(corpus, rae, base, seeds=range(5))
print("accuracy averaged over 5 random initializations:")
print(format_comparison_table(rows))
