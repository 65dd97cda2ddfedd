#!/usr/bin/env python3
"""Why tree structure matters: a task no flat model can learn.

Every sentence is the same 7-token sequence (pads drawn identically for
both classes), so bags of words and word order carry zero signal.  The
label lives in one dependency edge: does "trigger" attach under
"anchor" or under "decoy"?  The depth-2 convolution window sees that
edge directly; a bag-of-embeddings model with the identical classifier
head sees nothing.
"""

from treeconv.config import TrainConfig
from treeconv.protocols import run_structural_experiment
from treeconv.synthetic import make_structural_corpus

task = make_structural_corpus(n_train=160, n_test=80, n_e=8, seed=0)
pos = next(t for t in task.train if t.sentence_label == 1)
neg = next(t for t in task.train if t.sentence_label == 0)
print("positive sentence:", " ".join(pos.words()))
print("negative sentence:", " ".join(neg.words()))


def head_of(tree, word):
    for v, node in enumerate(tree.nodes):
        if word in [tree.nodes[c].word for c in node.children]:
            return node.word
    return None


print(f'  positive: "trigger" attaches under {head_of(pos, "trigger")!r}')
print(f'  negative: "trigger" attaches under {head_of(neg, "trigger")!r}')

config = TrainConfig(variant="d", n_e=8, n_c=16, n_h=8, classes=2,
                     batch_size=16, learning_rate=0.2, l2=1e-4,
                     max_epochs=40, pooling="kslot", k=2, seed=0,
                     train_embeddings=False).validate()
print("\ntraining d-TBCNN (2-slot pooling) and the flat baseline ...")
result = run_structural_experiment(task, config)
print(f"  d-TBCNN test accuracy:          {result.tree_accuracy:.3f}")
print(f"  bag-of-embeddings test accuracy: {result.baseline_accuracy:.3f} "
      "(chance is 0.5)")
