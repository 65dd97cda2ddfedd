"""Minibatch SGD training with validation-based model selection, plus the
finite-difference gradient checker and length-bucketed evaluation.

Per-sentence gradients within a batch are accumulated into one buffer in
a fixed parameter order, then averaged, so two runs with the same seed
produce identical checkpoints.  The learning rate halves after two
epochs without a validation improvement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .classifier_head import transfer_5_to_2
from .config import VARIANT_C, VARIANT_D, TrainConfig
from .corpus_io import (
    CONSTITUENCY,
    DepTypeInventory,
    EmbeddingTable,
    ParseTree,
    Vocabulary,
    build_dep_inventory,
    extract_subsentences,
)
from .errors import ConfigError, ContractError
from .network import SentenceClassifier, TrainedModel, init_model
from .rae_pretrain import CompositionParams
from .tensor_core import Tape, grad_of

# re-exported for convenience: the config type lives in config.py
__all__ = [
    "TrainConfig", "TrainReport", "train", "evaluate", "gradient_check",
    "GradCheckReport", "EvalReport", "default_length_buckets", "iter_batches",
]

PLATEAU_EPOCHS = 2


@dataclass
class TrainReport:
    train_loss: List[float] = field(default_factory=list)
    val_accuracy: List[float] = field(default_factory=list)
    best_epoch: int = 0
    wall_time: float = 0.0


def iter_batches(n: int, batch_size: int, rng) -> Iterator[np.ndarray]:
    """Seeded per-epoch shuffle cut into batches; covers each index once."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _training_samples(trees: Sequence[ParseTree],
                      config: TrainConfig) -> List[ParseTree]:
    """Expand tagged constituents into individual samples (train only)."""
    if config.variant != VARIANT_C or not config.use_subsentences:
        return [t for t in trees]
    samples: List[ParseTree] = []
    for tree in trees:
        subs = extract_subsentences(tree)
        samples.extend(subs)
        if tree.nodes[tree.root].label is None and tree.sentence_label is not None:
            samples.append(tree)
    return samples


def train(train_trees: Sequence[ParseTree], val_trees: Sequence[ParseTree],
          vocab: Vocabulary, table: EmbeddingTable, config: TrainConfig,
          rae: Optional[CompositionParams] = None,
          inventory: Optional[DepTypeInventory] = None,
          label_names: Optional[List[str]] = None,
          log: Optional[Callable[[str], None]] = None,
          ) -> Tuple[TrainedModel, TrainReport]:
    """SGD on the mean batch loss; returns the best-validation checkpoint.

    With train_embeddings off, the embedding table comes back
    bit-identical.  Constituency node vectors are always frozen (they
    belong to the pretrained composition), so train_embeddings only
    applies to the dependency variant.
    """
    config.validate()
    if not train_trees or not val_trees:
        raise ConfigError("train and validation splits must both be non-empty")
    if config.variant == VARIANT_C and rae is None:
        raise ConfigError("constituency training needs pretrained composition "
                          "parameters (run the autoencoder pretraining first)")
    if config.variant == VARIANT_D and inventory is None:
        inventory = build_dep_inventory(train_trees)

    samples = _training_samples(train_trees, config)
    for tree in samples:
        if tree.sentence_label is None:
            raise ConfigError("every training sample needs a label")
    for tree in val_trees:
        if tree.sentence_label is None:
            raise ConfigError("every validation sentence needs a label")

    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    params = init_model(config, table, inventory, rng)
    classifier = SentenceClassifier(config, params, table,
                                    inventory=inventory, rae=rae)
    named = params.named()

    report = TrainReport()
    best_acc = -1.0
    best_loss = float("inf")
    best_state = params.copy_arrays()
    lr = config.learning_rate
    stale = 0

    for epoch in range(1, config.max_epochs + 1):
        epoch_loss = 0.0
        for batch in iter_batches(len(samples), config.batch_size, rng):
            sums = {name: np.zeros_like(p.data) for name, p in named}
            for i in batch:
                tree = samples[int(i)]
                tape = Tape()
                value, _ = classifier.loss_on(tape, tree, tree.sentence_label,
                                              mode="train", rng=rng)
                epoch_loss += value.total
                grads = tape.backward(value.node)
                for name, p in named:
                    g = grads.get(p)
                    if g is not None:
                        sums[name] += g
            scale = lr / len(batch)
            for name, p in named:
                p.data -= scale * sums[name]

        train_loss = epoch_loss / len(samples)
        val_acc = evaluate(classifier, val_trees).accuracy
        report.train_loss.append(train_loss)
        report.val_accuracy.append(val_acc)
        if log is not None:
            log(f"epoch {epoch} train_loss {train_loss:.6f} val_acc {val_acc:.4f}")

        # checkpoint selection: best validation accuracy, ties broken by
        # the lower training loss (matters when the validation split is
        # too small to move)
        if val_acc > best_acc or (val_acc == best_acc and train_loss < best_loss):
            report.best_epoch = epoch
            best_state = params.copy_arrays()
            best_loss = train_loss
        if val_acc > best_acc:
            best_acc = val_acc
            stale = 0
        else:
            stale += 1
            if stale >= PLATEAU_EPOCHS:
                lr *= 0.5
                stale = 0

    params.load_arrays(best_state)
    if params.embeddings is not None:
        table_out = EmbeddingTable(params.embeddings.data.copy())
    else:
        table_out = table
    report.wall_time = time.perf_counter() - started
    model = TrainedModel(config=config, params=params, vocab=vocab,
                         table=table_out, inventory=inventory, rae=rae,
                         label_names=label_names)
    return model, report


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass
class BucketAccuracy:
    label: str
    correct: int
    total: int

    @property
    def accuracy(self) -> Optional[float]:
        if self.total == 0:
            return None
        return self.correct / self.total


@dataclass
class EvalReport:
    correct: int
    total: int
    buckets: List[BucketAccuracy]

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


def default_length_buckets(granularity: int = 5,
                           groups: int = 7) -> List[int]:
    """Boundaries for `groups` length groups of width `granularity`;
    the tails merge into the first and last group."""
    return [granularity * (i + 1) for i in range(groups - 1)]


def _bucket_labels(boundaries: Sequence[int]) -> List[str]:
    labels = []
    lo = 1
    for b in boundaries:
        labels.append(f"{lo}-{b}")
        lo = b + 1
    labels.append(f"{lo}+")
    return labels


def evaluate(classifier, trees: Sequence[ParseTree],
             buckets: Optional[Sequence[int]] = None,
             transfer_binary: bool = False) -> EvalReport:
    """Root-label accuracy, overall and per sentence-length bucket.

    Only whole sentences participate; `buckets` holds upper boundaries
    (defaults to 7 groups at granularity 5).  With transfer_binary, a
    5-class sentiment model is reinterpreted for binary gold labels.
    """
    boundaries = list(buckets) if buckets is not None else default_length_buckets()
    labels = _bucket_labels(boundaries)
    stats = [BucketAccuracy(label=lab, correct=0, total=0) for lab in labels]
    correct = 0
    total = 0
    for tree in trees:
        if tree.sentence_label is None:
            raise ContractError("evaluation needs root labels on every sentence")
        pred = classifier.predict(tree)
        if transfer_binary:
            pred = transfer_5_to_2(pred.probabilities)
        hit = int(pred.predicted == tree.sentence_label)
        correct += hit
        total += 1
        length = tree.word_count()
        slot = sum(1 for b in boundaries if length > b)
        stats[slot].correct += hit
        stats[slot].total += 1
    if total == 0:
        raise ContractError("evaluation corpus is empty")
    return EvalReport(correct=correct, total=total, buckets=stats)


def format_eval_report(report: EvalReport) -> str:
    lines = [f"overall accuracy {report.accuracy:.4f} "
             f"({report.correct}/{report.total})"]
    for bucket in report.buckets:
        if bucket.total == 0:
            lines.append(f"length {bucket.label} no sentences")
        else:
            lines.append(f"length {bucket.label} accuracy "
                         f"{bucket.accuracy:.4f} ({bucket.correct}/{bucket.total})")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

@dataclass
class GradCheckReport:
    group_errors: Dict[str, float]
    checked: int

    @property
    def max_relative_error(self) -> float:
        return max(self.group_errors.values()) if self.group_errors else 0.0

    def format(self) -> str:
        lines = [f"{name} max_rel_err {err:.3e}"
                 for name, err in sorted(self.group_errors.items())]
        lines.append(f"overall max_rel_err {self.max_relative_error:.3e} "
                     f"({self.checked} scalars checked)")
        return "\n".join(lines)


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


SAMPLED_CHECK_THRESHOLD = 10_000
SAMPLE_FRACTION = 0.01


def gradient_check(classifier: SentenceClassifier, tree: ParseTree, gold: int,
                   epsilon: float = 1e-5, rng=None,
                   corrupt: bool = False) -> GradCheckReport:
    """Central differences against analytic gradients, dropout off.

    Every scalar parameter is checked unless the model exceeds 10^4
    scalars, in which case a random 1% sample per parameter is used.
    `corrupt` deliberately damages one analytic gradient (a negative
    control for the CLI exit-code contract).
    """
    named = classifier.params.named()

    def loss_value() -> float:
        tape = Tape()
        value, _ = classifier.loss_on(tape, tree, gold, mode="eval")
        return value.total

    tape = Tape()
    value, _ = classifier.loss_on(tape, tree, gold, mode="eval")
    grads = tape.backward(value.node)
    analytic = {name: grad_of(grads, p) for name, p in named}
    if corrupt:
        first = named[0][0]
        analytic[first] = analytic[first] + 0.5

    total_scalars = sum(p.data.size for _, p in named)
    sample = total_scalars > SAMPLED_CHECK_THRESHOLD
    if sample and rng is None:
        rng = np.random.default_rng(0)

    report = GradCheckReport(group_errors={}, checked=0)
    for name, p in named:
        if sample:
            count = max(1, int(round(SAMPLE_FRACTION * p.data.size)))
            indices = rng.choice(p.data.size, size=count, replace=False)
        else:
            indices = range(p.data.size)
        worst = 0.0
        for index in indices:
            original = p.data.flat[index]
            p.data.flat[index] = original + epsilon
            hi = loss_value()
            p.data.flat[index] = original - epsilon
            lo = loss_value()
            p.data.flat[index] = original
            fd = (hi - lo) / (2.0 * epsilon)
            worst = max(worst, relative_error(analytic[name].flat[index], fd))
            report.checked += 1
        report.group_errors[name] = worst
    return report
