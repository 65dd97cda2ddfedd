"""Fully connected hidden layer plus softmax output over pooled slots,
with the regularized training loss and the 5-way-to-binary transfer."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ContractError, ShapeError
from .pooling import PooledVector
from .tensor_core import Tape, Tensor, parameter, softmax_probs

log = logging.getLogger(__name__)

SENTIMENT_CLASS_ORDER = (
    "strongly_negative", "negative", "neutral", "positive", "strongly_positive"
)


@dataclass
class HeadParams:
    W_h: Tensor  # (n_h, slot_count * n_c)
    b_h: Tensor  # (n_h,)
    W_o: Tensor  # (classes, n_h)
    b_o: Tensor  # (classes,)

    @property
    def n_h(self) -> int:
        return self.W_h.data.shape[0]

    @property
    def classes(self) -> int:
        return self.W_o.data.shape[0]

    def named(self) -> List[Tuple[str, Tensor]]:
        return [("head.W_h", self.W_h), ("head.b_h", self.b_h),
                ("head.W_o", self.W_o), ("head.b_o", self.b_o)]


def init_head(n_h: int, in_width: int, classes: int, rng) -> HeadParams:
    def uniform(shape):
        bound = np.sqrt(6.0 / (shape[0] + shape[1]))
        return rng.uniform(-bound, bound, size=shape)

    return HeadParams(
        W_h=parameter(uniform((n_h, in_width)), "head.W_h"),
        b_h=parameter(np.zeros(n_h), "head.b_h"),
        W_o=parameter(uniform((classes, n_h)), "head.W_o"),
        b_o=parameter(np.zeros(classes), "head.b_o"),
    )


@dataclass
class PredictionOutput:
    probabilities: np.ndarray
    predicted: int
    logits: Optional[Tensor] = None
    note: Optional[str] = None


@dataclass
class LossValue:
    cross_entropy: float
    l2_term: float
    total: float
    node: Optional[Tensor] = None  # tape scalar for backward
    clamped: bool = False


def forward(tape: Tape, pooled: PooledVector, params: HeadParams,
            hidden_mask: Optional[np.ndarray] = None) -> PredictionOutput:
    """h = ReLU(W_h.concat(slots) + b_h), probabilities = softmax(W_o.h + b_o).

    `hidden_mask` is an inverted-dropout mask for training mode; pass
    None when evaluating.  Softmax is computed with max subtraction.
    """
    concat = tape.concat(pooled.slots)
    if params.W_h.data.shape[1] != concat.data.shape[0]:
        raise ShapeError(
            f"head expects input width {params.W_h.data.shape[1]}, "
            f"pooled slots concatenate to {concat.data.shape[0]}"
        )
    h = tape.relu(tape.add(tape.matvec(params.W_h, concat), params.b_h))
    if hidden_mask is not None:
        h = tape.mul(h, Tensor(hidden_mask))
    logits = tape.add(tape.matvec(params.W_o, h), params.b_o)
    probs = softmax_probs(logits.data)
    return PredictionOutput(probabilities=probs,
                            predicted=int(np.argmax(probs)),
                            logits=logits)


def loss(tape: Tape, pred: PredictionOutput, gold: int,
         weight_matrices: Sequence[Tensor], lam: float) -> LossValue:
    """Cross entropy plus lambda * sum of squared weight-matrix entries.

    Biases and embeddings stay out of the penalty.  The cross entropy is
    evaluated in log space, so even a fully saturated softmax stays
    finite; a gold probability that underflowed to zero is flagged.
    """
    if pred.logits is None:
        raise ContractError("loss needs a prediction carrying its logits")
    ce = tape.cross_entropy(pred.logits, gold)
    clamped = False
    if pred.probabilities[gold] == 0.0:
        clamped = True
        log.warning("gold-class probability underflowed to 0; "
                    "cross entropy kept finite via log-space evaluation")
    terms = [ce]
    weights = [1.0]
    if lam > 0.0 and weight_matrices:
        for W in weight_matrices:
            terms.append(tape.sumsq(W))
            weights.append(lam)
    total = tape.weighted_sum(terms, weights) if len(terms) > 1 else ce
    ce_val = ce.item()
    total_val = total.item()
    return LossValue(cross_entropy=ce_val, l2_term=total_val - ce_val,
                     total=total_val, node=total, clamped=clamped)


def cross_entropy_value(probabilities: np.ndarray, gold: int) -> float:
    """-log p_gold from a probability vector, clamped at 1e-12."""
    p = float(probabilities[gold])
    return -float(np.log(max(p, 1e-12)))


def transfer_5_to_2(probabilities: np.ndarray) -> PredictionOutput:
    """Reinterpret a 5-way sentiment distribution as binary.

    Class order is (strongly negative, negative, neutral, positive,
    strongly positive); neutral mass is discarded, the rest renormalized.
    Ties predict negative (lowest index).
    """
    p = np.asarray(probabilities, dtype=np.float64)
    if p.shape != (5,):
        raise ShapeError(f"transfer expects a 5-class distribution, got {p.shape}")
    negative = p[0] + p[1]
    positive = p[3] + p[4]
    mass = negative + positive
    note = None
    if mass == 0.0:
        pair = np.array([0.5, 0.5])
        note = "all non-neutral mass is zero; tie broken to negative"
        log.warning(note)
    else:
        pair = np.array([negative / mass, positive / mass])
    return PredictionOutput(probabilities=pair,
                            predicted=int(np.argmax(pair)),
                            note=note)


def dropout_mask(dim: int, rate: float, mode: str, rng) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability `rate`, else 1/(1-rate).

    Evaluation mode returns all ones, so no rescaling is ever needed at
    prediction time.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise ConfigError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
    if mode == "eval" or rate == 0.0:
        return np.ones(dim)
    keep = rng.random(dim) >= rate
    return keep.astype(np.float64) / (1.0 - rate)
