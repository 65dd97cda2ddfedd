"""Dense float64 tensors with taped reverse-mode differentiation.

Every network in this package builds its forward pass by recording
primitive operations on a :class:`Tape` and then calling
:meth:`Tape.backward` once on the scalar loss.  Gradients come back as a
map keyed by the leaf tensors that were created with
``requires_grad=True``; leaves the loss never touched are simply absent
from the map (and read as exactly zero through :func:`grad_of`).

All data is float64 and all operations are plain numpy, so identical
inputs produce bit-identical outputs.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, ShapeError

GradientMap = Dict["Tensor", np.ndarray]


class Tensor:
    """A float64 array participating in a taped computation.

    Leaf tensors created with ``requires_grad=True`` act as trainable
    parameters; operation outputs inherit ``requires_grad`` from their
    inputs.  Tensors compare and hash by identity.
    """

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim > 0 and not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.name = name

    @property
    def dim(self) -> int:
        if self.data.ndim != 1:
            raise ShapeError(f"{self._label()} is not a vector")
        return self.data.shape[0]

    @property
    def rows(self) -> int:
        if self.data.ndim != 2:
            raise ShapeError(f"{self._label()} is not a matrix")
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        if self.data.ndim != 2:
            raise ShapeError(f"{self._label()} is not a matrix")
        return self.data.shape[1]

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"{self._label()} is not a scalar")
        return float(self.data.reshape(()))

    def _label(self) -> str:
        return self.name if self.name else f"tensor{self.data.shape}"

    def __repr__(self) -> str:
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(name={self.name!r}, shape={self.data.shape}{grad})"


def vector(data, requires_grad: bool = False, name: Optional[str] = None) -> Tensor:
    """Wrap 1-D data as a Tensor, validating its rank."""
    t = Tensor(data, requires_grad=requires_grad, name=name)
    if t.data.ndim != 1:
        raise ShapeError(f"{t._label()} is not 1-D (shape {t.data.shape})")
    return t


def matrix(data, requires_grad: bool = False, name: Optional[str] = None) -> Tensor:
    """Wrap 2-D row-major data as a Tensor, validating its rank."""
    t = Tensor(data, requires_grad=requires_grad, name=name)
    if t.data.ndim != 2:
        raise ShapeError(f"{t._label()} is not 2-D (shape {t.data.shape})")
    return t


def parameter(data, name: str) -> Tensor:
    """A named trainable leaf."""
    return Tensor(data, requires_grad=True, name=name)


def grad_of(grads: GradientMap, param: Tensor) -> np.ndarray:
    """Gradient of `param` from a backward pass; exact zeros if unused."""
    g = grads.get(param)
    if g is None:
        return np.zeros_like(param.data)
    return g


def assert_finite(arr: np.ndarray, what: str = "array") -> None:
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{what} contains non-finite entries")


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    """Stabilized softmax of a 1-D logit array (max subtraction)."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


class Tape:
    """Ordered record of primitive operations for one forward pass.

    Operations are recorded only when an input requires gradients, so
    constant subgraphs cost nothing on the backward pass and parameters
    that never reach the loss receive no gradient entry at all.
    """

    def __init__(self):
        self._records: List[Tuple[int, Callable]] = []

    def __len__(self) -> int:
        return len(self._records)

    def _push(self, out: Tensor, backward: Callable) -> None:
        self._records.append((id(out), backward))

    # ------------------------------------------------------------------
    # primitive operations
    # ------------------------------------------------------------------

    def matvec(self, W: Tensor, x: Tensor) -> Tensor:
        """Matrix-vector product W.x."""
        if W.data.ndim != 2:
            raise ShapeError(f"matvec: {W._label()} is not a matrix")
        if x.data.ndim != 1:
            raise ShapeError(f"matvec: {x._label()} is not a vector")
        if W.data.shape[1] != x.data.shape[0]:
            raise ShapeError(
                f"matvec: {W._label()} has {W.data.shape[1]} columns but "
                f"{x._label()} has dim {x.data.shape[0]}"
            )
        out = Tensor(W.data @ x.data, requires_grad=W.requires_grad or x.requires_grad)
        if out.requires_grad:
            def backward(g, accum, W=W, x=x):
                if W.requires_grad:
                    accum(W, np.outer(g, x.data))
                if x.requires_grad:
                    accum(x, W.data.T @ g)
            self._push(out, backward)
        return out

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.shape != b.data.shape:
            raise ShapeError(
                f"add: {a._label()} {a.data.shape} vs {b._label()} {b.data.shape}"
            )
        out = Tensor(a.data + b.data, requires_grad=a.requires_grad or b.requires_grad)
        if out.requires_grad:
            def backward(g, accum, a=a, b=b):
                if a.requires_grad:
                    accum(a, g)
                if b.requires_grad:
                    accum(b, g)
            self._push(out, backward)
        return out

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.shape != b.data.shape:
            raise ShapeError(
                f"sub: {a._label()} {a.data.shape} vs {b._label()} {b.data.shape}"
            )
        out = Tensor(a.data - b.data, requires_grad=a.requires_grad or b.requires_grad)
        if out.requires_grad:
            def backward(g, accum, a=a, b=b):
                if a.requires_grad:
                    accum(a, g)
                if b.requires_grad:
                    accum(b, -g)
            self._push(out, backward)
        return out

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        """Elementwise product (used for dropout masks)."""
        if a.data.shape != b.data.shape:
            raise ShapeError(
                f"mul: {a._label()} {a.data.shape} vs {b._label()} {b.data.shape}"
            )
        out = Tensor(a.data * b.data, requires_grad=a.requires_grad or b.requires_grad)
        if out.requires_grad:
            def backward(g, accum, a=a, b=b):
                if a.requires_grad:
                    accum(a, g * b.data)
                if b.requires_grad:
                    accum(b, g * a.data)
            self._push(out, backward)
        return out

    def scale(self, x: Tensor, c: float) -> Tensor:
        out = Tensor(x.data * c, requires_grad=x.requires_grad)
        if out.requires_grad:
            def backward(g, accum, x=x, c=c):
                accum(x, g * c)
            self._push(out, backward)
        return out

    def relu(self, x: Tensor) -> Tensor:
        """max(0, x); the subgradient at exactly 0 is 0."""
        out = Tensor(np.maximum(x.data, 0.0), requires_grad=x.requires_grad)
        if out.requires_grad:
            mask = (x.data > 0.0).astype(np.float64)
            def backward(g, accum, x=x, mask=mask):
                accum(x, g * mask)
            self._push(out, backward)
        return out

    def tanh(self, x: Tensor) -> Tensor:
        out = Tensor(np.tanh(x.data), requires_grad=x.requires_grad)
        if out.requires_grad:
            y = out.data
            def backward(g, accum, x=x, y=y):
                accum(x, g * (1.0 - y * y))
            self._push(out, backward)
        return out

    def concat(self, parts: Sequence[Tensor]) -> Tensor:
        """Concatenate vectors into one vector."""
        if not parts:
            raise ShapeError("concat: no parts")
        for p in parts:
            if p.data.ndim != 1:
                raise ShapeError(f"concat: {p._label()} is not a vector")
        out = Tensor(
            np.concatenate([p.data for p in parts]),
            requires_grad=any(p.requires_grad for p in parts),
        )
        if out.requires_grad:
            sizes = [p.data.shape[0] for p in parts]
            def backward(g, accum, parts=tuple(parts), sizes=sizes):
                off = 0
                for p, n in zip(parts, sizes):
                    if p.requires_grad:
                        accum(p, g[off:off + n])
                    off += n
            self._push(out, backward)
        return out

    def take_row(self, M: Tensor, index: int) -> Tensor:
        """Row `index` of a matrix as a vector (embedding lookup)."""
        if M.data.ndim != 2:
            raise ShapeError(f"take_row: {M._label()} is not a matrix")
        if not 0 <= index < M.data.shape[0]:
            raise ContractError(
                f"take_row: row {index} out of range for {M._label()}"
            )
        out = Tensor(M.data[index].copy(), requires_grad=M.requires_grad)
        if out.requires_grad:
            def backward(g, accum, M=M, index=index):
                full = np.zeros_like(M.data)
                full[index] = g
                accum(M, full)
            self._push(out, backward)
        return out

    def dimwise_max(self, xs: Sequence[Tensor]) -> Tuple[Tensor, np.ndarray]:
        """Per-dimension maximum over same-length vectors.

        Returns the pooled vector and the argmax positions into `xs`
        (ties resolve to the earliest entry).  Gradient flows only to
        the winning entry of each dimension.
        """
        if not xs:
            raise ShapeError("dimwise_max: empty input")
        dim = xs[0].data.shape
        for x in xs:
            if x.data.shape != dim:
                raise ShapeError("dimwise_max: mismatched vector dims")
        stacked = np.stack([x.data for x in xs])
        arg = np.argmax(stacked, axis=0)
        out = Tensor(
            np.max(stacked, axis=0),
            requires_grad=any(x.requires_grad for x in xs),
        )
        if out.requires_grad:
            def backward(g, accum, xs=tuple(xs), arg=arg):
                for i, x in enumerate(xs):
                    if x.requires_grad:
                        accum(x, g * (arg == i))
            self._push(out, backward)
        return out, arg.copy()

    def sumsq(self, x: Tensor) -> Tensor:
        """Sum of squared entries, as a scalar."""
        out = Tensor(np.sum(x.data * x.data), requires_grad=x.requires_grad)
        if out.requires_grad:
            def backward(g, accum, x=x):
                accum(x, 2.0 * float(g) * x.data)
            self._push(out, backward)
        return out

    def weighted_sum(self, scalars: Sequence[Tensor],
                     weights: Optional[Sequence[float]] = None) -> Tensor:
        """Weighted sum of scalar tensors (loss assembly)."""
        if not scalars:
            raise ShapeError("weighted_sum: no terms")
        if weights is None:
            weights = [1.0] * len(scalars)
        if len(weights) != len(scalars):
            raise ShapeError("weighted_sum: weights do not match terms")
        for s in scalars:
            if s.data.size != 1:
                raise ShapeError(f"weighted_sum: {s._label()} is not a scalar")
        total = sum(w * float(s.data.reshape(())) for s, w in zip(scalars, weights))
        out = Tensor(
            np.float64(total),
            requires_grad=any(s.requires_grad for s in scalars),
        )
        if out.requires_grad:
            def backward(g, accum, scalars=tuple(scalars), weights=tuple(weights)):
                for s, w in zip(scalars, weights):
                    if s.requires_grad:
                        accum(s, np.asarray(float(g) * w))
            self._push(out, backward)
        return out

    def cross_entropy(self, logits: Tensor, gold: int) -> Tensor:
        """-log softmax(logits)[gold], computed in stabilized log space."""
        if logits.data.ndim != 1:
            raise ShapeError(f"cross_entropy: {logits._label()} is not a vector")
        if not 0 <= gold < logits.data.shape[0]:
            raise ContractError(
                f"cross_entropy: gold class {gold} out of range "
                f"[0, {logits.data.shape[0]})"
            )
        z = logits.data
        m = z.max()
        e = np.exp(z - m)
        lse = np.log(e.sum()) + m
        out = Tensor(np.float64(lse - z[gold]), requires_grad=logits.requires_grad)
        if out.requires_grad:
            probs = e / e.sum()
            def backward(g, accum, logits=logits, probs=probs, gold=gold):
                d = probs.copy()
                d[gold] -= 1.0
                accum(logits, float(g) * d)
            self._push(out, backward)
        return out

    # ------------------------------------------------------------------
    # reverse pass
    # ------------------------------------------------------------------

    def backward(self, loss: Tensor) -> GradientMap:
        """Accumulate d(loss)/d(leaf) for every trainable leaf reached.

        Replays the recorded operations in reverse exactly once.  The map
        contains ndarray gradients keyed by leaf Tensor; leaves the loss
        does not depend on are absent (read them via :func:`grad_of`).
        """
        if not isinstance(loss, Tensor) or loss.data.size != 1:
            raise ContractError("backward: loss must be a scalar tensor")
        grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        holders: Dict[int, Tensor] = {id(loss): loss}

        def accum(t: Tensor, g: np.ndarray) -> None:
            key = id(t)
            cur = grads.get(key)
            if cur is None:
                grads[key] = np.array(g, dtype=np.float64)
                holders[key] = t
            else:
                cur += g

        for out_id, backward_fn in reversed(self._records):
            g = grads.pop(out_id, None)
            if g is None:
                continue
            backward_fn(g, accum)

        return {
            holders[key]: g
            for key, g in grads.items()
            if holders[key].requires_grad
        }
