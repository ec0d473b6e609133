"""Dense float64 tensors with a define-by-run differentiation tape.

The operation set is deliberately closed: matmul, add, mul, concat,
sigmoid, tanh, softmax, log, sum, mean, abs and slice. There is no
broadcasting -- elementwise operations demand exactly matching shapes and
matmul demands a matching inner dimension. Shape mismatches are hard
errors naming both shapes.

A ``Tape`` is a context manager; operations executed while a tape is
active are recorded in execution order, which is already a topological
order, so a single reverse sweep in :func:`backward` visits each node
once. Tapes are rebuilt for every forward pass. The active-tape stack is
thread-local: independent tapes may run concurrently on disjoint data.

:func:`finite_diff_check` is the gradient oracle: it compares the tape's
gradients against central finite differences, element by element.
"""

from __future__ import annotations

import builtins
import threading
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ShapeError


class Tensor:
    """A dense row-major float64 array, optionally tracked by a tape.

    ``grad`` is populated by :func:`backward` and always has the same
    shape as ``data``. ``tape_id`` is the index of the node that produced
    this tensor in the most recent active tape, or None for leaves.
    """

    __slots__ = ("data", "grad", "tape_id")

    def __init__(self, data) -> None:
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.tape_id: int | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item: tensor of shape {self.data.shape} is not scalar")
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, tape_id={self.tape_id})"


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape))


def ones(shape) -> Tensor:
    return Tensor(np.ones(shape))


def full(shape, value: float) -> Tensor:
    return Tensor(np.full(shape, float(value)))


class Node:
    """One recorded operation: inputs, output and its local gradient rule."""

    __slots__ = ("inputs", "output", "grad_fn")

    def __init__(self, inputs, output, grad_fn) -> None:
        self.inputs = inputs
        self.output = output
        self.grad_fn = grad_fn


class _TapeStack(threading.local):
    def __init__(self) -> None:
        self.stack: list[Tape] = []


_TAPES = _TapeStack()


class Tape:
    """Ordered record of the operations of one forward pass."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []

    def __enter__(self) -> "Tape":
        _TAPES.stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        popped = _TAPES.stack.pop()
        assert popped is self, "tapes must be exited in LIFO order"
        return False


def _record(inputs: tuple, out: Tensor, grad_fn) -> Tensor:
    stack = _TAPES.stack
    if stack:
        tape = stack[-1]
        tape.nodes.append(Node(inputs, out, grad_fn))
        out.tape_id = len(tape.nodes) - 1
    return out


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: shapes {a.data.shape} and {b.data.shape} do not match")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("add", a, b)
    out = Tensor(a.data + b.data)
    return _record((a, b), out, lambda g: (g, g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product."""
    _check_same_shape("mul", a, b)
    ad, bd = a.data, b.data
    out = Tensor(ad * bd)
    return _record((a, b), out, lambda g: (g * bd, g * ad))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(
            f"matmul: expected 2-D operands, got shapes {a.data.shape} and {b.data.shape}"
        )
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: shapes {a.data.shape} and {b.data.shape} do not conform")
    ad, bd = a.data, b.data
    out = Tensor(ad @ bd)
    return _record((a, b), out, lambda g: (g @ bd.T, ad.T @ g))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("concat: need at least one operand")
    ndim = tensors[0].data.ndim
    if not 0 <= axis < ndim:
        raise ShapeError(f"concat: axis {axis} out of range for {ndim}-D tensors")
    ref = list(tensors[0].data.shape)
    for t in tensors[1:]:
        got = list(t.data.shape)
        if len(got) != ndim or got[:axis] + got[axis + 1 :] != ref[:axis] + ref[axis + 1 :]:
            raise ShapeError(
                f"concat: shapes {tensors[0].data.shape} and {t.data.shape} "
                f"do not match off axis {axis}"
            )
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    offsets = np.cumsum([t.data.shape[axis] for t in tensors])[:-1]

    def grad_fn(g):
        return tuple(np.split(g, offsets, axis=axis))

    return _record(tensors, out, grad_fn)


def sigmoid(x: Tensor) -> Tensor:
    # tanh form is overflow-safe for large |x| in float64
    sd = 0.5 * (np.tanh(0.5 * x.data) + 1.0)
    out = Tensor(sd)
    return _record((x,), out, lambda g: (g * sd * (1.0 - sd),))


def tanh(x: Tensor) -> Tensor:
    td = np.tanh(x.data)
    out = Tensor(td)
    return _record((x,), out, lambda g: (g * (1.0 - td * td),))


def softmax(x: Tensor, axis: int) -> Tensor:
    nd = x.data.ndim
    if not -nd <= axis < nd:
        raise ShapeError(f"softmax: axis {axis} out of range for shape {x.data.shape}")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    sd = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(sd)

    def grad_fn(g):
        inner = (g * sd).sum(axis=axis, keepdims=True)
        return ((g - inner) * sd,)

    return _record((x,), out, grad_fn)


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0.0):
        raise DomainError(f"log: input contains non-positive values (min={x.data.min()})")
    xd = x.data
    out = Tensor(np.log(xd))
    return _record((x,), out, lambda g: (g / xd,))


def sum(x: Tensor) -> Tensor:  # noqa: A001 - op set name
    """Full reduction to a scalar of shape ()."""
    shape = x.data.shape
    out = Tensor(x.data.sum())
    return _record((x,), out, lambda g: (np.full(shape, float(g)),))


def mean(x: Tensor) -> Tensor:
    shape = x.data.shape
    n = x.data.size
    out = Tensor(x.data.mean())
    return _record((x,), out, lambda g: (np.full(shape, float(g) / n),))


def abs(x: Tensor) -> Tensor:  # noqa: A001 - op set name
    """Elementwise absolute value; the subgradient at 0 is taken as 0."""
    xd = x.data
    out = Tensor(np.abs(xd))
    return _record((x,), out, lambda g: (g * np.sign(xd),))


def slice(x: Tensor, axis: int, start: int, stop: int) -> Tensor:  # noqa: A001 - op set name
    nd = x.data.ndim
    if not 0 <= axis < nd:
        raise ShapeError(f"slice: axis {axis} out of range for shape {x.data.shape}")
    dim = x.data.shape[axis]
    if not (0 <= start < stop <= dim):
        raise ShapeError(
            f"slice: range [{start}, {stop}) invalid for axis {axis} of shape {x.data.shape}"
        )
    idx = tuple(np.s_[start:stop] if d == axis else np.s_[:] for d in range(nd))
    in_shape = x.data.shape
    out = Tensor(x.data[idx].copy())

    def grad_fn(g):
        buf = np.zeros(in_shape)
        buf[idx] = g
        return (buf,)

    return _record((x,), out, grad_fn)


def backward(tape: Tape, loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Run one reverse sweep over ``tape``, seeding at the scalar ``loss``.

    Fills ``grad`` on every tensor the tape saw (leaves included) and
    returns the full tensor -> gradient mapping. Tensors not reachable
    from the loss receive zero gradients. The sweep never mutates the
    tape, so repeated sweeps are bit-identical.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.data.shape}")
    grads: dict[Tensor, np.ndarray] = {}
    for node in tape.nodes:
        for t in node.inputs:
            if t not in grads:
                grads[t] = np.zeros_like(t.data)
        if node.output not in grads:
            grads[node.output] = np.zeros_like(node.output.data)
    if loss not in grads:
        grads[loss] = np.zeros_like(loss.data)
    grads[loss] = np.ones_like(loss.data)

    touched = {id(loss)}
    for node in reversed(tape.nodes):
        if id(node.output) not in touched:
            continue
        in_grads = node.grad_fn(grads[node.output])
        for t, g in zip(node.inputs, in_grads):
            grads[t] += g
            touched.add(id(t))

    for t, g in grads.items():
        t.grad = g
    return grads


def finite_diff_check(
    function: Callable[[], Tensor],
    params: Sequence[Tensor],
    step: float = 1e-5,
) -> float:
    """Compare tape gradients of ``function()`` against central differences.

    ``function`` must be deterministic and scalar-valued, reading
    ``params`` by reference. Returns the max over all parameter elements
    of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    """
    if step <= 0:
        raise ValueError(f"finite_diff_check: step must be positive, got {step}")
    with Tape() as tape:
        loss = function()
    if loss.data.size != 1:
        raise ShapeError(f"finite_diff_check: function value has shape {loss.data.shape}")
    if not np.isfinite(loss.data):
        raise DomainError("finite_diff_check: non-finite function value at base point")
    grads = backward(tape, loss)

    worst = 0.0
    for p in params:
        analytic = grads.get(p)
        if analytic is None:
            analytic = np.zeros_like(p.data)
        flat = p.data.reshape(-1)  # view into the live buffer
        aflat = analytic.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = float(function().data)
            flat[i] = orig - step
            f_minus = float(function().data)
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise DomainError("finite_diff_check: non-finite function value at probe point")
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(aflat[i])
            err = builtins.abs(a - numeric) / max(builtins.abs(a), builtins.abs(numeric), 1e-8)
            if err > worst:
                worst = err
    return worst
