"""
Reverse-mode differentiation over numpy arrays.

A GradTape records every primitive operation in execution order. Backward
walks the record in reverse and accumulates adjoints; replay re-runs the
forward functions from the recorded leaves.

Example:
    >>> tape = GradTape()
    >>> w = tape.param(np.eye(2))
    >>> loss = tape.frobenius_square(w)
    >>> (g,) = tape.grad(loss, [w])   # 2 * I
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from cogents_core.utils import get_logger

from .errors import ContractError, DimensionError

logger = get_logger(__name__)

Array = npt.NDArray[np.float64]
Operand = Union["Var", Array, float, int]


def _unbroadcast(g: Array, shape: Tuple[int, ...]) -> Array:
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _expand_reduced(g: Array, shape: Tuple[int, ...], axis: Optional[int], keepdims: bool) -> Array:
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape).copy()


def _logsumexp(a: Array, axis: int) -> Array:
    peak = np.max(a, axis=axis, keepdims=True)
    return peak + np.log(np.sum(np.exp(a - peak), axis=axis, keepdims=True))


def _matmul_forward(a: Array, b: Array) -> Array:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def _sum_backward(g, out, a, axis=None, keepdims=False):
    return (_expand_reduced(g, a.shape, axis, keepdims),)


def _mean_backward(g, out, a, axis=None, keepdims=False):
    count = a.size if axis is None else a.shape[axis]
    return (_expand_reduced(g, a.shape, axis, keepdims) / count,)


def _norm_backward(g, out, a):
    if out == 0.0:
        return (np.zeros_like(a),)
    return (g * a / out,)


def _sqrt_backward(g, out, a):
    # zero adjoint where the output is 0
    return (np.divide(g, 2.0 * out, out=np.zeros(np.broadcast(g, out).shape), where=out > 0.0),)


def _logsumexp_backward(g, out, a, axis):
    return (g * np.exp(a - out),)


# op name -> (forward, backward). Backward receives the output adjoint, the
# cached output, the input values and the recorded attributes, and returns one
# adjoint per input.
_OPS: Dict[str, Tuple[Callable[..., Array], Callable[..., Tuple[Array, ...]]]] = {
    "add": (lambda a, b: a + b, lambda g, out, a, b: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape))),
    "sub": (lambda a, b: a - b, lambda g, out, a, b: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape))),
    "mul": (
        lambda a, b: a * b,
        lambda g, out, a, b: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)),
    ),
    "div": (
        lambda a, b: a / b,
        lambda g, out, a, b: (_unbroadcast(g / b, a.shape), _unbroadcast(-g * a / (b * b), b.shape)),
    ),
    "matmul": (_matmul_forward, lambda g, out, a, b: (g @ b.T, a.T @ g)),
    "transpose": (lambda a: a.T, lambda g, out, a: (g.T,)),
    "neg": (lambda a: -a, lambda g, out, a: (-g,)),
    "scale": (lambda a, c: a * c, lambda g, out, a, c: (g * c,)),
    "tanh": (np.tanh, lambda g, out, a: (g * (1.0 - out * out),)),
    "relu": (lambda a: np.maximum(a, 0.0), lambda g, out, a: (g * (a > 0.0),)),
    "exp": (np.exp, lambda g, out, a: (g * out,)),
    "log": (np.log, lambda g, out, a: (g / a,)),
    "sqrt": (np.sqrt, _sqrt_backward),
    "square": (lambda a: a * a, lambda g, out, a: (2.0 * a * g,)),
    "sum": (lambda a, axis=None, keepdims=False: np.sum(a, axis=axis, keepdims=keepdims), _sum_backward),
    "mean": (lambda a, axis=None, keepdims=False: np.mean(a, axis=axis, keepdims=keepdims), _mean_backward),
    "frobenius_square": (lambda a: np.sum(a * a), lambda g, out, a: (2.0 * a * g,)),
    "norm": (lambda a: np.sqrt(np.sum(a * a)), _norm_backward),
    "logsumexp": (_logsumexp, _logsumexp_backward),
    "reshape": (lambda a, shape: a.reshape(shape), lambda g, out, a, shape: (g.reshape(a.shape),)),
}


@dataclass
class Node:
    """One recorded operation (or a leaf when ``op`` is None)."""

    op: Optional[str]
    inputs: Tuple[int, ...]
    value: Array
    requires_grad: bool
    attrs: Dict[str, Any] = field(default_factory=dict)
    name: Optional[str] = None


class Var:
    """Handle to a node on a tape; supports arithmetic operators."""

    __slots__ = ("tape", "index")
    __array_ufunc__ = None

    def __init__(self, tape: "GradTape", index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> Array:
        return self.tape.nodes[self.index].value

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def requires_grad(self) -> bool:
        return self.tape.nodes[self.index].requires_grad

    @property
    def T(self) -> "Var":
        return self.tape.transpose(self)

    def item(self) -> float:
        return float(self.value)

    def __add__(self, other: Operand) -> "Var":
        return self.tape.add(self, other)

    def __radd__(self, other: Operand) -> "Var":
        return self.tape.add(other, self)

    def __sub__(self, other: Operand) -> "Var":
        return self.tape.sub(self, other)

    def __rsub__(self, other: Operand) -> "Var":
        return self.tape.sub(other, self)

    def __mul__(self, other: Operand) -> "Var":
        return self.tape.mul(self, other)

    def __rmul__(self, other: Operand) -> "Var":
        return self.tape.mul(other, self)

    def __truediv__(self, other: Operand) -> "Var":
        return self.tape.div(self, other)

    def __rtruediv__(self, other: Operand) -> "Var":
        return self.tape.div(other, self)

    def __matmul__(self, other: Operand) -> "Var":
        return self.tape.matmul(self, other)

    def __rmatmul__(self, other: Operand) -> "Var":
        return self.tape.matmul(other, self)

    def __neg__(self) -> "Var":
        return self.tape.neg(self)

    def __repr__(self) -> str:
        node = self.tape.nodes[self.index]
        return f"Var(op={node.op}, shape={node.value.shape}, requires_grad={node.requires_grad})"


class GradTape:
    """
    Single-writer record of primitive operations.

    Leaves are created with ``param`` (differentiable) or ``const``. Every
    operation appends a node; ``backward`` visits nodes in strict reverse
    recording order, which is a reverse topological order.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.params: List[int] = []
        self.last_visited: List[int] = []

    # ----- leaves -----

    def param(self, value, name: Optional[str] = None) -> Var:
        """Register a differentiable leaf."""
        arr = np.asarray(value, dtype=np.float64)
        self.nodes.append(Node(op=None, inputs=(), value=arr, requires_grad=True, name=name))
        self.params.append(len(self.nodes) - 1)
        return Var(self, len(self.nodes) - 1)

    def const(self, value, name: Optional[str] = None) -> Var:
        """Register a constant leaf; it never receives an adjoint."""
        arr = np.asarray(value, dtype=np.float64)
        self.nodes.append(Node(op=None, inputs=(), value=arr, requires_grad=False, name=name))
        return Var(self, len(self.nodes) - 1)

    def _lift(self, x: Operand) -> Var:
        if isinstance(x, Var):
            if x.tape is not self:
                raise ContractError("operand belongs to a different tape")
            return x
        return self.const(x)

    def _record(self, op: str, inputs: Sequence[Operand], **attrs) -> Var:
        args = [self._lift(x) for x in inputs]
        forward = _OPS[op][0]
        value = np.asarray(forward(*[a.value for a in args], **attrs), dtype=np.float64)
        requires_grad = any(a.requires_grad for a in args)
        self.nodes.append(
            Node(op=op, inputs=tuple(a.index for a in args), value=value, requires_grad=requires_grad, attrs=attrs)
        )
        return Var(self, len(self.nodes) - 1)

    # ----- primitives -----

    def add(self, a: Operand, b: Operand) -> Var:
        return self._record("add", (a, b))

    def sub(self, a: Operand, b: Operand) -> Var:
        return self._record("sub", (a, b))

    def mul(self, a: Operand, b: Operand) -> Var:
        return self._record("mul", (a, b))

    def div(self, a: Operand, b: Operand) -> Var:
        return self._record("div", (a, b))

    def matmul(self, a: Operand, b: Operand) -> Var:
        return self._record("matmul", (a, b))

    def transpose(self, a: Operand) -> Var:
        return self._record("transpose", (a,))

    def neg(self, a: Operand) -> Var:
        return self._record("neg", (a,))

    def scale(self, a: Operand, c: float) -> Var:
        return self._record("scale", (a,), c=float(c))

    def tanh(self, a: Operand) -> Var:
        return self._record("tanh", (a,))

    def relu(self, a: Operand) -> Var:
        return self._record("relu", (a,))

    def exp(self, a: Operand) -> Var:
        return self._record("exp", (a,))

    def log(self, a: Operand) -> Var:
        return self._record("log", (a,))

    def sqrt(self, a: Operand) -> Var:
        return self._record("sqrt", (a,))

    def square(self, a: Operand) -> Var:
        return self._record("square", (a,))

    def sum(self, a: Operand, axis: Optional[int] = None, keepdims: bool = False) -> Var:
        return self._record("sum", (a,), axis=axis, keepdims=keepdims)

    def mean(self, a: Operand, axis: Optional[int] = None, keepdims: bool = False) -> Var:
        return self._record("mean", (a,), axis=axis, keepdims=keepdims)

    def frobenius_square(self, a: Operand) -> Var:
        return self._record("frobenius_square", (a,))

    def norm(self, a: Operand) -> Var:
        """Euclidean norm of all entries."""
        return self._record("norm", (a,))

    def logsumexp(self, a: Operand, axis: int) -> Var:
        """Stable log-sum-exp along ``axis``, keeping the reduced axis."""
        return self._record("logsumexp", (a,), axis=axis)

    def reshape(self, a: Operand, shape: Tuple[int, ...]) -> Var:
        return self._record("reshape", (a,), shape=tuple(shape))

    # ----- composites -----

    def activation(self, a: Operand, kind: str) -> Var:
        if kind == "tanh":
            return self.tanh(a)
        if kind == "relu":
            return self.relu(a)
        raise ValueError(f"Unknown activation: {kind}")

    def variance(self, a: Operand, axis: int = 0, ddof: int = 1) -> Var:
        """Per-column (axis=0) variance with ``ddof`` degrees of freedom removed."""
        a = self._lift(a)
        n = a.shape[axis]
        centered = a - self.mean(a, axis=axis, keepdims=True)
        return self.scale(self.sum(self.square(centered), axis=axis), 1.0 / (n - ddof))

    def row_normalize(self, a: Operand, eps: float) -> Var:
        """Divide each row by its Euclidean norm plus ``eps``."""
        a = self._lift(a)
        norms = self.sqrt(self.sum(self.square(a), axis=1, keepdims=True))
        return self.div(a, self.add(norms, eps))

    # ----- differentiation -----

    def backward(self, root: Var) -> Dict[int, Array]:
        """
        Propagate adjoints from a scalar root.

        Returns:
            Mapping node index -> adjoint for every visited node
        """
        if root.tape is not self:
            raise ContractError("root belongs to a different tape")
        if root.value.size != 1:
            raise ContractError(f"backward needs a scalar root, got shape {root.value.shape}")

        adjoints: Dict[int, Array] = {root.index: np.ones_like(root.value)}
        self.last_visited = []
        for index in range(root.index, -1, -1):
            node = self.nodes[index]
            if index not in adjoints or not node.requires_grad or node.op is None:
                continue
            self.last_visited.append(index)
            inputs = [self.nodes[i].value for i in node.inputs]
            grads = _OPS[node.op][1](adjoints[index], node.value, *inputs, **node.attrs)
            for input_index, g in zip(node.inputs, grads):
                if not self.nodes[input_index].requires_grad:
                    continue
                if input_index in adjoints:
                    adjoints[input_index] = adjoints[input_index] + g
                else:
                    adjoints[input_index] = np.asarray(g, dtype=np.float64)
        return adjoints

    def grad(self, root: Var, params: Sequence[Var]) -> List[Array]:
        """
        Gradients of a scalar root with respect to ``params``.

        Parameters that the root does not depend on get zero gradients.
        """
        adjoints = self.backward(root)
        result = []
        for p in params:
            g = adjoints.get(p.index)
            result.append(np.zeros_like(p.value) if g is None else np.asarray(g).reshape(p.value.shape))
        return result

    def replay(self) -> Array:
        """Recompute every recorded node from its leaves and return the last value."""
        values: List[Array] = []
        for node in self.nodes:
            if node.op is None:
                values.append(node.value)
            else:
                forward = _OPS[node.op][0]
                values.append(np.asarray(forward(*[values[i] for i in node.inputs], **node.attrs), dtype=np.float64))
        if not values:
            raise ContractError("cannot replay an empty tape")
        return values[-1]

    def __len__(self) -> int:
        return len(self.nodes)


def tape_grad(builder: Callable[..., Var], params: Sequence[Array]) -> List[Array]:
    """
    Record ``builder`` on a fresh tape and differentiate it.

    Args:
        builder: Called as ``builder(tape, *param_vars)``; must return a scalar Var
        params: Parameter values, one Var is created per entry

    Returns:
        One gradient per parameter, shaped like the parameter
    """
    tape = GradTape()
    variables = [tape.param(p) for p in params]
    root = builder(tape, *variables)
    if not isinstance(root, Var):
        root = tape.const(root)
    return tape.grad(root, variables)
