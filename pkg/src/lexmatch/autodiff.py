"""Dense tensors with reverse-mode differentiation.

The graph is a flat tape: every differentiable op appends one record while a
`Tape` is active, and `backward` replays the records in reverse, accumulating
gradients into `Parameter.grad` slots. Ops called with no active tape run
forward-only, which keeps evaluation and finite-difference probing cheap.

Precision is selected globally (`set_default_dtype`); training runs at 32-bit
while gradient checks switch to 64-bit for oracle fidelity.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ConfigError(ValueError):
    """An operation was configured with an invalid option."""


_DTYPES = {"float32": np.float32, "float64": np.float64}
_default_dtype = np.dtype(np.float32)

# Logit offset used to blank masked attention positions. Large enough that
# exp() underflows to exactly 0.0 after max-subtraction.
MASK_FILL = -1e9

# Test hook: when set to an op name, backward() scales that op's input
# gradients by 1.01 so detector tests can observe a named failure.
BREAK_GRAD_OP: str | None = None


def set_default_dtype(name: str) -> None:
    global _default_dtype
    if name not in _DTYPES:
        raise ConfigError(f"precision must be one of {sorted(_DTYPES)}, got {name!r}")
    _default_dtype = np.dtype(_DTYPES[name])


def default_dtype() -> np.dtype:
    return _default_dtype


@contextlib.contextmanager
def using_dtype(name: str):
    """Temporarily switch the global float precision."""
    global _default_dtype
    old = _default_dtype
    set_default_dtype(name)
    try:
        yield
    finally:
        _default_dtype = old


class Tensor:
    """Dense n-dimensional float array; immutable once produced by an op."""

    __slots__ = ("data",)

    def __init__(self, data, dtype=None):
        self.data = np.asarray(data, dtype=dtype or _default_dtype)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype})"


class Parameter(Tensor):
    """Named tensor with a persistent gradient slot of identical shape."""

    __slots__ = ("name", "grad")

    def __init__(self, name: str, data, dtype=None):
        super().__init__(data, dtype)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


def _wrap(arr: np.ndarray) -> Tensor:
    t = Tensor.__new__(Tensor)
    t.data = arr
    return t


@dataclass
class OpRecord:
    op: str
    inputs: tuple[Tensor, ...]
    out: Tensor
    # Maps the output gradient to (input, gradient contribution) pairs.
    backward: Callable[[np.ndarray], list[tuple[Tensor, np.ndarray]]]


@dataclass
class Tape:
    """Ordered log of executed ops; replayed once, in reverse, by backward()."""

    records: list[OpRecord] = field(default_factory=list)

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc) -> None:
        popped = _TAPE_STACK.pop()
        assert popped is self

    def touched_parameters(self) -> set[str]:
        return {
            t.name
            for rec in self.records
            for t in rec.inputs
            if isinstance(t, Parameter)
        }


_TAPE_STACK: list[Tape] = []


def _emit(op: str, inputs: Sequence[Tensor], out: Tensor, backward) -> Tensor:
    if _TAPE_STACK:
        _TAPE_STACK[-1].records.append(OpRecord(op, tuple(inputs), out, backward))
    return out


def backward(tape: Tape, loss: Tensor) -> None:
    """Accumulate d(loss)/d(param) into every reachable Parameter.grad.

    Gradients of intermediate tensors live only for the duration of the call;
    Parameter slots accumulate across calls until explicitly zeroed.
    """
    if loss.size != 1:
        raise ShapeError(f"loss must be scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.out), None)
        if g is None:
            continue
        pairs = rec.backward(g)
        if BREAK_GRAD_OP is not None and rec.op == BREAK_GRAD_OP:
            pairs = [(t, c * 1.01) for t, c in pairs]
        for tensor, contrib in pairs:
            if isinstance(tensor, Parameter):
                tensor.grad += contrib
            else:
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + contrib
                else:
                    grads[key] = contrib


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


# ---------------------------------------------------------------------------
# Elementwise and linear-algebra ops
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul needs [m,k] @ [k,n], got {a.shape} @ {b.shape}")
    out = _wrap(a.data @ b.data)

    def bwd(g):
        return [(a, g @ b.data.T), (b, a.data.T @ g)]

    return _emit("matmul", (a, b), out, bwd)


def matvec(a: Tensor, x: Tensor) -> Tensor:
    if a.ndim != 2 or x.ndim != 1 or a.shape[1] != x.shape[0]:
        raise ShapeError(f"matvec needs [m,k] @ [k], got {a.shape} @ {x.shape}")
    out = _wrap(a.data @ x.data)

    def bwd(g):
        return [(a, np.outer(g, x.data)), (x, a.data.T @ g)]

    return _emit("matvec", (a, x), out, bwd)


def vecmat(x: Tensor, a: Tensor) -> Tensor:
    if x.ndim != 1 or a.ndim != 2 or x.shape[0] != a.shape[0]:
        raise ShapeError(f"vecmat needs [k] @ [k,n], got {x.shape} @ {a.shape}")
    out = _wrap(x.data @ a.data)

    def bwd(g):
        return [(x, a.data @ g), (a, np.outer(x.data, g))]

    return _emit("vecmat", (x, a), out, bwd)


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op} needs equal shapes, got {a.shape} vs {b.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("add", a, b)
    return _emit("add", (a, b), _wrap(a.data + b.data), lambda g: [(a, g), (b, g)])


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("sub", a, b)
    return _emit("sub", (a, b), _wrap(a.data - b.data), lambda g: [(a, g), (b, -g)])


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("mul", a, b)
    out = _wrap(a.data * b.data)
    return _emit("mul", (a, b), out, lambda g: [(a, g * b.data), (b, g * a.data)])


def scale(x: Tensor, c: float) -> Tensor:
    c = x.data.dtype.type(c)
    return _emit("scale", (x,), _wrap(x.data * c), lambda g: [(x, g * c)])


def add_rowvec(m: Tensor, v: Tensor) -> Tensor:
    """Add a length-c vector to every row of an [r, c] matrix (bias add)."""
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ShapeError(f"add_rowvec needs [r,c] + [c], got {m.shape} + {v.shape}")
    out = _wrap(m.data + v.data[None, :])
    return _emit("add_rowvec", (m, v), out, lambda g: [(m, g), (v, g.sum(axis=0))])


def add_colvec(m: Tensor, v: Tensor) -> Tensor:
    """Add a length-r vector to every column of an [r, c] matrix."""
    if m.ndim != 2 or v.ndim != 1 or m.shape[0] != v.shape[0]:
        raise ShapeError(f"add_colvec needs [r,c] + [r], got {m.shape} + {v.shape}")
    out = _wrap(m.data + v.data[:, None])
    return _emit("add_colvec", (m, v), out, lambda g: [(m, g), (v, g.sum(axis=1))])


def transpose(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise ShapeError(f"transpose needs a matrix, got shape {x.shape}")
    return _emit("transpose", (x,), _wrap(x.data.T.copy()), lambda g: [(x, g.T)])


def concat_last(xs: Sequence[Tensor]) -> Tensor:
    """Concatenate along the last axis; leading extents must coincide."""
    if not xs:
        raise ShapeError("concat_last needs at least one tensor")
    if len(xs) == 1:
        return xs[0]
    lead = xs[0].shape[:-1]
    for t in xs[1:]:
        if t.shape[:-1] != lead:
            raise ShapeError(
                f"concat_last leading extents differ: {xs[0].shape} vs {t.shape}"
            )
    widths = [t.shape[-1] for t in xs]
    offsets = np.cumsum([0] + widths)
    out = _wrap(np.concatenate([t.data for t in xs], axis=-1))

    def bwd(g):
        return [
            (t, g[..., offsets[i] : offsets[i + 1]]) for i, t in enumerate(xs)
        ]

    return _emit("concat_last", tuple(xs), out, bwd)


def slice_last(x: Tensor, start: int, stop: int) -> Tensor:
    if not (0 <= start < stop <= x.shape[-1]):
        raise ShapeError(f"slice [{start}:{stop}] out of range for shape {x.shape}")
    out = _wrap(np.ascontiguousarray(x.data[..., start:stop]))

    def bwd(g):
        full = np.zeros_like(x.data)
        full[..., start:stop] = g
        return [(x, full)]

    return _emit("slice_last", (x,), out, bwd)


def stack_rows(xs: Sequence[Tensor]) -> Tensor:
    """Stack equal-length vectors into a matrix, one vector per row."""
    n = xs[0].shape[0]
    for t in xs:
        if t.ndim != 1 or t.shape[0] != n:
            raise ShapeError(f"stack_rows needs equal-length vectors, got {t.shape}")
    out = _wrap(np.stack([t.data for t in xs], axis=0))

    def bwd(g):
        return [(t, g[i]) for i, t in enumerate(xs)]

    return _emit("stack_rows", tuple(xs), out, bwd)


def tile_rows(v: Tensor, n: int) -> Tensor:
    """Repeat a vector as n identical rows."""
    if v.ndim != 1:
        raise ShapeError(f"tile_rows needs a vector, got shape {v.shape}")
    out = _wrap(np.tile(v.data, (n, 1)))
    return _emit("tile_rows", (v,), out, lambda g: [(v, g.sum(axis=0))])


# ---------------------------------------------------------------------------
# Nonlinearities, softmax, reductions
# ---------------------------------------------------------------------------

_ACTIVATIONS = ("relu", "tanh", "sigmoid")


def activation(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        out_data = np.maximum(x.data, 0)

        def bwd(g):
            return [(x, g * (x.data > 0))]

    elif kind == "tanh":
        # Clamp to the open interval: saturation would otherwise round to +-1.
        one = np.nextafter(x.data.dtype.type(1.0), x.data.dtype.type(0.0))
        out_data = np.clip(np.tanh(x.data), -one, one)

        def bwd(g):
            return [(x, g * (1.0 - out_data * out_data))]

    elif kind == "sigmoid":
        # Split by sign to avoid overflow in exp; clamp into the open (0, 1).
        e = np.exp(-np.abs(x.data))
        out_data = np.where(x.data >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(
            x.data.dtype
        )
        hi = np.nextafter(x.data.dtype.type(1.0), x.data.dtype.type(0.0))
        out_data = np.clip(out_data, np.finfo(x.data.dtype).tiny, hi)

        def bwd(g):
            return [(x, g * out_data * (1.0 - out_data))]

    else:
        raise ConfigError(f"unknown activation kind {kind!r}; expected {_ACTIVATIONS}")
    return _emit(f"activation[{kind}]", (x,), _wrap(out_data), bwd)


def relu(x: Tensor) -> Tensor:
    return activation(x, "relu")


def tanh(x: Tensor) -> Tensor:
    return activation(x, "tanh")


def sigmoid(x: Tensor) -> Tensor:
    return activation(x, "sigmoid")


def _masked_logits(data: np.ndarray, masked: np.ndarray | None) -> np.ndarray:
    if masked is None:
        return data
    return data + np.where(masked, data.dtype.type(MASK_FILL), data.dtype.type(0.0))


def softmax_rows(x: Tensor, masked_cols: np.ndarray | None = None) -> Tensor:
    """Row-wise softmax with max-subtraction; True entries of masked_cols get
    a large negative logit offset so their weight underflows to exactly 0."""
    if x.ndim != 2:
        raise ShapeError(f"softmax_rows needs a matrix, got shape {x.shape}")
    z = _masked_logits(x.data, masked_cols)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    out_data = e / e.sum(axis=1, keepdims=True)
    out = _wrap(out_data)

    def bwd(g):
        inner = (g * out_data).sum(axis=1, keepdims=True)
        return [(x, out_data * (g - inner))]

    return _emit("softmax_rows", (x,), out, bwd)


def softmax_vec(x: Tensor, masked: np.ndarray | None = None) -> Tensor:
    if x.ndim != 1:
        raise ShapeError(f"softmax_vec needs a vector, got shape {x.shape}")
    z = _masked_logits(x.data, masked)
    z = z - z.max()
    e = np.exp(z)
    out_data = e / e.sum()
    out = _wrap(out_data)

    def bwd(g):
        return [(x, out_data * (g - (g * out_data).sum()))]

    return _emit("softmax_vec", (x,), out, bwd)


def rowmax(x: Tensor, masked_cols: np.ndarray | None = None) -> Tensor:
    """Per-row maximum over (unmasked) columns; gradient routes to the first
    maximising column of each row."""
    if x.ndim != 2:
        raise ShapeError(f"rowmax needs a matrix, got shape {x.shape}")
    z = x.data if masked_cols is None else np.where(masked_cols, -np.inf, x.data)
    idx = np.argmax(z, axis=1)
    rows = np.arange(x.shape[0])
    out = _wrap(np.ascontiguousarray(z[rows, idx]))

    def bwd(g):
        full = np.zeros_like(x.data)
        full[rows, idx] = g
        return [(x, full)]

    return _emit("rowmax", (x,), out, bwd)


def reduce_seq(x: Tensor, kind: str, valid: np.ndarray | None = None) -> Tensor:
    """Column-wise max or mean over the sequence (leading) axis.

    `valid` restricts the reduction to True rows; max gradients route to the
    first maximising row per column.
    """
    if x.ndim != 2:
        raise ShapeError(f"reduce_seq needs a matrix, got shape {x.shape}")
    if x.shape[0] == 0 or (valid is not None and not valid.any()):
        raise ShapeError("reduce_seq over an empty sequence")
    if kind == "max":
        z = x.data if valid is None else np.where(valid[:, None], x.data, -np.inf)
        idx = np.argmax(z, axis=0)
        cols = np.arange(x.shape[1])
        out = _wrap(np.ascontiguousarray(z[idx, cols]))

        def bwd(g):
            full = np.zeros_like(x.data)
            full[idx, cols] = g
            return [(x, full)]

    elif kind == "mean":
        if valid is None:
            n = x.shape[0]
            out = _wrap(x.data.sum(axis=0) / n)

            def bwd(g):
                return [(x, np.tile(g / n, (x.shape[0], 1)))]

        else:
            n = int(valid.sum())
            out = _wrap((x.data * valid[:, None]).sum(axis=0) / n)

            def bwd(g):
                return [(x, (valid[:, None] * (g / n)[None, :]).astype(x.data.dtype))]

    else:
        raise ConfigError(f"reduce_seq kind must be max|mean, got {kind!r}")
    return _emit(f"reduce_seq[{kind}]", (x,), out, bwd)


def sum_all(x: Tensor) -> Tensor:
    out = _wrap(np.asarray(x.data.sum(), dtype=x.data.dtype))
    return _emit("sum_all", (x,), out, lambda g: [(x, np.full_like(x.data, g))])


# ---------------------------------------------------------------------------
# Convolution, embedding lookup, dropout, loss
# ---------------------------------------------------------------------------


def conv1d_same(x: Tensor, filters: Parameter, width: int) -> Tensor:
    """Same-length 1-D convolution of an [L, k] sequence with filters
    [width, k, d_out], zero-padded by (width-1)/2 on each side."""
    if width % 2 == 0 or width < 1:
        raise ConfigError(f"conv width must be odd and positive, got {width}")
    if x.ndim != 2 or filters.ndim != 3 or filters.shape[:2] != (width, x.shape[1]):
        raise ShapeError(
            f"conv1d_same needs x [L,k] and filters [{width},k,d_out], "
            f"got {x.shape} and {filters.shape}"
        )
    pad = (width - 1) // 2
    xp = np.pad(x.data, ((pad, pad), (0, 0)))
    out = _wrap(kernels.conv1d_forward(xp, filters.data))

    def bwd(g):
        dxp, dw = kernels.conv1d_backward(xp, filters.data, g)
        dx = dxp[pad : pad + x.shape[0]]
        return [(x, dx), (filters, dw)]

    return _emit("conv1d_same", (x, filters), out, bwd)


def lookup(table: Parameter, ids: np.ndarray) -> Tensor:
    """Gather rows of an embedding table; gradient scatter-adds back."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise ShapeError(f"lookup needs a nonempty 1-D id array, got shape {ids.shape}")
    if ids.min() < 0 or ids.max() >= table.shape[0]:
        raise ShapeError(f"lookup ids out of range [0, {table.shape[0]})")
    out = _wrap(table.data[ids])

    def bwd(g):
        full = np.zeros_like(table.data)
        kernels.scatter_add_rows(full, ids, g)
        return [(table, full)]

    return _emit("lookup", (table,), out, bwd)


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; call only during training."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0,1), got {rate}")
    if rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    keep = keep.astype(x.data.dtype)
    out = _wrap(x.data * keep)
    return _emit("dropout", (x,), out, lambda g: [(x, g * keep)])


LOG_CLAMP = 1e-12


def cross_entropy(probs: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-probability of the true class over a [B, K] batch."""
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ShapeError(
            f"cross_entropy needs probs [B,K] and B labels, got {probs.shape} "
            f"and {labels.shape}"
        )
    n_classes = probs.shape[1]
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    batch = probs.shape[0]
    rows = np.arange(batch)
    picked = probs.data[rows, labels]
    clamped = np.maximum(picked, LOG_CLAMP)
    out = _wrap(np.asarray(-np.log(clamped).mean(), dtype=probs.data.dtype))

    def bwd(g):
        full = np.zeros_like(probs.data)
        live = picked >= LOG_CLAMP
        full[rows, labels] = np.where(live, -g / (batch * clamped), 0.0)
        return [(probs, full)]

    return _emit("cross_entropy", (probs,), out, bwd)


# ---------------------------------------------------------------------------
# Finite-difference gradient checking
# ---------------------------------------------------------------------------

# Relative error denominator floor: below this gradient magnitude the metric
# degrades to a scaled absolute error, keeping central-difference roundoff
# (~1e-10 at 64-bit) well under the 1e-4 tolerances.
REL_FLOOR = 1e-3


@dataclass
class GradCheckReport:
    """Max relative error per parameter, analytic vs central differences."""

    eps: float
    max_rel_err: dict[str, float]

    def worst(self) -> tuple[str, float]:
        name = max(self.max_rel_err, key=self.max_rel_err.get)
        return name, self.max_rel_err[name]

    def failures(self, tol: float) -> dict[str, float]:
        return {n: e for n, e in self.max_rel_err.items() if not e < tol}

    def ok(self, tol: float) -> bool:
        return not self.failures(tol)


def grad_check(
    f: Callable[[], Tensor], params: Sequence[Parameter], eps: float = 1e-5
) -> GradCheckReport:
    """Compare analytic gradients of scalar f() against central differences.

    f must rebuild its graph from the current parameter values on every call
    and must be deterministic (no dropout); eps is the central-difference
    half-step, sensible only at 64-bit precision.
    """
    if not 1e-6 <= eps <= 1e-4:
        raise ValueError(f"eps must lie in [1e-6, 1e-4], got {eps}")
    if float(f().item()) != float(f().item()):
        raise ValueError("f is non-deterministic (or NaN); disable dropout first")
    base = f().item()
    if f().item() != base:
        raise ValueError("f is non-deterministic; disable dropout first")

    zero_grads(params)
    with Tape() as tape:
        loss = f()
    backward(tape, loss)
    analytic = {p.name: p.grad.copy() for p in params}

    report: dict[str, float] = {}
    for p in params:
        num = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        nflat = num.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = f().item()
            flat[i] = orig - eps
            down = f().item()
            flat[i] = orig
            nflat[i] = (up - down) / (2.0 * eps)
        a = analytic[p.name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(num)), REL_FLOOR)
        report[p.name] = float(np.max(np.abs(a - num) / denom)) if a.size else 0.0
    return GradCheckReport(eps=eps, max_rel_err=report)
