"""Minimal reverse-mode differentiation over dense numpy arrays.

Sized for this model (matrices up to roughly 450x150): a flat tape of
primitive operations recorded during the forward pass, replayed in reverse to
accumulate gradients.  Everything is float64; reproducibility beats speed at
these scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(Exception):
    pass


class NonFiniteError(Exception):
    pass


class Tensor:
    __slots__ = ("value", "grad", "_backward")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad: np.ndarray | None = None
        self._backward = None

    @property
    def shape(self):
        return self.value.shape


def _acc(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.value)
    t.grad += g


class Tape:
    """Topologically ordered trace of primitive operations.

    Records are appended in creation order, which is a valid topological
    order; ``backward`` walks them once in reverse.
    """

    def __init__(self):
        self.records: list[Tensor] = []

    def _new(self, value: np.ndarray, backward=None) -> Tensor:
        t = Tensor(np.asarray(value, dtype=np.float64))
        t._backward = backward
        self.records.append(t)
        return t

    def leaf(self, value: np.ndarray) -> Tensor:
        return self._new(np.asarray(value, dtype=np.float64))

    # -- primitives ---------------------------------------------------------

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"add: {a.shape} vs {b.shape}")

        def backward(g):
            _acc(a, g)
            _acc(b, g)

        return self._new(a.value + b.value, backward)

    def add_n(self, parts: list[Tensor]) -> Tensor:
        """Sum of same-shaped tensors (child hidden-state aggregation)."""
        if not parts:
            raise ShapeError("add_n of empty list")
        shape = parts[0].shape
        for p in parts[1:]:
            if p.shape != shape:
                raise ShapeError(f"add_n: {shape} vs {p.shape}")

        def backward(g):
            for p in parts:
                _acc(p, g)

        return self._new(sum(p.value for p in parts), backward)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        """Hadamard product."""
        if a.shape != b.shape:
            raise ShapeError(f"mul: {a.shape} vs {b.shape}")

        def backward(g):
            _acc(a, g * b.value)
            _acc(b, g * a.value)

        return self._new(a.value * b.value, backward)

    def scale(self, a: Tensor, s: float) -> Tensor:
        def backward(g):
            _acc(a, g * s)

        return self._new(a.value * s, backward)

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        """Matrix @ matrix or matrix @ vector."""
        if a.value.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: {a.shape} vs {b.shape}")

        def backward(g):
            if b.value.ndim == 1:
                _acc(a, np.outer(g, b.value))
                _acc(b, a.value.T @ g)
            else:
                _acc(a, g @ b.value.T)
                _acc(b, a.value.T @ g)

        return self._new(a.value @ b.value, backward)

    def col(self, m: Tensor, j: int) -> Tensor:
        if m.value.ndim != 2 or not (0 <= j < m.shape[1]):
            raise ShapeError(f"col {j} of {m.shape}")

        def backward(g):
            if m.grad is None:
                m.grad = np.zeros_like(m.value)
            m.grad[:, j] += g

        return self._new(m.value[:, j].copy(), backward)

    def concat(self, parts: list[Tensor], axis: int = 0) -> Tensor:
        sizes = [p.shape[axis] for p in parts]
        offsets = np.cumsum([0] + sizes)

        def backward(g):
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                _acc(p, np.take(g, range(lo, hi), axis=axis))

        return self._new(np.concatenate([p.value for p in parts], axis=axis), backward)

    def embed_columns(self, table: Tensor, ids: list[int]) -> Tensor:
        """Gather rows of an embedding table as feature columns.

        ``ids`` may contain -1 for out-of-vocabulary tokens, which contribute
        a zero column and receive no gradient.
        """
        if table.value.ndim != 2:
            raise ShapeError(f"embed_columns on {table.shape}")
        d = table.shape[1]
        cols = np.zeros((d, len(ids)))
        for j, i in enumerate(ids):
            if i >= 0:
                cols[:, j] = table.value[i]

        def backward(g):
            if table.grad is None:
                table.grad = np.zeros_like(table.value)
            for j, i in enumerate(ids):
                if i >= 0:
                    table.grad[i] += g[:, j]

        return self._new(cols, backward)

    def sigmoid(self, a: Tensor) -> Tensor:
        out_value = 1.0 / (1.0 + np.exp(-a.value))

        def backward(g):
            _acc(a, g * out_value * (1.0 - out_value))

        return self._new(out_value, backward)

    def tanh(self, a: Tensor) -> Tensor:
        out_value = np.tanh(a.value)

        def backward(g):
            _acc(a, g * (1.0 - out_value**2))

        return self._new(out_value, backward)

    def softmax(self, a: Tensor) -> Tensor:
        z = a.value - a.value.max()
        e = np.exp(z)
        out_value = e / e.sum()

        def backward(g):
            _acc(a, out_value * (g - float(g @ out_value)))

        return self._new(out_value, backward)

    def log_softmax(self, a: Tensor) -> Tensor:
        z = a.value - a.value.max()
        lse = np.log(np.exp(z).sum())
        out_value = z - lse

        def backward(g):
            _acc(a, g - np.exp(out_value) * g.sum())

        return self._new(out_value, backward)

    def pick(self, a: Tensor, i: int) -> Tensor:
        if not (0 <= i < a.value.size):
            raise ShapeError(f"pick {i} of {a.shape}")

        def backward(g):
            if a.grad is None:
                a.grad = np.zeros_like(a.value)
            a.grad[i] += g

        return self._new(np.float64(a.value[i]), backward)

    def neg(self, a: Tensor) -> Tensor:
        def backward(g):
            _acc(a, -g)

        return self._new(-a.value, backward)

    # -- reverse pass -------------------------------------------------------

    def backward(self, out: Tensor) -> None:
        if out.value.ndim != 0:
            raise ShapeError(f"backward from non-scalar {out.shape}")
        if not np.isfinite(out.value):
            raise NonFiniteError("loss is not finite")
        out.grad = np.ones_like(out.value)
        for t in reversed(self.records):
            if t.grad is not None and t._backward is not None:
                t._backward(t.grad)


def softmax_np(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def init_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """uniform(-a, a) with a = 1/sqrt(fan_in)."""
    a = 1.0 / np.sqrt(cols)
    return rng.uniform(-a, a, size=(rows, cols))


# ---------------------------------------------------------------------------
# gradient checking

@dataclass
class GradCheckReport:
    max_rel_err: float
    worst_param: str
    worst_index: tuple
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tol

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"max rel err {self.max_rel_err:.3g} at {self.worst_param}{list(self.worst_index)} "
            f"(tol {self.tol:g}) {status}"
        )


def relative_error(a: float, b: float, floor: float = 1e-8) -> float:
    denom = max(abs(a) + abs(b), floor)
    return abs(a - b) / denom


def grad_check(f, params: dict[str, np.ndarray], h: float = 1e-5, tol: float = 1e-4) -> GradCheckReport:
    """Compare analytic gradients of ``f`` against central finite differences.

    ``f(params) -> (loss, grads)`` where grads mirrors the params dict.  Every
    coordinate of every parameter is perturbed by ±h.

    The relative-error denominator is floored at 1e-6: the central difference
    itself carries roundoff noise of about eps*|f|/h (~1e-11 absolute for a
    loss of order 1), so coordinates whose gradient magnitude sits below 1e-6
    are compared on an absolute scale where that noise cannot dominate.
    """
    loss, grads = f(params)
    if not np.isfinite(loss):
        raise NonFiniteError("loss not finite at the evaluation point")
    worst = (0.0, "", ())
    for name, arr in params.items():
        analytic = grads[name]
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + h
            fplus = f(params)[0]
            arr[idx] = orig - h
            fminus = f(params)[0]
            arr[idx] = orig
            if not (np.isfinite(fplus) and np.isfinite(fminus)):
                raise NonFiniteError(f"non-finite value while perturbing {name}{idx}")
            fd = (fplus - fminus) / (2.0 * h)
            err = relative_error(float(analytic[idx]), float(fd), floor=1e-6)
            if err > worst[0]:
                worst = (err, name, idx)
    return GradCheckReport(worst[0], worst[1], worst[2], tol)
