"""Block-level model shared by the exact and the polynomial forward pass.

A model is a chain of typed blocks over flat float64 vectors. The exact
pass (:func:`run_original`) uses true ReLU, max pooling, and softmax; the
approximate pass (:func:`run_approx`) swaps ReLU and max pooling for the
range-extended composite-polynomial operators and leaves every polynomial
block (linear, folded batch norm, average pooling) and softmax untouched.

:func:`error_bound` composes the per-block worst-case error propagation
rules left to right and yields a constant C, independent of the precision
parameter, such that the two passes differ by at most C * 2**-alpha in the
max norm; :func:`empirical_compare` measures the actual gap on a batch.

Spatial layout is the caller's concern: convolutions arrive materialized as
Linear blocks, and pooling acts on contiguous windows of the flat vector
(kernel k pools k*k consecutive entries per window).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .composite import SignComposite, standard_sign_composite
from .ops import MaxPoolApprox, ReluApprox

MODEL_FORMAT_VERSION = 1
MAX_POOL_KERNEL = 10


def _as_matrix(a, name):
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError(f"{name} has non-finite entries")
    return m


def _as_vector(a, name):
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError(f"{name} has non-finite entries")
    return v


@dataclass(frozen=True, eq=False)
class Linear:
    """Affine block y = W x + b (convolutions arrive in this form)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _as_matrix(self.weight, "weight")
        b = _as_vector(self.bias, "bias")
        if b.shape[0] != w.shape[0]:
            raise ValueError(f"bias length {b.shape[0]} != output dim {w.shape[0]}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class Relu:
    pass


@dataclass(frozen=True)
class MaxPool:
    """Max over contiguous windows of kernel**2 entries of the flat vector."""

    kernel: int
    stride: int | None = None  # window start step in elements; default = window size

    def __post_init__(self):
        if not 1 <= self.kernel <= MAX_POOL_KERNEL:
            raise ValueError(
                f"max-pool kernel must be in 1..{MAX_POOL_KERNEL}, got {self.kernel}"
            )
        if self.stride is not None and self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")

    @property
    def window(self) -> int:
        return self.kernel * self.kernel

    @property
    def step(self) -> int:
        return self.stride if self.stride is not None else self.window


@dataclass(frozen=True)
class AvgPool:
    """Mean over contiguous non-overlapping windows of k entries."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"pool size must be >= 1, got {self.k}")


@dataclass(frozen=True, eq=False)
class BatchNormInf:
    """Inference-time batch norm, y = scale * x + shift elementwise."""

    scale: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        s = _as_vector(self.scale, "scale")
        t = _as_vector(self.shift, "shift")
        if s.shape != t.shape:
            raise ValueError("scale and shift must have the same length")
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "shift", t)


@dataclass(frozen=True)
class Softmax:
    pass


@dataclass(frozen=True, eq=False)
class Residual:
    """y = G(x) + P x with a basic-block chain G and projection matrix P."""

    inner: tuple
    projection: np.ndarray

    def __post_init__(self):
        inner = tuple(self.inner)
        for blk in inner:
            if isinstance(blk, Residual):
                raise ValueError("residual blocks cannot nest")
            if not isinstance(blk, _BASIC_TYPES):
                raise TypeError(f"residual inner block {type(blk).__name__} is not basic")
        object.__setattr__(self, "inner", inner)
        object.__setattr__(self, "projection", _as_matrix(self.projection, "projection"))


_BASIC_TYPES = (Linear, Relu, MaxPool, AvgPool, BatchNormInf, Softmax)
Block = Union[Linear, Relu, MaxPool, AvgPool, BatchNormInf, Softmax, Residual]


def _pool_out_dim(dim, w, step, label):
    if dim < w:
        raise ValueError(f"{label}: window {w} larger than input dim {dim}")
    if (dim - w) % step != 0:
        raise ValueError(f"{label}: dim {dim} incompatible with window {w} step {step}")
    return (dim - w) // step + 1


def _block_out_dim(blk: Block, dim: int) -> int:
    if isinstance(blk, Linear):
        if blk.weight.shape[1] != dim:
            raise ValueError(f"linear expects dim {blk.weight.shape[1]}, got {dim}")
        return blk.weight.shape[0]
    if isinstance(blk, (Relu, Softmax)):
        return dim
    if isinstance(blk, BatchNormInf):
        if blk.scale.shape[0] != dim:
            raise ValueError(f"batch norm expects dim {blk.scale.shape[0]}, got {dim}")
        return dim
    if isinstance(blk, MaxPool):
        return _pool_out_dim(dim, blk.window, blk.step, "max pool")
    if isinstance(blk, AvgPool):
        return _pool_out_dim(dim, blk.k, blk.k, "avg pool")
    if isinstance(blk, Residual):
        out = dim
        for inner in blk.inner:
            out = _block_out_dim(inner, out)
        if blk.projection.shape != (out, dim):
            raise ValueError(
                f"projection shape {blk.projection.shape} != ({out}, {dim})"
            )
        return out
    raise TypeError(f"unknown block type {type(blk).__name__}")


@dataclass(frozen=True, eq=False)
class Model:
    """Validated block chain with a fixed input dimension."""

    blocks: tuple
    input_dim: int

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        dim = self.input_dim
        for i, blk in enumerate(self.blocks):
            try:
                dim = _block_out_dim(blk, dim)
            except (ValueError, TypeError) as exc:
                raise type(exc)(f"block {i}: {exc}") from None

    @cached_property
    def dims(self) -> tuple[int, ...]:
        """Output dimension after each block."""
        out = []
        dim = self.input_dim
        for blk in self.blocks:
            dim = _block_out_dim(blk, dim)
            out.append(dim)
        return tuple(out)

    @property
    def output_dim(self) -> int:
        return self.dims[-1] if self.blocks else self.input_dim


def infinity_norm(matrix) -> float:
    """Operator infinity norm: max absolute row sum."""
    m = _as_matrix(matrix, "matrix")
    return float(np.abs(m).sum(axis=1).max()) if m.size else 0.0


def softmax(x):
    x = np.asarray(x, dtype=np.float64)
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _windows(x, w, step):
    dim = x.shape[-1]
    starts = np.arange(0, dim - w + 1, step)
    idx = starts[:, None] + np.arange(w)[None, :]
    return x[..., idx]  # (..., n_windows, w)


def fold_to_linear(blk, in_dim: int) -> Linear:
    """Materialize an average pool or inference batch norm as a Linear block."""
    if isinstance(blk, AvgPool):
        out = _pool_out_dim(in_dim, blk.k, blk.k, "avg pool")
        w = np.zeros((out, in_dim))
        for i in range(out):
            w[i, i * blk.k : (i + 1) * blk.k] = 1.0 / blk.k
        return Linear(w, np.zeros(out))
    if isinstance(blk, BatchNormInf):
        return Linear(np.diag(blk.scale), blk.shift.copy())
    raise TypeError(f"cannot fold {type(blk).__name__} to linear")


def _run_block_exact(blk, x):
    if isinstance(blk, Linear):
        return x @ blk.weight.T + blk.bias
    if isinstance(blk, Relu):
        return np.maximum(x, 0.0)
    if isinstance(blk, BatchNormInf):
        return blk.scale * x + blk.shift
    if isinstance(blk, MaxPool):
        return _windows(x, blk.window, blk.step).max(axis=-1)
    if isinstance(blk, AvgPool):
        return _windows(x, blk.k, blk.k).mean(axis=-1)
    if isinstance(blk, Softmax):
        return softmax(x)
    if isinstance(blk, Residual):
        y = x
        for inner in blk.inner:
            y = _run_block_exact(inner, y)
        return y + x @ blk.projection.T
    raise TypeError(f"unknown block type {type(blk).__name__}")


def run_original(model: Model, x) -> np.ndarray:
    """Exact forward pass; accepts a vector or a batch (..., input_dim)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"input dim {x.shape[-1]} != model input dim {model.input_dim}")
    for blk in model.blocks:
        x = _run_block_exact(blk, x)
    return x


@dataclass(frozen=True)
class RangeViolation:
    """One block whose approximate-operator inputs left [-B, B]."""

    block_index: int
    kind: str
    worst_abs: float
    count: int
    limit: float


@dataclass(frozen=True)
class ApproxForward:
    output: np.ndarray
    range_violations: tuple[RangeViolation, ...]


def _record_violation(violations, idx, kind, x, limit):
    worst = float(np.abs(x).max()) if np.size(x) else 0.0
    if worst > limit:
        violations.append(
            RangeViolation(idx, kind, worst, int((np.abs(x) > limit).sum()), limit)
        )


def run_approx(
    model: Model,
    x,
    alpha: int,
    B_relu: float = 50.0,
    B_pool: float | None = None,
    composite: SignComposite | None = None,
) -> ApproxForward:
    """Forward pass with polynomial ReLU and max pooling.

    Polynomial blocks and softmax run exactly (they need no approximation).
    Any approximate-operator input outside its [-B, B] range is recorded as
    a violation; overshoot beyond the operators' clamp slack raises.
    """
    comp = composite if composite is not None else standard_sign_composite(alpha)
    B_pool = B_relu if B_pool is None else B_pool
    relu_op = ReluApprox(comp, alpha, B_relu)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"input dim {x.shape[-1]} != model input dim {model.input_dim}")
    violations: list[RangeViolation] = []

    def forward(blocks, x, base_idx):
        for i, blk in enumerate(blocks):
            idx = base_idx + i
            if isinstance(blk, Relu):
                _record_violation(violations, idx, "relu", x, B_relu)
                x = relu_op.r_tilde(x)
            elif isinstance(blk, MaxPool):
                w = _windows(x, blk.window, blk.step)
                _record_violation(violations, idx, "max_pool", w, B_pool)
                pool_op = MaxPoolApprox(comp, alpha, blk.window, B_pool)
                x = pool_op.m_tilde([w[..., j] for j in range(blk.window)])
            elif isinstance(blk, Residual):
                x = forward(blk.inner, x, idx) + x @ blk.projection.T
            else:
                x = _run_block_exact(blk, x)
        return x

    out = forward(model.blocks, x, 0)
    return ApproxForward(out, tuple(violations))


@dataclass(frozen=True)
class BoundTrace:
    """Left-to-right composition of the worst-case error propagation rules.

    ``per_block_error`` holds the bound after each top-level block at the
    given alpha; ``C`` is the alpha-free constant, so the final entry equals
    C * 2**-alpha.
    """

    per_block_error: tuple[float, ...]
    C: float
    B_used: float
    alpha: int
    range_violations: tuple[RangeViolation, ...] = ()


def _delta_lipschitz(blocks, in_dim: int) -> float:
    """Worst-case input-perturbation gain of an exact basic-block chain."""
    gain = 1.0
    dim = in_dim
    for blk in blocks:
        if isinstance(blk, Linear):
            gain *= infinity_norm(blk.weight)
        elif isinstance(blk, (AvgPool, BatchNormInf)):
            gain *= infinity_norm(fold_to_linear(blk, dim).weight)
        elif isinstance(blk, (Relu, MaxPool)):
            gain *= 1.0
        elif isinstance(blk, Softmax):
            gain *= 0.5
        else:
            raise TypeError(f"{type(blk).__name__} is not a basic block")
        dim = _block_out_dim(blk, dim)
    return gain


def _bound_walk(blocks, in_dim: int, B_relu: float, B_pool: float):
    C = 0.0
    per = []
    dim = in_dim
    for blk in blocks:
        if isinstance(blk, Linear):
            C *= infinity_norm(blk.weight)
        elif isinstance(blk, (AvgPool, BatchNormInf)):
            C *= infinity_norm(fold_to_linear(blk, dim).weight)
        elif isinstance(blk, Relu):
            C += B_relu
        elif isinstance(blk, MaxPool):
            C += 10.0 * B_pool * math.ceil(math.log2(blk.window)) if blk.window > 1 else 0.0
        elif isinstance(blk, Softmax):
            C *= 0.5
        elif isinstance(blk, Residual):
            C_inner, _ = _bound_walk(blk.inner, dim, B_relu, B_pool)
            lip = _delta_lipschitz(blk.inner, dim)
            C = C_inner + (infinity_norm(blk.projection) + lip) * C
        else:
            raise TypeError(f"{type(blk).__name__} is neither basic nor residual")
        dim = _block_out_dim(blk, dim)
        per.append(C)
    return C, per


def error_bound(
    model: Model,
    alpha: int,
    B_relu: float = 50.0,
    B_pool: float | None = None,
) -> BoundTrace:
    """Worst-case |approximate - exact| bound C * 2**-alpha for the model.

    Rules per block, starting from error 0: linear multiplies by its
    infinity norm; ReLU adds B * 2**-alpha; max pooling with kernel k adds
    10 B ceil(log2 k^2) * 2**-alpha; softmax halves; a residual block
    y = G(x) + P x contributes its inner chain's own constant plus
    (norm(P) + Lipschitz(G)) times the incoming error. Valid for alpha >= 4
    and pool kernels at most 10.
    """
    if alpha < 4:
        raise ValueError(f"the bound calculus requires alpha >= 4, got {alpha}")
    B_pool = B_relu if B_pool is None else B_pool
    C, per = _bound_walk(model.blocks, model.input_dim, B_relu, B_pool)
    scale = 2.0**-alpha
    return BoundTrace(tuple(p * scale for p in per), C, B_relu, alpha)


@dataclass(frozen=True)
class CompareReport:
    max_diff: float
    argmax_input: np.ndarray
    C: float
    bound: float
    within_bound: bool
    range_violations: tuple[RangeViolation, ...]


def empirical_compare(
    model: Model,
    alpha: int,
    B_relu: float,
    inputs,
    B_pool: float | None = None,
    composite: SignComposite | None = None,
) -> CompareReport:
    """Max over a batch of the exact-versus-approximate output gap.

    Reports the measured max-norm difference, the input attaining it, and
    whether it respects the :func:`error_bound` constant.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    exact = run_original(model, inputs)
    approx = run_approx(model, inputs, alpha, B_relu, B_pool, composite)
    diffs = np.abs(approx.output - exact).max(axis=-1)
    i = int(np.argmax(diffs))
    trace = error_bound(model, alpha, B_relu, B_pool)
    bound = trace.C * 2.0**-alpha
    max_diff = float(diffs[i])
    return CompareReport(
        max_diff=max_diff,
        argmax_input=inputs[i],
        C=trace.C,
        bound=bound,
        within_bound=max_diff <= bound,
        range_violations=approx.range_violations,
    )


# ----------------------------------------------------------------------
# Model file format (version 1): {"version": 1, "input_dim": n, "blocks":
# [...]} with one record per block, weights stored row-major.
# ----------------------------------------------------------------------

def _block_to_record(blk) -> dict:
    if isinstance(blk, Linear):
        return {"type": "linear", "weight": blk.weight.tolist(), "bias": blk.bias.tolist()}
    if isinstance(blk, Relu):
        return {"type": "relu"}
    if isinstance(blk, MaxPool):
        return {"type": "max_pool", "kernel": blk.kernel, "stride": blk.stride}
    if isinstance(blk, AvgPool):
        return {"type": "avg_pool", "k": blk.k}
    if isinstance(blk, BatchNormInf):
        return {"type": "batch_norm", "scale": blk.scale.tolist(), "shift": blk.shift.tolist()}
    if isinstance(blk, Softmax):
        return {"type": "softmax"}
    if isinstance(blk, Residual):
        return {
            "type": "residual",
            "projection": blk.projection.tolist(),
            "inner": [_block_to_record(b) for b in blk.inner],
        }
    raise TypeError(f"unknown block type {type(blk).__name__}")


def _block_from_record(rec: dict, where: str):
    try:
        kind = rec["type"]
        if kind == "linear":
            return Linear(rec["weight"], rec["bias"])
        if kind == "relu":
            return Relu()
        if kind == "max_pool":
            return MaxPool(rec["kernel"], rec.get("stride"))
        if kind == "avg_pool":
            return AvgPool(rec["k"])
        if kind == "batch_norm":
            return BatchNormInf(rec["scale"], rec["shift"])
        if kind == "softmax":
            return Softmax()
        if kind == "residual":
            inner = tuple(
                _block_from_record(r, f"{where}.inner[{i}]")
                for i, r in enumerate(rec["inner"])
            )
            return Residual(inner, rec["projection"])
        raise ValueError(f"unknown block type {kind!r}")
    except KeyError as exc:
        raise ValueError(f"{where}: missing field {exc}") from None


def model_to_json(model: Model, indent: int | None = None) -> str:
    return json.dumps(
        {
            "version": MODEL_FORMAT_VERSION,
            "input_dim": model.input_dim,
            "blocks": [_block_to_record(b) for b in model.blocks],
        },
        indent=indent,
    )


def model_from_json(text: str) -> Model:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"model file is not valid JSON: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ValueError("model file must hold a JSON object")
    version = data.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    try:
        input_dim = int(data["input_dim"])
        records = data["blocks"]
    except KeyError as exc:
        raise ValueError(f"model file missing field {exc}") from None
    blocks = tuple(
        _block_from_record(rec, f"blocks[{i}]") for i, rec in enumerate(records)
    )
    return Model(blocks, input_dim)


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model, indent=2) + "\n")


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())
