"""Shared test utilities: random model generation and mp-precision oracles."""

from __future__ import annotations

import numpy as np

from fhepoly.netmodel import (
    AvgPool,
    BatchNormInf,
    Linear,
    MaxPool,
    Model,
    Relu,
    Residual,
    Softmax,
)


def rand_linear(rng, din, dout, gain=None):
    """Linear block with entries in [-1, 1] and a controlled infinity norm.

    Rows are rescaled so the worst-case amplification stays around one;
    without this, chains of wide layers blow past any approximation range.
    """
    w = rng.uniform(-1.0, 1.0, size=(dout, din))
    norms = np.abs(w).sum(axis=1, keepdims=True)
    g = gain if gain is not None else rng.uniform(0.4, 1.3)
    w = w / np.maximum(norms, 1e-9) * g
    b = rng.uniform(-0.5, 0.5, size=dout)
    return Linear(w, b)


def make_random_model(rng, with_residual=False):
    """Random basic-block model: <= 8 blocks, width <= 32, tame ranges."""
    dim0 = int(rng.integers(4, 13))
    blocks = []
    dim = dim0

    def add_linear(dout):
        nonlocal dim
        blocks.append(rand_linear(rng, dim, dout))
        dim = dout

    add_linear(int(rng.integers(8, 33)))
    blocks.append(Relu())
    if with_residual:
        inner = (rand_linear(rng, dim, dim), Relu())
        proj = np.eye(dim) * rng.uniform(0.2, 1.0)
        blocks.append(Residual(inner, proj))
    roll = rng.random()
    if roll < 0.4:
        add_linear(16)
        blocks.append(MaxPool(2))
        dim = 4
    elif roll < 0.7:
        add_linear(16)
        blocks.append(AvgPool(4))
        dim = 4
    if rng.random() < 0.5:
        blocks.append(
            BatchNormInf(rng.uniform(0.4, 1.4, dim), rng.uniform(-0.3, 0.3, dim))
        )
    add_linear(int(rng.integers(3, 9)))
    if rng.random() < 0.6:
        blocks.append(Softmax())
    assert len(blocks) <= 8
    return Model(tuple(blocks), dim0)
