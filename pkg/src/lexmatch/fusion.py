"""Gated fusion of text and knowledge vectors, and the classification head.

The gate is a sigmoid network over the stacked fusion features; closing it
(g = 0) recovers the knowledge-free text representation exactly, which is the
noise-suppression contract tests rely on.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .autodiff import cross_entropy  # re-exported: loss lives with the head

__all__ = [
    "FusionParams",
    "OutputParams",
    "fuse",
    "classify",
    "cross_entropy",
]


class FusionParams:
    """transform and gate both map the stacked features [4w] -> [w]."""

    def __init__(self, transform: Parameter, gate: Parameter):
        if transform.shape != gate.shape:
            raise ad.ShapeError(
                f"fusion weight shapes differ: {transform.shape} vs {gate.shape}"
            )
        self.transform = transform
        self.gate = gate


class OutputParams:
    def __init__(self, weight: Parameter, bias: Parameter):
        if weight.shape[1] != bias.shape[0] or bias.shape[0] < 2:
            raise ad.ShapeError(
                f"classifier needs weight [w,K>=2] and bias [K], got "
                f"{weight.shape} and {bias.shape}"
            )
        self.weight = weight
        self.bias = bias

    @property
    def n_classes(self) -> int:
        return self.bias.shape[0]


def fuse(
    h: Tensor,
    kh: Tensor,
    params: FusionParams,
    gate_override: np.ndarray | float | None = None,
) -> Tensor:
    """Sigmoid-gated interpolation between transformed fusion features and
    the plain text vector: z = g*tanh(W1 f) + (1-g)*h.

    gate_override is a test hook that replaces the computed gate with a
    constant; 0 must return h exactly.
    """
    if h.shape != kh.shape:
        raise ad.ShapeError(f"fuse needs equal shapes, got {h.shape} vs {kh.shape}")
    features = ad.concat_last([h, kh, ad.mul(h, kh), ad.sub(h, kh)])
    transformed = ad.tanh(ad.vecmat(features, params.transform))
    if gate_override is None:
        gate = ad.sigmoid(ad.vecmat(features, params.gate))
    else:
        gate = ad.Tensor(np.broadcast_to(np.asarray(gate_override), h.shape).copy(),
                         h.data.dtype)
    # g*x~ + (1-g)*h, written so a zero gate reproduces h bit-for-bit.
    return ad.add(h, ad.mul(gate, ad.sub(transformed, h)))


def classify(z: Tensor, params: OutputParams, head: str = "paper") -> Tensor:
    """Class probabilities from the pooled representation.

    head="paper" squashes logits through tanh before the softmax (bounding
    the max probability at e/(e + (K-1)/e)); head="linear" skips the tanh.
    """
    logits = ad.add(ad.vecmat(z, params.weight), params.bias)
    if head == "paper":
        logits = ad.tanh(logits)
    elif head != "linear":
        raise ad.ConfigError(f"head must be paper|linear, got {head!r}")
    return ad.softmax_vec(logits)


def max_probability_bound(n_classes: int) -> float:
    """Largest softmax probability reachable through tanh-bounded logits."""
    return float(np.e / (np.e + (n_classes - 1) * np.exp(-1.0)))
