"""Dictionary-enhanced neural text matching.

A desk-scale sentence-pair classifier: each word of a pair is looked up in a
local dictionary snapshot, the concatenated definitions form knowledge texts,
and a co-attention matching network fuses text with knowledge through a
sigmoid gate before classification. Everything runs on a small numpy
autodiff core verified against finite differences.
"""

from .autodiff import (
    Parameter,
    Tape,
    Tensor,
    backward,
    default_dtype,
    grad_check,
    set_default_dtype,
    using_dtype,
)

__version__ = "0.1.0"

__all__ = [
    "Parameter",
    "Tape",
    "Tensor",
    "backward",
    "default_dtype",
    "grad_check",
    "set_default_dtype",
    "using_dtype",
    "__version__",
]
