"""The sentence-pair matching network.

Each interaction block runs a conv + multi-head-attention encoder over both
sequences, cross-attends them, and aggregates pre/post-attention views
through three feed-forward perspectives. Blocks iterate with the original
embedding re-concatenated into every block's input (augmented residual).
A final bidirectional attention and max/mean pooling produce one fixed
vector per pair. One parameter set serves both the text pass and the
knowledge pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor


@dataclass(frozen=True)
class MatchConfig:
    hidden_size: int = 200
    num_heads: int = 4
    conv_width: int = 3
    num_blocks: int = 2
    dropout: float = 0.2

    def validate(self) -> None:
        if self.num_blocks < 1:
            raise ad.ConfigError("num_blocks must be >= 1")
        if self.conv_width < 1 or self.conv_width % 2 == 0:
            raise ad.ConfigError("conv_width must be odd and positive")
        # Half the hidden width feeds the multi-head split.
        if self.hidden_size % (2 * self.num_heads) != 0:
            raise ad.ConfigError(
                f"hidden_size must be divisible by 2*num_heads, got "
                f"{self.hidden_size} and {self.num_heads} heads"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ad.ConfigError("dropout must be in [0, 1)")


@dataclass
class AttentionParams:
    wq: Parameter
    bq: Parameter
    wk: Parameter
    bk: Parameter
    wv: Parameter
    bv: Parameter
    wo: Parameter
    bo: Parameter


@dataclass
class FeedForwardParams:
    w: Parameter
    b: Parameter


@dataclass
class BlockParams:
    """Per-block weights, shared between both sides of a pair and between the
    text pass and the knowledge pass."""

    conv_filters: Parameter
    conv_bias: Parameter
    attn: AttentionParams
    coattn_left: Parameter
    coattn_right: Parameter
    agg_cat: FeedForwardParams
    agg_diff: FeedForwardParams
    agg_prod: FeedForwardParams
    agg_combine: FeedForwardParams
    input_proj: FeedForwardParams | None = None  # absent on the first block


@dataclass
class BidiParams:
    """Weights of the trainable similarity t_ij = w . [c_i; q_j; c_i*q_j]."""

    sim_left: Parameter
    sim_right: Parameter
    sim_prod: Parameter


@dataclass
class MatchParams:
    blocks: list[BlockParams] = field(default_factory=list)
    bidi: BidiParams | None = None


def feed_forward(x: Tensor, ff: FeedForwardParams, act: bool = True) -> Tensor:
    out = ad.add_rowvec(ad.matmul(x, ff.w), ff.b)
    return ad.relu(out) if act else out


def multi_head_self_attention(
    x: Tensor,
    p: AttentionParams,
    num_heads: int,
    masked: np.ndarray | None = None,
) -> Tensor:
    """Standard scaled dot-product self-attention; masked positions are
    excluded as keys."""
    q = ad.add_rowvec(ad.matmul(x, p.wq), p.bq)
    k = ad.add_rowvec(ad.matmul(x, p.wk), p.bk)
    v = ad.add_rowvec(ad.matmul(x, p.wv), p.bv)
    width = q.shape[1]
    head_dim = width // num_heads
    heads = []
    for h in range(num_heads):
        lo, hi = h * head_dim, (h + 1) * head_dim
        qh = ad.slice_last(q, lo, hi)
        kh = ad.slice_last(k, lo, hi)
        vh = ad.slice_last(v, lo, hi)
        logits = ad.scale(ad.matmul(qh, ad.transpose(kh)), 1.0 / np.sqrt(head_dim))
        weights = ad.softmax_rows(logits, masked_cols=masked)
        heads.append(ad.matmul(weights, vh))
    merged = ad.concat_last(heads)
    return ad.add_rowvec(ad.matmul(merged, p.wo), p.bo)


def encode(
    x: Tensor,
    blk: BlockParams,
    cfg: MatchConfig,
    masked: np.ndarray | None = None,
) -> Tensor:
    """Local conv features and global self-attention features, concatenated
    to the full hidden width: [m, k] -> [m, hidden]."""
    local = ad.relu(
        ad.add_rowvec(ad.conv1d_same(x, blk.conv_filters, cfg.conv_width), blk.conv_bias)
    )
    attended = multi_head_self_attention(
        ad.concat_last([local, x]), blk.attn, cfg.num_heads, masked
    )
    return ad.concat_last([local, attended])


def co_attention(
    p: Tensor,
    h: Tensor,
    blk: BlockParams,
    masked_p: np.ndarray | None = None,
    masked_h: np.ndarray | None = None,
) -> tuple[Tensor, Tensor, Tensor]:
    """Cross-attend two encoded sequences through a shared similarity matrix.

    Returns (p_attn, h_attn, a): each side rewritten as a convex combination
    of the other side's rows, plus the row-normalized attention a for export.
    """
    left = ad.relu(ad.matmul(p, blk.coattn_left))
    right = ad.relu(ad.matmul(h, blk.coattn_right))
    sim = ad.matmul(left, ad.transpose(right))
    a = ad.softmax_rows(sim, masked_cols=masked_h)
    p_attn = ad.matmul(a, h)
    # Attending in the other direction normalizes over the other axis.
    a_t = ad.softmax_rows(ad.transpose(sim), masked_cols=masked_p)
    h_attn = ad.matmul(a_t, p)
    return p_attn, h_attn, a


def aggregate(p: Tensor, p_attn: Tensor, blk: BlockParams) -> Tensor:
    """Blend pre- and post-attention views through concatenation, difference
    and product perspectives, then combine."""
    if p.shape != p_attn.shape:
        raise ad.ShapeError(f"aggregate needs equal shapes, got {p.shape} vs {p_attn.shape}")
    a1 = feed_forward(ad.concat_last([p, p_attn]), blk.agg_cat)
    a2 = feed_forward(ad.concat_last([p, ad.sub(p, p_attn)]), blk.agg_diff)
    a3 = feed_forward(ad.concat_last([p, ad.mul(p, p_attn)]), blk.agg_prod)
    return feed_forward(ad.concat_last([a1, a2, a3]), blk.agg_combine)


def bidirectional_attention(
    c: Tensor,
    q: Tensor,
    params: BidiParams,
    masked_c: np.ndarray | None = None,
    masked_q: np.ndarray | None = None,
    trace: dict | None = None,
) -> Tensor:
    """Combine both attention directions per position: [m, d] x [n, d] ->
    [m, 4d] rows [c_i; v; c_i*v; c_i*u_i]."""
    m = c.shape[0]
    sim = ad.matmul(ad.mul(c, ad.tile_rows(params.sim_prod, m)), ad.transpose(q))
    sim = ad.add_colvec(sim, ad.matvec(c, params.sim_left))
    sim = ad.add_rowvec(sim, ad.matvec(q, params.sim_right))

    alpha = ad.softmax_rows(sim, masked_cols=masked_q)
    u = ad.matmul(alpha, q)

    b = ad.softmax_vec(ad.rowmax(sim, masked_cols=masked_q), masked=masked_c)
    v = ad.vecmat(b, c)
    v_tiled = ad.tile_rows(v, m)

    if trace is not None:
        trace["bidi_alpha"] = alpha.data
        trace["bidi_b"] = b.data
    return ad.concat_last([c, v_tiled, ad.mul(c, v_tiled), ad.mul(c, u)])


def pool(g: Tensor, valid: np.ndarray | None = None) -> Tensor:
    """Concatenated column-wise max and mean over positions: [m, w] -> [2w]."""
    return ad.concat_last(
        [ad.reduce_seq(g, "max", valid), ad.reduce_seq(g, "mean", valid)]
    )


def match(
    x: Tensor,
    y: Tensor,
    cfg: MatchConfig,
    params: MatchParams,
    valid_x: np.ndarray | None = None,
    valid_y: np.ndarray | None = None,
    train: bool = False,
    rng: np.random.Generator | None = None,
    trace: dict | None = None,
) -> Tensor:
    """Run the full matching stack on a pair of embedded sequences and return
    the pooled [8 * hidden] pair representation."""
    masked_x = None if valid_x is None else ~valid_x
    masked_y = None if valid_y is None else ~valid_y

    def zero_invalid(t: Tensor, valid: np.ndarray | None) -> Tensor:
        if valid is None or valid.all():
            return t
        keep = valid[:, None].astype(t.data.dtype)
        return ad.mul(t, ad.Tensor(np.broadcast_to(keep, t.shape).copy(), t.data.dtype))

    def maybe_dropout(t: Tensor) -> Tensor:
        if train and cfg.dropout > 0.0:
            return ad.dropout(t, cfg.dropout, rng)
        return t

    in_x, in_y = maybe_dropout(x), maybe_dropout(y)
    c_x = c_y = None
    a_final = None
    for blk in params.blocks:
        if blk.input_proj is not None:
            in_x = feed_forward(ad.concat_last([c_x, x]), blk.input_proj, act=False)
            in_y = feed_forward(ad.concat_last([c_y, y]), blk.input_proj, act=False)
        # Invalid rows are zeroed so conv windows see the same zeros that
        # same-padding would provide.
        in_x = zero_invalid(in_x, valid_x)
        in_y = zero_invalid(in_y, valid_y)
        p = encode(in_x, blk, cfg, masked_x)
        h = encode(in_y, blk, cfg, masked_y)
        p_attn, h_attn, a = co_attention(p, h, blk, masked_x, masked_y)
        c_x = maybe_dropout(aggregate(p, p_attn, blk))
        c_y = maybe_dropout(aggregate(h, h_attn, blk))
        a_final = a

    g = bidirectional_attention(c_x, c_y, params.bidi, masked_x, masked_y, trace)
    if trace is not None:
        trace["coattn"] = a_final.data
    return pool(g, valid_x)
