"""Small transformer encoder over subword pieces.

Token, learned-position, and segment embeddings feed a stack of
post-layer-norm self-attention blocks; the output is one contextual
vector per piece.  The segment channel is what lets attention tell the
prime apart from the sentence body.  Sized for minutes-scale CPU
training rather than fidelity to any pretrained checkpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    hidden: int = 64
    heads: int = 4
    layers: int = 2
    feedforward: int = 128
    max_positions: int = 128

    def __post_init__(self):
        for name in ("vocab_size", "hidden", "heads", "layers", "feedforward", "max_positions"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.hidden % self.heads:
            raise ValueError(f"hidden {self.hidden} not divisible by heads {self.heads}")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    r = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape if shape is not None else (fan_in, fan_out))


def init_encoder(config: EncoderConfig, seed: int) -> dict[str, ad.Tensor]:
    """Parameters in a flat name->tensor map; names are the checkpoint keys."""
    rng = np.random.default_rng(seed)
    d, ff = config.hidden, config.feedforward
    p: dict[str, np.ndarray] = {}
    p["tok_emb"] = _xavier(rng, config.vocab_size, d)
    p["pos_emb"] = _xavier(rng, config.max_positions, d)
    p["seg_emb"] = _xavier(rng, 2, d)
    p["emb_ln.gain"] = np.ones(d)
    p["emb_ln.bias"] = np.zeros(d)
    for i in range(config.layers):
        for proj in ("wq", "wk", "wv", "wo"):
            p[f"layer{i}.attn.{proj}"] = _xavier(rng, d, d)
            if proj != "wk":
                # Softmax rows are invariant to a key bias (it shifts every
                # score in a row equally), so the parameter would be inert.
                p[f"layer{i}.attn.{proj[1]}bias"] = np.zeros(d)
        p[f"layer{i}.ln1.gain"] = np.ones(d)
        p[f"layer{i}.ln1.bias"] = np.zeros(d)
        p[f"layer{i}.ffn.w1"] = _xavier(rng, d, ff)
        p[f"layer{i}.ffn.b1"] = np.zeros(ff)
        p[f"layer{i}.ffn.w2"] = _xavier(rng, ff, d)
        p[f"layer{i}.ffn.b2"] = np.zeros(d)
        p[f"layer{i}.ln2.gain"] = np.ones(d)
        p[f"layer{i}.ln2.bias"] = np.zeros(d)
    return {name: ad.param(arr) for name, arr in p.items()}


def _heads_split(x: ad.Tensor, n: int, heads: int, head_dim: int) -> ad.Tensor:
    return ad.transpose(ad.reshape(x, (n, heads, head_dim)), (1, 0, 2))


# Forward-call counter, used by tests that pin how many encoder passes a
# decode performs (e.g. one per allowed role).  Read-modify on the test
# thread only; not part of the stable interface.
encode_calls = 0


def encode(
    params: dict[str, ad.Tensor],
    config: EncoderConfig,
    piece_ids,
    segment_ids,
    return_attention: bool = False,
):
    global encode_calls
    encode_calls += 1
    n = len(piece_ids)
    if n > config.max_positions:
        raise ValueError(f"input length {n} exceeds max positions {config.max_positions}")
    if any(s not in (0, 1) for s in segment_ids):
        raise ValueError("segment ids must be 0 or 1")
    x = ad.add(
        ad.add(ad.lookup(params["tok_emb"], list(piece_ids)),
               ad.narrow(params["pos_emb"], 0, 0, n)),
        ad.lookup(params["seg_emb"], list(segment_ids)),
    )
    x = ad.layer_norm(x, params["emb_ln.gain"], params["emb_ln.bias"])
    attentions = []
    inv_sqrt = 1.0 / math.sqrt(config.head_dim)
    for i in range(config.layers):
        lp = lambda key: params[f"layer{i}.{key}"]
        q = ad.add(ad.matmul(x, lp("attn.wq")), lp("attn.qbias"))
        k = ad.matmul(x, lp("attn.wk"))
        v = ad.add(ad.matmul(x, lp("attn.wv")), lp("attn.vbias"))
        qh = _heads_split(q, n, config.heads, config.head_dim)
        kh = _heads_split(k, n, config.heads, config.head_dim)
        vh = _heads_split(v, n, config.heads, config.head_dim)
        scores = ad.scale(ad.matmul(qh, ad.transpose(kh, (0, 2, 1))), inv_sqrt)
        weights = ad.softmax(scores, axis=-1)
        if return_attention:
            attentions.append(weights.values.copy())
        ctx = ad.reshape(ad.transpose(ad.matmul(weights, vh), (1, 0, 2)), (n, config.hidden))
        attn_out = ad.add(ad.matmul(ctx, lp("attn.wo")), lp("attn.obias"))
        x = ad.layer_norm(ad.add(x, attn_out), lp("ln1.gain"), lp("ln1.bias"))
        h = ad.gelu(ad.add(ad.matmul(x, lp("ffn.w1")), lp("ffn.b1")))
        ff_out = ad.add(ad.matmul(h, lp("ffn.w2")), lp("ffn.b2"))
        x = ad.layer_norm(ad.add(x, ff_out), lp("ln2.gain"), lp("ln2.bias"))
    if return_attention:
        return x, attentions
    return x
