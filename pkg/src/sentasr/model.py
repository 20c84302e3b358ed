"""Sentiment decoders over frozen feature sequences.

Three variants map a (T, D) sequence to a fixed-length embedding:

  mlp_pool  frame-wise MLP then pooling over time
  rnn_pool  single bi-LSTM layer then pooling over time
  rnn_attn  bi-LSTM then multi-head scaled dot-product attention, one
            learned query per head; embedding = concat of head outputs

followed by a linear softmax classifier. Everything runs on padded,
masked batches and is differentiable through the numerics tape; padded
frames never influence the embedding.
"""

import math
from dataclasses import dataclass

import numpy as np

from .numerics import tensor as nt
from .numerics.tensor import Tensor

VARIANTS = ("mlp_pool", "rnn_pool", "rnn_attn")
POOLINGS = ("mean", "max", "last")


@dataclass
class DecoderConfig:
    variant: str = "rnn_attn"
    input_dim: int = 64
    lstm_units: int = 64
    n_heads: int = 8
    d_head: int = 32
    pooling: str = "mean"
    mlp_hidden: tuple = (128, 128)
    num_classes: int = 3

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}")
        if min(self.n_heads, self.d_head, self.lstm_units,
               self.input_dim) < 1 or self.num_classes < 2:
            raise ValueError("bad decoder dimensions")
        self.mlp_hidden = tuple(self.mlp_hidden)

    @property
    def d_k(self):
        """bi-LSTM output width (both directions)."""
        return 2 * self.lstm_units

    @property
    def embedding_dim(self):
        if self.variant == "rnn_attn":
            return self.n_heads * self.d_head
        if self.variant == "rnn_pool":
            return self.d_k
        return self.mlp_hidden[-1]


@dataclass
class AttentionMap:
    """Per-head attention rows over encoder frames; padded frames are 0."""

    weights: np.ndarray  # (n_heads, T)
    frame_period: float


def _uniform(rng, shape, fan_in, dtype):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def init_params(cfg, seed, dtype=np.float32):
    """Fan-in-scaled uniform init; LSTM forget-gate bias starts at +1."""
    rng = np.random.default_rng(np.random.SeedSequence([0xD0DE, seed]))
    p = {}
    h = cfg.lstm_units
    if cfg.variant in ("rnn_pool", "rnn_attn"):
        for d in ("fwd", "bwd"):
            p[f"lstm.{d}.w_x"] = _uniform(rng, (cfg.input_dim, 4 * h),
                                          cfg.input_dim, dtype)
            p[f"lstm.{d}.w_h"] = _uniform(rng, (h, 4 * h), h, dtype)
            b = _uniform(rng, (4 * h,), cfg.input_dim, dtype)
            b[h:2 * h] += 1.0  # forget gate
            p[f"lstm.{d}.b"] = b
    if cfg.variant == "rnn_attn":
        na, da = cfg.n_heads, cfg.d_head
        p["attn.w_q"] = _uniform(rng, (na, da), da, dtype)
        p["attn.w_k"] = _uniform(rng, (na * da, cfg.d_k), cfg.d_k, dtype)
        p["attn.w_v"] = _uniform(rng, (na * da, cfg.d_k), cfg.d_k, dtype)
    if cfg.variant == "mlp_pool":
        widths = (cfg.input_dim,) + cfg.mlp_hidden
        for i in range(len(cfg.mlp_hidden)):
            p[f"mlp.{i}.w"] = _uniform(rng, (widths[i], widths[i + 1]),
                                       widths[i], dtype)
            p[f"mlp.{i}.b"] = _uniform(rng, (widths[i + 1],), widths[i], dtype)
    p["cls.w"] = _uniform(rng, (cfg.embedding_dim, cfg.num_classes),
                          cfg.embedding_dim, dtype)
    p["cls.b"] = _uniform(rng, (cfg.num_classes,), cfg.embedding_dim, dtype)
    return {k: Tensor(v, requires_grad=True) for k, v in p.items()}


def _affine_seq(x, w, b):
    """(B, T, Din) @ (Din, Dout) + (Dout,) via a flattened matmul."""
    bsz, t_len, din = x.shape
    flat = nt.reshape(x, (bsz * t_len, din))
    out = nt.add(nt.matmul(flat, w), b)
    return nt.reshape(out, (bsz, t_len, w.shape[1]))


def bilstm(x, lengths, params):
    """Concat of forward and backward LSTM hidden states, (B, T, 2H).

    The backward pass reverses only each row's valid prefix, so states at
    valid positions never depend on padding.
    """
    xf = _affine_seq(x, params["lstm.fwd.w_x"], params["lstm.fwd.b"])
    hf = nt.lstm_seq(xf, params["lstm.fwd.w_h"])
    xr = nt.reverse_by_length(x, lengths)
    xb = _affine_seq(xr, params["lstm.bwd.w_x"], params["lstm.bwd.b"])
    hb = nt.reverse_by_length(nt.lstm_seq(xb, params["lstm.bwd.w_h"]), lengths)
    return nt.concat([hf, hb], axis=2)


def _pool(h, mask, lengths, mode):
    dtype = h.dtype
    if mode == "mean":
        m = mask[:, :, None].astype(dtype)
        total = nt.sum_(nt.mul(h, m), axis=1)
        return nt.mul(total, (1.0 / lengths)[:, None].astype(dtype))
    if mode == "max":
        offs = np.where(mask, 0.0, -1e30)[:, :, None].astype(dtype)
        return nt.max_(nt.add(h, offs), axis=1)
    return nt.select_last(h, lengths)


def attention_heads(h, mask, params, n_heads, d_head):
    """All heads at once: returns (embedding (B, n_heads*d_head),
    attention (B, n_heads, T) as a Tensor)."""
    bsz, t_len, d_k = h.shape
    flat = nt.reshape(h, (bsz * t_len, d_k))
    keys = nt.reshape(nt.matmul(flat, nt.transpose(params["attn.w_k"], (1, 0))),
                      (bsz, t_len, n_heads, d_head))
    scores = nt.sum_(nt.mul(keys, params["attn.w_q"]), axis=3)
    scores = nt.mul(nt.transpose(scores, (0, 2, 1)), 1.0 / math.sqrt(d_head))
    attn = nt.masked_softmax(scores, mask[:, None, :], axis=2)
    vals = nt.reshape(nt.matmul(flat, nt.transpose(params["attn.w_v"], (1, 0))),
                      (bsz, t_len, n_heads, d_head))
    vals = nt.transpose(vals, (0, 2, 1, 3))  # (B, n_heads, T, d_head)
    weighted = nt.sum_(nt.mul(vals, nt.reshape(attn, (bsz, n_heads, t_len, 1))),
                       axis=2)
    return nt.reshape(weighted, (bsz, n_heads * d_head)), attn


def decode_batch(feats, lengths, cfg, params):
    """Padded batch (B, T, D) + lengths -> (embeddings (B, E), attention).

    feats may be a Tensor or ndarray; padded cells must be zero. The
    attention output is a (B, n_heads, T) ndarray for rnn_attn, else None.
    """
    dtype = params["cls.w"].dtype
    if not isinstance(feats, Tensor):
        feats = Tensor(np.asarray(feats, dtype=dtype))
    if feats.data.ndim != 3 or feats.shape[2] != cfg.input_dim:
        raise ValueError(f"expected (B, T, {cfg.input_dim}) features, "
                         f"got {feats.shape}")
    lengths = np.asarray(lengths, dtype=np.int64)
    if (lengths < 1).any() or (lengths > feats.shape[1]).any():
        raise ValueError("lengths must lie in [1, T]")
    mask = np.arange(feats.shape[1])[None, :] < lengths[:, None]

    if cfg.variant == "mlp_pool":
        z = feats
        for i in range(len(cfg.mlp_hidden)):
            z = nt.relu(_affine_seq(z, params[f"mlp.{i}.w"], params[f"mlp.{i}.b"]))
        return _pool(z, mask, lengths, cfg.pooling), None

    h = bilstm(feats, lengths, params)
    if cfg.variant == "rnn_pool":
        return _pool(h, mask, lengths, cfg.pooling), None
    emb, attn = attention_heads(h, mask, params, cfg.n_heads, cfg.d_head)
    return emb, attn.data.copy()


def decode(seq, cfg, params):
    """Single utterance -> (embedding Tensor (E,), AttentionMap or None)."""
    vals = np.asarray(seq.values)[None, :, :]
    emb, attn = decode_batch(vals, [vals.shape[1]], cfg, params)
    emb = nt.reshape(emb, (emb.shape[1],))
    amap = None
    if attn is not None:
        amap = AttentionMap(weights=attn[0], frame_period=seq.frame_period)
    return emb, amap


def classify(embedding, params):
    """Embedding(s) -> (logits, probabilities); both (C,) or (B, C)."""
    single = embedding.data.ndim == 1
    if single:
        embedding = nt.reshape(embedding, (1, embedding.shape[0]))
    expected = params["cls.w"].shape[0]
    if embedding.shape[1] != expected:
        raise ValueError(f"embedding dim {embedding.shape[1]} does not match "
                         f"classifier ({expected})")
    logits = nt.add(nt.matmul(embedding, params["cls.w"]), params["cls.b"])
    probs = nt.softmax(logits, axis=1)
    if single:
        logits = nt.reshape(logits, (logits.shape[1],))
        probs = nt.reshape(probs, (probs.shape[1],))
    return logits, probs


_VARIANT_CODE = {v: i for i, v in enumerate(VARIANTS)}
_POOLING_CODE = {v: i for i, v in enumerate(POOLINGS)}


def params_to_entries(cfg, params):
    """Flatten params + config into checkpoint entries.

    The config rides along as reserved meta.* scalars so a checkpoint is
    self-describing (prediction needs no side channel).
    """
    out = {name: t.data.astype(np.float32) for name, t in params.items()}
    meta = {
        "meta.variant": float(_VARIANT_CODE[cfg.variant]),
        "meta.input_dim": float(cfg.input_dim),
        "meta.lstm_units": float(cfg.lstm_units),
        "meta.n_heads": float(cfg.n_heads),
        "meta.d_head": float(cfg.d_head),
        "meta.pooling": float(_POOLING_CODE[cfg.pooling]),
        "meta.num_classes": float(cfg.num_classes),
    }
    for k, v in meta.items():
        out[k] = np.array([v], dtype=np.float32)
    out["meta.mlp_hidden"] = np.array(cfg.mlp_hidden, dtype=np.float32)
    return out


def entries_to_model(entries):
    """Inverse of params_to_entries: -> (DecoderConfig, params).

    Accepts {name: Tensor} (as load_checkpoint returns) or {name: ndarray}.
    """
    entries = {k: (v.data if isinstance(v, Tensor) else np.asarray(v))
               for k, v in entries.items()}

    def scalar(name):
        return int(entries[name][0])

    cfg = DecoderConfig(
        variant=VARIANTS[scalar("meta.variant")],
        input_dim=scalar("meta.input_dim"),
        lstm_units=scalar("meta.lstm_units"),
        n_heads=scalar("meta.n_heads"),
        d_head=scalar("meta.d_head"),
        pooling=POOLINGS[scalar("meta.pooling")],
        mlp_hidden=tuple(int(v) for v in entries["meta.mlp_hidden"]),
        num_classes=scalar("meta.num_classes"),
    )
    params = {k: Tensor(v, requires_grad=True) for k, v in entries.items()
              if not k.startswith("meta.")}
    return cfg, params
