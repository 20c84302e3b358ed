"""Forward-only ASR-style encoder used as a frozen feature extractor.

Stands in for an unavailable pre-trained model: weights are seeded random,
the binding contract is the shape map T -> ceil(T/8) frames of 1536 dims.
Runs in plain numpy (plus the LSTM kernel backend); nothing here is ever
recorded on a gradient tape.
"""

from dataclasses import dataclass

import numpy as np

from .features import FeatureSequence
from .numerics import backend


@dataclass
class EncoderConfig:
    input_dim: int = 80
    conv_filters: int = 512
    conv_width: int = 5
    conv_stride: int = 1
    pool_width: int = 2
    pool_stride: int = 2
    macro_repeats: int = 3
    bilstm_layers: int = 3
    bilstm_units: int = 512
    projection_dim: int = 1536

    @property
    def time_reduction(self):
        return self.pool_stride ** self.macro_repeats

    @property
    def output_dim(self):
        return self.projection_dim


def _uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


def init_encoder(cfg=None, seed=0):
    """Deterministic fan-in-scaled uniform initialization."""
    cfg = cfg or EncoderConfig()
    rng = np.random.default_rng(np.random.SeedSequence([0x5EED, seed]))
    params = {}
    in_dim = cfg.input_dim
    for k in range(cfg.macro_repeats):
        fan_in = in_dim * cfg.conv_width
        params[f"conv{k}.w"] = _uniform(rng, (fan_in, cfg.conv_filters), fan_in)
        params[f"conv{k}.b"] = _uniform(rng, (cfg.conv_filters,), fan_in)
        in_dim = cfg.conv_filters
    h = cfg.bilstm_units
    for k in range(cfg.bilstm_layers):
        for d in ("fwd", "bwd"):
            params[f"lstm{k}.{d}.w_x"] = _uniform(rng, (in_dim, 4 * h), in_dim)
            params[f"lstm{k}.{d}.w_h"] = _uniform(rng, (h, 4 * h), h)
            params[f"lstm{k}.{d}.b"] = _uniform(rng, (4 * h,), in_dim)
        params[f"proj{k}.w"] = _uniform(rng, (2 * h, cfg.projection_dim), 2 * h)
        params[f"proj{k}.b"] = _uniform(rng, (cfg.projection_dim,), 2 * h)
        in_dim = cfg.projection_dim
    return params


def _conv1d_same(x, w, b, width, stride):
    t, d = x.shape
    half = width // 2
    padded = np.concatenate([np.zeros((half, d), x.dtype), x,
                             np.zeros((width - 1 - half, d), x.dtype)])
    cols = np.empty((t, width * d), dtype=x.dtype)
    for i in range(width):
        cols[:, i * d:(i + 1) * d] = padded[i:i + t]
    out = cols @ w + b
    return out[::stride]


def _maxpool1d(x, width, stride):
    # edge-replicate the tail so no trailing frames are dropped
    t = x.shape[0]
    out_t = -(-t // stride)
    need = (out_t - 1) * stride + width
    if need > t:
        x = np.concatenate([x, np.repeat(x[-1:], need - t, axis=0)])
    idx = np.arange(width)[None, :] + stride * np.arange(out_t)[:, None]
    return x[idx].max(axis=1)


def _run_lstm(x, w_x, w_h, bias):
    xp = (x @ w_x + bias)[:, None, :]
    h, _ = backend.lstm_forward(np.ascontiguousarray(xp), w_h)
    return h[:, 0, :]


def encode(seq, params, cfg=None):
    """Map a (T, input_dim) sequence to (ceil(T / 8), projection_dim)."""
    cfg = cfg or EncoderConfig()
    x = np.asarray(seq.values, dtype=np.float32)
    if x.shape[1] != cfg.input_dim:
        raise ValueError(f"expected input dim {cfg.input_dim}, got {x.shape[1]}")
    for k in range(cfg.macro_repeats):
        x = _conv1d_same(x, params[f"conv{k}.w"], params[f"conv{k}.b"],
                         cfg.conv_width, cfg.conv_stride)
        x = np.maximum(x, 0.0)
        x = _maxpool1d(x, cfg.pool_width, cfg.pool_stride)
    for k in range(cfg.bilstm_layers):
        h_f = _run_lstm(x, params[f"lstm{k}.fwd.w_x"],
                        params[f"lstm{k}.fwd.w_h"], params[f"lstm{k}.fwd.b"])
        h_b = _run_lstm(np.ascontiguousarray(x[::-1]),
                        params[f"lstm{k}.bwd.w_x"],
                        params[f"lstm{k}.bwd.w_h"], params[f"lstm{k}.bwd.b"])[::-1]
        x = np.concatenate([h_f, h_b], axis=1) @ params[f"proj{k}.w"] + params[f"proj{k}.b"]
    return FeatureSequence(values=x,
                           frame_period=seq.frame_period * cfg.time_reduction)
