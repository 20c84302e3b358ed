"""Feature-space augmentation: time warp plus frequency and time masking.

All transforms preserve shape, frame period, and labels. Masked cells are
set to exactly mask_value and untouched cells are preserved bit-for-bit;
zero-width policies are byte-identities. Everything is deterministic given
the numpy Generator passed in.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .features import FeatureSequence


@dataclass
class SpecAugmentPolicy:
    """Defaults follow the LibriSpeech-basic recipe."""

    warp_w: int = 80
    freq_f: int = 27
    freq_mf: int = 1
    time_t: int = 100
    time_p: float = 1.0
    time_mt: int = 1
    mask_value: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        if min(self.warp_w, self.freq_f, self.freq_mf,
               self.time_t, self.time_mt) < 0:
            raise ValueError("policy widths and counts must be >= 0")
        if not 0.0 <= self.time_p <= 1.0:
            raise ValueError("time_p must lie in [0, 1]")


def freq_mask(seq, f_max, num_masks, rng, mask_value=0.0):
    """Zero out up to num_masks random bands of at most f_max channels."""
    vals = np.array(seq.values, copy=True)
    d = vals.shape[1]
    if f_max > d:
        raise ValueError(f"freq mask width {f_max} exceeds feature dim {d}")
    for _ in range(num_masks):
        f = int(rng.integers(0, f_max + 1))
        if f == 0:
            continue
        f0 = int(rng.integers(0, d - f + 1))
        vals[:, f0:f0 + f] = mask_value
    return FeatureSequence(values=vals, frame_period=seq.frame_period)


def time_mask(seq, t_max, num_masks, p, rng, mask_value=0.0):
    """Zero out up to num_masks random spans of frames.

    Each span width is drawn from {0..min(t_max, floor(p*T))}.
    """
    vals = np.array(seq.values, copy=True)
    t_len = vals.shape[0]
    upper = min(int(t_max), int(p * t_len))
    for _ in range(num_masks):
        t = int(rng.integers(0, upper + 1))
        if t == 0:
            continue
        t0 = int(rng.integers(0, t_len - t + 1))
        vals[t0:t0 + t, :] = mask_value
    return FeatureSequence(values=vals, frame_period=seq.frame_period)


def time_warp(seq, w, rng):
    """Shift a random interior anchor frame by up to +-w frames.

    The time axis is re-sampled piecewise-linearly with both endpoints
    fixed; sequences with T <= 2w are returned unchanged. Constant
    sequences come back bit-identical because the interpolation is
    written as v0 + a*(v1 - v0).
    """
    vals = np.array(seq.values, copy=True)
    t_len = vals.shape[0]
    if w <= 0 or t_len <= 2 * w or t_len < 3:
        return FeatureSequence(values=vals, frame_period=seq.frame_period)
    anchor = int(rng.integers(w, t_len - w))
    shift = int(rng.integers(-w, w + 1))
    dest = min(max(anchor + shift, 1), t_len - 2)
    if dest == anchor:
        return FeatureSequence(values=vals, frame_period=seq.frame_period)
    src_pos = np.empty(t_len, dtype=np.float64)
    left = np.arange(dest + 1, dtype=np.float64)
    src_pos[:dest + 1] = left * (anchor / dest)
    right = np.arange(t_len - dest - 1, dtype=np.float64) + 1.0
    src_pos[dest + 1:] = anchor + right * ((t_len - 1 - anchor) / (t_len - 1 - dest))
    src_pos[-1] = t_len - 1.0  # pin the endpoint against rounding drift
    lo = np.floor(src_pos).astype(np.int64)
    lo = np.minimum(lo, t_len - 2)
    frac = (src_pos - lo).astype(vals.dtype)
    v0 = vals[lo]
    v1 = vals[lo + 1]
    warped = v0 + frac[:, None] * (v1 - v0)
    return FeatureSequence(values=warped, frame_period=seq.frame_period)


def apply_policy(example, policy, rng):
    """Warp, then frequency masks, then time masks, on the features only.

    Label, speaker, and alignment metadata pass through untouched. A
    disabled policy returns the example as-is.
    """
    if not policy.enabled:
        return example
    seq = time_warp(example.features, policy.warp_w, rng)
    seq = freq_mask(seq, policy.freq_f, policy.freq_mf, rng, policy.mask_value)
    seq = time_mask(seq, policy.time_t, policy.time_mt, policy.time_p, rng,
                    policy.mask_value)
    return dataclasses.replace(example, features=seq)
