import dataclasses

import numpy as np
import pytest

from sentasr.augment import (SpecAugmentPolicy, apply_policy, freq_mask,
                             time_mask, time_warp)
from sentasr.features import FeatureSequence
from sentasr.synthcorpus import SentimentExample


def _seq(t=50, d=20, seed=0, offset=5.0):
    # offset keeps every cell away from the mask value so masks are visible
    rng = np.random.default_rng(seed)
    vals = (rng.standard_normal((t, d)) + offset).astype(np.float32)
    return FeatureSequence(values=vals, frame_period=0.01)


def test_policy_defaults():
    p = SpecAugmentPolicy()
    assert (p.warp_w, p.freq_f, p.freq_mf) == (80, 27, 1)
    assert (p.time_t, p.time_p, p.time_mt) == (100, 1.0, 1)
    assert p.mask_value == 0.0
    assert p.enabled


def test_policy_validation():
    with pytest.raises(ValueError):
        SpecAugmentPolicy(freq_f=-1)
    with pytest.raises(ValueError):
        SpecAugmentPolicy(time_p=1.5)
    with pytest.raises(ValueError):
        SpecAugmentPolicy(time_p=-0.1)


def test_zero_width_ops_are_identities():
    seq = _seq()
    rng = np.random.default_rng(0)
    for out in (freq_mask(seq, 0, 3, rng), time_mask(seq, 0, 3, 1.0, rng),
                time_warp(seq, 0, rng)):
        assert out is not seq
        assert out.values.tobytes() == seq.values.tobytes()
        assert out.frame_period == seq.frame_period


def test_freq_mask_exact_values():
    seq = _seq()
    out = freq_mask(seq, 8, 2, np.random.default_rng(1), mask_value=-3.5)
    masked = np.all(out.values == -3.5, axis=0)
    # untouched columns are bit-identical; masked ones are whole columns
    col_changed = np.any(out.values != seq.values, axis=0)
    assert np.array_equal(col_changed, masked)
    assert out.values[:, ~masked].tobytes() == seq.values[:, ~masked].tobytes()
    assert masked.sum() <= 8 * 2


def test_freq_mask_single_band_width_bound():
    seq = _seq(d=30)
    widths = []
    for k in range(200):
        out = freq_mask(seq, 6, 1, np.random.default_rng(k))
        masked = np.flatnonzero(np.all(out.values == 0.0, axis=0))
        widths.append(len(masked))
        if len(masked):
            assert masked[-1] - masked[0] + 1 == len(masked)  # contiguous
    assert max(widths) == 6
    assert min(widths) == 0


def test_freq_mask_width_over_dim():
    with pytest.raises(ValueError, match="exceeds feature dim"):
        freq_mask(_seq(d=10), 11, 1, np.random.default_rng(0))


def test_time_mask_exact_rows():
    seq = _seq(t=80)
    out = time_mask(seq, 15, 2, 1.0, np.random.default_rng(2))
    masked = np.all(out.values == 0.0, axis=1)
    row_changed = np.any(out.values != seq.values, axis=1)
    assert np.array_equal(row_changed, masked)
    assert out.values[~masked].tobytes() == seq.values[~masked].tobytes()
    assert masked.sum() <= 30


def test_time_mask_p_caps_width():
    seq = _seq(t=40)
    for k in range(100):
        out = time_mask(seq, 100, 1, 0.2, np.random.default_rng(k))
        masked = np.all(out.values == 0.0, axis=1)
        assert masked.sum() <= 8  # floor(0.2 * 40)
    out = time_mask(seq, 100, 4, 0.0, np.random.default_rng(0))
    assert out.values.tobytes() == seq.values.tobytes()


def test_warp_constant_sequence_bit_exact():
    vals = np.full((60, 12), 2.75, dtype=np.float32)
    seq = FeatureSequence(values=vals, frame_period=0.01)
    out = time_warp(seq, 20, np.random.default_rng(3))
    assert out.values.tobytes() == vals.tobytes()


def test_warp_short_sequence_noop():
    seq = _seq(t=16)
    out = time_warp(seq, 8, np.random.default_rng(0))  # T <= 2w
    assert out.values.tobytes() == seq.values.tobytes()


def test_warp_endpoints_and_shape():
    seq = _seq(t=50)
    moved = 0
    for k in range(50):
        out = time_warp(seq, 12, np.random.default_rng(k))
        assert out.values.shape == seq.values.shape
        assert out.values[0].tobytes() == seq.values[0].tobytes()
        np.testing.assert_allclose(out.values[-1], seq.values[-1], rtol=1e-5)
        assert np.isfinite(out.values).all()
        if out.values.tobytes() != seq.values.tobytes():
            moved += 1
    assert moved > 25  # most draws actually displace the anchor


def test_warp_deterministic():
    seq = _seq(t=70)
    a = time_warp(seq, 10, np.random.default_rng(11))
    b = time_warp(seq, 10, np.random.default_rng(11))
    assert a.values.tobytes() == b.values.tobytes()


def _example(t=60, d=20, seed=0):
    return SentimentExample(features=_seq(t, d, seed=seed), label=1,
                            speaker=3, alignment=[("w0", 0, t)],
                            cue_span=(4, 9))


def test_apply_policy_disabled_returns_same_object():
    ex = _example()
    out = apply_policy(ex, SpecAugmentPolicy(enabled=False),
                       np.random.default_rng(0))
    assert out is ex


def test_apply_policy_keeps_metadata():
    ex = _example()
    pol = SpecAugmentPolicy(warp_w=5, freq_f=6, freq_mf=2, time_t=10,
                            time_mt=2)
    out = apply_policy(ex, pol, np.random.default_rng(4))
    assert out is not ex
    assert (out.label, out.speaker) == (ex.label, ex.speaker)
    assert out.alignment == ex.alignment
    assert out.cue_span == ex.cue_span
    assert out.features.values.shape == ex.features.values.shape
    assert out.features.frame_period == ex.features.frame_period
    assert out.features.values.tobytes() != ex.features.values.tobytes()
    # source example must not be modified in place
    assert ex.features.values.tobytes() == _example().features.values.tobytes()


def test_apply_policy_deterministic():
    ex = _example()
    pol = SpecAugmentPolicy(warp_w=5, freq_f=6, time_t=10)
    a = apply_policy(ex, pol, np.random.default_rng(9))
    b = apply_policy(ex, pol, np.random.default_rng(9))
    assert a.features.values.tobytes() == b.features.values.tobytes()


def test_policy_replace_roundtrip():
    pol = SpecAugmentPolicy()
    off = dataclasses.replace(pol, enabled=False)
    assert not off.enabled and pol.enabled
