import numpy as np
import pytest

from sentasr.encoder import EncoderConfig, encode, init_encoder
from sentasr.features import FeatureSequence


def _seq(t, d, seed=0, frame_period=0.01):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((t, d)).astype(np.float32)
    return FeatureSequence(values=vals, frame_period=frame_period)


SMALL = EncoderConfig(input_dim=6, conv_filters=8, bilstm_units=4,
                      projection_dim=10)


def test_config_properties():
    cfg = EncoderConfig()
    assert cfg.time_reduction == 8
    assert cfg.output_dim == 1536
    assert SMALL.time_reduction == 8
    assert SMALL.output_dim == 10


def test_param_shapes_default():
    params = init_encoder(seed=0)
    assert params["conv0.w"].shape == (5 * 80, 512)
    assert params["conv1.w"].shape == (5 * 512, 512)
    assert params["conv2.b"].shape == (512,)
    assert params["lstm0.fwd.w_x"].shape == (512, 4 * 512)
    assert params["lstm0.bwd.w_h"].shape == (512, 4 * 512)
    assert params["lstm1.fwd.w_x"].shape == (1536, 4 * 512)
    assert params["proj0.w"].shape == (1024, 1536)
    assert params["proj2.b"].shape == (1536,)
    assert all(v.dtype == np.float32 for v in params.values())


def test_length_map_exhaustive_small():
    params = init_encoder(SMALL, seed=3)
    for t in range(1, 34):
        out = encode(_seq(t, 6, seed=t), params, SMALL)
        assert out.values.shape == (-(-t // 8), 10), t


@pytest.mark.parametrize("t", [9, 40, 98])
def test_length_map_default(t):
    params = init_encoder(seed=1)
    out = encode(_seq(t, 80), params)
    assert out.values.shape == (-(-t // 8), 1536)
    assert np.isfinite(out.values).all()


def test_frame_period_scales_by_reduction():
    params = init_encoder(SMALL, seed=0)
    out = encode(_seq(24, 6, frame_period=0.01), params, SMALL)
    assert out.frame_period == pytest.approx(0.08)


def test_init_deterministic():
    a = init_encoder(seed=7)
    b = init_encoder(seed=7)
    assert a.keys() == b.keys()
    for k in a:
        assert a[k].tobytes() == b[k].tobytes()
    c = init_encoder(seed=8)
    assert any(a[k].tobytes() != c[k].tobytes() for k in a)


def test_encode_deterministic():
    params = init_encoder(SMALL, seed=2)
    seq = _seq(31, 6, seed=5)
    a = encode(seq, params, SMALL)
    b = encode(seq, params, SMALL)
    assert a.values.tobytes() == b.values.tobytes()


def test_input_dim_mismatch():
    params = init_encoder(SMALL, seed=0)
    with pytest.raises(ValueError, match="input dim"):
        encode(_seq(16, 7), params, SMALL)


def test_output_responds_to_input():
    # frozen random projection should still separate distinct inputs
    params = init_encoder(SMALL, seed=0)
    a = encode(_seq(16, 6, seed=1), params, SMALL)
    b = encode(_seq(16, 6, seed=2), params, SMALL)
    assert not np.allclose(a.values, b.values)
