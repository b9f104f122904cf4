import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import (convolve2d_naive, lamina_batch, pipeline_batch, rectify,
                     sliding_max_mask, temporal_batch)
from tqdmotion.config import ModelConfig
from tqdmotion.exceptions import ContractError, SequencingError, ShapeError
from tqdmotion.kernels import TemporalKernel, gamma_kernel, gaussian2d
from tqdmotion.pipeline import (CausalFilter, ChannelPair, DelayLine, FrameClock, Lamina, Pipeline,
                                delay_stage, lamina_kernels, lamina_stage, max_operation,
                                medulla_split, retina_stage, spatial_filter)


# -- retina --------------------------------------------------------------------

@pytest.mark.parametrize("boundary", ["replicate", "toroidal"])
def test_retina_matches_direct_double_sum(boundary):
    rng = np.random.default_rng(1)
    frame = rng.random((13, 17))
    cfg = ModelConfig(boundary=boundary)
    want = convolve2d_naive(frame, gaussian2d(cfg.sigma1).taps, boundary)
    np.testing.assert_allclose(retina_stage(frame, cfg), want, atol=1e-12, rtol=0)


def test_spatial_filter_handles_non_separable_kernels():
    rng = np.random.default_rng(2)
    field = rng.random((11, 9))
    taps = rng.normal(size=(5, 5))
    from tqdmotion.kernels import SpatialKernel
    got = spatial_filter(field, SpatialKernel(taps), "toroidal")
    np.testing.assert_allclose(got, convolve2d_naive(field, taps, "toroidal"), atol=1e-12)


def test_retina_preserves_constant_frames():
    frame = np.full((20, 30), 0.4)
    np.testing.assert_allclose(retina_stage(frame), frame, atol=1e-3)


def test_retina_rejects_wrong_shape():
    with pytest.raises(ShapeError):
        retina_stage(np.zeros((3, 3, 3)))
    with pytest.raises(ShapeError):
        retina_stage(np.zeros((4, 4)), shape=(5, 5))


# -- causal filtering --------------------------------------------------------------

def test_causal_filter_matches_batch_convolution():
    rng = np.random.default_rng(3)
    seq = rng.normal(size=(40, 3, 4))
    k = TemporalKernel(rng.normal(size=7))
    f = CausalFilter(k, (3, 4))
    got = np.array([f.push(x) for x in seq])
    np.testing.assert_allclose(got, temporal_batch(seq, k.taps), atol=1e-12)


def test_causal_filter_impulse_response_is_the_kernel():
    k = gamma_kernel(5, 0.007)
    f = CausalFilter(k, (1, 1))
    out = [f.push(np.ones((1, 1)) if t == 0 else np.zeros((1, 1)))[0, 0] for t in range(k.length + 5)]
    np.testing.assert_allclose(out[:k.length], k.taps, atol=0)
    assert out[k.length:] == [0.0] * 5


def test_causal_filter_reset():
    f = CausalFilter(TemporalKernel([0.5, 0.5]), (2,))
    f.push(np.ones(2))
    f.reset()
    np.testing.assert_array_equal(f.push(np.zeros(2)), 0)


def test_delay_peaks_near_tau3():
    cfg = ModelConfig()
    k = DelayLine(cfg, (1, 1)).kernel
    assert abs(np.argmax(k.taps) * cfg.dt - cfg.tau3) <= cfg.dt


# -- frame clock ------------------------------------------------------------------

def test_clock_rejects_out_of_order_and_gaps():
    c = FrameClock(0.001)
    c.tick(0.0)
    c.tick(0.001)
    with pytest.raises(SequencingError):
        c.tick(0.001)
    with pytest.raises(SequencingError):
        c.tick(0.0035)


def test_clock_generates_missing_timestamps():
    c = FrameClock(0.001)
    assert [c.tick(None) for _ in range(3)] == [0.0, 0.001, 0.002]


# -- lamina --------------------------------------------------------------------------

@pytest.mark.parametrize("boundary", ["replicate", "toroidal"])
def test_lamina_streaming_equals_batch(boundary):
    cfg = ModelConfig(boundary=boundary)
    rng = np.random.default_rng(4)
    lum = rng.random((30, 16, 18))
    lam = Lamina(cfg, lum.shape[1:])
    got = [lam.push(x) for x in lum]
    p_want, pi_want = lamina_batch(lum, cfg)
    np.testing.assert_allclose([g[0] for g in got], p_want, atol=1e-9, rtol=0)
    np.testing.assert_allclose([g[1] for g in got], pi_want, atol=1e-9, rtol=0)


def test_lamina_stage_yields_timestamps():
    cfg = ModelConfig()
    frames = [(k * 0.001, np.zeros((4, 4))) for k in range(3)]
    out = list(lamina_stage(frames, cfg))
    assert [t for t, _ in out] == [0.0, 0.001, 0.002]


def test_lamina_is_silent_on_a_static_scene_after_its_memory():
    cfg = ModelConfig()
    lam = Lamina(cfg, (8, 8))
    frame = np.random.default_rng(5).random((8, 8))
    for _ in range(lam.memory + 1):
        p, p_i = lam.push(frame)
    assert np.abs(p).max() <= 1e-6 * frame.max()
    assert np.abs(p_i).max() < 1e-6


# -- medulla ---------------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (6, 7), elements=st.floats(-1e6, 1e6)))
def test_rectification_identities(x):
    pair = medulla_split(x)
    assert not np.any(pair.on * pair.off)
    assert np.array_equal(pair.on - pair.off, x)
    assert (pair.on >= 0).all() and (pair.off >= 0).all()


def test_rectification_matches_oracle():
    x = np.random.default_rng(6).normal(size=(9, 9))
    on, off = rectify(x)
    pair = medulla_split(x)
    assert np.array_equal(pair.on, on) and np.array_equal(pair.off, off)


def test_channel_pair_rejects_mismatched_shapes():
    with pytest.raises(ShapeError):
        ChannelPair(np.zeros((2, 2)), np.zeros((2, 3)))


# -- max operation -------------------------------------------------------------------------

@pytest.mark.parametrize("boundary", ["replicate", "toroidal"])
@pytest.mark.parametrize("half", [1, 2, 3])
def test_max_operation_matches_naive_window_max(boundary, half):
    rng = np.random.default_rng(half)
    for _ in range(5):
        f = rng.random((20, 23))
        assert np.array_equal(max_operation(f, half, boundary), sliding_max_mask(f, half, boundary))


def test_max_operation_keeps_ties():
    f = np.zeros((7, 7))
    f[3, 3] = f[3, 4] = 1.0
    out = max_operation(f, 2)
    assert out[3, 3] == out[3, 4] == 1.0


def test_max_operation_on_a_ramp_keeps_only_the_last_column():
    ramp = np.tile(np.arange(10, dtype=float), (5, 1))
    out = max_operation(ramp, 2)
    assert np.array_equal(np.nonzero(out.any(axis=0))[0], [9])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (12, 12), elements=st.floats(0, 1)), st.integers(1, 3))
def test_max_operation_properties(f, half):
    out = max_operation(f, half)
    assert np.array_equal(max_operation(out, half), out)
    kept = out > 0
    assert np.array_equal(out[kept], f[kept])
    assert (out <= f).all()
    if f.max() > 0:
        assert out.max() == f.max()


def test_max_operation_rejects_negative_input():
    with pytest.raises(ContractError):
        max_operation(-np.ones((3, 3)))


# -- delay and full pipeline ----------------------------------------------------------------

def test_delay_stage_checks_timestamps():
    cfg = ModelConfig()
    pairs = [ChannelPair(np.zeros((2, 2)), np.zeros((2, 2)), t) for t in (0.0, 0.001, 0.001)]
    with pytest.raises(SequencingError):
        list(delay_stage(pairs, cfg))


def test_pipeline_streaming_equals_batch():
    cfg = ModelConfig()
    frames = np.random.default_rng(7).random((50, 32, 32))
    pipe = Pipeline(cfg, (32, 32))
    steps = [pipe.step(f) for f in frames]
    want = pipeline_batch(frames, cfg)
    for name, arr in want.items():
        got = np.array([s.stages()[name] for s in steps])
        np.testing.assert_allclose(got, arr, atol=1e-9, rtol=0, err_msg=name)


def test_pipeline_warmup_flags():
    cfg = ModelConfig()
    pipe = Pipeline(cfg, (4, 4))
    hp, inh = lamina_kernels(cfg)
    longest_inh = max(t.length for _, t in inh.terms)
    delay = gamma_kernel(cfg.n3, cfg.tau3, cfg.dt).length
    assert pipe.warmup_frames == (hp.length - 1) + (longest_inh - 1) + (delay - 1)
    flags = [pipe.step(np.zeros((4, 4))).warmup for _ in range(pipe.warmup_frames + 2)]
    assert flags == [True] * pipe.warmup_frames + [False, False]


def test_pipeline_rejects_shape_change():
    pipe = Pipeline(ModelConfig(), (4, 4))
    pipe.step(np.zeros((4, 4)))
    with pytest.raises(ShapeError):
        pipe.step(np.zeros((4, 5)))
