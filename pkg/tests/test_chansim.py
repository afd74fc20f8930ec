import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risbeam.chansim import (
    TWO_PI,
    ChannelRealization,
    Codeword,
    SystemConfig,
    channel_gain,
    channel_rng,
    channel_strength,
    gain_matrix,
    received_energy,
    sample_channel,
    simulate_feedback,
    steering_vector,
    true_class,
    wrap_mu,
    wrap_phase,
)
from risbeam.codebook import build_codebook, make_codeword

angles = st.floats(0.0, TWO_PI, exclude_max=True)


def ramp(N, omega):
    return Codeword(wrap_phase(-math.pi * np.arange(N) * omega), 3, 1, 0.0, N)


def aligned(N, ch):
    return Codeword(wrap_phase(math.pi * np.arange(N) * (math.sin(ch.phi1) - math.sin(ch.phi4))), 3, 1, 0.0, N)


def test_steering_vector_examples():
    assert np.allclose(steering_vector(1, 1.234), [1])
    assert np.allclose(steering_vector(4, 0.0), [1, 1, 1, 1])
    assert np.allclose(steering_vector(4, math.pi / 6), [1, 1j, -1, -1j], atol=1e-12)
    with pytest.raises(ValueError):
        steering_vector(0, 0.0)


@given(st.integers(1, 200), st.floats(-10, 10))
def test_steering_vector_unit_modulus(n, angle):
    assert np.all(np.abs(np.abs(steering_vector(n, angle)) - 1) < 1e-12)


def test_config_validation_and_snr():
    with pytest.raises(ValueError):
        SystemConfig(M=0)
    with pytest.raises(ValueError):
        SystemConfig(P=0)
    with pytest.raises(ValueError):
        SystemConfig(sigma_w2=-1)
    cfg = SystemConfig.from_snr_db(20.0)
    assert cfg.sigma_w2 == pytest.approx(0.01)
    assert cfg.snr_db == pytest.approx(20.0)
    assert SystemConfig(sigma_w2=0.0).snr_db == math.inf


def test_channel_realization_range():
    with pytest.raises(ValueError):
        ChannelRealization(0, 0, 0, TWO_PI)
    with pytest.raises(ValueError):
        ChannelRealization(-0.1, 0, 0, 0)
    with pytest.raises(ValueError):
        ChannelRealization(float("nan"), 0, 0, 0)


def test_aligned_gain_is_N():
    ch = sample_channel(np.random.default_rng(3))
    cfg = SystemConfig(M=64, N=100)
    g = channel_gain(cfg, ch, aligned(100, ch))
    assert abs(g - 100) < 1e-9
    assert channel_strength(cfg, ch, aligned(100, ch)) == pytest.approx(640000, rel=1e-12)


def test_single_element():
    cfg = SystemConfig(M=1, N=1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        ch = sample_channel(rng)
        cw = Codeword([rng.uniform(0, TWO_PI)], 3, 1, 0.0, 1)
        assert abs(channel_gain(cfg, ch, cw)) == pytest.approx(1.0)
        assert channel_strength(cfg, ch, cw) == pytest.approx(1.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        channel_gain(SystemConfig(N=8), sample_channel(np.random.default_rng(0)), ramp(4, 0.0))


def dirichlet(N, d):
    s = math.sin(math.pi * d / 2)
    if abs(s) < 1e-12:
        return float(N)
    return abs(math.sin(math.pi * N * d / 2) / s)


@settings(max_examples=60)
@given(angles, angles, st.floats(-1, 1, exclude_max=True), st.sampled_from([8, 32, 128]))
def test_dirichlet_closed_form(p1, p4, omega, N):
    ch = ChannelRealization(p1, 0.0, 0.0, p4)
    d = float(wrap_mu(ch.mu)) - omega
    if abs(math.sin(math.pi * d / 2)) < 1e-6:
        return  # removable singularity: both sides approach N
    assert abs(abs(channel_gain(SystemConfig(N=N), ch, ramp(N, omega))) - dirichlet(N, d)) < 1e-9


def test_strength_matches_matrix_product():
    # full H_BS^H diag(theta) u assembled from steering vectors
    rng = np.random.default_rng(11)
    cfg = SystemConfig(M=2, N=8)
    for _ in range(25):
        ch = sample_channel(rng)
        cw = Codeword(rng.uniform(0, TWO_PI, 8), 3, 1, 0.0, 8)
        H_bs = np.outer(steering_vector(8, ch.phi1), steering_vector(2, ch.phi2).conj())
        u = steering_vector(8, ch.phi4)
        h = H_bs.conj().T @ np.diag(np.exp(1j * cw.phases)) @ u
        assert channel_strength(cfg, ch, cw) == pytest.approx(np.vdot(h, h).real, rel=1e-10)


def test_gain_matrix_matches_scalar(cb_default, cfg20):
    rng = np.random.default_rng(5)
    chans = [sample_channel(rng) for _ in range(6)]
    G = gain_matrix([c.mu for c in chans], cb_default.probing)
    for i, ch in enumerate(chans):
        for j, cw in enumerate(cb_default.probing):
            assert G[i, j] == pytest.approx(channel_gain(cfg20, ch, cw), abs=1e-9)


@settings(max_examples=40)
@given(angles, angles, angles, angles, angles)
def test_phi3_neutral(p1, p2, p3a, p3b, p4):
    cfg = SystemConfig(M=4, N=16)
    cw = make_codeword(cfg, 2, 3, 0, 3)
    a = channel_strength(cfg, ChannelRealization(p1, p2, p3a, p4), cw)
    b = channel_strength(cfg, ChannelRealization(p1, p2, p3b, p4), cw)
    assert a == b


@settings(max_examples=40)
@given(st.lists(angles, min_size=16, max_size=16), angles, angles)
def test_gain_bound(phases, p1, p4):
    cfg = SystemConfig(M=1, N=16)
    assert abs(channel_gain(cfg, ChannelRealization(p1, 0, 0, p4), Codeword(phases, 3, 1, 0.0, 16))) <= 16 + 1e-9


def test_noiseless_feedback_is_strength(cb_default):
    cfg = SystemConfig(M=64, N=100, sigma_w2=0.0)
    ch = sample_channel(np.random.default_rng(2))
    cw = cb_default.probing[4]
    fb = simulate_feedback(cfg, ch, cw, np.random.default_rng(0), action_index=4)
    assert fb.value == pytest.approx(channel_strength(cfg, ch, cw), rel=1e-12)
    assert fb.action_index == 4


@pytest.mark.parametrize("snr_db", [0.0, 20.0])
def test_feedback_mean(snr_db, cb_default):
    cfg = SystemConfig.from_snr_db(snr_db)
    ch = sample_channel(np.random.default_rng(9))
    cw = cb_default.probing[0]
    g = channel_gain(cfg, ch, cw)
    rng = np.random.default_rng(1)
    ys = np.array([received_energy(cfg, g, ch.phi2, rng) for _ in range(20000)])
    expected = cfg.P * cfg.M * abs(g) ** 2 + cfg.M * cfg.sigma_w2
    assert abs(ys.mean() - expected) <= 3 * ys.std(ddof=1) / math.sqrt(ys.size)


def test_pure_noise_mean_chi_square():
    # zero gain: Y is sigma^2/2 times a chi-square with 2M degrees of freedom
    cfg = SystemConfig(M=8, N=4, sigma_w2=0.5)
    rng = np.random.default_rng(4)
    ys = np.array([received_energy(cfg, 0j, 0.3, rng) for _ in range(100000)])
    se = math.sqrt(cfg.M) * cfg.sigma_w2 / math.sqrt(ys.size)
    assert abs(ys.mean() - cfg.M * cfg.sigma_w2) <= 3 * se


def test_feedback_determinism(cb_default, cfg20):
    ch = sample_channel(np.random.default_rng(2))
    a = simulate_feedback(cfg20, ch, cb_default.probing[3], np.random.default_rng(8))
    b = simulate_feedback(cfg20, ch, cb_default.probing[3], np.random.default_rng(8))
    assert a == b


def test_sample_channel_moments():
    rng = np.random.default_rng(12)
    A = np.array([sample_channel(rng).angles for _ in range(10000)])
    assert np.all((A >= 0) & (A < TWO_PI))
    se = TWO_PI / math.sqrt(12) / math.sqrt(A.shape[0])
    assert np.all(np.abs(A.mean(axis=0) - math.pi) <= 3 * se)
    assert sample_channel(np.random.default_rng(1)) == sample_channel(np.random.default_rng(1))


def test_channel_rng_split():
    a = channel_rng(5, 3).random(4)
    assert np.array_equal(a, np.random.default_rng([5 ^ 3]).random(4))
    assert not np.array_equal(a, channel_rng(5, 3, 1).random(4))


def test_true_class_examples(cb_default, cfg20):
    # mu exactly at the third narrow beam's centre
    omega = cb_default.narrow[2].center_omega
    ch = ChannelRealization(0.0, 0.0, 0.0, math.asin(omega) % TWO_PI)
    strengths = [channel_strength(cfg20, ch, cw) for cw in cb_default.narrow]
    assert true_class(cfg20, ch, cb_default.narrow) == int(np.argmax(strengths)) == 2
    assert true_class(cfg20, ch, cb_default.narrow[:1]) == 0
    with pytest.raises(ValueError):
        true_class(cfg20, ch, [])


@settings(max_examples=30)
@given(angles, angles, angles, angles)
def test_true_class_is_argmax(p1, p2, p3, p4):
    cfg = SystemConfig(M=4, N=16)
    cb = build_codebook(cfg, 3, 1)
    ch = ChannelRealization(p1, p2, p3, p4)
    c = true_class(cfg, ch, cb.narrow)
    s = [channel_strength(cfg, ch, cw) for cw in cb.narrow]
    assert all(s[c] >= v for v in s)


@given(st.floats(-1e6, 1e6))
def test_wrap_phase_range(x):
    w = float(wrap_phase(x))
    assert 0.0 <= w < TWO_PI


def test_wrap_mu():
    assert wrap_mu(1.5) == pytest.approx(-0.5)
    assert wrap_mu(-2.0) == pytest.approx(0.0)
    assert wrap_mu(0.25) == pytest.approx(0.25)
