import math

import numpy as np
import pytest
from scipy import stats

from risbeam.belief import generate_dataset
from risbeam.chansim import ChannelRealization, SystemConfig, channel_rng, channel_strength, sample_channel
from risbeam.codebook import build_codebook
from risbeam.errors import IncompatibleArtifactError
from risbeam.mdp import build_state_space
from risbeam.protocol import (
    AcquisitionStrategy,
    achievable_rate,
    exhaustive_search,
    hierarchical_search,
    narrow_strengths,
    relative_strength,
    run_episode,
)
from risbeam.qlearner import Hyper, extract_policy, train


@pytest.fixture(scope="module")
def setup():
    cfg = SystemConfig.from_snr_db(20.0, M=8, N=16)
    cb = build_codebook(cfg, 3, 2)
    ds = generate_dataset(cfg, cb, 120, np.random.default_rng(3))
    ss = build_state_space(8, tau=0.9)
    table, pol, _ = train(ds, ss, cb, Hyper(max_epoch=10, seed=1))
    return cfg, cb, ds, ss, pol


def test_strategy_validation():
    with pytest.raises(ValueError):
        AcquisitionStrategy("greedy")
    with pytest.raises(ValueError):
        AcquisitionStrategy("qlearning")


def test_random_budget_one(setup):
    cfg, cb, ds, ss, _ = setup
    ch = sample_channel(np.random.default_rng(1))
    r = run_episode(cfg, ch, cb, ds, ss, AcquisitionStrategy("random"), 1, np.random.default_rng(2))
    assert r.pilots_used == 1 and len(r.history) == 1 and len(r.declared_trace) == 1
    with pytest.raises(ValueError):
        run_episode(cfg, ch, cb, ds, ss, AcquisitionStrategy("random"), 0, np.random.default_rng(2))


def test_random_is_without_replacement(setup):
    cfg, cb, ds, ss, _ = setup
    tight = build_state_space(8, tau=0.999999)
    for i in range(10):
        ch = sample_channel(channel_rng(4, i))
        r = run_episode(cfg, ch, cb, ds, tight, AcquisitionStrategy("random"), 14, channel_rng(4, i, 1))
        acts = [a for a, _ in r.history]
        assert len(acts) == len(set(acts))


def test_episode_determinism_and_early_stop(setup):
    cfg, cb, ds, ss, pol = setup
    strat = AcquisitionStrategy("qlearning", pol)
    for i in range(20):
        ch = sample_channel(channel_rng(9, i))
        a = run_episode(cfg, ch, cb, ds, ss, strat, 14, channel_rng(9, i, 4))
        b = run_episode(cfg, ch, cb, ds, ss, strat, 14, channel_rng(9, i, 4))
        assert a.history == b.history and a.declared == b.declared and a.rho == b.rho
        if a.pilots_used < 14:
            assert a.final_belief.probs.max() > ss.tau
        assert 0 <= a.rho <= 1
        assert -sum(a.rewards) == a.pilots_used


def test_qlearning_follows_policy(setup):
    cfg, cb, ds, ss, pol = setup
    ch = sample_channel(np.random.default_rng(5))
    r = run_episode(cfg, ch, cb, ds, ss, AcquisitionStrategy("qlearning", pol), 14, np.random.default_rng(6))
    assert r.history[0][0] == pol[ss.init_index]
    acts = [a for a, _ in r.history]
    assert len(acts) == len(set(acts))


def test_policy_state_space_mismatch(setup):
    cfg, cb, ds, ss, pol = setup
    ch = sample_channel(np.random.default_rng(5))
    with pytest.raises(IncompatibleArtifactError):
        run_episode(cfg, ch, cb, ds, build_state_space(8, tau=0.95), AcquisitionStrategy("qlearning", pol), 3,
                    np.random.default_rng(0))


def test_exhaustive_noiseless_optimal():
    cfg = SystemConfig(M=64, N=100, sigma_w2=0.0)
    cb = build_codebook(cfg, 3, 0)
    rng = np.random.default_rng(21)
    for _ in range(200):
        r = exhaustive_search(cfg, sample_channel(rng), cb, rng)
        assert r.rho == 1.0 and r.pilots_used == 8


def test_exhaustive_pure_noise_is_uniform():
    cfg = SystemConfig(M=4, N=8, sigma_w2=1e12)
    cb = build_codebook(cfg, 3, 0)
    ch = sample_channel(np.random.default_rng(0))
    rng = np.random.default_rng(1)
    counts = np.bincount([exhaustive_search(cfg, ch, cb, rng).declared for _ in range(10000)], minlength=8)
    assert stats.chisquare(counts).pvalue > 0.01


def test_hierarchical_pilots_and_descent():
    cfg = SystemConfig(M=1, N=16, sigma_w2=0.0)
    cb = build_codebook(cfg, 3, 0, idealized=True)
    for c, cw in enumerate(cb.narrow):
        ch = ChannelRealization(0.0, 0.0, 0.0, math.asin(cw.center_omega) % (2 * math.pi))
        r = hierarchical_search(cfg, ch, cb, np.random.default_rng(0))
        assert r.pilots_used == 6 and r.declared == c and r.rho == 1.0
        layers = [cb.probing[a].layer for a, _ in r.history]
        assert layers == [1, 1, 2, 2, 3, 3]


def test_hierarchical_truncated_and_deterministic(cfg20, cb_default):
    ch = sample_channel(np.random.default_rng(3))
    a = hierarchical_search(cfg20, ch, cb_default, np.random.default_rng(4))
    b = hierarchical_search(cfg20, ch, cb_default, np.random.default_rng(4))
    assert a.history == b.history and a.declared == b.declared
    short = hierarchical_search(cfg20, ch, cb_default, np.random.default_rng(4), budget=3)
    assert short.pilots_used == 3 and len(short.declared_trace) == 3
    assert short.declared_trace == a.declared_trace[:3]
    via = run_episode(cfg20, ch, cb_default, None, None, AcquisitionStrategy("hierarchical"), 14,
                      np.random.default_rng(4))
    assert via.pilots_used == 6


def test_exhaustive_via_run_episode(cfg20, cb_default):
    ch = sample_channel(np.random.default_rng(3))
    r = run_episode(cfg20, ch, cb_default, None, None, AcquisitionStrategy("exhaustive"), 14, np.random.default_rng(1))
    assert r.pilots_used == 8
    assert r.declared_trace[-1] == r.declared


def test_relative_strength(cfg20, cb_default):
    rng = np.random.default_rng(8)
    for _ in range(20):
        ch = sample_channel(rng)
        s = [channel_strength(cfg20, ch, cw) for cw in cb_default.narrow]
        best = int(np.argmax(s))
        assert relative_strength(cfg20, ch, best, cb_default) == 1.0
        assert all(0 <= relative_strength(cfg20, ch, c, cb_default) <= 1 for c in range(8))
    ch = sample_channel(rng)
    assert relative_strength(cfg20, ch, 0, cb_default, strengths=np.array([3.0])) == 1.0


def test_random_declaration_average(cfg20, cb_default):
    rng = np.random.default_rng(10)
    vals, ref = [], []
    for _ in range(1000):
        ch = sample_channel(rng)
        c = int(rng.integers(8))
        vals.append(relative_strength(cfg20, ch, c, cb_default))
        s = np.array([channel_strength(cfg20, ch, cw) for cw in cb_default.narrow])
        ref.append(s[c] / s.max())
    assert 0 < np.mean(vals) < 1
    assert np.mean(vals) == pytest.approx(np.mean(ref), rel=1e-12)
    assert np.allclose(narrow_strengths(cfg20, ch, cb_default),
                       [channel_strength(cfg20, ch, cw) for cw in cb_default.narrow])


def test_achievable_rate():
    cfg = SystemConfig(P=1.0, sigma_w2=1.0)
    assert achievable_rate(cfg, 0.0) == 0.0
    assert achievable_rate(cfg, 1.0) == pytest.approx(1.0)
    assert achievable_rate(cfg, 3.0) == pytest.approx(2.0)
    assert achievable_rate(SystemConfig(sigma_w2=0.0), 2.0) == math.inf
    with pytest.raises(ValueError):
        achievable_rate(cfg, -1.0)
    s = np.sort(np.random.default_rng(0).uniform(0, 100, 50))
    r = [achievable_rate(cfg, x) for x in s]
    assert all(a < b for a, b in zip(r, r[1:]))
