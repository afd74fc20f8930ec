import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risbeam.chansim import ChannelRealization, SystemConfig, channel_strength, wrap_mu
from risbeam.codebook import (
    active_count_for,
    beam_center,
    build_codebook,
    children,
    load_codebook,
    make_codeword,
    save_codebook,
    sector,
)
from risbeam.errors import FormatError, UnsupportedVersionError


def channel_at(mu):
    # phi1 = 0, so mu = sin(phi4)
    return ChannelRealization(0.0, 0.0, 0.0, math.asin(mu) % (2 * math.pi))


def test_beam_center_examples():
    assert beam_center(1, 1) == -0.5
    assert beam_center(1, 2) == 0.5
    assert beam_center(3, 1) == -7 / 8
    assert beam_center(3, 8) == 7 / 8
    with pytest.raises(ValueError):
        beam_center(2, 5)
    with pytest.raises(ValueError):
        beam_center(2, 0)


def test_active_counts():
    assert [active_count_for(100, k, 3) for k in (1, 2, 3)] == [25, 50, 100]
    assert [active_count_for(16, k, 2) for k in (1, 2)] == [8, 16]
    with pytest.raises(ValueError):
        active_count_for(10, 1, 3)
    with pytest.raises(ValueError):
        build_codebook(SystemConfig(N=10), 3)


def test_narrow_codeword_ramp():
    cfg = SystemConfig(N=8)
    cw = make_codeword(cfg, 3, 4, 0, 3, narrow=True)
    assert cw.active_count == 8 and cw.layer == 0 and cw.index_in_layer == 4
    assert cw.center_omega == -0.125
    expected = np.mod(-math.pi * np.arange(8) * -0.125, 2 * math.pi)
    assert np.allclose(cw.phases, expected)
    with pytest.raises(ValueError):
        make_codeword(cfg, 2, 1, 0, 3, narrow=True)


def test_codebook_shape(cb_default):
    assert cb_default.Nc == 8 and cb_default.Np == 14
    assert [cw.layer for cw in cb_default.probing] == [1] * 2 + [2] * 4 + [3] * 8
    assert [cw.index_in_layer for cw in cb_default.probing[:6]] == [1, 2, 1, 2, 3, 4]
    assert [cw.active_count for cw in cb_default.probing] == [25] * 2 + [50] * 4 + [100] * 8
    assert all(cw.layer == 0 and cw.active_count == 100 for cw in cb_default.narrow)
    for j, cw in enumerate(cb_default.probing):
        assert cb_default.probing_index(cw.layer, cw.index_in_layer) == j
    small = build_codebook(SystemConfig(N=8), 1)
    assert (small.Nc, small.Np) == (2, 2)
    mid = build_codebook(SystemConfig(N=16), 2)
    assert [cw.active_count for cw in mid.probing] == [8, 8, 16, 16, 16, 16]


def test_bottom_layer_matches_narrow(cb_default):
    for m in range(8):
        assert np.array_equal(cb_default.narrow[m].phases, cb_default.probing[6 + m].phases)


def test_deactivated_phases_deterministic():
    cfg = SystemConfig(N=100)
    a = make_codeword(cfg, 1, 2, 99, 3)
    b = make_codeword(cfg, 1, 2, 99, 3)
    c = make_codeword(cfg, 1, 2, 98, 3)
    assert np.array_equal(a.phases, b.phases)
    assert not np.array_equal(a.phases[25:], c.phases[25:])
    assert np.array_equal(a.phases[:25], c.phases[:25])
    assert build_codebook(cfg, 3, 5) == build_codebook(cfg, 3, 5)


def test_idealized_weights():
    cw = make_codeword(SystemConfig(N=16), 1, 1, 0, 3, idealized=True)
    w = cw.weights()
    assert np.all(w[4:] == 0) and np.allclose(np.abs(w[:4]), 1)
    assert np.allclose(np.abs(make_codeword(SystemConfig(N=16), 1, 1, 0, 3).weights()), 1)


def test_children_and_sectors():
    assert children(1, 1, 3) == ((2, 1), (2, 2))
    assert children(2, 3, 3) == ((3, 5), (3, 6))
    with pytest.raises(ValueError):
        children(3, 1, 3)
    for k in (1, 2):
        for m in range(1, 2**k + 1):
            lo, hi = sector(k, m)
            (a, b) = children(k, m, 3)
            l1, h1 = sector(*a)
            l2, h2 = sector(*b)
            assert (l1, h2) == (lo, hi) and h1 == l2
            assert beam_center(k, m) == pytest.approx((lo + hi) / 2)


@settings(max_examples=200)
@given(st.floats(-1, 1, exclude_max=True))
def test_sector_coverage(mu):
    hits = [m for m in range(1, 9) if sector(3, m)[0] <= mu < sector(3, m)[1]]
    assert len(hits) == 1


def test_hierarchy_consistency_idealized():
    # N=16: each beam beats its sibling whenever mu sits inside the beam's sector
    cfg = SystemConfig(M=1, N=16, sigma_w2=0.0)
    cb = build_codebook(cfg, 3, 0, idealized=True)
    for mu in np.linspace(-1, 1, 1000, endpoint=False):
        ch = channel_at(mu)
        m_mu = float(wrap_mu(ch.mu))
        for k in (1, 2, 3):
            width = 2.0 / 2**k
            m = int((m_mu + 1) // width) + 1
            lo, hi = sector(k, m)
            if min(m_mu - lo, hi - m_mu) < 1e-3:
                continue
            sib = m + 1 if m % 2 else m - 1
            own = channel_strength(cfg, ch, cb.probing[cb.probing_index(k, m)])
            other = channel_strength(cfg, ch, cb.probing[cb.probing_index(k, sib)])
            assert own > other, (mu, k, m)


def test_narrow_beam_optimality_sweep():
    cfg = SystemConfig(M=1, N=16, sigma_w2=0.0)
    cb = build_codebook(cfg, 3, 0)
    for mu in np.linspace(-1, 1, 1000, endpoint=False):
        ch = channel_at(mu)
        m_mu = float(wrap_mu(ch.mu))
        m = int((m_mu + 1) // 0.25)
        lo, hi = sector(3, m + 1)
        if min(m_mu - lo, hi - m_mu) < 1e-3:
            continue
        s = [channel_strength(cfg, ch, cw) for cw in cb.narrow]
        assert int(np.argmax(s)) == m


def test_round_trip(tmp_path, cb_default):
    p = tmp_path / "cb.txt"
    save_codebook(cb_default, p)
    back = load_codebook(p)
    assert back == cb_default
    assert back.content_hash() == cb_default.content_hash()
    ideal = build_codebook(SystemConfig(N=16), 3, 4, idealized=True)
    save_codebook(ideal, p)
    assert load_codebook(p) == ideal
    raw = p.read_bytes()
    assert raw.endswith(b"\n") and b"\r" not in raw


def test_truncated_file(tmp_path, cb_default):
    p = tmp_path / "cb.txt"
    save_codebook(cb_default, p)
    lines = p.read_text().splitlines(keepends=True)
    (tmp_path / "a.txt").write_text("".join(lines[:-3]))
    with pytest.raises(FormatError):
        load_codebook(tmp_path / "a.txt")
    # cut mid-line: no final newline
    (tmp_path / "b.txt").write_text("".join(lines)[:-20])
    with pytest.raises(FormatError):
        load_codebook(tmp_path / "b.txt")
    (tmp_path / "c.txt").write_text("")
    with pytest.raises(FormatError):
        load_codebook(tmp_path / "c.txt")


def test_version_and_garbage(tmp_path, cb_default):
    p = tmp_path / "cb.txt"
    save_codebook(cb_default, p)
    text = p.read_text()
    (tmp_path / "v2.txt").write_text(text.replace("RISCB v1", "RISCB v2", 1))
    with pytest.raises(UnsupportedVersionError):
        load_codebook(tmp_path / "v2.txt")
    lines = text.splitlines()
    lines[3] = lines[3].replace(lines[3].split()[7], "abc", 1)
    (tmp_path / "bad.txt").write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError) as err:
        load_codebook(tmp_path / "bad.txt")
    assert err.value.lineno == 4
