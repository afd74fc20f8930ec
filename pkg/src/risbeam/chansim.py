"""Single-path RIS cascaded channel, codeword application and energy feedback.

The BS has an ``M``-element half-wave ULA, the RIS ``N`` elements, the UE one
antenna.  For RIS phases ``theta`` the effective BS-side channel is
``h = g * a_M(phi2)`` with

    g = sum_n exp(1j * (theta_n + pi * n * (sin(phi4) - sin(phi1))))

so ``||h||^2 = M * |g|^2`` and ``phi3`` never enters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SystemConfig:
    M: int = 64
    N: int = 100
    P: float = 1.0
    sigma_w2: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError(f"M and N must be >= 1 (got M={self.M}, N={self.N})")
        if not self.P > 0:
            raise ValueError(f"transmit power must be positive (got {self.P})")
        if not self.sigma_w2 >= 0:
            raise ValueError(f"noise variance must be >= 0 (got {self.sigma_w2})")

    @property
    def snr_db(self) -> float:
        if self.sigma_w2 == 0:
            return math.inf
        return 10.0 * math.log10(self.P / self.sigma_w2)

    @classmethod
    def from_snr_db(cls, snr_db: float, M: int = 64, N: int = 100, P: float = 1.0, seed: int = 0):
        """Config whose noise variance gives ``P / sigma_w2 = 10**(snr_db/10)``."""
        sigma_w2 = 0.0 if math.isinf(snr_db) and snr_db > 0 else P / 10.0 ** (snr_db / 10.0)
        return cls(M=M, N=N, P=P, sigma_w2=sigma_w2, seed=seed)


@dataclass(frozen=True)
class ChannelRealization:
    phi1: float
    phi2: float
    phi3: float
    phi4: float

    def __post_init__(self):
        for name in ("phi1", "phi2", "phi3", "phi4"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v < TWO_PI):
                raise ValueError(f"{name}={v!r} outside [0, 2*pi)")

    @property
    def angles(self) -> tuple[float, float, float, float]:
        return (self.phi1, self.phi2, self.phi3, self.phi4)

    @property
    def mu(self) -> float:
        """Sine-domain offset ``sin(phi4) - sin(phi1)``, in [-2, 2]."""
        return math.sin(self.phi4) - math.sin(self.phi1)


@dataclass(frozen=True, eq=False)
class Codeword:
    """RIS phase profile plus its place in the hierarchical codebook.

    ``layer`` is 0 for the narrow target beams and 1..L for probing beams;
    ``index_in_layer`` is the 1-based beam number ``m`` on that layer's grid.
    With ``idealized`` set, elements ``n >= active_count`` have zero amplitude
    (analytic tests only; a passive RIS cannot switch an element off).
    """

    phases: np.ndarray
    layer: int
    index_in_layer: int
    center_omega: float
    active_count: int
    idealized: bool = False

    def __post_init__(self):
        phases = np.array(self.phases, dtype=np.float64)
        if phases.ndim != 1:
            raise ValueError("phases must be a 1-D vector")
        if not (np.all(phases >= 0.0) and np.all(phases < TWO_PI)):
            raise ValueError("phases must lie in [0, 2*pi)")
        if not 0 <= self.active_count <= phases.size:
            raise ValueError(f"active_count={self.active_count} exceeds N={phases.size}")
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    @property
    def N(self) -> int:
        return self.phases.size

    def weights(self) -> np.ndarray:
        """Complex per-element reflection coefficients."""
        w = np.exp(1j * self.phases)
        if self.idealized:
            w[self.active_count:] = 0.0
        return w

    def __eq__(self, other):
        if not isinstance(other, Codeword):
            return NotImplemented
        return (
            self.layer == other.layer
            and self.index_in_layer == other.index_in_layer
            and self.center_omega == other.center_omega
            and self.active_count == other.active_count
            and self.idealized == other.idealized
            and np.array_equal(self.phases, other.phases)
        )

    __hash__ = None


@dataclass(frozen=True)
class Feedback:
    value: float
    action_index: int

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"received energy must be non-negative (got {self.value})")


def steering_vector(n_elems: int, angle: float) -> np.ndarray:
    if n_elems < 1:
        raise ValueError("steering vector needs at least one element")
    return np.exp(1j * math.pi * np.arange(n_elems) * math.sin(angle))


def _check_dims(cfg: SystemConfig, cw: Codeword):
    if cw.N != cfg.N:
        raise ValueError(f"codeword has {cw.N} phases but the RIS has N={cfg.N} elements")


def channel_gain(cfg: SystemConfig, ch: ChannelRealization, cw: Codeword) -> complex:
    _check_dims(cfg, cw)
    n = np.arange(cfg.N)
    return complex(np.sum(cw.weights() * np.exp(1j * math.pi * n * ch.mu)))


def channel_strength(cfg: SystemConfig, ch: ChannelRealization, cw: Codeword) -> float:
    g = channel_gain(cfg, ch, cw)
    return cfg.M * (g.real * g.real + g.imag * g.imag)


def gain_matrix(mus, codewords) -> np.ndarray:
    """Gains for many channels at once: ``G[i, j]`` for offset ``mus[i]`` and codeword ``j``."""
    mus = np.atleast_1d(np.asarray(mus, dtype=np.float64))
    W = np.stack([cw.weights() for cw in codewords], axis=1)
    n = np.arange(W.shape[0])
    E = np.exp(1j * math.pi * np.outer(mus, n))
    return E @ W


def received_energy(cfg: SystemConfig, gain: complex, phi2: float, rng: np.random.Generator) -> float:
    """One pilot: ``||sqrt(P) * g * a_M(phi2) + w||^2`` with fresh complex Gaussian ``w``."""
    y = math.sqrt(cfg.P) * gain * steering_vector(cfg.M, phi2)
    if cfg.sigma_w2 > 0:
        scale = math.sqrt(cfg.sigma_w2 / 2.0)
        noise = rng.standard_normal((2, cfg.M)) * scale
        y = y + (noise[0] + 1j * noise[1])
    return float(np.sum(y.real * y.real + y.imag * y.imag))


def simulate_feedback(
    cfg: SystemConfig,
    ch: ChannelRealization,
    cw: Codeword,
    rng: np.random.Generator,
    action_index: int = -1,
) -> Feedback:
    g = channel_gain(cfg, ch, cw)
    return Feedback(received_energy(cfg, g, ch.phi2, rng), action_index)


def sample_channel(rng: np.random.Generator) -> ChannelRealization:
    phis = rng.uniform(0.0, TWO_PI, size=4)
    # uniform() is [low, high) in exact arithmetic; guard the rounding edge
    phis = np.where(phis >= TWO_PI, 0.0, phis)
    return ChannelRealization(*(float(p) for p in phis))


def channel_rng(seed: int, index: int, *tags: int) -> np.random.Generator:
    """Independent stream for realization ``index``: seeded with ``seed XOR index``.

    Extra ``tags`` separate further streams tied to the same realization
    (e.g. per-method noise).
    """
    return np.random.default_rng([int(seed) ^ int(index), *tags])


def true_class(cfg: SystemConfig, ch: ChannelRealization, narrow_codebook) -> int:
    """0-based index of the strongest narrow codeword (lowest index on ties)."""
    if len(narrow_codebook) == 0:
        raise ValueError("narrow codebook is empty")
    strengths = [channel_strength(cfg, ch, cw) for cw in narrow_codebook]
    return int(np.argmax(strengths))


def wrap_phase(x):
    """Reduce angles into [0, 2*pi); ``np.mod`` of a tiny negative rounds up to 2*pi."""
    x = np.mod(x, TWO_PI)
    return np.where(x >= TWO_PI, 0.0, x)


def wrap_mu(mu):
    """Fold a sine-domain offset into [-1, 1); ``exp(1j*pi*n*mu)`` has period 2."""
    return (np.asarray(mu) + 1.0) % 2.0 - 1.0
