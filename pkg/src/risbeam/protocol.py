"""Online adaptive beam training and the blind benchmark searches.

Online episodes probe a live channel: every pilot gets fresh noise.  The
belief is updated against the stored dataset after each pilot and the
episode stops as soon as it is confident (max posterior > tau).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .belief import (
    Belief,
    TrainingDataset,
    declare,
    default_eps_floor,
    is_confident,
    posterior_update,
    uniform_prior,
)
from .chansim import ChannelRealization, SystemConfig, channel_gain, received_energy
from .codebook import Codebook, children
from .errors import IncompatibleArtifactError
from .mdp import StateSpace, project, reward
from .qlearner import Policy

KINDS = ("random", "qlearning", "exhaustive", "hierarchical")


@dataclass
class AcquisitionStrategy:
    kind: str
    policy: Policy | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown acquisition kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "qlearning" and self.policy is None:
            raise ValueError("the qlearning strategy needs a trained policy")


@dataclass
class EpisodeResult:
    declared: int
    pilots_used: int
    rho: float
    history: list = field(default_factory=list)  # (action, Y) pairs
    final_belief: Belief | None = None
    # declared[k-1] is the decision after k pilots; used to read off every budget at once
    declared_trace: list = field(default_factory=list)
    rewards: list = field(default_factory=list)


def narrow_strengths(cfg: SystemConfig, ch: ChannelRealization, cb: Codebook) -> np.ndarray:
    g = np.array([channel_gain(cfg, ch, cw) for cw in cb.narrow])
    return cfg.M * (g.real**2 + g.imag**2)


def relative_strength(cfg: SystemConfig, ch: ChannelRealization, declared: int, cb: Codebook, strengths=None) -> float:
    """Strength of the declared narrow beam over the best narrow beam's strength."""
    s = narrow_strengths(cfg, ch, cb) if strengths is None else strengths
    best = s.max()
    return 1.0 if best == 0 else float(s[declared] / best)


def achievable_rate(cfg: SystemConfig, strength: float) -> float:
    if strength < 0:
        raise ValueError("channel strength is non-negative")
    if cfg.sigma_w2 == 0:
        return math.inf if strength > 0 else 0.0
    return math.log2(1.0 + cfg.P * strength / cfg.sigma_w2)


def run_episode(
    cfg: SystemConfig,
    ch: ChannelRealization,
    cb: Codebook,
    ds: TrainingDataset | None,
    ss: StateSpace | None,
    strat: AcquisitionStrategy,
    budget: int,
    rng: np.random.Generator,
    eps_floor: float | None = None,
) -> EpisodeResult:
    """Probe ``ch`` with up to ``budget`` pilots chosen by ``strat`` and declare a narrow beam."""
    if budget < 1:
        raise ValueError("budget must be at least one pilot")
    if strat.kind == "exhaustive":
        return exhaustive_search(cfg, ch, cb, rng, budget=budget)
    if strat.kind == "hierarchical":
        return hierarchical_search(cfg, ch, cb, rng, budget=budget)
    if ds is None or ss is None:
        raise ValueError(f"the {strat.kind} strategy needs a dataset and a state space")
    if strat.kind == "qlearning":
        if strat.policy.ss_fingerprint and strat.policy.ss_fingerprint != ss.fingerprint():
            raise IncompatibleArtifactError("policy was learned on a different state space")
        if len(strat.policy.action) != ss.n_states:
            raise IncompatibleArtifactError(
                f"policy covers {len(strat.policy.action)} states, state space has {ss.n_states}"
            )
    eps_floor = default_eps_floor(ds) if eps_floor is None else eps_floor

    gains = [channel_gain(cfg, ch, cw) for cw in cb.probing]
    b = uniform_prior(ds.Nc)
    s = ss.init_index
    perm: list[int] = []
    history, trace, rewards = [], [], []
    used: set[int] = set()
    for _ in range(budget):
        if strat.kind == "qlearning":
            if len(used) == cb.Np:
                used.clear()
            a = strat.policy.choose(s, used)
            used.add(a)
        else:
            if not perm:
                perm = rng.permutation(cb.Np).tolist()
            a = perm.pop(0)
        rewards.append(reward(s, ss))
        y = received_energy(cfg, gains[a], ch.phi2, rng)
        history.append((a, y))
        b = posterior_update(b, a, y, ds, eps_floor)
        trace.append(declare(b))
        s = project(b, ss)
        if is_confident(b, ss.tau):
            break
    declared = declare(b)
    return EpisodeResult(
        declared=declared,
        pilots_used=len(history),
        rho=relative_strength(cfg, ch, declared, cb),
        history=history,
        final_belief=b,
        declared_trace=trace,
        rewards=rewards,
    )


def exhaustive_search(cfg, ch, cb: Codebook, rng, budget: int | None = None) -> EpisodeResult:
    """Probe narrow beams in index order (all ``Nc`` unless ``budget`` is smaller); keep the strongest."""
    n = cb.Nc if budget is None else min(budget, cb.Nc)
    history, trace = [], []
    best, best_y = 0, -math.inf
    for c in range(n):
        y = received_energy(cfg, channel_gain(cfg, ch, cb.narrow[c]), ch.phi2, rng)
        history.append((c, y))
        if y > best_y:
            best, best_y = c, y
        trace.append(best)
    return EpisodeResult(best, n, relative_strength(cfg, ch, best, cb), history, None, trace, [-1] * n)


def hierarchical_search(cfg, ch, cb: Codebook, rng, budget: int | None = None) -> EpisodeResult:
    """Binary descent: probe both children of the current node, follow the larger energy.

    Uses ``2 * L`` pilots.  If ``budget`` cuts the descent short, the decision
    is the lowest-index leaf under the deepest node reached.
    """
    L = cb.layers
    n_total = 2 * L if budget is None else min(budget, 2 * L)
    history, trace = [], []
    layer, m = 0, 1  # virtual root above layer 1
    pending = None
    for step in range(n_total):
        if layer == 0:
            pair = ((1, 1), (1, 2))
        else:
            pair = children(layer, m, L)
        node = pair[step % 2]
        a = cb.probing_index(*node)
        y = received_energy(cfg, channel_gain(cfg, ch, cb.probing[a]), ch.phi2, rng)
        history.append((a, y))
        if step % 2 == 0:
            pending = (node, y)
        else:
            left, y_left = pending
            layer, m = left if y_left >= y else node
        trace.append(_leftmost_leaf(layer, m, L))
    declared = trace[-1]
    return EpisodeResult(declared, n_total, relative_strength(cfg, ch, declared, cb), history, None, trace,
                         [-1] * n_total)


def _leftmost_leaf(layer: int, m: int, L: int) -> int:
    if layer == 0:
        return 0
    return (m - 1) * 2 ** (L - layer)
