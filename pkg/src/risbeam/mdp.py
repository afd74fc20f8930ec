"""Finite state space over the belief simplex for the pilot-selection MDP.

States are prototype beliefs: the uniform start, one absorbing one-hot per
class, and two-mass vectors ``(1-q)`` at ``i`` / ``q`` at ``j`` for every
pair and every ``q`` in the quantization grid.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .belief import Belief, declare, is_confident

DEFAULT_Q_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass(frozen=True, eq=False)
class StateSpace:
    prototypes: np.ndarray  # (S, Nc)
    init_index: int
    terminal_indices: np.ndarray  # state index of the one-hot for each class
    tau: float
    q_grid: tuple

    def __post_init__(self):
        self.prototypes.setflags(write=False)
        mask = np.zeros(self.prototypes.shape[0], dtype=np.uint8)
        mask[self.terminal_indices] = 1
        mask.setflags(write=False)
        object.__setattr__(self, "terminal_mask", mask)

    @property
    def n_states(self) -> int:
        return self.prototypes.shape[0]

    @property
    def Nc(self) -> int:
        return self.prototypes.shape[1]

    def is_terminal(self, s: int) -> bool:
        return bool(self.terminal_mask[s])

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.float64(self.tau).tobytes())
        h.update(np.ascontiguousarray(self.prototypes, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    def dump(self) -> str:
        """Prototype table as text (debugging aid)."""
        lines = [f"states={self.n_states} Nc={self.Nc} tau={self.tau!r} init={self.init_index}"]
        for s, p in enumerate(self.prototypes):
            tag = "T" if self.terminal_mask[s] else ("I" if s == self.init_index else "-")
            lines.append(f"{s} {tag} " + " ".join(format(v, ".17g") for v in p))
        return "\n".join(lines) + "\n"


def build_state_space(Nc: int, q_grid=DEFAULT_Q_GRID, tau: float = 0.9) -> StateSpace:
    if Nc < 2:
        raise ValueError("the state space needs at least two classes")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    q_grid = tuple(float(q) for q in q_grid)
    if any(not 0.0 < q < 1.0 for q in q_grid):
        raise ValueError(f"quantization levels must be strictly inside (0, 1): {q_grid}")

    protos = [np.full(Nc, 1.0 / Nc)]
    protos.extend(np.eye(Nc))
    seen = {tuple(np.round(p, 12)) for p in protos}
    for i in range(Nc):
        for j in range(Nc):
            if i == j:
                continue
            for q in q_grid:
                v = np.zeros(Nc)
                v[i] = 1.0 - q
                v[j] = q
                key = tuple(np.round(v, 12))
                # (i, j, q) and (j, i, 1-q) are the same point
                if key in seen:
                    continue
                seen.add(key)
                protos.append(v)
    return StateSpace(
        prototypes=np.array(protos),
        init_index=0,
        terminal_indices=np.arange(1, Nc + 1, dtype=np.int64),
        tau=float(tau),
        q_grid=q_grid,
    )


def project(b: Belief, ss: StateSpace) -> int:
    """Nearest state to ``b``.

    A confident belief (max entry > tau) always maps to its class's terminal
    state; any other belief maps to the nearest non-terminal prototype in
    Euclidean distance, lowest index on ties.
    """
    return int(
        kernels.project(
            np.ascontiguousarray(b.probs), ss.prototypes, ss.terminal_mask, ss.terminal_indices, ss.tau
        )
    )


def reward(state: int, ss: StateSpace) -> int:
    """Reward for sending a pilot from ``state``: -1, or 0 once absorbed in a terminal state."""
    return 0 if ss.is_terminal(state) else -1


def terminal_class(s: int, ss: StateSpace) -> int:
    hits = np.flatnonzero(ss.terminal_indices == s)
    if hits.size == 0:
        raise ValueError(f"state {s} is not terminal")
    return int(hits[0])


def consistent_terminal(b: Belief, ss: StateSpace) -> bool:
    """``project(b)`` is terminal exactly when ``b`` is confident (sanity helper)."""
    s = project(b, ss)
    return ss.is_terminal(s) == is_confident(b, ss.tau) and (
        not ss.is_terminal(s) or terminal_class(s, ss) == declare(b)
    )
