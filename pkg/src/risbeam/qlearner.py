"""Tabular Q-learning of the pilot-selection policy on the belief-state SSP.

Training replays the stored dataset feedbacks: an episode picks one dataset
channel, starts from the uniform belief and, at each step, reads
``X[k, a]`` for the chosen action ``a`` instead of simulating a new pilot.
Every pilot costs -1 and there is no discount, so ``-Q(s, a)`` estimates
the expected number of pilots still needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _textio, kernels
from .belief import Belief, TrainingDataset, default_eps_floor, posterior_update, uniform_prior
from .codebook import Codebook
from .errors import FormatError, IncompatibleArtifactError
from .mdp import StateSpace, project


@dataclass(frozen=True)
class Hyper:
    alpha: float = 0.1
    epsilon: float = 0.1
    max_epoch: int = 200
    max_channel: int | None = None  # None: every dataset channel once per epoch
    max_L: int = 14
    eps_floor: float | None = None  # None: default_eps_floor(dataset)
    seed: int = 0
    # drop the episode's own row from the likelihood; with it, the replayed
    # feedback matches itself exactly and every episode ends after one pilot
    leave_one_out: bool = True
    # never re-send a beam within an episode (until all were sent); the
    # belief grid has no memory, so a diffuse belief maps back to the state
    # it came from and the greedy action would repeat forever
    no_repeat: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.max_epoch < 1 or self.max_L < 1:
            raise ValueError("max_epoch and max_L must be >= 1")


@dataclass
class QTable:
    values: np.ndarray
    hyper: Hyper
    tau: float = float("nan")
    ss_fingerprint: str = ""
    ds_hash: str = ""

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    @property
    def n_actions(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Policy:
    """Greedy action per state; ``-1`` marks terminal states (no pilot is sent).

    ``ranking[s]`` lists all actions from best to worst Q (ties: lower index
    first).  With ``no_repeat`` the policy sends the best beam not yet used.
    """

    action: np.ndarray
    ss_fingerprint: str = ""
    ranking: np.ndarray | None = None
    no_repeat: bool = False

    def __getitem__(self, s):
        return int(self.action[s])

    def choose(self, s, used=()) -> int:
        if not self.no_repeat or self.ranking is None or self.action[s] < 0:
            return int(self.action[s])
        for a in self.ranking[s]:
            if int(a) not in used:
                return int(a)
        return int(self.action[s])


@dataclass
class TrainingCurve:
    mean_length: np.ndarray
    terminal_fraction: np.ndarray
    lengths: list = field(default_factory=list, repr=False)


def q_update(Q, s, a, r, s_next, alpha):
    """In-place Bellman step ``Q[s,a] <- (1-alpha) Q[s,a] + alpha (r + max Q[s_next])``."""
    Q[s, a] = (1.0 - alpha) * Q[s, a] + alpha * (r + float(np.max(Q[s_next])))
    return Q


def epsilon_greedy(Q, s, epsilon, rng) -> int:
    if rng.random() > epsilon:
        return int(np.argmax(Q[s]))
    return int(rng.integers(Q.shape[1]))


def extract_policy(Q, ss: StateSpace | None = None) -> Policy:
    values = Q.values if isinstance(Q, QTable) else np.asarray(Q)
    action = np.argmax(values, axis=1).astype(np.int64)
    ranking = np.argsort(-values, axis=1, kind="stable").astype(np.int64)
    fp = ""
    if ss is not None:
        action[ss.terminal_mask.astype(bool)] = -1
        fp = ss.fingerprint()
    no_repeat = Q.hyper.no_repeat if isinstance(Q, QTable) else False
    return Policy(action, fp, ranking, no_repeat)


def train(
    ds: TrainingDataset,
    ss: StateSpace,
    cb: Codebook | None,
    hyper: Hyper = Hyper(),
    *,
    backend: str | None = None,
):
    """Learn Q on the dataset; returns ``(QTable, Policy, TrainingCurve)``.

    Channel order is reshuffled every epoch.  The random numbers for one
    epoch (the exploration coin and the random action for every possible
    step) are drawn up front, so the compiled and numpy kernels consume the
    same stream and give the same table.
    """
    if cb is not None:
        ds.check_codebook(cb)
    if ss.Nc != ds.Nc:
        raise IncompatibleArtifactError(f"state space has Nc={ss.Nc}, dataset Nc={ds.Nc}")
    k = kernels.get_backend(backend)
    eps_floor = default_eps_floor(ds) if hyper.eps_floor is None else hyper.eps_floor
    rng = np.random.default_rng(hyper.seed)
    n_ch = ds.n if hyper.max_channel is None else min(hyper.max_channel, ds.n)

    Q = np.zeros((ss.n_states, ds.Np))
    mean_len = np.empty(hyper.max_epoch)
    frac = np.empty(hyper.max_epoch)
    all_lengths = []
    lengths = np.empty(n_ch, dtype=np.int64)
    reached = np.empty(n_ch, dtype=np.uint8)
    for epoch in range(hyper.max_epoch):
        order = rng.permutation(ds.n)[:n_ch].astype(np.int64)
        coins = rng.random((n_ch, hyper.max_L))
        picks = rng.random((n_ch, hyper.max_L))
        k.train_epoch(
            Q, ds.feedbacks, ds.labels, ss.prototypes, ss.terminal_mask, ss.terminal_indices,
            ss.init_index, ss.tau, eps_floor, hyper.alpha, hyper.epsilon,
            order, coins, picks, hyper.max_L, lengths, reached, hyper.leave_one_out, hyper.no_repeat,
        )
        mean_len[epoch] = lengths.mean()
        frac[epoch] = reached.mean()
        all_lengths.append(lengths.copy())

    hyper = replace(hyper, eps_floor=eps_floor)
    table = QTable(Q, hyper, ss.tau, ss.fingerprint(), ds.content_hash())
    return table, extract_policy(table, ss), TrainingCurve(mean_len, frac, all_lengths)


def greedy_path_lengths(
    policy: Policy, ds: TrainingDataset, ss: StateSpace, eps_floor: float, max_L: int,
    leave_one_out: bool = True,
):
    """Replay ``policy`` on every dataset channel; returns (lengths, reached_terminal)."""
    lengths = np.empty(ds.n, dtype=np.int64)
    reached = np.zeros(ds.n, dtype=bool)
    for k in range(ds.n):
        b: Belief = uniform_prior(ds.Nc)
        s = ss.init_index
        steps = 0
        used = set()
        while steps < max_L and not ss.is_terminal(s):
            if len(used) == ds.Np:
                used.clear()
            a = policy.choose(s, used)
            used.add(a)
            b = posterior_update(b, a, ds.feedbacks[k, a], ds, eps_floor, skip=k if leave_one_out else -1)
            s = project(b, ss)
            steps += 1
        lengths[k] = steps
        reached[k] = ss.is_terminal(s)
    return lengths, reached


def smoothed(x, window: int = 10) -> np.ndarray:
    """Trailing moving average; the first entries average what is available."""
    x = np.asarray(x, dtype=np.float64)
    c = np.cumsum(np.concatenate([[0.0], x]))
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


# -- persistence -------------------------------------------------------------

MAGIC = "RISQ"


def save_qtable(table: QTable, path) -> None:
    h = table.hyper
    header = _textio.format_header(
        MAGIC,
        {
            "states": table.n_states, "actions": table.n_actions, "alpha": float(h.alpha),
            "epsilon": float(h.epsilon), "tau": float(table.tau), "dshash": table.ds_hash or "none",
            "ssfp": table.ss_fingerprint or "none", "max_epoch": h.max_epoch, "max_L": h.max_L,
            "max_channel": "all" if h.max_channel is None else h.max_channel,
            "eps_floor": "auto" if h.eps_floor is None else float(h.eps_floor), "seed": h.seed,
            "loo": int(h.leave_one_out), "norepeat": int(h.no_repeat),
        },
    )
    lines = [header] + [" ".join(_textio.fmt(v) for v in row) for row in table.values]
    _textio.write_lines(path, lines)


def load_qtable(path, ss: StateSpace | None = None, ds: TrainingDataset | None = None) -> QTable:
    """Read a Q-table; with ``ss``/``ds`` given, refuse one trained for different artifacts."""
    lines = _textio.read_lines(path)
    f = _textio.parse_header(lines[0], MAGIC, path)
    S = _textio.header_int(f, "states", path)
    A = _textio.header_int(f, "actions", path)
    if len(lines) != S + 1:
        raise FormatError(f"header announces {S} states, found {len(lines) - 1} rows (truncated?)", path, len(lines))
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if len(tokens) != A:
            raise FormatError(f"expected {A} values, found {len(tokens)}", path, lineno)
        rows.append(_textio.parse_floats(tokens, path, lineno))
    eps = f.get("eps_floor", "auto")
    mc = f.get("max_channel", "all")
    try:
        hyper = Hyper(
            alpha=_textio.header_float(f, "alpha", path),
            epsilon=_textio.header_float(f, "epsilon", path),
            max_epoch=int(f.get("max_epoch", 1)),
            max_channel=None if mc == "all" else int(mc),
            max_L=int(f.get("max_L", A)),
            eps_floor=None if eps == "auto" else float(eps),
            seed=int(f.get("seed", 0)),
            leave_one_out=bool(int(f.get("loo", 1))),
            no_repeat=bool(int(f.get("norepeat", 1))),
        )
    except ValueError as exc:
        raise FormatError(f"bad hyperparameters: {exc}", path, 1) from None
    dshash = f.get("dshash", "none")
    ssfp = f.get("ssfp", "none")
    table = QTable(
        np.array(rows, dtype=np.float64).reshape(S, A), hyper, _textio.header_float(f, "tau", path),
        "" if ssfp == "none" else ssfp, "" if dshash == "none" else dshash,
    )
    if ss is not None and table.ss_fingerprint != ss.fingerprint():
        raise IncompatibleArtifactError(
            f"Q-table was trained on state space {table.ss_fingerprint or '?'}, "
            f"evaluation uses {ss.fingerprint()} (different Nc, q grid or tau)"
        )
    if ds is not None and table.ds_hash != ds.content_hash():
        raise IncompatibleArtifactError(
            f"Q-table was trained on dataset {table.ds_hash or '?'}, got {ds.content_hash()}"
        )
    return table
