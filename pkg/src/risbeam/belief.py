"""Posterior over the narrow-beam classes, and the training dataset behind it.

The likelihood of feedback ``y`` under probing action ``a`` for class ``k``
is a sum of inverse squared distances to the stored feedbacks of class-``k``
channels::

    p'_k  ~  p_k * sum_{l in class k} 1 / ((X[l, a] - y)**2 + eps_floor)

``eps_floor`` keeps the weight finite when ``y`` hits a stored sample.
Class and action indices are 0-based throughout.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import _textio, kernels
from .chansim import (
    ChannelRealization,
    SystemConfig,
    channel_gain,
    received_energy,
    sample_channel,
    true_class,
)
from .codebook import Codebook
from .errors import DatasetGenerationError, FormatError, IncompatibleArtifactError


@dataclass(frozen=True, eq=False)
class Belief:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("a belief is a non-empty probability vector")
        if np.any(p < 0) or not math.isclose(math.fsum(p), 1.0, abs_tol=1e-9):
            raise ValueError(f"not a probability vector: {p}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def Nc(self) -> int:
        return self.probs.size

    def __eq__(self, other):
        if not isinstance(other, Belief):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    __hash__ = None


def uniform_prior(Nc: int) -> Belief:
    if Nc < 1:
        raise ValueError("need at least one class")
    return Belief(np.full(Nc, 1.0 / Nc))


def declare(b: Belief) -> int:
    """Bayes decision: index of the largest posterior entry (lowest index on ties)."""
    return int(np.argmax(b.probs))


def is_confident(b: Belief, tau: float) -> bool:
    return bool(b.probs.max() > tau)


@dataclass(frozen=True)
class DatasetMeta:
    M: int
    N: int
    P: float
    sigma_w2: float
    snr_db: float
    seed: int
    cbhash: str
    noiseless: bool = False


@dataclass(eq=False)
class TrainingDataset:
    """Feedback table ``X`` (one row per channel, one column per probing beam) and labels."""

    feedbacks: np.ndarray
    labels: np.ndarray
    Nc: int
    angles: np.ndarray | None = None
    meta: DatasetMeta | None = None
    _hash: str | None = field(default=None, repr=False)

    def __post_init__(self):
        self.feedbacks = np.ascontiguousarray(self.feedbacks, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.feedbacks.ndim != 2 or self.labels.shape != (self.feedbacks.shape[0],):
            raise ValueError("feedbacks must be (n, Np) with one label per row")
        if np.any(self.feedbacks < 0) or not np.all(np.isfinite(self.feedbacks)):
            raise ValueError("feedback energies must be finite and non-negative")
        if np.any(self.labels < 0) or np.any(self.labels >= self.Nc):
            raise ValueError(f"labels must lie in [0, {self.Nc})")
        if self.angles is not None:
            self.angles = np.asarray(self.angles, dtype=np.float64).reshape(-1, 4)
        self.feedbacks.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.feedbacks.shape[0]

    @property
    def Np(self) -> int:
        return self.feedbacks.shape[1]

    @property
    def onehot(self) -> np.ndarray:
        out = np.zeros((self.n, self.Nc))
        out[np.arange(self.n), self.labels] = 1.0
        return out

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.Nc)

    def content_hash(self) -> str:
        if self._hash is None:
            h = hashlib.sha256()
            h.update(f"{self.n} {self.Np} {self.Nc}".encode())
            h.update(self.feedbacks.astype("<f8").tobytes())
            h.update(self.labels.astype("<i8").tobytes())
            self._hash = h.hexdigest()[:16]
        return self._hash

    def check_codebook(self, cb: Codebook) -> None:
        if self.Np != cb.Np or self.Nc != cb.Nc:
            raise IncompatibleArtifactError(
                f"dataset is Np={self.Np}, Nc={self.Nc}; codebook is Np={cb.Np}, Nc={cb.Nc}"
            )
        if self.meta is not None and self.meta.cbhash != cb.content_hash():
            raise IncompatibleArtifactError(
                f"dataset was generated with codebook {self.meta.cbhash}, got {cb.content_hash()}"
            )


EPS_FLOOR_SCALE = 1e-6


def default_eps_floor(ds: TrainingDataset, scale: float = EPS_FLOOR_SCALE) -> float:
    """``scale`` times the variance of the stored feedbacks (positive fallback if constant)."""
    var = float(np.var(ds.feedbacks))
    return scale * var if var > 0 else 1e-12


def resolve_eps_floor(ds: TrainingDataset, eps_floor: float | None = None, scale: float = EPS_FLOOR_SCALE) -> float:
    return default_eps_floor(ds, scale) if eps_floor is None else float(eps_floor)


def posterior_update(
    b: Belief, action: int, y: float, ds: TrainingDataset, eps_floor: float, skip: int = -1
) -> Belief:
    """One Bayesian step; ``skip`` leaves dataset row ``skip`` out of the likelihood."""
    if not 0 <= action < ds.Np:
        raise ValueError(f"action {action} outside [0, {ds.Np})")
    if not math.isfinite(y):
        raise ValueError(f"feedback must be finite (got {y})")
    if not eps_floor > 0:
        raise ValueError("eps_floor must be positive")
    if b.Nc != ds.Nc:
        raise ValueError(f"belief has {b.Nc} classes, dataset {ds.Nc}")
    out = np.empty(b.Nc)
    kernels.posterior_update_into(
        np.ascontiguousarray(b.probs), ds.feedbacks, ds.labels, int(action), float(y), float(eps_floor), out, int(skip)
    )
    return Belief(out)


# -- generation --------------------------------------------------------------


def generate_dataset(
    cfg: SystemConfig,
    cb: Codebook,
    n_channels: int,
    rng: np.random.Generator,
    *,
    noiseless: bool = False,
    max_extra: int = 100_000,
    seed: int | None = None,
) -> TrainingDataset:
    """Sample ``n_channels`` channels and record one noisy pilot per probing beam each.

    If some class ends up empty, further channels are drawn; each one that
    falls in a missing class replaces a member of the currently largest class.
    Gives up with :class:`DatasetGenerationError` after ``max_extra`` draws.
    """
    if n_channels < cb.Nc:
        raise ValueError(f"need at least Nc={cb.Nc} channels, got {n_channels}")
    if cfg.N != cb.N:
        raise ValueError(f"codebook is for N={cb.N}, config has N={cfg.N}")
    sim_cfg = SystemConfig(cfg.M, cfg.N, cfg.P, 0.0, cfg.seed) if noiseless else cfg

    def draw():
        ch = sample_channel(rng)
        row = [received_energy(sim_cfg, channel_gain(cfg, ch, cw), ch.phi2, rng) for cw in cb.probing]
        return ch, row, true_class(cfg, ch, cb.narrow)

    chans, rows, labels = [], [], []
    for _ in range(n_channels):
        ch, row, label = draw()
        chans.append(ch.angles)
        rows.append(row)
        labels.append(label)

    extra = 0
    while True:
        counts = np.bincount(labels, minlength=cb.Nc)
        missing = set(np.flatnonzero(counts == 0).tolist())
        if not missing:
            break
        if extra >= max_extra:
            raise DatasetGenerationError(
                f"classes {sorted(missing)} still empty after {max_extra} extra channel draws"
            )
        extra += 1
        ch, row, label = draw()
        if label in missing:
            biggest = int(np.argmax(counts))
            victim = max(i for i, lab in enumerate(labels) if lab == biggest)
            chans[victim], rows[victim], labels[victim] = ch.angles, row, label

    meta = DatasetMeta(
        M=cfg.M, N=cfg.N, P=cfg.P, sigma_w2=cfg.sigma_w2, snr_db=cfg.snr_db,
        seed=cfg.seed if seed is None else seed, cbhash=cb.content_hash(), noiseless=noiseless,
    )
    return TrainingDataset(np.array(rows), np.array(labels), cb.Nc, np.array(chans), meta)


def dataset_channels(ds: TrainingDataset) -> list[ChannelRealization]:
    if ds.angles is None:
        raise ValueError("dataset carries no channel angles")
    return [ChannelRealization(*map(float, row)) for row in ds.angles]


# -- persistence -------------------------------------------------------------

MAGIC = "RISDS"


def save_dataset(ds: TrainingDataset, path) -> None:
    if ds.meta is None or ds.angles is None:
        raise ValueError("only generated datasets (with angles and metadata) can be saved")
    m = ds.meta
    header = _textio.format_header(
        MAGIC,
        {
            "n": ds.n, "Np": ds.Np, "Nc": ds.Nc, "snr_db": float(m.snr_db), "seed": m.seed,
            "cbhash": m.cbhash, "M": m.M, "N": m.N, "P": float(m.P), "sigma_w2": float(m.sigma_w2),
            "noiseless": int(m.noiseless),
        },
    )
    lines = [header]
    for ang, row, lab in zip(ds.angles, ds.feedbacks, ds.labels):
        vals = [_textio.fmt(v) for v in ang] + [_textio.fmt(v) for v in row]
        lines.append(" ".join(vals) + f" {int(lab) + 1}")
    _textio.write_lines(path, lines)


def load_dataset(path) -> TrainingDataset:
    """Read a dataset file; labels in the file are 1-based class numbers."""
    lines = _textio.read_lines(path)
    f = _textio.parse_header(lines[0], MAGIC, path)
    n, Np, Nc = (_textio.header_int(f, k, path) for k in ("n", "Np", "Nc"))
    if len(lines) != n + 1:
        raise FormatError(f"header announces {n} channels, found {len(lines) - 1} (truncated?)", path, len(lines))
    angles, rows, labels = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if len(tokens) != 4 + Np + 1:
            raise FormatError(f"expected {4 + Np + 1} fields, found {len(tokens)}", path, lineno)
        vals = _textio.parse_floats(tokens[:-1], path, lineno)
        try:
            lab = int(tokens[-1])
        except ValueError:
            raise FormatError("class label must be an integer", path, lineno) from None
        if not 1 <= lab <= Nc:
            raise FormatError(f"class label {lab} outside [1, {Nc}]", path, lineno)
        angles.append(vals[:4])
        rows.append(vals[4:])
        labels.append(lab - 1)
    sigma_w2 = _textio.header_float(f, "sigma_w2", path) if "sigma_w2" in f else math.nan
    meta = DatasetMeta(
        M=int(f.get("M", 0)), N=int(f.get("N", 0)), P=float(f.get("P", "nan")), sigma_w2=sigma_w2,
        snr_db=_textio.header_float(f, "snr_db", path), seed=_textio.header_int(f, "seed", path),
        cbhash=f.get("cbhash", ""), noiseless=bool(int(f.get("noiseless", "0"))),
    )
    try:
        return TrainingDataset(np.array(rows).reshape(n, Np), np.array(labels, dtype=np.int64), Nc,
                               np.array(angles).reshape(n, 4), meta)
    except ValueError as exc:
        raise FormatError(str(exc), path) from None
