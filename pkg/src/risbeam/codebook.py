"""Hierarchical (deactivation-based) RIS codebooks.

Layer ``k`` splits the sine domain [-1, 1) into ``2**k`` equal sectors.  A beam
on layer ``k`` steers the first ``N * 2**(k - L)`` elements with a linear
phase ramp towards its sector centre; each layer up halves the active set,
which widens the beam.  The remaining elements keep fixed pseudo-random
phases, since a passive element still reflects.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import _textio
from .chansim import TWO_PI, Codeword, SystemConfig, wrap_phase
from .errors import FormatError


@dataclass(frozen=True, eq=False)
class Codebook:
    """Narrow target beams plus the breadth-first list of probing beams."""

    narrow: tuple
    probing: tuple
    deact_seed: int
    layers: int
    idealized: bool = False

    @property
    def N(self) -> int:
        return self.narrow[0].N

    @property
    def Nc(self) -> int:
        return len(self.narrow)

    @property
    def Np(self) -> int:
        return len(self.probing)

    def probing_index(self, layer_k: int, m: int) -> int:
        """Position of beam ``(layer_k, m)`` in :attr:`probing` (0-based)."""
        if not 1 <= layer_k <= self.layers or not 1 <= m <= 2**layer_k:
            raise ValueError(f"no probing beam ({layer_k}, {m})")
        return (2**layer_k - 2) + (m - 1)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.layers} {self.deact_seed} {int(self.idealized)}".encode())
        for cw in self.narrow + self.probing:
            h.update(f"{cw.layer} {cw.index_in_layer} {cw.active_count}".encode())
            h.update(np.float64(cw.center_omega).tobytes())
            h.update(np.ascontiguousarray(cw.phases, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.layers == other.layers
            and self.deact_seed == other.deact_seed
            and self.idealized == other.idealized
            and self.narrow == other.narrow
            and self.probing == other.probing
        )

    __hash__ = None


def beam_center(layer_k: int, m: int) -> float:
    if layer_k < 0:
        raise ValueError(f"layer must be >= 0 (got {layer_k})")
    if not 1 <= m <= 2**layer_k:
        raise ValueError(f"beam index m={m} outside [1, {2**layer_k}]")
    return -1.0 + (2 * m - 1) / 2**layer_k


def active_count_for(N: int, layer_k: int, L: int) -> int:
    div = 2 ** (L - layer_k)
    if N % div:
        raise ValueError(
            f"N={N} is not divisible by 2**(L - layer)={div}; "
            f"layer {layer_k} of an L={L} codebook needs an integer active set"
        )
    return N // div


def _deact_phase(deact_seed: int, layer_k: int, m: int, n: int) -> float:
    rng = np.random.default_rng([deact_seed, layer_k, m, n])
    return float(wrap_phase(rng.uniform(0.0, TWO_PI)))


def make_codeword(
    cfg: SystemConfig,
    layer_k: int,
    m: int,
    deact_seed: int,
    L: int,
    *,
    narrow: bool = False,
    idealized: bool = False,
) -> Codeword:
    """Beam ``m`` of layer ``layer_k`` in an ``L``-layer hierarchy.

    ``narrow=True`` builds the target-codebook copy of a bottom-layer beam
    (stored with ``layer=0``, all elements active).
    """
    if not 1 <= layer_k <= L:
        raise ValueError(f"layer {layer_k} outside [1, {L}]")
    if narrow and layer_k != L:
        raise ValueError("narrow beams live on the bottom layer")
    omega = beam_center(layer_k, m)
    active = active_count_for(cfg.N, layer_k, L)
    n = np.arange(cfg.N)
    phases = wrap_phase(-math.pi * n * omega)
    for k in range(active, cfg.N):
        phases[k] = 0.0 if idealized else _deact_phase(deact_seed, layer_k, m, k)
    return Codeword(
        phases=phases,
        layer=0 if narrow else layer_k,
        index_in_layer=m,
        center_omega=omega,
        active_count=active,
        idealized=idealized,
    )


def build_codebook(cfg: SystemConfig, L: int = 3, deact_seed: int = 0, idealized: bool = False) -> Codebook:
    if L < 1:
        raise ValueError("a hierarchy needs at least one layer")
    # validates divisibility up front, before any codeword is made
    active_count_for(cfg.N, 1, L)
    narrow = tuple(
        make_codeword(cfg, L, m, deact_seed, L, narrow=True, idealized=idealized)
        for m in range(1, 2**L + 1)
    )
    probing = tuple(
        make_codeword(cfg, k, m, deact_seed, L, idealized=idealized)
        for k in range(1, L + 1)
        for m in range(1, 2**k + 1)
    )
    return Codebook(narrow=narrow, probing=probing, deact_seed=int(deact_seed), layers=L, idealized=idealized)


def children(layer_k: int, m: int, L: int) -> tuple[tuple[int, int], tuple[int, int]]:
    if layer_k >= L:
        raise ValueError(f"beam ({layer_k}, {m}) is on the leaf layer and has no children")
    if not 1 <= m <= 2**layer_k:
        raise ValueError(f"beam index m={m} outside [1, {2**layer_k}]")
    return (layer_k + 1, 2 * m - 1), (layer_k + 1, 2 * m)


def sector(layer_k: int, m: int) -> tuple[float, float]:
    """Half-open sine-domain interval ``[lo, hi)`` covered by beam ``(layer_k, m)``."""
    width = 2.0 / 2**layer_k
    lo = -1.0 + (m - 1) * width
    return lo, lo + width


# -- persistence -------------------------------------------------------------

MAGIC = "RISCB"


def save_codebook(cb: Codebook, path) -> None:
    header = _textio.format_header(
        MAGIC, {"N": cb.N, "L": cb.layers, "seed": cb.deact_seed, "ideal": int(cb.idealized)}
    )
    lines = [header]
    for cw in cb.narrow + cb.probing:
        head = f"{cw.layer} {cw.index_in_layer} {_textio.fmt(cw.center_omega)} {cw.active_count}"
        lines.append(head + " " + " ".join(_textio.fmt(p) for p in cw.phases))
    _textio.write_lines(path, lines)


def load_codebook(path) -> Codebook:
    lines = _textio.read_lines(path)
    fields = _textio.parse_header(lines[0], MAGIC, path)
    N = _textio.header_int(fields, "N", path)
    L = _textio.header_int(fields, "L", path)
    seed = _textio.header_int(fields, "seed", path)
    idealized = bool(int(fields.get("ideal", "0")))
    if N < 1 or L < 1:
        raise FormatError(f"invalid dimensions N={N} L={L}", path, 1)
    Nc, Np = 2**L, 2 ** (L + 1) - 2
    if len(lines) != 1 + Nc + Np:
        raise FormatError(
            f"expected {Nc + Np} codeword lines, found {len(lines) - 1} (truncated?)", path, len(lines)
        )
    words = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if len(tokens) != 4 + N:
            raise FormatError(f"expected {4 + N} fields, found {len(tokens)}", path, lineno)
        try:
            layer, m, active = int(tokens[0]), int(tokens[1]), int(tokens[3])
        except ValueError:
            raise FormatError("layer/index/active_count must be integers", path, lineno) from None
        omega = _textio.parse_floats(tokens[2:3], path, lineno)[0]
        phases = _textio.parse_floats(tokens[4:], path, lineno)
        try:
            words.append(Codeword(np.array(phases), layer, m, omega, active, idealized))
        except ValueError as exc:
            raise FormatError(str(exc), path, lineno) from None
    narrow, probing = tuple(words[:Nc]), tuple(words[Nc:])
    if any(cw.layer != 0 for cw in narrow) or any(cw.layer == 0 for cw in probing):
        raise FormatError("narrow beams must come first with layer 0", path)
    return Codebook(narrow=narrow, probing=probing, deact_seed=seed, layers=L, idealized=idealized)
