"""Quenched Gaussian disorder for the SK model.

Every coupling matrix is drawn from its own Philox stream keyed by
``(master_seed, replica_index, stream_tag)``, so a replica's disorder does not
depend on how many replicas or threads were used to produce it.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

__all__ = [
    "StreamTag",
    "SeedSpec",
    "DisorderRealization",
    "EffectiveCouplings",
    "sample_disorder",
    "effective_couplings",
    "dump_realization",
    "load_realization",
]


class StreamTag(enum.IntEnum):
    """Which of the three independent disorders a stream feeds."""

    G = 0
    G_PRIME = 1
    G_DOUBLE_PRIME = 2


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    replica_index: int = 0
    stream_tag: StreamTag = StreamTag.G

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")
        if self.replica_index < 0:
            raise ValueError(f"replica_index must be nonnegative, got {self.replica_index}")
        object.__setattr__(self, "stream_tag", StreamTag(self.stream_tag))

    def generator(self) -> np.random.Generator:
        """Counter-based generator for this triple.

        The triple is hashed through ``SeedSequence`` (master seed as entropy,
        replica index and stream tag as spawn key) into a Philox key.
        """
        seq = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.replica_index, int(self.stream_tag)),
        )
        return np.random.Generator(np.random.Philox(seq))

    def with_tag(self, tag: StreamTag) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.replica_index, tag)


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    """One draw of the full ``n x n`` Gaussian matrix (diagonal included, not symmetrized)."""

    n: int
    g: np.ndarray
    seed: SeedSpec | None = None

    def __post_init__(self):
        g = np.ascontiguousarray(self.g, dtype=np.float64)
        if g.shape != (self.n, self.n):
            raise ValueError(f"g must have shape ({self.n}, {self.n}), got {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    def hamiltonian_direct(self, spins: np.ndarray) -> np.ndarray:
        """Double-sum energy ``sum_ij g_ij s_i s_j / sqrt(n)`` for one or many ±1 rows."""
        s = np.asarray(spins, dtype=np.float64)
        return np.einsum("...i,ij,...j->...", s, self.g, s) / np.sqrt(self.n)


@dataclass(frozen=True, eq=False)
class EffectiveCouplings:
    """Symmetric regrouping of a disorder matrix.

    ``j`` holds ``J_ij = g_ij + g_ji`` off the diagonal and zeros on it, so the
    energy is ``(diag_sum + sum_{i<j} J_ij s_i s_j) / sqrt(n)``.
    """

    n: int
    j: np.ndarray
    diag_sum: float

    def __post_init__(self):
        j = np.ascontiguousarray(self.j, dtype=np.float64)
        if j.shape != (self.n, self.n):
            raise ValueError(f"j must have shape ({self.n}, {self.n}), got {j.shape}")
        j.setflags(write=False)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "diag_sum", float(self.diag_sum))

    @property
    def j_upper(self) -> np.ndarray:
        """The ``J_ij`` values for ``i < j`` in row-major order."""
        return self.j[np.triu_indices(self.n, k=1)]

    def scaled(self, factor: float) -> "EffectiveCouplings":
        return EffectiveCouplings(self.n, self.j * factor, self.diag_sum * factor)

    def __add__(self, other: "EffectiveCouplings") -> "EffectiveCouplings":
        if other.n != self.n:
            raise ValueError(f"size mismatch: {self.n} vs {other.n}")
        return EffectiveCouplings(self.n, self.j + other.j, self.diag_sum + other.diag_sum)

    @classmethod
    def zeros(cls, n: int) -> "EffectiveCouplings":
        return cls(n, np.zeros((n, n)), 0.0)


def sample_disorder(n: int, seed: SeedSpec) -> DisorderRealization:
    """Draw ``n**2`` standard normals (numpy ziggurat on the Philox stream), row-major."""
    if n < 1:
        raise ValueError(f"system size must be >= 1, got {n}")
    g = seed.generator().standard_normal(n * n).reshape(n, n)
    return DisorderRealization(n, g, seed)


def effective_couplings(d: DisorderRealization) -> EffectiveCouplings:
    j = d.g + d.g.T
    np.fill_diagonal(j, 0.0)
    return EffectiveCouplings(d.n, j, float(np.trace(d.g)))


# magic, n, master_seed, replica_index, stream_tag
_HEADER = struct.Struct("<4sIQQI")
_MAGIC = b"SKDR"


def dump_realization(d: DisorderRealization, dest: str | Path | BinaryIO) -> None:
    """Write a realization as a fixed header followed by ``n**2`` little-endian float64."""
    seed = d.seed if d.seed is not None else SeedSpec(0)
    payload = _HEADER.pack(
        _MAGIC, d.n, seed.master_seed, seed.replica_index, int(seed.stream_tag)
    ) + d.g.astype("<f8").tobytes()
    if isinstance(dest, (str, Path)):
        Path(dest).write_bytes(payload)
    else:
        dest.write(payload)


def load_realization(src: str | Path | BinaryIO) -> DisorderRealization:
    raw = Path(src).read_bytes() if isinstance(src, (str, Path)) else src.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated realization header")
    magic, n, master, replica, tag = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n * n:
        raise ValueError(f"expected {8 * n * n} payload bytes, got {len(body)}")
    g = np.frombuffer(body, dtype="<f8").reshape(n, n).astype(np.float64)
    return DisorderRealization(n, g, SeedSpec(master, replica, StreamTag(tag)))
