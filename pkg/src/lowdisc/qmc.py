"""Classical low-discrepancy generators: van der Corput, Halton, Sobol.

All generators are pure functions of (index range, parameters) and share a
1-based start index: the all-zeros point at index 0 is never emitted, so a
run that continues a sequence simply starts where the previous slice ended.
"""

from __future__ import annotations

import functools
import importlib.resources
from dataclasses import dataclass, replace

import numpy as np

from lowdisc.pointset import PointSet

__all__ = [
    "radical_inverse",
    "halton",
    "sobol",
    "SobolDirectionTable",
    "SequenceCursor",
    "SOBOL_BITS",
]

# Output precision of the Sobol construction: coordinates are multiples of
# 2^-SOBOL_BITS, the largest power that still round-trips through a double.
SOBOL_BITS = 52

# Halton dimension cap; generating primes past this has no benchmark use.
MAX_HALTON_DIM = 4096


def radical_inverse(i: int, b: int) -> float:
    """Reflect the base-b digits of i about the radix point.

    Computed as an exact integer fraction and divided once at the end, so
    there is no per-digit rounding.
    """
    if i < 0:
        raise ValueError(f"index must be >= 0, got {i}")
    if b < 2:
        raise ValueError(f"base must be >= 2, got {b}")
    num, denom = 0, 1
    while i > 0:
        i, digit = divmod(i, b)
        num = num * b + digit
        denom *= b
    return num / denom


def _first_primes(count: int) -> list[int]:
    """The first ``count`` primes by trial division against found primes."""
    primes: list[int] = []
    cand = 2
    while len(primes) < count:
        if all(cand % p for p in primes if p * p <= cand):
            primes.append(cand)
        cand += 1
    return primes


def halton(n: int, d: int, start: int = 1) -> PointSet:
    """n Halton points at indices start .. start+n-1 (1-based, 0 skipped).

    Coordinate k of point j is radical_inverse(start + j, p_k) with p_k the
    k-th prime.
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if d > MAX_HALTON_DIM:
        raise ValueError(f"dimension {d} exceeds supported prime count {MAX_HALTON_DIM}")
    if start < 1:
        raise ValueError(f"start index must be >= 1, got {start}")
    bases = _first_primes(d)
    coords = np.empty((n, d))
    for j in range(n):
        idx = start + j
        coords[j] = [radical_inverse(idx, b) for b in bases]
    return PointSet(coords, provenance=f"halton n={n} d={d} start={start}")


@dataclass(frozen=True)
class SobolDirectionTable:
    """Initial direction numbers per dimension, Joe-Kuo text layout.

    ``entries[dim] = (s, a, (m_1, .., m_s))`` for dimensions 2..max_dim;
    dimension 1 is the base-2 van der Corput column and needs no entry.
    """

    entries: dict
    max_dim: int

    def __post_init__(self):
        for dim in range(2, self.max_dim + 1):
            if dim not in self.entries:
                raise ValueError(f"direction table missing dimension {dim}")
            s, a, m = self.entries[dim]
            if len(m) != s:
                raise ValueError(f"dimension {dim}: expected {s} direction integers, got {len(m)}")
            if a < 0 or a >= 1 << max(s - 1, 1):
                raise ValueError(f"dimension {dim}: coefficient bits {a} out of range for degree {s}")
            for j, mj in enumerate(m, start=1):
                if mj % 2 == 0 or not 0 < mj < 1 << j:
                    raise ValueError(f"dimension {dim}: m_{j}={mj} must be odd and < 2^{j}")

    @classmethod
    def from_file(cls, path) -> "SobolDirectionTable":
        entries = {}
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines:
            raise ValueError(f"{path}: empty direction-number file")
        if not lines[0][0].isdigit():
            lines = lines[1:]  # header row
        for ln in lines:
            parts = ln.split()
            try:
                vals = [int(p) for p in parts]
            except ValueError as exc:
                raise ValueError(f"{path}: non-integer field in line {ln!r}") from exc
            if len(vals) < 4:
                raise ValueError(f"{path}: short line {ln!r}")
            dim, s, a, m = vals[0], vals[1], vals[2], vals[3:]
            if len(m) != s:
                raise ValueError(f"{path}: dimension {dim} declares s={s} but has {len(m)} m values")
            if dim in entries:
                raise ValueError(f"{path}: duplicate dimension {dim}")
            entries[dim] = (s, a, tuple(m))
        return cls(entries=entries, max_dim=max(entries))

    @classmethod
    @functools.lru_cache(maxsize=1)
    def bundled(cls) -> "SobolDirectionTable":
        """Table shipped with the package (dimensions 2..21)."""
        ref = importlib.resources.files("lowdisc") / "data" / "sobol_direction_numbers.txt"
        with importlib.resources.as_file(ref) as path:
            return cls.from_file(path)

    def direction_vectors(self, d: int, bits: int = SOBOL_BITS) -> np.ndarray:
        """(d, bits) uint64 matrix; column j-1 holds V_j = m_j << (bits - j)."""
        if d > self.max_dim:
            raise ValueError(f"dimension {d} exceeds table maximum {self.max_dim}")
        v = np.zeros((d, bits), dtype=np.uint64)
        # dimension 1: van der Corput, all m_j = 1
        for j in range(1, bits + 1):
            v[0, j - 1] = 1 << (bits - j)
        for dim in range(2, d + 1):
            s, a, m_init = self.entries[dim]
            m = list(m_init)
            for j in range(s + 1, bits + 1):
                mj = m[j - s - 1] ^ (m[j - s - 1] << s)
                for t in range(1, s):
                    if (a >> (s - 1 - t)) & 1:
                        mj ^= m[j - t - 1] << t
                m.append(mj)
            for j in range(1, bits + 1):
                v[dim - 1, j - 1] = m[j - 1] << (bits - j)
        return v


def sobol(n: int, d: int, start: int = 1, table: SobolDirectionTable | None = None) -> PointSet:
    """n Sobol points at indices start .. start+n-1 (1-based, 0 skipped).

    Gray-code construction: the point at index i is the XOR of direction
    vectors selected by the set bits of i ^ (i >> 1), scaled by 2^-52.
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if start < 1:
        raise ValueError(f"start index must be >= 1, got {start}")
    if table is None:
        table = SobolDirectionTable.bundled()
    if start + n - 1 >= 1 << SOBOL_BITS:
        raise ValueError(f"index range exceeds 2^{SOBOL_BITS} - 1")
    v = table.direction_vectors(d)
    idx = np.arange(start, start + n, dtype=np.uint64)
    gray = idx ^ (idx >> np.uint64(1))
    acc = np.zeros((n, d), dtype=np.uint64)
    for j in range(SOBOL_BITS):
        sel = (gray >> np.uint64(j)) & np.uint64(1) == 1
        if sel.any():
            acc[sel] ^= v[:, j]
    coords = acc.astype(np.float64) * 2.0**-SOBOL_BITS
    return PointSet(coords, provenance=f"sobol n={n} d={d} start={start}")


@dataclass(frozen=True)
class SequenceCursor:
    """Position in a deterministic sequence; ``take`` returns the next slice.

    Value type: taking returns a fresh cursor, the original is unchanged.
    """

    kind: str
    d: int
    next_index: int = 1

    def __post_init__(self):
        if self.kind not in ("halton", "sobol"):
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.next_index < 1:
            raise ValueError(f"next index must be >= 1, got {self.next_index}")

    def take(self, n: int) -> tuple[PointSet, "SequenceCursor"]:
        gen = halton if self.kind == "halton" else sobol
        ps = gen(n, self.d, start=self.next_index)
        return ps, replace(self, next_index=self.next_index + n)
