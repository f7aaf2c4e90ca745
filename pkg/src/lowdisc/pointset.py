"""Point sets on the unit hypercube: construction, transforms, and file I/O.

A :class:`PointSet` is the currency passed between the generators, the
discrepancy metrics, and the planner.  Coordinates are 64-bit floats in
[0, 1] and immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PointSet",
    "BoundsBox",
    "PointSetFormatError",
    "sample_uniform",
    "sukharev_grid",
    "project",
    "greedy_reorder",
    "scale_to_bounds",
    "unscale_from_bounds",
    "format_points",
    "save_points",
    "load_points",
]

# Largest grid the sukharev constructor will materialize (memory guard).
MAX_GRID_POINTS = 1 << 24


class PointSetFormatError(ValueError):
    """Raised when a point-set file violates the documented format."""


@dataclass(frozen=True, eq=False)
class PointSet:
    """n points in [0,1]^d, stored as a read-only (n, d) float64 matrix."""

    coords: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(self.coords, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"coords must be 2-D, got shape {arr.shape}")
        n, d = arr.shape
        if n < 1 or d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if not np.isfinite(arr).all():
            raise ValueError("coords contain non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("coords must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def __repr__(self):
        tag = f", provenance={self.provenance!r}" if self.provenance else ""
        return f"PointSet(n={self.n}, d={self.d}{tag})"


@dataclass(frozen=True)
class BoundsBox:
    """Axis-aligned box with strictly increasing per-axis bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-D vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError("require lower[k] < upper[k] for every axis")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def extent(self) -> np.ndarray:
        return self.upper - self.lower

    @classmethod
    def unit(cls, d: int) -> "BoundsBox":
        return cls(np.zeros(d), np.ones(d))


def sample_uniform(n: int, d: int, seed: int) -> PointSet:
    """Draw n i.i.d. points uniformly from [0,1)^d.

    The generator is numpy's Philox (4x64 counter-based bit generator)
    keyed through ``SeedSequence(seed)``; doubles come from the standard
    53-bit conversion, so results are identical across platforms.
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return PointSet(rng.random((n, d)), provenance=f"uniform n={n} d={d} seed={seed}")


def sukharev_grid(k: int, d: int) -> PointSet:
    """Cell-centered grid: one point at the center of each of the k^d cells."""
    if k < 1 or d < 1:
        raise ValueError(f"need k >= 1 and d >= 1, got k={k}, d={d}")
    total = k**d
    if total > MAX_GRID_POINTS:
        raise ValueError(f"grid of k^d = {total} points exceeds limit {MAX_GRID_POINTS}")
    axis = (np.arange(k) + 0.5) / k
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=1)
    return PointSet(coords, provenance=f"sukharev k={k} d={d}")


def project(ps: PointSet, dims: list[int]) -> PointSet:
    """Select coordinates ``dims`` (ordered, no duplicates) from each point."""
    dims = list(dims)
    if not dims:
        raise ValueError("projection needs at least one coordinate index")
    if len(set(dims)) != len(dims):
        raise ValueError(f"duplicate indices in projection: {dims}")
    for i in dims:
        if not 0 <= i < ps.d:
            raise IndexError(f"projection index {i} out of range for d={ps.d}")
    return PointSet(ps.coords[:, dims], provenance=ps.provenance)


def _warnock_pair_matrix(coords: np.ndarray) -> np.ndarray:
    """B[i,j] = prod_k (1 - max(x_ik, x_jk)); the pairwise Warnock kernel."""
    n, d = coords.shape
    out = np.ones((n, n))
    for k in range(d):
        col = coords[:, k]
        out *= 1.0 - np.maximum.outer(col, col)
    return out


def _warnock_single_terms(coords: np.ndarray) -> np.ndarray:
    """A[i] = prod_k (1 - x_ik^2) / 2; the single-point Warnock kernel."""
    return np.prod((1.0 - coords**2) / 2.0, axis=1)


def greedy_reorder(ps: PointSet) -> PointSet:
    """Reorder points so every prefix is a greedily discrepancy-minimal set.

    Starts from the single point with the smallest squared L2 star
    discrepancy, then repeatedly appends the remaining point that minimizes
    the squared L2 discrepancy of the extended prefix.  Ties break toward
    the lowest original index.  Runs in O(n^2 d) using incremental updates
    of the closed-form sums.
    """
    coords = ps.coords
    n, d = coords.shape
    if n == 1:
        return PointSet(coords, provenance=ps.provenance)

    a = _warnock_single_terms(coords)
    b = _warnock_pair_matrix(coords)
    const = 3.0**-d

    remaining = np.ones(n, dtype=bool)
    order: list[int] = []
    sum_a = 0.0  # sum of A over chosen prefix
    sum_b = 0.0  # sum of B over all ordered prefix pairs
    cross = np.zeros(n)  # cross[c] = sum_{i in prefix} B[i, c]

    for step in range(n):
        m = step + 1
        cand = np.where(remaining)[0]
        # squared L2 of prefix + candidate c, from cached sums
        new_sum_a = sum_a + a[cand]
        new_sum_b = sum_b + 2.0 * cross[cand] + b[cand, cand]
        scores = const - (2.0 / m) * new_sum_a + new_sum_b / (m * m)
        pick = cand[int(np.argmin(scores))]  # argmin keeps lowest index on ties
        order.append(pick)
        remaining[pick] = False
        sum_a += a[pick]
        sum_b += 2.0 * cross[pick] + b[pick, pick]
        cross += b[pick]

    return PointSet(coords[order], provenance=f"{ps.provenance} greedy-reordered".strip())


def scale_to_bounds(ps: PointSet, box: BoundsBox) -> np.ndarray:
    """Affine map of unit-cube points into ``box`` coordinates."""
    if box.d != ps.d:
        raise ValueError(f"bounds dimension {box.d} != point dimension {ps.d}")
    return box.lower + ps.coords * box.extent


def unscale_from_bounds(points: np.ndarray, box: BoundsBox) -> np.ndarray:
    """Inverse of :func:`scale_to_bounds`: box coordinates back to [0,1]^d."""
    pts = np.asarray(points, dtype=np.float64)
    return (pts - box.lower) / box.extent


def format_points(ps: PointSet) -> str:
    """Render the documented text format: comments, ``n d`` header, rows.

    Rows use 17 significant digits so a save/load round trip is bit-exact.
    """
    lines = []
    for chunk in ps.provenance.splitlines():
        lines.append(f"# {chunk}")
    lines.append(f"{ps.n} {ps.d}")
    for row in ps.coords:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def save_points(ps: PointSet, path) -> None:
    """Write :func:`format_points` output to ``path``."""
    with open(path, "w") as fh:
        fh.write(format_points(ps))


def load_points(path) -> PointSet:
    """Read a point-set file, enforcing the header and the [0,1] invariant."""
    comments: list[str] = []
    data_lines: list[str] = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
            else:
                data_lines.append(line)
    if not data_lines:
        raise PointSetFormatError(f"{path}: no header line")
    header = data_lines[0].split()
    if len(header) != 2:
        raise PointSetFormatError(f"{path}: header must be 'n d', got {data_lines[0]!r}")
    try:
        n, d = int(header[0]), int(header[1])
    except ValueError as exc:
        raise PointSetFormatError(f"{path}: non-integer header {data_lines[0]!r}") from exc
    rows = data_lines[1:]
    if len(rows) != n:
        raise PointSetFormatError(f"{path}: header says n={n} but found {len(rows)} rows")
    coords = np.empty((n, d))
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != d:
            raise PointSetFormatError(f"{path}: row {i + 1} has {len(parts)} values, expected {d}")
        try:
            coords[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise PointSetFormatError(f"{path}: row {i + 1} has a non-numeric value") from exc
    if not np.isfinite(coords).all() or coords.min() < 0.0 or coords.max() > 1.0:
        raise PointSetFormatError(f"{path}: coordinates outside [0, 1]")
    try:
        return PointSet(coords, provenance="\n".join(comments))
    except ValueError as exc:
        raise PointSetFormatError(f"{path}: {exc}") from exc
