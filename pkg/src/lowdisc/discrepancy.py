"""Uniformity measures: Warnock L2, Hickernell L2, exact star discrepancy,
l-infinity dispersion, and the theory-driven connection radius.

Closed forms are O(N^2 d) with a fixed reduction order (outer sums via
``math.fsum``), so values are bitwise reproducible and independent of any
thread count.  Each closed form ships with an independent brute-force
oracle used by the test suite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from lowdisc.pointset import PointSet, project

__all__ = [
    "DiscrepancyValue",
    "McEstimate",
    "RadiusRule",
    "l2_warnock",
    "l2_bruteforce_mc",
    "hickernell_l2",
    "hickernell_bruteforce",
    "star_discrepancy_exact",
    "star_discrepancy_lower_bound",
    "dispersion_linf",
    "sukharev_dispersion",
    "theory_radius",
]

# Enumeration guards.
HICKERNELL_BRUTEFORCE_MAX_D = 12
STAR_EXACT_MAX_D = 3
STAR_EXACT_MAX_N = 512
DISPERSION_MAX_CELLS = 1 << 24

_PAIR_CHUNK = 256  # rows per block in the O(N^2) kernels


@dataclass(frozen=True)
class DiscrepancyValue:
    """A metric value with its kind and how it was obtained.

    ``value`` is on the natural scale of the metric (root scale for the L2
    kinds); ``squared`` carries the squared value where that is the quantity
    the closed forms produce.  ``exactness`` is one of ``closed-form``,
    ``exact``, or ``lower-bound``.
    """

    metric: str
    value: float
    exactness: str
    squared: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.metric not in ("L2", "HickernellL2", "StarLinf", "DispersionLinf"):
            raise ValueError(f"unknown metric kind {self.metric!r}")
        if self.exactness not in ("closed-form", "exact", "lower-bound"):
            raise ValueError(f"unknown exactness {self.exactness!r}")
        if not self.value >= 0.0:
            raise ValueError(f"metric value must be >= 0, got {self.value}")
        if self.metric in ("L2", "HickernellL2") and not math.isfinite(self.value):
            raise ValueError("L2-type metric value must be finite")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate with standard error (None when m = 1)."""

    estimate: float
    stderr: float | None
    samples: int


def _warnock_pair_sum(coords: np.ndarray) -> float:
    """Sum over all ordered pairs (i,j) of prod_k (1 - max(X_ik, X_jk))."""
    n = coords.shape[0]
    row_sums = []
    for lo in range(0, n, _PAIR_CHUNK):
        hi = min(lo + _PAIR_CHUNK, n)
        block = np.ones((hi - lo, n))
        for k in range(coords.shape[1]):
            col = coords[:, k]
            block *= 1.0 - np.maximum(col[lo:hi, None], col[None, :])
        row_sums.extend(block.sum(axis=1))
    return math.fsum(row_sums)


def warnock_l2_sq(coords: np.ndarray) -> float:
    """Squared L2 star discrepancy by Warnock's closed form."""
    n, d = coords.shape
    term1 = 3.0**-d
    singles = np.prod((1.0 - coords**2) / 2.0, axis=1)
    term2 = (2.0 / n) * math.fsum(singles)
    term3 = _warnock_pair_sum(coords) / (n * n)
    return term1 - term2 + term3


def l2_warnock(ps: PointSet) -> DiscrepancyValue:
    """L2 star discrepancy via Warnock's formula; O(N^2 d)."""
    sq = warnock_l2_sq(ps.coords)
    return DiscrepancyValue(
        metric="L2", value=math.sqrt(max(sq, 0.0)), exactness="closed-form", squared=sq
    )


def l2_bruteforce_mc(ps: PointSet, m: int, seed: int) -> McEstimate:
    """Monte Carlo estimate of the squared L2 star discrepancy.

    Samples x uniformly, counts points in the half-open box [0, x) (strict
    inequality per coordinate), and averages the squared local discrepancy.
    Independent of the closed form; used as its oracle.
    """
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    coords = ps.coords
    n = ps.n
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    chunk = 4096
    sums: list[float] = []
    sq_sums: list[float] = []
    left = m
    while left > 0:
        c = min(chunk, left)
        x = rng.random((c, ps.d))
        inside = (coords[None, :, :] < x[:, None, :]).all(axis=2).sum(axis=1)
        local = inside / n - np.prod(x, axis=1)
        local_sq = local * local
        sums.append(float(local_sq.sum()))
        sq_sums.append(float((local_sq * local_sq).sum()))
        left -= c
    mean = math.fsum(sums) / m
    if m == 1:
        return McEstimate(estimate=mean, stderr=None, samples=1)
    var = (math.fsum(sq_sums) - m * mean * mean) / (m - 1)
    return McEstimate(estimate=mean, stderr=math.sqrt(max(var, 0.0) / m), samples=m)


def hickernell_l2_sq(coords: np.ndarray) -> float:
    """Squared Hickernell L2 discrepancy (all-projection sum) closed form."""
    n, d = coords.shape
    term1 = (4.0 / 3.0) ** d
    singles = np.prod(1.5 - coords**2 / 2.0, axis=1)
    term2 = (2.0 / n) * math.fsum(singles)
    row_sums = []
    for lo in range(0, n, _PAIR_CHUNK):
        hi = min(lo + _PAIR_CHUNK, n)
        block = np.ones((hi - lo, n))
        for k in range(d):
            col = coords[:, k]
            block *= 2.0 - np.maximum(col[lo:hi, None], col[None, :])
        row_sums.extend(block.sum(axis=1))
    term3 = math.fsum(row_sums) / (n * n)
    return term1 - term2 + term3


def hickernell_l2(ps: PointSet) -> DiscrepancyValue:
    """Hickernell L2 discrepancy closed form; O(N^2 d).

    Equals the sum of squared Warnock discrepancies over every nonempty
    coordinate projection, evaluated without enumerating the 2^d - 1 subsets.
    """
    sq = hickernell_l2_sq(ps.coords)
    return DiscrepancyValue(
        metric="HickernellL2", value=math.sqrt(max(sq, 0.0)), exactness="closed-form", squared=sq
    )


def hickernell_bruteforce(ps: PointSet) -> DiscrepancyValue:
    """Projection-sum oracle for :func:`hickernell_l2`; exponential in d."""
    if ps.d > HICKERNELL_BRUTEFORCE_MAX_D:
        raise ValueError(
            f"d={ps.d} would enumerate {2**ps.d - 1} projections; "
            f"guard is d <= {HICKERNELL_BRUTEFORCE_MAX_D}"
        )
    parts = []
    for r in range(1, ps.d + 1):
        for subset in itertools.combinations(range(ps.d), r):
            parts.append(warnock_l2_sq(project(ps, list(subset)).coords))
    sq = math.fsum(parts)
    return DiscrepancyValue(
        metric="HickernellL2", value=math.sqrt(max(sq, 0.0)), exactness="closed-form", squared=sq
    )


def _star_candidates(coords: np.ndarray, axis: int) -> np.ndarray:
    return np.unique(np.append(coords[:, axis], 1.0))


def star_discrepancy_exact(ps: PointSet) -> DiscrepancyValue:
    """Exact L-infinity star discrepancy by critical-corner enumeration.

    Candidate upper corners take each coordinate from the per-axis point
    values augmented with 1.0.  At a corner y both counts matter: the open
    count (all coordinates strictly below y) bounds the supremum from boxes
    shrinking onto y, the closed count (<=) from boxes growing onto y.
    Guarded to d <= 3, N <= 512; larger instances are refused and the caller
    falls back to :func:`star_discrepancy_lower_bound`.
    """
    n, d = ps.n, ps.d
    if d > STAR_EXACT_MAX_D or n > STAR_EXACT_MAX_N:
        raise ValueError(
            f"exact enumeration guarded to d <= {STAR_EXACT_MAX_D}, n <= {STAR_EXACT_MAX_N}; "
            f"got d={d}, n={n}"
        )
    # Pad to 3 axes with zero coordinates and a single candidate 1.0: the
    # padded axis contributes factor 1 to volumes and admits every point.
    coords = np.zeros((n, 3))
    coords[:, :d] = ps.coords
    cands = [_star_candidates(ps.coords, a) for a in range(d)]
    cands += [np.array([1.0])] * (3 - d)
    c1, c2, c3 = cands
    g1, g2, g3 = len(c1), len(c2), len(c3)

    # Per-point candidate ranks: entry index at which the point starts
    # counting.  open: first candidate strictly above the coordinate;
    # closed: first candidate at or above it.
    r_open = [np.searchsorted(cands[a], coords[:, a], side="right") for a in range(3)]
    r_closed = [np.searchsorted(cands[a], coords[:, a], side="left") for a in range(3)]

    h_open = np.zeros((g2, g3))
    h_closed = np.zeros((g2, g3))
    # Points enter the axis-1 slab at their rank; bucket them by it.
    order_open = np.argsort(r_open[0], kind="stable")
    order_closed = np.argsort(r_closed[0], kind="stable")
    io = ic = 0
    vol23 = np.outer(c2, c3)
    best = 0.0
    for i1 in range(g1):
        while io < n and r_open[0][order_open[io]] <= i1:
            p = order_open[io]
            h_open[r_open[1][p], r_open[2][p]] += 1.0
            io += 1
        while ic < n and r_closed[0][order_closed[ic]] <= i1:
            p = order_closed[ic]
            h_closed[r_closed[1][p], r_closed[2][p]] += 1.0
            ic += 1
        p_open = h_open.cumsum(axis=0).cumsum(axis=1)
        p_closed = h_closed.cumsum(axis=0).cumsum(axis=1)
        vol = c1[i1] * vol23
        best = max(
            best,
            float((vol - p_open / n).max()),
            float((p_closed / n - vol).max()),
        )
    return DiscrepancyValue(metric="StarLinf", value=best, exactness="exact")


def star_discrepancy_lower_bound(ps: PointSet, samples: int = 4096, seed: int = 0) -> DiscrepancyValue:
    """Lower bound on the star discrepancy from randomly sampled corners.

    Corners are drawn from the same candidate grid the exact enumerator
    uses, so every evaluated box is a critical one; the maximum over a
    sample is a valid lower bound in any dimension.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    coords = ps.coords
    n, d = coords.shape
    cands = [_star_candidates(coords, a) for a in range(d)]
    corners = np.stack(
        [c[rng.integers(0, len(c), size=samples)] for c in cands], axis=1
    )
    vols = np.prod(corners, axis=1)
    best = 0.0
    for s in range(samples):
        y = corners[s]
        a_open = int((coords < y).all(axis=1).sum())
        a_closed = int((coords <= y).all(axis=1).sum())
        best = max(best, vols[s] - a_open / n, a_closed / n - vols[s])
    return DiscrepancyValue(metric="StarLinf", value=max(best, 0.0), exactness="lower-bound")


def dispersion_linf(ps: PointSet, resolution: int = 32) -> DiscrepancyValue:
    """Lower bound on l-infinity dispersion over a cell-centered grid.

    Evaluates the distance to the nearest point at every center (m+0.5)/R
    and reports the maximum.  The true dispersion exceeds this by at most
    1/(2R) (the min-distance function is 1-Lipschitz in the l-infinity
    norm); the slack is recorded in the note.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    cells = resolution**ps.d
    if cells > DISPERSION_MAX_CELLS:
        raise ValueError(
            f"{resolution}^{ps.d} = {cells} evaluation cells exceed limit {DISPERSION_MAX_CELLS}"
        )
    coords = ps.coords
    axis = (np.arange(resolution) + 0.5) / resolution
    best = 0.0
    chunk = max(1, (1 << 22) // max(ps.n, 1))
    mesh = np.meshgrid(*([axis] * ps.d), indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    for lo in range(0, cells, chunk):
        blk = centers[lo : lo + chunk]
        dist = np.zeros((blk.shape[0], ps.n))
        for k in range(ps.d):
            np.maximum(dist, np.abs(blk[:, k, None] - coords[None, :, k]), out=dist)
        best = max(best, float(dist.min(axis=1).max()))
    return DiscrepancyValue(
        metric="DispersionLinf",
        value=best,
        exactness="lower-bound",
        note=f"grid resolution {resolution}; true value <= bound + {1.0 / (2 * resolution):g}",
    )


def sukharev_dispersion(k: int) -> DiscrepancyValue:
    """Exact l-infinity dispersion of the k-per-axis cell-centered grid: 1/(2k)."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    return DiscrepancyValue(
        metric="DispersionLinf", value=1.0 / (2 * k), exactness="exact",
        note="analytic value for a cell-centered grid",
    )


@dataclass(frozen=True)
class RadiusRule:
    """Connection radius r = 2 * alpha * sqrt(d) * linf^(1/d) with its assumptions."""

    alpha: float
    d: int
    linf_disc: float
    radius: float
    note: str

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if not self.radius > 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")


def theory_radius(linf_disc: float, alpha: float, d: int) -> RadiusRule:
    """Connection radius giving the bounded-suboptimality guarantee.

    Valid when the problem admits a path with positive clearance delta; the
    resulting path cost is within a factor 1/(alpha-1) of that path's cost.
    """
    if not alpha > 1.0:
        raise ValueError(f"alpha must exceed 1 for a non-vacuous guarantee, got {alpha}")
    if not 0.0 < linf_disc <= 1.0:
        raise ValueError(f"star discrepancy must lie in (0, 1], got {linf_disc}")
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    radius = 2.0 * alpha * math.sqrt(d) * linf_disc ** (1.0 / d)
    return RadiusRule(
        alpha=alpha,
        d=d,
        linf_disc=linf_disc,
        radius=radius,
        note=(
            "assumes a solution path with positive clearance delta; "
            f"path cost bounded within factor 1/(alpha-1) = {1.0 / (alpha - 1.0):g} of it"
        ),
    )
