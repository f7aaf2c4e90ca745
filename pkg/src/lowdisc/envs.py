"""Planning environments behind one validity-oracle interface.

Three families: a 2-D occupancy-grid maze with a disk robot, a d-dimensional
hypercube-corridor, and a planar kinematic chain in a segment world.  All are
immutable after construction; validity queries are pure and vectorized.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from lowdisc.pointset import BoundsBox

__all__ = [
    "Environment",
    "MazeEnv",
    "CorridorEnv",
    "ChainEnv",
    "maze_load",
    "corridor_is_valid",
    "corridor_env",
    "chain_fk",
    "chain_is_valid",
    "segment_intersect",
    "load_environment",
]


class Environment:
    """A planning problem: dimension, bounds, validity, segment validity.

    Subclasses set ``d``, ``bounds``, ``start``, ``goal``, ``resolution``
    (the default edge-subdivision step in environment coordinates) and
    implement ``is_valid_batch``.
    """

    d: int
    bounds: BoundsBox
    start: np.ndarray
    goal: np.ndarray
    resolution: float

    def is_valid_batch(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def is_valid(self, q) -> bool:
        return bool(self.is_valid_batch(np.asarray(q, dtype=np.float64)[None, :])[0])

    def segment_points(self, q1, q2, resolution: float | None = None) -> np.ndarray:
        """Subdivision points of [q1, q2] at steps <= resolution, endpoints included.

        The step count is the smallest power of two that honors the
        resolution, so halving the resolution exactly doubles the steps and
        the coarser grid is a subset of the finer one (finer checks can only
        reject more).
        """
        q1 = np.asarray(q1, dtype=np.float64)
        q2 = np.asarray(q2, dtype=np.float64)
        res = self.resolution if resolution is None else resolution
        length = float(np.linalg.norm(q2 - q1))
        steps = 1 << max(0, math.ceil(math.log2(length / res))) if length > res else 1
        t = np.linspace(0.0, 1.0, steps + 1)
        return q1[None, :] + t[:, None] * (q2 - q1)[None, :]

    def segment_valid(self, q1, q2, resolution: float | None = None) -> bool:
        """True iff every subdivision point of the segment is valid.

        segment_valid(q, q) reduces to is_valid(q).
        """
        return bool(self.is_valid_batch(self.segment_points(q1, q2, resolution)).all())


# ---------------------------------------------------------------------------
# maze

_PGM_MAGIC = (b"P2", b"P5")


def _read_pgm(path) -> np.ndarray:
    """Parse a plain (P2) or binary (P5) graymap into a (H, W) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    # header tokens may be interleaved with '#' comments
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated graymap header")
        tokens.append(data[start:pos])
    magic = tokens[0]
    if magic not in _PGM_MAGIC:
        raise ValueError(f"{path}: not a P2/P5 graymap (magic {magic!r})")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer graymap header") from exc
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad graymap dimensions {width}x{height} maxval {maxval}")
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
        if raster.size != width * height:
            raise ValueError(f"{path}: truncated raster")
    else:
        values = data[pos:].split()
        if len(values) != width * height:
            raise ValueError(f"{path}: expected {width * height} pixels, found {len(values)}")
        raster = np.array([int(v) for v in values], dtype=np.uint16)
    return raster.reshape(height, width).astype(np.uint8)


@dataclass
class MazeEnv(Environment):
    """Occupancy-grid maze with a disk robot.

    Pixel (col i, row j) covers the box [i, i+1) x [j, j+1); gray value
    >= 128 is free.  A configuration (x, y) in pixel coordinates is valid
    iff the whole grid rectangle contains the disk and no obstacle pixel
    box lies strictly within ``radius`` of the center (touching is free).
    Planner samples live in the unit square and are scaled to [0,W]x[0,H].
    """

    grid: np.ndarray  # bool, True = obstacle, shape (H, W)
    radius: float
    start: np.ndarray
    goal: np.ndarray
    resolution: float = 1.0  # <= 1 pixel edge steps

    def __post_init__(self):
        self.d = 2
        h, w = self.grid.shape
        self.bounds = BoundsBox(np.zeros(2), np.array([float(w), float(h)]))
        self.grid = self.grid.astype(bool)
        self.grid.flags.writeable = False
        # prefix sums for O(1) window occupancy counts
        ii = np.zeros((h + 1, w + 1), dtype=np.int64)
        np.cumsum(np.cumsum(self.grid, axis=0), axis=1, out=ii[1:, 1:])
        self._integral = ii
        self._win = int(math.floor(self.radius)) + 1
        self.start = np.asarray(self.start, dtype=np.float64)
        self.goal = np.asarray(self.goal, dtype=np.float64)

    def is_valid_batch(self, q: np.ndarray) -> np.ndarray:
        h, w = self.grid.shape
        x, y = q[:, 0], q[:, 1]
        r = self.radius
        ok = (x >= r) & (x <= w - r) & (y >= r) & (y <= h - r)
        if not ok.any():
            return ok
        # conservative window: all pixels closer than r to the center lie
        # within win = floor(r)+1 columns/rows of the center's pixel
        win = self._win
        ci = np.clip(np.floor(x).astype(np.int64), 0, w - 1)
        cj = np.clip(np.floor(y).astype(np.int64), 0, h - 1)
        i1 = np.clip(ci - win, 0, w)
        i2 = np.clip(ci + win + 1, 0, w)
        j1 = np.clip(cj - win, 0, h)
        j2 = np.clip(cj + win + 1, 0, h)
        ii = self._integral
        counts = ii[j2, i2] - ii[j1, i2] - ii[j2, i1] + ii[j1, i1]
        suspect = ok & (counts > 0)
        if suspect.any():
            idx = np.nonzero(suspect)[0]
            ok[idx] &= self._disk_clear(x[idx], y[idx], ci[idx], cj[idx])
        return ok

    def _disk_clear(self, x, y, ci, cj) -> np.ndarray:
        """Exact window check: no obstacle pixel box strictly within radius."""
        h, w = self.grid.shape
        win = self._win
        offs = np.arange(-win, win + 1)
        cols = ci[:, None] + offs[None, :]  # (m, 2w+1)
        rows = cj[:, None] + offs[None, :]
        in_i = (cols >= 0) & (cols < w)
        in_j = (rows >= 0) & (rows < h)
        occ = self.grid[rows.clip(0, h - 1)[:, :, None], cols.clip(0, w - 1)[:, None, :]]
        occ = occ & in_j[:, :, None] & in_i[:, None, :]
        # clamp distance from the center to each pixel box
        dx = np.maximum(np.maximum(cols - x[:, None], x[:, None] - (cols + 1)), 0.0)
        dy = np.maximum(np.maximum(rows - y[:, None], y[:, None] - (rows + 1)), 0.0)
        d2 = dy[:, :, None] ** 2 + dx[:, None, :] ** 2
        hit = occ & (d2 < self.radius**2)
        return ~hit.any(axis=(1, 2))


def maze_load(grid_path, radius: float, start, goal) -> MazeEnv:
    """Load a graymap maze; rejects invalid start or goal configurations."""
    gray = _read_pgm(grid_path)
    env = MazeEnv(
        grid=gray < 128,
        radius=float(radius),
        start=np.asarray(start, dtype=np.float64),
        goal=np.asarray(goal, dtype=np.float64),
    )
    if not env.is_valid(env.start):
        raise ValueError(f"start {start} is not a valid configuration")
    if not env.is_valid(env.goal):
        raise ValueError(f"goal {goal} is not a valid configuration")
    return env


# ---------------------------------------------------------------------------
# corridor


def corridor_is_valid(q: np.ndarray, lam: float) -> bool:
    """Union-of-slabs corridor predicate on the unit cube.

    Valid iff some index k has every earlier coordinate <= lam and every
    later coordinate >= 1 - lam; coordinate k itself is unconstrained.
    """
    q = np.asarray(q, dtype=np.float64)
    return bool(_corridor_valid_batch(q[None, :], lam)[0])


def _corridor_valid_batch(q: np.ndarray, lam: float) -> np.ndarray:
    m, d = q.shape
    low = q <= lam
    high = q >= 1.0 - lam
    # prefix_ok[:, k]: all coordinates before k are <= lam
    prefix_ok = np.ones((m, d), dtype=bool)
    prefix_ok[:, 1:] = np.logical_and.accumulate(low[:, :-1], axis=1)
    # suffix_ok[:, k]: all coordinates after k are >= 1 - lam
    suffix_ok = np.ones((m, d), dtype=bool)
    suffix_ok[:, :-1] = np.logical_and.accumulate(high[:, :0:-1], axis=1)[:, ::-1]
    return (prefix_ok & suffix_ok).any(axis=1)


@dataclass
class CorridorEnv(Environment):
    """Narrow passages along hypercube edges, start and goal at opposite corners."""

    d: int
    lam: float

    def __post_init__(self):
        if not 0.0 < self.lam < 0.5:
            raise ValueError(f"edge width must lie in (0, 0.5), got {self.lam}")
        self.bounds = BoundsBox.unit(self.d)
        self.start = np.full(self.d, self.lam / 2.0)
        self.goal = np.full(self.d, 1.0 - self.lam / 2.0)
        self.resolution = 0.01 * math.sqrt(self.d)  # 1% of the cube diagonal

    def is_valid_batch(self, q: np.ndarray) -> np.ndarray:
        return _corridor_valid_batch(q, self.lam)


def corridor_env(d: int, lam: float) -> CorridorEnv:
    return CorridorEnv(d=d, lam=lam)


# ---------------------------------------------------------------------------
# chain


# Two segments closer than this (environment units) count as touching;
# keeps exactly-folded chains detected despite sin/cos rounding.
SEGMENT_TOUCH_TOL = 1e-9


def segment_intersect(p1, p2, q1, q2) -> bool:
    """Closed 2-D segments share a point (orientation tests, collinear overlap).

    A perpendicular-distance tolerance of ``SEGMENT_TOUCH_TOL`` treats
    nearly-degenerate contact as touching, so collision tests err on the
    conservative side.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    return bool(
        _segments_intersect_batch(
            p1[None], p2[None], q1[None], q2[None]
        )[0]
    )


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (
        a[..., 1] - o[..., 1]
    ) * (b[..., 0] - o[..., 0])


def _orient(a, b, c, tol_dist):
    """-1/0/+1 side of c relative to line ab; |offset| <= tol counts as 0."""
    cross = _cross(a, b, c)
    lim = tol_dist * np.linalg.norm(b - a, axis=-1)
    return np.where(cross > lim, 1, np.where(cross < -lim, -1, 0))


def _on_segment(p, q, r, tol):
    """r lies within the bounding box of segment pq, expanded by tol."""
    return (
        (r[..., 0] <= np.maximum(p[..., 0], q[..., 0]) + tol)
        & (r[..., 0] >= np.minimum(p[..., 0], q[..., 0]) - tol)
        & (r[..., 1] <= np.maximum(p[..., 1], q[..., 1]) + tol)
        & (r[..., 1] >= np.minimum(p[..., 1], q[..., 1]) - tol)
    )


def _segments_intersect_batch(p1, p2, q1, q2, tol: float = SEGMENT_TOUCH_TOL) -> np.ndarray:
    """Vectorized closed-segment intersection over leading broadcast dims."""
    d1 = _orient(q1, q2, p1, tol)
    d2 = _orient(q1, q2, p2, tol)
    d3 = _orient(p1, p2, q1, tol)
    d4 = _orient(p1, p2, q2, tol)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    touch = (
        ((d1 == 0) & _on_segment(q1, q2, p1, tol))
        | ((d2 == 0) & _on_segment(q1, q2, p2, tol))
        | ((d3 == 0) & _on_segment(p1, p2, q1, tol))
        | ((d4 == 0) & _on_segment(p1, p2, q2, tol))
    )
    return proper | touch


@dataclass
class ChainEnv(Environment):
    """Planar chain of equal links among segment obstacles.

    Configurations are joint angles; heading of link j is the cumulative sum
    of the first j angles.  Valid iff no link touches an obstacle segment
    and no two non-adjacent links touch each other.  Planner samples live
    in the unit cube and are scaled to the joint bounds.
    """

    n_links: int
    link_length: float
    base: np.ndarray
    joint_low: float
    joint_high: float
    obstacles: np.ndarray  # (n_obs, 2, 2) segment endpoints
    start: np.ndarray
    goal: np.ndarray

    def __post_init__(self):
        if self.n_links < 2:
            raise ValueError(f"need at least 2 links, got {self.n_links}")
        self.d = self.n_links
        self.base = np.asarray(self.base, dtype=np.float64)
        self.obstacles = np.asarray(self.obstacles, dtype=np.float64).reshape(-1, 2, 2)
        if not np.isfinite(self.obstacles).all():
            raise ValueError("obstacle coordinates must be finite")
        self.start = np.asarray(self.start, dtype=np.float64)
        self.goal = np.asarray(self.goal, dtype=np.float64)
        lo = np.full(self.d, self.joint_low)
        hi = np.full(self.d, self.joint_high)
        self.bounds = BoundsBox(lo, hi)
        self.resolution = 0.01 * float(np.linalg.norm(hi - lo))
        # non-adjacent link index pairs for the self-collision test
        self._pairs = np.array(
            [(i, j) for i in range(self.n_links) for j in range(i + 2, self.n_links)]
        )
        if not self.is_valid(self.start):
            raise ValueError("start configuration is in collision")
        if not self.is_valid(self.goal):
            raise ValueError("goal configuration is in collision")

    def _joints(self, thetas: np.ndarray) -> np.ndarray:
        """(m, n_links+1, 2) joint positions for a batch of configurations."""
        headings = np.cumsum(thetas, axis=1)
        steps = self.link_length * np.stack([np.cos(headings), np.sin(headings)], axis=2)
        joints = np.zeros((thetas.shape[0], self.n_links + 1, 2))
        joints[:, 0] = self.base
        joints[:, 1:] = self.base + np.cumsum(steps, axis=1)
        return joints

    def is_valid_batch(self, q: np.ndarray) -> np.ndarray:
        joints = self._joints(q)
        a = joints[:, :-1]  # (m, L, 2) link starts
        b = joints[:, 1:]
        ok = np.ones(q.shape[0], dtype=bool)
        if self.obstacles.size:
            o1 = self.obstacles[None, :, 0]
            o2 = self.obstacles[None, :, 1]
            hit = _segments_intersect_batch(
                a[:, :, None], b[:, :, None], o1[:, None], o2[:, None]
            )
            ok &= ~hit.any(axis=(1, 2))
        if len(self._pairs):
            i, j = self._pairs[:, 0], self._pairs[:, 1]
            hit = _segments_intersect_batch(a[:, i], b[:, i], a[:, j], b[:, j])
            ok &= ~hit.any(axis=1)
        return ok


def chain_fk(theta, n_links: int | None = None, link_length: float | None = None, base=(0.0, 0.0)):
    """Forward kinematics: list of (start, end) 2-D link segments.

    Link j heads along the cumulative angle sum through joint j; defaults are
    one unit of total length split evenly.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n = len(theta) if n_links is None else n_links
    if len(theta) != n:
        raise ValueError(f"expected {n} joint angles, got {len(theta)}")
    length = (1.0 / n) if link_length is None else link_length
    headings = np.cumsum(theta)
    steps = length * np.stack([np.cos(headings), np.sin(headings)], axis=1)
    joints = np.vstack([np.asarray(base, dtype=np.float64), np.asarray(base) + np.cumsum(steps, axis=0)])
    return [(joints[i].copy(), joints[i + 1].copy()) for i in range(n)]


def chain_is_valid(theta, env: ChainEnv) -> bool:
    """Collision predicate for one configuration of ``env``."""
    theta = np.asarray(theta, dtype=np.float64)
    if len(theta) != env.n_links:
        raise ValueError(f"expected {env.n_links} joint angles, got {len(theta)}")
    return env.is_valid(theta)


# ---------------------------------------------------------------------------
# descriptor files


def load_environment(path) -> Environment:
    """Build an environment from a JSON descriptor.

    Schemas (see README for the full field list):
      corridor: {"kind": "corridor", "d": int, "lambda": float}
      maze:     {"kind": "maze", "grid": relpath, "radius": float,
                 "start": [x, y], "goal": [x, y]}
      chain:    {"kind": "chain", "n_links": int, "link_length": float,
                 "base": [x, y], "joint_bounds": [lo, hi],
                 "obstacles": [[[x,y],[x,y]], ...],
                 "start": [...], "goal": [...]}
    Relative grid paths resolve against the descriptor's directory.
    """
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from exc
    kind = spec.get("kind")
    if kind == "corridor":
        return corridor_env(int(spec["d"]), float(spec["lambda"]))
    if kind == "maze":
        grid = spec["grid"]
        if not os.path.isabs(grid):
            grid = os.path.join(os.path.dirname(os.path.abspath(path)), grid)
        return maze_load(grid, float(spec["radius"]), spec["start"], spec["goal"])
    if kind == "chain":
        lo, hi = spec["joint_bounds"]
        return ChainEnv(
            n_links=int(spec["n_links"]),
            link_length=float(spec["link_length"]),
            base=spec.get("base", [0.0, 0.0]),
            joint_low=float(lo),
            joint_high=float(hi),
            obstacles=np.asarray(spec.get("obstacles", []), dtype=np.float64),
            start=spec["start"],
            goal=spec["goal"],
        )
    raise ValueError(f"{path}: unknown environment kind {kind!r}")
