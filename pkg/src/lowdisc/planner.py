"""Pre-sampled probabilistic roadmap planner.

Pipeline: scale samples into the environment, prune invalid ones, connect
nearby vertices with collision-checked straight edges, then run best-first
search from start to goal.  Connection is by radius or k-nearest, with an
opt-in mode deriving the radius from the sample set's star discrepancy.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from lowdisc.discrepancy import star_discrepancy_exact, theory_radius
from lowdisc.envs import Environment
from lowdisc.pointset import PointSet, scale_to_bounds

__all__ = [
    "ConnectionRule",
    "Roadmap",
    "PlanResult",
    "parse_rule",
    "near",
    "build_roadmap",
    "shortest_path",
    "plan",
]


@dataclass(frozen=True)
class ConnectionRule:
    """How roadmap neighbors are chosen.

    ``radius`` mode connects all pairs within ``radius`` (environment
    units); ``knn`` connects each vertex to its ``k`` nearest (ties toward
    the lower index); ``theory`` derives the radius per sample set from its
    exact star discrepancy with factor ``alpha``, scaled by the largest
    bounds extent.
    """

    mode: str
    radius: float | None = None
    k: int | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.mode == "radius":
            if self.radius is None or not self.radius > 0.0:
                raise ValueError(f"radius mode needs radius > 0, got {self.radius}")
        elif self.mode == "knn":
            if self.k is None or self.k < 1:
                raise ValueError(f"knn mode needs k >= 1, got {self.k}")
        elif self.mode == "theory":
            if self.alpha is None or not self.alpha > 1.0:
                raise ValueError(f"theory mode needs alpha > 1, got {self.alpha}")
        else:
            raise ValueError(f"unknown connection mode {self.mode!r}")


def parse_rule(text: str) -> ConnectionRule:
    """Parse ``radius:R``, ``knn:K``, or ``theory:ALPHA``."""
    head, sep, value = text.partition(":")
    if not sep:
        raise ValueError(f"connection rule {text!r} must look like mode:value")
    converters = {"radius": float, "knn": int, "theory": float}
    if head not in converters:
        raise ValueError(f"unknown connection mode {head!r}")
    try:
        parsed = converters[head](value)
    except ValueError as exc:
        raise ValueError(f"bad value in connection rule {text!r}") from exc
    if head == "radius":
        return ConnectionRule(mode="radius", radius=parsed)
    if head == "knn":
        return ConnectionRule(mode="knn", k=parsed)
    return ConnectionRule(mode="theory", alpha=parsed)


@dataclass
class Roadmap:
    """Vertices (index 0 = start, 1 = goal) and validated weighted edges."""

    vertices: np.ndarray
    adjacency: list
    rule: ConnectionRule
    radius_used: float | None
    n_valid_milestones: int
    validity_checks: int
    edge_checks: int

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def edge_list(self):
        """Unique undirected edges as (i, j, weight), i < j."""
        out = []
        for i, nbrs in enumerate(self.adjacency):
            for j, w in nbrs:
                if i < j:
                    out.append((i, j, w))
        return out


@dataclass
class PlanResult:
    """Outcome of one planning query."""

    success: bool
    path_indices: list[int] = field(default_factory=list)
    path_points: np.ndarray | None = None
    cost: float | None = None
    n_valid_milestones: int = 0
    validity_checks: int = 0
    edge_checks: int = 0
    wall_ms: float = 0.0


def near(vertices: np.ndarray, query_index: int, rule: ConnectionRule) -> np.ndarray:
    """Neighbor indices of one vertex under the rule (query excluded).

    Radius mode: all vertices within Euclidean ``radius`` (inclusive).
    k-nearest: the k closest, distance ties broken by lower index.
    """
    diffs = vertices - vertices[query_index]
    dist = np.sqrt((diffs * diffs).sum(axis=1))
    dist[query_index] = np.inf
    if rule.mode == "radius":
        return np.nonzero(dist <= rule.radius)[0]
    if rule.mode == "knn":
        k = min(rule.k, len(vertices) - 1)
        order = np.lexsort((np.arange(len(vertices)), dist))
        return np.sort(order[:k])
    raise ValueError(f"near() needs a concrete rule, got mode {rule.mode!r}")


def _resolve_radius(rule: ConnectionRule, points: PointSet, env: Environment) -> tuple[ConnectionRule, float | None]:
    """Turn a theory rule into a concrete radius for this sample set."""
    if rule.mode != "theory":
        return rule, rule.radius
    disc = star_discrepancy_exact(points)
    r_unit = theory_radius(disc.value, rule.alpha, points.d).radius
    radius = r_unit * float(env.bounds.extent.max())
    return ConnectionRule(mode="radius", radius=radius), radius


def build_roadmap(env: Environment, points: PointSet, rule: ConnectionRule) -> Roadmap:
    """Scale, prune, connect: the roadmap-construction half of the planner.

    Vertices are start, goal, then the valid samples in their input order.
    Candidate edges come from the rule; each is collision-checked by
    uniform subdivision at the environment's resolution, batched by
    subdivision count so the check order never depends on scheduling.
    Duplicate points are kept; zero-length edges are skipped.
    """
    if points.d != env.d:
        raise ValueError(f"point dimension {points.d} != environment dimension {env.d}")
    concrete, radius_used = _resolve_radius(rule, points, env)
    samples = scale_to_bounds(points, env.bounds)
    valid_mask = env.is_valid_batch(samples)
    validity_checks = points.n
    vertices = np.vstack([env.start[None, :], env.goal[None, :], samples[valid_mask]])
    n_vert = vertices.shape[0]

    # candidate undirected edges
    pairs: set[tuple[int, int]] = set()
    if concrete.mode == "radius":
        d2 = ((vertices[:, None, :] - vertices[None, :, :]) ** 2).sum(axis=2)
        r2 = concrete.radius * concrete.radius
        ii, jj = np.nonzero(np.triu(d2 <= r2, k=1))
        for i, j in zip(ii.tolist(), jj.tolist()):
            if d2[i, j] > 0.0:
                pairs.add((i, j))
    else:
        for i in range(n_vert):
            for j in near(vertices, i, concrete):
                a, b = (i, int(j)) if i < j else (int(j), i)
                if not np.array_equal(vertices[a], vertices[b]):
                    pairs.add((a, b))

    # batch segment checks by subdivision count
    adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n_vert)]
    edge_checks = 0
    buckets: dict[int, list[tuple[int, int, float]]] = {}
    for i, j in sorted(pairs):
        w = float(np.linalg.norm(vertices[i] - vertices[j]))
        # power-of-two step counts, matching Environment.segment_points
        steps = 1 << max(0, math.ceil(math.log2(w / env.resolution))) if w > env.resolution else 1
        buckets.setdefault(steps, []).append((i, j, w))
    for steps, edges in sorted(buckets.items()):
        a = vertices[[e[0] for e in edges]]
        b = vertices[[e[1] for e in edges]]
        t = np.linspace(0.0, 1.0, steps + 1)
        pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
        flat = pts.reshape(-1, env.d)
        ok = env.is_valid_batch(flat).reshape(len(edges), steps + 1).all(axis=1)
        validity_checks += flat.shape[0]
        edge_checks += len(edges)
        for (i, j, w), keep in zip(edges, ok.tolist()):
            if keep:
                adjacency[i].append((j, w))
                adjacency[j].append((i, w))
    return Roadmap(
        vertices=vertices,
        adjacency=adjacency,
        rule=rule,
        radius_used=radius_used,
        n_valid_milestones=n_vert,
        validity_checks=validity_checks,
        edge_checks=edge_checks,
    )


def shortest_path(roadmap: Roadmap) -> PlanResult:
    """Best-first search start (vertex 0) to goal (vertex 1).

    The heuristic is the straight-line distance to the goal, admissible
    because edge weights are Euclidean lengths; the returned cost is optimal.
    Unreachable goal is a failure value, not an error.
    """
    verts = roadmap.vertices
    goal = verts[1]
    n = roadmap.n_vertices
    dist = np.full(n, np.inf)
    dist[0] = 0.0
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=bool)
    h0 = float(np.linalg.norm(verts[0] - goal))
    heap = [(h0, 0.0, 0)]
    while heap:
        f, g, u = heapq.heappop(heap)
        if closed[u]:
            continue
        closed[u] = True
        if u == 1:
            path = []
            v = 1
            while v != -1:
                path.append(v)
                v = int(parent[v])
            path.reverse()
            return PlanResult(
                success=True,
                path_indices=path,
                path_points=verts[path].copy(),
                cost=g,
                n_valid_milestones=roadmap.n_valid_milestones,
                validity_checks=roadmap.validity_checks,
                edge_checks=roadmap.edge_checks,
            )
        for v, w in roadmap.adjacency[u]:
            if closed[v]:
                continue
            cand = g + w
            if cand < dist[v]:
                dist[v] = cand
                parent[v] = u
                h = float(np.linalg.norm(verts[v] - goal))
                heapq.heappush(heap, (cand + h, cand, v))
    return PlanResult(
        success=False,
        n_valid_milestones=roadmap.n_valid_milestones,
        validity_checks=roadmap.validity_checks,
        edge_checks=roadmap.edge_checks,
    )


def plan(env: Environment, sampler, n: int, rule: ConnectionRule, seed: int = 0) -> PlanResult:
    """Sample, build the roadmap, search, and re-validate.

    ``sampler`` is a PointSet (used as-is) or one of ``uniform`` (seeded by
    ``seed``), ``halton``/``sobol`` (``seed`` is the 1-based start index),
    ``grid`` (largest cell-centered grid with at most n points), or
    ``file:PATH``.  Every reported success carries a path re-validated at
    half the environment's edge resolution: path edges that fail the finer
    check are dropped from the roadmap and the search repeats, so a success
    is never reported with a path that the finer check rejects.
    """
    points = _resolve_sampler(sampler, n, env.d, seed)
    t0 = time.perf_counter()
    roadmap = build_roadmap(env, points, rule)
    fine = env.resolution / 2.0
    adjacency = [list(nbrs) for nbrs in roadmap.adjacency]
    roadmap.adjacency = adjacency
    extra_validity = 0
    extra_edges = 0
    while True:
        result = shortest_path(roadmap)
        if not result.success:
            break
        idx = result.path_indices
        pts = result.path_points
        bad = []
        for a in range(len(idx) - 1):
            seg = env.segment_points(pts[a], pts[a + 1], resolution=fine)
            extra_validity += len(seg)
            extra_edges += 1
            if not env.is_valid_batch(seg).all():
                bad.append((idx[a], idx[a + 1]))
        if not bad:
            break
        # lazy re-checking: discard the offending edges, search again
        for u, v in bad:
            adjacency[u] = [(j, w) for j, w in adjacency[u] if j != v]
            adjacency[v] = [(j, w) for j, w in adjacency[v] if j != u]
    result.validity_checks += extra_validity
    result.edge_checks += extra_edges
    result.wall_ms = (time.perf_counter() - t0) * 1000.0
    return result


def _resolve_sampler(sampler, n: int, d: int, seed: int) -> PointSet:
    from lowdisc import qmc
    from lowdisc.pointset import load_points, sample_uniform, sukharev_grid

    if isinstance(sampler, PointSet):
        return sampler
    if sampler == "uniform":
        return sample_uniform(n, d, seed)
    if sampler == "halton":
        return qmc.halton(n, d, start=max(1, seed))
    if sampler == "sobol":
        return qmc.sobol(n, d, start=max(1, seed))
    if sampler == "grid":
        k = max(1, int(math.floor(n ** (1.0 / d) + 1e-9)))
        return sukharev_grid(k, d)
    if isinstance(sampler, str) and sampler.startswith("file:"):
        ps = load_points(sampler[5:])
        if ps.d != d:
            raise ValueError(f"point file dimension {ps.d} != environment dimension {d}")
        return ps
    raise ValueError(f"unknown sampler {sampler!r}")
