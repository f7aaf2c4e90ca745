"""Benchmark harness: samplers x point counts x repeated runs.

Implements the run protocol behind the success-rate tables: uniform runs
get independent per-cell seeds, sequence samplers continue where the
previous run's slice ended, and trained point sets are drawn from a file
pool by a seeded pseudorandom pick.  Emits an append-only CSV plus a
markdown table and charts.
"""

from __future__ import annotations

import csv
import glob
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from lowdisc.envs import load_environment
from lowdisc.planner import parse_rule, plan
from lowdisc.pointset import load_points

__all__ = [
    "SamplerSpec",
    "ExperimentConfig",
    "RunRecord",
    "CellSummary",
    "load_config",
    "run_experiment",
    "write_records",
    "read_records",
    "summarize",
    "render_report",
    "CSV_COLUMNS",
]

CSV_COLUMNS = [
    "experiment",
    "sampler",
    "n",
    "run",
    "success",
    "valid_milestones",
    "cost",
    "validity_checks",
    "edge_checks",
    "wall_ms",
    "seed",
    "edge_resolution",
]


@dataclass(frozen=True)
class SamplerSpec:
    """One sampler column of an experiment.

    ``kind``: uniform | halton | sobol | grid | pool.  Pool samplers draw
    point-set files from ``pool_dir`` matching ``pattern`` (with ``{n}``
    substituted); the member for each run is a seeded pseudorandom pick, so
    reruns are reproducible.
    """

    name: str
    kind: str
    pool_dir: str | None = None
    pattern: str = "n{n}_m*.txt"

    def __post_init__(self):
        if self.kind not in ("uniform", "halton", "sobol", "grid", "pool"):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.kind == "pool" and not self.pool_dir:
            raise ValueError("pool sampler needs pool_dir")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one benchmark sweep."""

    experiment: str
    environment: str
    samplers: tuple
    n_list: tuple
    runs: int = 50
    rule: str = "radius:0.2"
    base_seed: int = 0
    record_time: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError(f"need runs >= 1, got {self.runs}")
        if not self.n_list:
            raise ValueError("n_list must be nonempty")


def load_config(path) -> ExperimentConfig:
    """Read an experiment config (JSON); relative paths resolve against it."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from exc
    base = os.path.dirname(os.path.abspath(path))

    def respath(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    try:
        samplers = tuple(
            SamplerSpec(
                name=s["name"],
                kind=s["kind"],
                pool_dir=respath(s["pool_dir"]) if s.get("pool_dir") else None,
                pattern=s.get("pattern", "n{n}_m*.txt"),
            )
            for s in raw["samplers"]
        )
        return ExperimentConfig(
            experiment=raw["experiment"],
            environment=respath(raw["environment"]),
            samplers=samplers,
            n_list=tuple(int(n) for n in raw["n_list"]),
            runs=int(raw.get("runs", 50)),
            rule=raw.get("rule", "radius:0.2"),
            base_seed=int(raw.get("base_seed", 0)),
            record_time=bool(raw.get("record_time", False)),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing config field {exc}") from exc


@dataclass(frozen=True)
class RunRecord:
    """One benchmark trial; field order matches the CSV schema."""

    experiment: str
    sampler: str
    n: int
    run: int
    success: int
    valid_milestones: int
    cost: float | None
    validity_checks: int
    edge_checks: int
    wall_ms: float
    seed: str
    edge_resolution: float

    def __post_init__(self):
        if self.success and self.cost is None:
            raise ValueError("successful run must carry a cost")
        if self.valid_milestones > self.n + 2:
            raise ValueError(
                f"valid milestones {self.valid_milestones} exceed n + 2 = {self.n + 2}"
            )


def _stable_hash(text: str) -> int:
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


def _pool_files(spec: SamplerSpec, n: int) -> list[str]:
    pattern = os.path.join(spec.pool_dir, spec.pattern.format(n=n))
    files = sorted(glob.glob(pattern))
    if not files:
        raise FileNotFoundError(f"no pool files match {pattern}")
    return files


def _run_cell(env, cfg: ExperimentConfig, spec: SamplerSpec, n: int, run: int) -> RunRecord:
    rule = parse_rule(cfg.rule)
    cell_hash = _stable_hash(f"{spec.name}|{n}|{run}")
    if spec.kind == "uniform":
        seed = cfg.base_seed ^ cell_hash
        result = plan(env, "uniform", n, rule, seed=seed)
        seed_token = f"seed:{seed}"
    elif spec.kind in ("halton", "sobol"):
        start = (run - 1) * n + 1
        result = plan(env, spec.kind, n, rule, seed=start)
        seed_token = f"start:{start}"
    elif spec.kind == "grid":
        result = plan(env, "grid", n, rule)
        seed_token = "grid"
    else:
        files = _pool_files(spec, n)
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(cfg.base_seed ^ cell_hash))
        )
        member = files[int(rng.integers(len(files)))]
        points = load_points(member)
        if points.d != env.d:
            raise ValueError(f"{member}: dimension {points.d} != environment {env.d}")
        if points.n != n:
            raise ValueError(f"{member}: has {points.n} points, cell wants {n}")
        result = plan(env, points, n, rule)
        seed_token = f"member:{os.path.basename(member)}"
    return RunRecord(
        experiment=cfg.experiment,
        sampler=spec.name,
        n=n,
        run=run,
        success=int(result.success),
        valid_milestones=result.n_valid_milestones,
        cost=result.cost if result.success else None,
        validity_checks=result.validity_checks,
        edge_checks=result.edge_checks,
        wall_ms=result.wall_ms if cfg.record_time else 0.0,
        seed=seed_token,
        edge_resolution=env.resolution,
    )


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[RunRecord]:
    """Execute every (sampler, n, run) cell; deterministic record order.

    Cells are independent; with ``threads`` > 1 they run in a thread pool
    and are reassembled in (sampler, n, run) order, so the output is
    identical to the single-threaded run (timing column aside, and that is
    zeroed unless ``record_time`` is set).
    """
    env = load_environment(cfg.environment)
    cells = [
        (spec, n, run)
        for spec in cfg.samplers
        for n in cfg.n_list
        for run in range(1, cfg.runs + 1)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda c: _run_cell(env, cfg, *c), cells))
    else:
        records = [_run_cell(env, cfg, spec, n, run) for spec, n, run in cells]
    return records


# ---------------------------------------------------------------------------
# CSV


def _format_field(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_records(path, records: list[RunRecord]) -> None:
    """Append records to a CSV, creating it with a header when absent.

    An existing file must carry the exact schema header; files are never
    overwritten.
    """
    exists = os.path.exists(path) and os.path.getsize(path) > 0
    if exists:
        with open(path, newline="") as fh:
            header = next(csv.reader(fh), None)
        if header != CSV_COLUMNS:
            raise ValueError(f"{path}: existing header does not match the schema")
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not exists:
            writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_format_field(getattr(rec, col)) for col in CSV_COLUMNS])


def read_records(path) -> list[RunRecord]:
    """Parse a results CSV back into records (round-trips exactly)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_COLUMNS:
            raise ValueError(f"{path}: header does not match the schema")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields")
            vals = dict(zip(CSV_COLUMNS, row))
            try:
                out.append(
                    RunRecord(
                        experiment=vals["experiment"],
                        sampler=vals["sampler"],
                        n=int(vals["n"]),
                        run=int(vals["run"]),
                        success=int(vals["success"]),
                        valid_milestones=int(vals["valid_milestones"]),
                        cost=float(vals["cost"]) if vals["cost"] else None,
                        validity_checks=int(vals["validity_checks"]),
                        edge_checks=int(vals["edge_checks"]),
                        wall_ms=float(vals["wall_ms"]),
                        seed=vals["seed"],
                        edge_resolution=float(vals["edge_resolution"]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# summaries and reports


@dataclass(frozen=True)
class CellSummary:
    """Aggregate of one (experiment, sampler, n) group."""

    experiment: str
    sampler: str
    n: int
    runs: int
    successes: int
    success_rate: float  # percent
    v_mean: float
    v_std: float


def summarize(records: list[RunRecord]) -> list[CellSummary]:
    """Success rate and milestone statistics per cell, canonically sorted."""
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.experiment, rec.sampler, rec.n), []).append(rec)
    out = []
    for (exp, sampler, n), recs in sorted(groups.items()):
        v = np.array([r.valid_milestones for r in recs], dtype=np.float64)
        successes = sum(r.success for r in recs)
        out.append(
            CellSummary(
                experiment=exp,
                sampler=sampler,
                n=n,
                runs=len(recs),
                successes=successes,
                success_rate=100.0 * successes / len(recs),
                v_mean=float(v.mean()),
                v_std=float(v.std(ddof=1)) if len(recs) > 1 else 0.0,
            )
        )
    return out


def _display_orders(records: list[RunRecord]):
    """First-appearance orders for experiments, samplers, and n columns."""
    experiments, samplers, ns = [], [], []
    for rec in records:
        if rec.experiment not in experiments:
            experiments.append(rec.experiment)
        if rec.sampler not in samplers:
            samplers.append(rec.sampler)
        if rec.n not in ns:
            ns.append(rec.n)
    return experiments, samplers, ns


def render_table(records: list[RunRecord]) -> str:
    """Markdown table: one section per experiment, rows = samplers,
    columns = n in first-appearance order, cells = SR% (|V| mean +- std)."""
    summaries = {(s.experiment, s.sampler, s.n): s for s in summarize(records)}
    experiments, samplers, ns = _display_orders(records)
    lines = []
    for exp in experiments:
        lines.append(f"## {exp}")
        lines.append("")
        header = "| sampler | " + " | ".join(f"N={n}" for n in ns) + " |"
        sep = "|---" * (len(ns) + 1) + "|"
        lines.append(header)
        lines.append(sep)
        for sampler in samplers:
            cells = []
            for n in ns:
                s = summaries.get((exp, sampler, n))
                if s is None:
                    cells.append("-")
                else:
                    cells.append(f"{s.success_rate:.0f}% ({s.v_mean:.1f} ± {s.v_std:.1f})")
            if any(c != "-" for c in cells):
                lines.append(f"| {sampler} | " + " | ".join(cells) + " |")
        lines.append("")
    return "\n".join(lines)


def render_report(records: list[RunRecord], out_dir, pngs: bool = True) -> dict:
    """Write table.md and chart.svg (plus PNG figures) under ``out_dir``."""
    from lowdisc import svgchart

    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    table_path = os.path.join(out_dir, "table.md")
    with open(table_path, "w") as fh:
        fh.write(render_table(records) + "\n")
    paths["table"] = table_path
    svg_path = os.path.join(out_dir, "chart.svg")
    with open(svg_path, "w") as fh:
        fh.write(svgchart.success_chart(records))
    paths["chart_svg"] = svg_path
    if pngs:
        from lowdisc import figures

        paths.update(figures.render_pngs(records, out_dir))
    return paths
