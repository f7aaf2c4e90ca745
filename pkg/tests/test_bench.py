"""Benchmark harness: config, cell protocol, CSV, summaries, table, and chart."""

import importlib.resources
import json

import numpy as np
import pytest

from lowdisc.bench import (
    CSV_COLUMNS,
    CellSummary,
    ExperimentConfig,
    RunRecord,
    SamplerSpec,
    load_config,
    read_records,
    render_report,
    run_experiment,
    summarize,
    write_records,
)
from lowdisc.qmc import halton
from lowdisc.svgchart import success_chart

DATA = importlib.resources.files("lowdisc") / "data"


def small_config(**overrides):
    fields = dict(
        experiment="corridor2d-unit",
        environment=str(DATA / "envs" / "corridor2d.json"),
        samplers=(SamplerSpec(name="uniform", kind="uniform"), SamplerSpec(name="halton", kind="halton")),
        n_list=(16,),
        runs=3,
        rule="radius:0.3",
        base_seed=99,
    )
    fields.update(overrides)
    return ExperimentConfig(**fields)


def record(sampler="uniform", n=16, run=1, success=1, milestones=10, cost=1.5, seed="seed:1"):
    return RunRecord(
        experiment="unit",
        sampler=sampler,
        n=n,
        run=run,
        success=success,
        valid_milestones=milestones,
        cost=cost if success else None,
        validity_checks=100,
        edge_checks=20,
        wall_ms=0.0,
        seed=seed,
        edge_resolution=0.01,
    )


class TestConfig:
    def test_load_bundled_smoke_config(self):
        cfg = load_config(DATA / "experiments" / "smoke.json")
        assert cfg.experiment == "corridor2d-smoke"
        assert [s.kind for s in cfg.samplers] == ["uniform", "halton"]
        assert cfg.n_list == (16, 32)
        assert cfg.runs == 5

    def test_environment_path_resolves_relative_to_config(self, tmp_path):
        cfg_path = tmp_path / "exp.json"
        env_src = (DATA / "envs" / "corridor2d.json").read_text()
        (tmp_path / "env.json").write_text(env_src)
        cfg_path.write_text(
            json.dumps(
                {
                    "experiment": "rel",
                    "environment": "env.json",
                    "samplers": [{"name": "uniform", "kind": "uniform"}],
                    "n_list": [8],
                    "runs": 1,
                    "rule": "radius:0.3",
                    "base_seed": 1,
                }
            )
        )
        cfg = load_config(cfg_path)
        assert cfg.environment == str(tmp_path / "env.json")
        assert len(run_experiment(cfg)) == 1

    def test_missing_field_rejected(self, tmp_path):
        cfg_path = tmp_path / "broken.json"
        cfg_path.write_text('{"experiment": "x"}')
        with pytest.raises(ValueError):
            load_config(cfg_path)


class TestRunRecordInvariants:
    def test_success_requires_cost(self):
        with pytest.raises(ValueError):
            record(success=1, cost=None)

    def test_milestones_bounded_by_samples_plus_two(self):
        with pytest.raises(ValueError):
            record(milestones=19)  # n=16 allows at most 18


class TestRunExperiment:
    def test_cardinality(self):
        cfg = small_config(samplers=(SamplerSpec(name="uniform", kind="uniform"),), runs=3)
        records = run_experiment(cfg)
        assert len(records) == 3
        assert [r.run for r in records] == [1, 2, 3]

    def test_halton_cursor_continuation(self):
        cfg = small_config(samplers=(SamplerSpec(name="halton", kind="halton"),), n_list=(128,), runs=2)
        records = run_experiment(cfg)
        assert records[0].seed == "start:1"
        assert records[1].seed == "start:129"

    def test_deterministic_rerun(self):
        cfg = small_config()
        assert run_experiment(cfg) == run_experiment(cfg)

    def test_threaded_matches_serial(self):
        cfg = small_config()
        assert run_experiment(cfg, threads=4) == run_experiment(cfg, threads=1)

    def test_uniform_seeds_differ_by_cell(self):
        cfg = small_config(samplers=(SamplerSpec(name="uniform", kind="uniform"),), n_list=(8, 16), runs=2)
        records = run_experiment(cfg)
        seeds = {r.seed for r in records}
        assert len(seeds) == 4

    def test_wall_time_zero_unless_recorded(self):
        cfg = small_config()
        assert all(r.wall_ms == 0.0 for r in run_experiment(cfg))
        timed = small_config(record_time=True, samplers=(SamplerSpec(name="uniform", kind="uniform"),), runs=1)
        assert all(r.wall_ms > 0.0 for r in run_experiment(timed))

    def test_pool_sampler_reads_members(self):
        cfg = small_config(
            samplers=(
                SamplerSpec(name="optimized", kind="pool", pool_dir=str(DATA / "pools" / "d2")),
            ),
            n_list=(64,),
            runs=3,
        )
        records = run_experiment(cfg)
        assert all(r.seed.startswith("member:n64_m") for r in records)

    def test_pool_without_files_raises(self, tmp_path):
        cfg = small_config(
            samplers=(SamplerSpec(name="optimized", kind="pool", pool_dir=str(tmp_path)),),
            runs=1,
        )
        with pytest.raises(FileNotFoundError):
            run_experiment(cfg)

    def test_sequence_slicing_reconstructs_prefix(self):
        # concatenating the per-run slices walks the sequence without gaps
        n, runs = 32, 4
        cfg = small_config(samplers=(SamplerSpec(name="halton", kind="halton"),), n_list=(n,), runs=runs)
        records = run_experiment(cfg)
        starts = [int(r.seed.split(":")[1]) for r in records]
        slices = [halton(n, 2, start=s).coords for s in starts]
        assert np.array_equal(np.vstack(slices), halton(runs * n, 2, start=1).coords)


class TestCsvRoundTrip:
    def test_round_trip_identity(self, tmp_path):
        cfg = small_config()
        records = run_experiment(cfg)
        path = tmp_path / "results.csv"
        write_records(path, records)
        assert read_records(path) == records

    def test_header_written_once_on_append(self, tmp_path):
        records = [record(run=1), record(run=2)]
        path = tmp_path / "results.csv"
        write_records(path, records[:1])
        write_records(path, records[1:])
        text = path.read_text()
        assert text.count("experiment,sampler") == 1
        assert read_records(path) == records

    def test_failure_row_has_empty_cost(self, tmp_path):
        path = tmp_path / "results.csv"
        write_records(path, [record(success=0, cost=None)])
        row = path.read_text().splitlines()[1]
        assert ",," in row
        back = read_records(path)
        assert back[0].cost is None

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("bogus,header\n1,2\n")
        with pytest.raises(ValueError):
            write_records(path, [record()])
        with pytest.raises(ValueError):
            read_records(path)

    def test_schema_columns(self):
        assert CSV_COLUMNS[:4] == ["experiment", "sampler", "n", "run"]
        assert "seed" in CSV_COLUMNS and "edge_resolution" in CSV_COLUMNS

    def test_float_cost_survives_exactly(self, tmp_path):
        value = 1.2345678901234567
        path = tmp_path / "results.csv"
        write_records(path, [record(cost=value)])
        assert read_records(path)[0].cost == value


class TestSummarize:
    def test_hand_arithmetic(self):
        records = [record(run=i + 1, success=1 if i < 27 else 0, cost=1.0 if i < 27 else None) for i in range(50)]
        summary = summarize(records)
        assert len(summary) == 1
        cell = summary[0]
        assert cell.runs == 50
        assert cell.successes == 27
        assert cell.success_rate == pytest.approx(54.0)

    def test_identical_milestones_zero_std(self):
        records = [record(run=i + 1, milestones=12) for i in range(3)]
        cell = summarize(records)[0]
        assert cell.v_mean == pytest.approx(12.0)
        assert cell.v_std == 0.0

    def test_three_record_group(self):
        records = [
            record(run=1, success=1, milestones=10, cost=2.0),
            record(run=2, success=0, milestones=14, cost=None),
            record(run=3, success=1, milestones=18, cost=2.5),
        ]
        cell = summarize(records)[0]
        assert cell.success_rate == pytest.approx(200.0 / 3.0)
        assert cell.v_mean == pytest.approx(14.0)
        assert cell.v_std == pytest.approx(4.0)  # sample std of 10, 14, 18

    def test_permutation_invariant(self):
        records = [record(run=i + 1, milestones=8 + i, success=i % 2, cost=1.0 if i % 2 else None) for i in range(6)]
        forward = summarize(records)
        backward = summarize(records[::-1])
        assert forward == backward

    def test_groups_by_sampler_and_n(self):
        records = [
            record(sampler="uniform", n=16, run=1),
            record(sampler="uniform", n=32, run=1),
            record(sampler="halton", n=16, run=1),
        ]
        summary = summarize(records)
        keys = {(c.sampler, c.n) for c in summary}
        assert keys == {("uniform", 16), ("uniform", 32), ("halton", 16)}


class TestChartAndReport:
    def test_single_cell_chart(self):
        svg = success_chart([record()])
        assert svg.startswith("<svg") or svg.startswith("<?xml")
        assert svg.count("<polyline") == 1

    def test_success_rates_land_on_mapped_y(self):
        records = [record(n=16, run=i + 1, success=int(i < 1), cost=1.0 if i < 1 else None) for i in range(2)]
        svg = success_chart(records)
        # SR 50% maps to the vertical middle of the plot band
        cell = summarize(records)[0]
        assert cell.success_rate == pytest.approx(50.0)
        top, bottom = 40.0, 500.0 - 60.0
        expected_y = bottom - (cell.success_rate / 100.0) * (bottom - top)
        assert f"{expected_y:.2f}" in svg

    def test_chart_stable(self):
        records = [record(run=i + 1) for i in range(3)]
        assert success_chart(records) == success_chart(records)

    def test_report_files_written(self, tmp_path):
        records = [
            record(sampler=s, n=n, run=r + 1)
            for s in ("uniform", "halton")
            for n in (16, 32)
            for r in range(2)
        ]
        out = render_report(records, tmp_path, pngs=False)
        table = (tmp_path / "table.md").read_text()
        svg = (tmp_path / "chart.svg").read_text()
        assert "uniform" in table and "halton" in table
        assert "<svg" in svg
        assert set(out) >= {"table", "chart_svg"}

    def test_table_column_order_follows_n_list(self, tmp_path):
        records = [record(n=n, run=r + 1) for n in (64, 16, 32) for r in range(1)]
        render_report(records, tmp_path, pngs=False)
        header = next(
            line
            for line in (tmp_path / "table.md").read_text().splitlines()
            if line.startswith("|")
        )
        columns = [c.strip() for c in header.strip("|").split("|")][1:]
        assert columns == ["N=64", "N=16", "N=32"]

    def test_png_rendering(self, tmp_path):
        records = [record(run=i + 1) for i in range(2)]
        render_report(records, tmp_path, pngs=True)
        assert (tmp_path / "chart.png").stat().st_size > 0
        assert (tmp_path / "milestones.png").stat().st_size > 0


class TestCellSummaryShape:
    def test_summary_fields(self):
        cell = summarize([record()])[0]
        assert isinstance(cell, CellSummary)
        assert cell.experiment == "unit"
        assert cell.sampler == "uniform"
        assert cell.n == 16
