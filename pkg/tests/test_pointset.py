"""Point-set construction, grids, projections, greedy ordering, and file I/O."""

import numpy as np
import pytest

from conftest import make_rng, random_pointset
from lowdisc.discrepancy import hickernell_l2, l2_warnock
from lowdisc.pointset import (
    BoundsBox,
    PointSet,
    PointSetFormatError,
    greedy_reorder,
    load_points,
    project,
    sample_uniform,
    save_points,
    scale_to_bounds,
    sukharev_grid,
    unscale_from_bounds,
)


class TestPointSetInvariants:
    def test_coordinate_above_one_rejected(self):
        with pytest.raises(ValueError):
            PointSet(np.array([[1.5]]))

    def test_negative_coordinate_rejected(self):
        with pytest.raises(ValueError):
            PointSet(np.array([[0.2, -0.1]]))

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            PointSet(np.array([[np.nan]]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            PointSet(np.zeros((0, 2)))

    def test_boundaries_inclusive(self):
        ps = PointSet(np.array([[0.0, 1.0]]))
        assert ps.n == 1 and ps.d == 2

    def test_shape_recorded(self):
        ps = random_pointset(7, 3, seed=0)
        assert (ps.n, ps.d) == (7, 3)
        assert ps.coords.shape == (7, 3)


class TestSampleUniform:
    def test_single_value_in_unit_interval(self):
        ps = sample_uniform(1, 1, seed=11)
        assert 0.0 <= ps.coords[0, 0] < 1.0

    def test_sample_mean_near_half(self):
        ps = sample_uniform(1000, 2, seed=3)
        means = ps.coords.mean(axis=0)
        assert np.all(means >= 0.45) and np.all(means <= 0.55)

    def test_deterministic_per_seed(self):
        a = sample_uniform(64, 3, seed=9)
        b = sample_uniform(64, 3, seed=9)
        assert np.array_equal(a.coords, b.coords)

    def test_seeds_differ(self):
        a = sample_uniform(64, 3, seed=9)
        b = sample_uniform(64, 3, seed=10)
        assert not np.array_equal(a.coords, b.coords)


class TestSukharevGrid:
    def test_single_cell_center(self):
        ps = sukharev_grid(1, 3)
        assert np.array_equal(ps.coords, np.array([[0.5, 0.5, 0.5]]))

    def test_two_cells_one_dim(self):
        ps = sukharev_grid(2, 1)
        assert sorted(ps.coords[:, 0].tolist()) == [0.25, 0.75]

    def test_k2_d2_separation(self):
        ps = sukharev_grid(2, 2)
        assert ps.n == 4
        diffs = np.abs(ps.coords[:, None, :] - ps.coords[None, :, :]).max(axis=2)
        off_diag = diffs[~np.eye(4, dtype=bool)]
        assert np.all(off_diag >= 0.5)

    @pytest.mark.parametrize("k,d", [(2, 1), (2, 2), (3, 2), (2, 3), (4, 2)])
    def test_count_and_min_separation(self, k, d):
        ps = sukharev_grid(k, d)
        assert ps.n == k**d
        diffs = np.abs(ps.coords[:, None, :] - ps.coords[None, :, :]).max(axis=2)
        off_diag = diffs[~np.eye(ps.n, dtype=bool)]
        assert np.isclose(off_diag.min(), 1.0 / k)


class TestProject:
    def test_identity_projection(self):
        ps = random_pointset(10, 3, seed=5)
        out = project(ps, [0, 1, 2])
        assert np.array_equal(out.coords, ps.coords)

    def test_column_selection(self):
        ps = PointSet(np.array([[0.1, 0.9], [0.3, 0.7]]))
        out = project(ps, [1])
        assert np.array_equal(out.coords, np.array([[0.9], [0.7]]))

    def test_composition(self):
        ps = random_pointset(8, 4, seed=6)
        a = [2, 0, 3]
        b = [1, 2]
        chained = project(project(ps, a), b)
        direct = project(ps, [a[i] for i in b])
        assert np.array_equal(chained.coords, direct.coords)

    def test_projection_is_hickernell_summand(self):
        # the full squared value decomposes over the nonempty axis subsets
        ps = random_pointset(6, 2, seed=7)
        total = hickernell_l2(ps).squared
        parts = (
            l2_warnock(project(ps, [0])).squared
            + l2_warnock(project(ps, [1])).squared
            + l2_warnock(ps).squared
        )
        assert total == pytest.approx(parts, rel=1e-12)

    def test_bad_dims_rejected(self):
        ps = random_pointset(4, 2, seed=8)
        with pytest.raises(IndexError):
            project(ps, [2])
        with pytest.raises(ValueError):
            project(ps, [])
        with pytest.raises(ValueError):
            project(ps, [0, 0])


class TestGreedyReorder:
    def test_single_point_unchanged(self):
        ps = random_pointset(1, 2, seed=12)
        out = greedy_reorder(ps)
        assert np.array_equal(out.coords, ps.coords)

    def test_output_is_row_permutation(self):
        ps = random_pointset(9, 3, seed=13)
        out = greedy_reorder(ps)
        a = sorted(map(tuple, ps.coords.tolist()))
        b = sorted(map(tuple, out.coords.tolist()))
        assert a == b

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_prefixes_match_exhaustive_greedy(self, seed):
        # every prefix extension must be at least as good as any alternative
        ps = random_pointset(10, 2, seed=seed)
        out = greedy_reorder(ps).coords
        remaining = [tuple(r) for r in ps.coords.tolist()]
        for m in range(1, ps.n + 1):
            prefix = out[:m]
            chosen = l2_warnock(PointSet(prefix)).squared
            remaining.remove(tuple(out[m - 1].tolist()))
            for alt in remaining:
                cand = np.vstack([out[: m - 1], np.array(alt)[None, :]])
                alt_val = l2_warnock(PointSet(cand)).squared
                assert chosen <= alt_val + 1e-12


class TestBounds:
    def test_unit_box_identity(self):
        ps = random_pointset(5, 2, seed=20)
        box = BoundsBox(np.zeros(2), np.ones(2))
        assert np.allclose(scale_to_bounds(ps, box), ps.coords)

    def test_midpoint_of_symmetric_box(self):
        ps = PointSet(np.array([[0.5]]))
        box = BoundsBox(np.array([-np.pi]), np.array([np.pi]))
        assert scale_to_bounds(ps, box)[0, 0] == pytest.approx(0.0)

    def test_linear_map(self):
        ps = PointSet(np.array([[0.25]]))
        box = BoundsBox(np.array([0.0]), np.array([640.0]))
        assert scale_to_bounds(ps, box)[0, 0] == pytest.approx(160.0)

    def test_round_trip(self):
        ps = random_pointset(6, 3, seed=21)
        box = BoundsBox(np.array([-1.0, 0.0, 5.0]), np.array([2.0, 10.0, 6.0]))
        back = unscale_from_bounds(scale_to_bounds(ps, box), box)
        assert np.allclose(back, ps.coords, atol=1e-15)

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            BoundsBox(np.array([1.0]), np.array([1.0]))


class TestFileRoundTrip:
    def test_save_load_bit_identical(self, tmp_path):
        ps = random_pointset(17, 4, seed=30, provenance="uniform seed=30")
        path = tmp_path / "points.txt"
        save_points(ps, path)
        back = load_points(path)
        assert np.array_equal(back.coords, ps.coords)
        assert back.provenance == "uniform seed=30"

    def test_out_of_range_coordinate_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 1\n1.5\n")
        with pytest.raises(PointSetFormatError):
            load_points(path)

    def test_row_count_mismatch_rejected(self, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("4 1\n0.1\n0.2\n0.3\n")
        with pytest.raises(PointSetFormatError):
            load_points(path)

    def test_column_count_mismatch_rejected(self, tmp_path):
        path = tmp_path / "wide.txt"
        path.write_text("1 2\n0.1 0.2 0.3\n")
        with pytest.raises(PointSetFormatError):
            load_points(path)

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_points(tmp_path / "absent.txt")

    def test_format_error_is_value_error(self):
        # the CLI maps ValueError to its bad-format exit code
        assert issubclass(PointSetFormatError, ValueError)
