import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burgers_control import (
    Field,
    Grid,
    Trajectory,
    interpolation_ratio,
    norm_h1,
    norm_h2,
    norm_l1,
    norm_l1_on,
    norm_l2,
    norm_linf,
)

# Closed-form values for u(x) = sin(pi x) on (0, 1), frozen from the exact
# integrals:
#   integral |u|        = 2 / pi
#   ||u||_L2            = sqrt(1/2)
#   ||u||_H1            = sqrt(1/2 + pi^2 / 2)
#   ||u||_H2            = sqrt(1/2 + pi^2 / 2 + pi^4 / 2)
SINE_L1 = 2.0 / math.pi
SINE_L2 = math.sqrt(0.5)
SINE_H1 = math.sqrt(0.5 + math.pi**2 / 2.0)
SINE_H2 = math.sqrt(0.5 + math.pi**2 / 2.0 + math.pi**4 / 2.0)
# ratio = H1 / (L1^0.4 * H2^0.6) for the same profile
SINE_RATIO = SINE_H1 / (SINE_L1**0.4 * SINE_H2**0.6)


def sine(grid: Grid, k: int = 1, amp: float = 1.0) -> Field:
    return Field(grid, amp * np.sin(k * np.pi * grid.x))


class TestGrid:
    def test_geometry(self):
        g = Grid(64)
        assert g.n_nodes == 65
        assert g.dx == 1.0 / 64
        assert g.x[0] == 0.0 and g.x[-1] == 1.0
        assert np.all(np.diff(g.x) > 0)

    def test_refine_doubles(self):
        assert Grid(64).refine() == Grid(128)

    @pytest.mark.parametrize("n", [0, 1, 7, -16])
    def test_too_coarse_rejected(self, n):
        with pytest.raises(ValueError):
            Grid(n)

    def test_nodes_read_only(self):
        g = Grid(16)
        with pytest.raises(ValueError):
            g.x[0] = 1.0


class TestField:
    def test_shape_validation(self):
        g = Grid(16)
        with pytest.raises(ValueError):
            Field(g, np.zeros(16))

    def test_nonfinite_rejected(self):
        g = Grid(16)
        vals = np.zeros(17)
        vals[3] = np.nan
        with pytest.raises(ValueError):
            Field(g, vals)

    def test_dirichlet_zeroes_ends(self):
        g = Grid(16)
        f = Field(g, np.ones(17)).dirichlet()
        assert f.values[0] == 0.0 and f.values[-1] == 0.0
        assert f.boundary_deviation() == 0.0

    def test_csv_roundtrip_exact(self, tmp_path):
        g = Grid(32)
        f = Field(g, np.sin(1.7 * g.x) * 1e-3)
        path = tmp_path / "field.csv"
        f.to_csv(path)
        back = Field.from_csv(path)
        assert back.grid == g
        assert np.array_equal(back.values, f.values)


class TestNormOracles:
    def test_l1_of_sine(self):
        f = sine(Grid(512))
        assert norm_l1(f) == pytest.approx(SINE_L1, rel=1e-5)

    def test_l2_of_sine_superconvergent(self):
        # sin^2 is integrated exactly by the trapezoid rule on a uniform
        # grid, so this holds to roundoff even on a coarse grid.
        f = sine(Grid(16))
        assert norm_l2(f) == pytest.approx(SINE_L2, rel=1e-13)

    def test_h1_of_sine(self):
        f = sine(Grid(512))
        assert norm_h1(f) == pytest.approx(SINE_H1, rel=2e-4)

    def test_h2_of_sine(self):
        f = sine(Grid(512))
        assert norm_h2(f) == pytest.approx(SINE_H2, rel=2e-4)

    def test_linf_of_parabola_exact(self):
        g = Grid(64)  # even n puts a node at the vertex x = 1/2
        f = Field.from_function(g, lambda x: x * (1.0 - x))
        assert norm_linf(f) == 0.25

    def test_ratio_of_sine(self):
        f = sine(Grid(512))
        assert interpolation_ratio(f) == pytest.approx(SINE_RATIO, rel=1e-3)

    def test_ratio_rejects_zero_field(self):
        with pytest.raises(ValueError):
            interpolation_ratio(Field.zeros(Grid(16)))

    def test_ratio_rejects_field_whose_norms_underflow(self):
        # a single entry of 1e-285 keeps the L1 norm positive but the
        # squared differences in the H2 norm underflow to zero
        g = Grid(16)
        vals = np.zeros(g.n_nodes)
        vals[-1] = 1e-285
        with pytest.raises(ValueError):
            interpolation_ratio(Field(g, vals))

    @pytest.mark.parametrize("norm,target", [
        (norm_l1, SINE_L1),
        (norm_h1, SINE_H1),
        (norm_h2, SINE_H2),
    ])
    def test_refinement_order_at_least_two(self, norm, target):
        errs = []
        for n in (64, 128, 256, 512):
            errs.append(abs(norm(sine(Grid(n))) - target))
        for e_coarse, e_fine in zip(errs, errs[1:]):
            order = math.log2(e_coarse / e_fine)
            assert order > 1.9, (errs, order)


class TestL1Restriction:
    def test_full_interval_matches_l1_bitwise(self):
        rng = np.random.default_rng(5)
        g = Grid(48)
        f = Field(g, rng.standard_normal(g.n_nodes))
        assert norm_l1_on(f, (0.0, 1.0)) == norm_l1(f)

    def test_constant_field_measures_length(self):
        g = Grid(64)
        f = Field(g, np.ones(g.n_nodes))
        assert norm_l1_on(f, (0.3, 0.7)) == pytest.approx(0.4, abs=1e-13)
        # endpoints that split cells
        assert norm_l1_on(f, (0.301, 0.699)) == pytest.approx(0.398, abs=1e-13)

    def test_additive_over_split(self):
        rng = np.random.default_rng(11)
        g = Grid(40)
        f = Field(g, rng.standard_normal(g.n_nodes))
        for c in (0.5, 0.37, 0.11):
            total = norm_l1_on(f, (0.0, c)) + norm_l1_on(f, (c, 1.0))
            assert total == pytest.approx(norm_l1(f), rel=1e-12)

    def test_bad_interval_rejected(self):
        f = Field.zeros(Grid(16))
        with pytest.raises(ValueError):
            norm_l1_on(f, (0.7, 0.3))
        with pytest.raises(ValueError):
            norm_l1_on(f, (-0.1, 0.5))


finite_vals = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    min_size=17, max_size=17,
)


class TestNormProperties:
    @given(finite_vals, st.floats(min_value=-100.0, max_value=100.0))
    @settings(max_examples=50, deadline=None)
    def test_homogeneity(self, vals, c):
        g = Grid(16)
        f = Field(g, np.array(vals))
        fc = Field(g, c * np.asarray(vals))
        for norm in (norm_l1, norm_l2, norm_linf, norm_h1, norm_h2):
            assert norm(fc) == pytest.approx(
                abs(c) * norm(f), rel=1e-12, abs=1e-9
            )

    @given(finite_vals, finite_vals)
    @settings(max_examples=50, deadline=None)
    def test_triangle_inequality(self, a, b):
        g = Grid(16)
        fa, fb = Field(g, np.array(a)), Field(g, np.array(b))
        fs = Field(g, np.asarray(a) + np.asarray(b))
        for norm in (norm_l1, norm_l2, norm_linf, norm_h1, norm_h2):
            lhs = norm(fs)
            rhs = norm(fa) + norm(fb)
            assert lhs <= rhs * (1.0 + 1e-12) + 1e-9

    @given(finite_vals, st.floats(min_value=1e-4, max_value=1e4))
    @settings(max_examples=50, deadline=None)
    def test_ratio_scale_invariant(self, vals, c):
        g = Grid(16)
        arr = np.array(vals)
        # below ~1e-154 the squared norms underflow and the ratio is not
        # computable, let alone scale invariant
        if np.max(np.abs(arr)) < 1e-100:
            return
        base = interpolation_ratio(Field(g, arr))
        scaled = interpolation_ratio(Field(g, c * arr))
        assert scaled == pytest.approx(base, rel=1e-10)


class TestTrajectory:
    def make(self):
        g = Grid(16)
        vals = np.outer(np.arange(5, dtype=float), np.ones(g.n_nodes))
        return Trajectory(g, 0.0, 0.25, vals)

    def test_lattice_accessors(self):
        tr = self.make()
        assert tr.n_frames == 5
        assert tr.t_end == 1.0
        assert tr.index_of(0.5) == 2
        assert np.allclose(tr.times, [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_index_of_off_lattice_rejected(self):
        tr = self.make()
        with pytest.raises(ValueError):
            tr.index_of(0.3)

    def test_sample_interpolates_linearly(self):
        tr = self.make()
        row = tr.sample(0.375)  # halfway between frames 1 and 2
        assert np.allclose(row, 1.5)

    def test_sample_out_of_range_rejected(self):
        tr = self.make()
        with pytest.raises(ValueError):
            tr.sample(1.25)

    def test_csv_roundtrip_exact(self, tmp_path):
        g = Grid(12)
        rng = np.random.default_rng(0)
        tr = Trajectory(g, 0.5, 0.125, rng.standard_normal((4, g.n_nodes)))
        path = tmp_path / "traj.csv"
        tr.to_csv(path)
        back = Trajectory.from_csv(path)
        assert back.grid == g
        assert back.t0 == tr.t0 and back.dt == tr.dt
        assert np.array_equal(back.values, tr.values)

    def test_norm_summary_shape(self):
        tr = self.make()
        summary = tr.norm_summary()
        assert len(summary) == 5
        assert set(summary[0]) == {"t", "norms"}
        assert set(summary[0]["norms"]) == {"l1", "l2", "linf", "h1", "h2"}

    def test_from_callable_matches_manual(self):
        g = Grid(16)
        tr = Trajectory.from_callable(
            g, lambda t, x: t * x, 0.0, 0.5, 3
        )
        assert np.array_equal(tr.values[2], 1.0 * g.x)

    def test_shape_validation(self):
        g = Grid(16)
        with pytest.raises(ValueError):
            Trajectory(g, 0.0, 0.1, np.zeros((3, 4)))
        with pytest.raises(ValueError):
            Trajectory(g, 0.0, -0.1, np.zeros((3, g.n_nodes)))
