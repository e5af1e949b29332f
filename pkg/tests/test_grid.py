import numpy as np
import pytest

from crystalspeed import (
    ConfigError,
    CurvatureOperator,
    Grid2D,
    ScalarField2D,
    cfl_dt,
    curvature_term,
    gradnorm_upwind,
)
from crystalspeed.errors import SimulationAbort


def paraboloid(grid):
    return ScalarField2D.from_function(grid, lambda x, y: 0.5 * (x * x + y * y))


class TestGrid:
    def test_validation(self):
        with pytest.raises(ConfigError):
            Grid2D(4, 16, 0.1)
        with pytest.raises(ConfigError):
            Grid2D(16, 16, -0.1)

    def test_centered_origin(self):
        g = Grid2D(16, 16, 0.5)
        assert g.origin == (-3.75, -3.75)
        X, Y = g.meshgrid()
        assert X[0, 0] == -3.75 and X[-1, 0] == 3.75
        assert g.is_centered_even

    def test_centered_factory_covers(self):
        g = Grid2D.centered(1.0, 0.3)
        hx, hy = g.half_width
        assert hx > 1.0 and hy > 1.0 and g.nx % 2 == 0


class TestCfl:
    # values evaluated from dt = min(dx^2/8, dx/4)
    @pytest.mark.parametrize(
        "dx,expected",
        [(0.02, 5e-5), (1.0, 0.125), (0.4, 0.02)],
    )
    def test_pinned_values(self, dx, expected):
        assert cfl_dt(Grid2D(16, 16, dx), 1.0) == pytest.approx(expected, rel=1e-12)

    def test_rejects_negative_rate(self):
        with pytest.raises(ConfigError):
            cfl_dt(Grid2D(16, 16, 0.1), -1.0)


class TestCurvature:
    def test_constant_field_zero(self):
        g = Grid2D(24, 24, 0.1)
        out = curvature_term(ScalarField2D(g, np.full(g.shape, 3.7)))
        assert np.all(out.values == 0.0)

    def test_linear_field_zero(self):
        g = Grid2D(24, 24, 0.1)
        out = curvature_term(ScalarField2D.from_function(g, lambda x, y: 2.0 * x))
        assert np.allclose(out.values, 0.0, atol=1e-12)

    def test_paraboloid_equals_one(self):
        # For u = |x|^2/2 the tangential second derivative is exactly 1 in
        # the plane; central differences are exact on quadratics, so the
        # only deviation is roundoff.  10 random interior cells, away from
        # the degenerate-gradient cutoff at the origin.
        g = Grid2D(64, 64, 0.05)
        out = curvature_term(paraboloid(g))
        rng = np.random.default_rng(42)
        hits = 0
        while hits < 10:
            i = int(rng.integers(1, g.nx - 1))
            j = int(rng.integers(1, g.ny - 1))
            if np.hypot(g.x(i), g.y(j)) < 0.5:
                continue
            assert out.values[i, j] == pytest.approx(1.0, abs=1e-9)
            hits += 1

    def test_degenerate_gradient_returns_zero(self):
        g = Grid2D(24, 24, 0.1)
        fld = ScalarField2D.from_function(g, lambda x, y: 1e-9 * x)
        out = curvature_term(fld, CurvatureOperator(eps_grad=1e-6))
        assert np.all(out.values == 0.0)

    def test_rejects_nonfinite(self):
        g = Grid2D(16, 16, 0.1)
        bad = np.zeros(g.shape)
        bad[3, 3] = np.nan
        with pytest.raises(SimulationAbort):
            curvature_term(ScalarField2D(g, bad))


class TestGradnormUpwind:
    def test_linear_exact(self):
        g = Grid2D(24, 24, 0.1)
        out = gradnorm_upwind(ScalarField2D.from_function(g, lambda x, y: x), "expanding")
        assert np.allclose(out.values[1:-1, 1:-1], 1.0, atol=1e-12)

    def test_constant_zero(self):
        g = Grid2D(24, 24, 0.1)
        out = gradnorm_upwind(ScalarField2D(g, np.full(g.shape, 2.0)), "expanding")
        assert np.all(out.values == 0.0)

    def test_axis_cone_at_kink(self):
        # u = |x1|: at the kink the one-sided differences are -1 and +1;
        # evaluating the one-axis upwind flux by hand gives max(1, 1) = 1
        # for the expanding branch and 0 for the contracting branch.
        g = Grid2D(17, 17, 0.1, origin=(-0.8, -0.8))  # odd: a cell sits at x=0
        fld = ScalarField2D.from_function(g, lambda x, y: np.abs(x))
        i0 = 8
        assert g.x(i0) == pytest.approx(0.0, abs=1e-15)
        expanding = gradnorm_upwind(fld, "expanding")
        contracting = gradnorm_upwind(fld, "contracting")
        assert expanding.values[i0, 8] == pytest.approx(1.0, abs=1e-12)
        assert contracting.values[i0, 8] == 0.0

    def test_bad_direction(self):
        g = Grid2D(16, 16, 0.1)
        with pytest.raises(ConfigError):
            gradnorm_upwind(ScalarField2D.zeros(g), "sideways")


class TestCombinedOperator:
    def combined(self, fld):
        return curvature_term(fld).values + gradnorm_upwind(fld, "expanding").values

    def test_consistency_rate_on_paraboloid(self):
        # analytic value of the combined operator on u = |x|^2/2 is 1 + |x|
        errs = []
        for dx in (0.2, 0.1, 0.05):
            g = Grid2D.centered(2.0, dx)
            X, Y = g.meshgrid()
            r = np.hypot(X, Y)
            got = self.combined(paraboloid(g))
            interior = np.zeros(g.shape, bool)
            interior[2:-2, 2:-2] = True
            mask = interior & (r > 0.3)
            errs.append(np.abs(got - (1.0 + r))[mask].max())
        assert errs[1] <= 0.6 * errs[0]
        assert errs[2] <= 0.6 * errs[1]

    def test_translation_invariance(self):
        g = Grid2D(40, 40, 0.1)
        rng = np.random.default_rng(7)
        base = np.zeros(g.shape)
        base[8:20, 8:20] = rng.random((12, 12))
        shifted = np.roll(base, (5, 3), axis=(0, 1))
        out_a = self.combined(ScalarField2D(g, base))
        out_b = self.combined(ScalarField2D(g, shifted))
        # compare away from the boundary ring of either field
        assert np.allclose(
            np.roll(out_a, (5, 3), axis=(0, 1))[10:30, 10:30], out_b[10:30, 10:30],
            atol=1e-12,
        )


class TestDumps:
    def test_csv_header_and_rows(self, tmp_path):
        g = Grid2D(8, 8, 0.5)
        fld = ScalarField2D.from_function(g, lambda x, y: x + 2 * y)
        path = tmp_path / "f.csv"
        fld.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "i,j,x,y,value"
        assert len(lines) == 1 + 64
        i, j, x, y, v = lines[1].split(",")
        assert (int(i), int(j)) == (0, 0)
        assert float(v) == float(x) + 2 * float(y)

    def test_pgm_magic_and_sidecar(self, tmp_path):
        g = Grid2D(8, 8, 0.5)
        fld = ScalarField2D.from_function(g, lambda x, y: x)
        path = str(tmp_path / "f.pgm")
        fld.to_pgm(path)
        raw = open(path, "rb").read()
        assert raw.startswith(b"P5\n8 8\n255\n")
        assert len(raw) == len(b"P5\n8 8\n255\n") + 64
        side = open(path + ".txt").read()
        assert "min " in side and "max " in side
        assert float(side.splitlines()[1].split()[1]) == fld.values.max()


class TestMonotonicity:
    """Discrete comparison: one explicit combined step preserves ordering."""

    def one_step(self, values, grid, dt):
        from crystalspeed import BallSource, SimConfig, step_direct

        cfg = SimConfig(
            grid=grid,
            source=BallSource(0.4, c=1.0),
            t_final=dt * 4,
            symmetry="off",
        )
        return step_direct(ScalarField2D(grid, values), cfg, dt).values

    @pytest.mark.parametrize("dx", [0.1, 0.05])
    def test_ordered_pairs_stay_ordered(self, dx):
        rng = np.random.default_rng(123)
        g = Grid2D.centered(1.5, dx)
        X, Y = g.meshgrid()
        r = np.hypot(X, Y)
        dt = cfl_dt(g, 1.0)
        # nested radial caps plus smooth nonnegative bumps (fixed seed)
        for _ in range(3):
            cx, cy, w = rng.uniform(-0.5, 0.5, 3)
            f = np.maximum(0.0, 0.6 - r) ** 2
            bump = 0.3 * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (0.1 + 0.2 * abs(w)))
            ga = f + bump
            fa, gb = self.one_step(f, g, dt), self.one_step(ga, g, dt)
            assert (fa <= gb + 1e-12).all()
