import numpy as np
import pytest
from dataclasses import replace

from crystalspeed import (
    BallSource,
    ConfigError,
    Grid2D,
    RadialParams,
    ScalarField2D,
    SimConfig,
    SquareSource,
    cfl_dt,
    nucleation_step,
    propagation_step,
    psi_exact,
    rasterize,
    solve_direct,
    splitting_error,
    step_direct,
    trotter_kato,
)
from crystalspeed.errors import SimulationAbort
from crystalspeed.evolve import _Engine, _source_rates


def small_config(r0=0.5, c=1.0, t_final=0.5, dx=0.05, extra=0.6, **kw):
    grid = Grid2D.centered(r0 + t_final + extra, dx)
    return SimConfig(grid=grid, source=BallSource(r0, c=c), t_final=t_final, **kw)


class TestConfig:
    def test_grid_must_contain_reach(self):
        g = Grid2D.centered(1.0, 0.05)
        with pytest.raises(ConfigError):
            SimConfig(grid=g, source=BallSource(0.5), t_final=1.0)

    def test_tau_must_divide(self):
        with pytest.raises(ConfigError):
            small_config(tk_tau=0.3)
        small_config(tk_tau=0.25)

    def test_default_mollification_index(self):
        cfg = small_config(dx=0.05)
        assert cfg.mollify_k == pytest.approx(2.0 / 0.05)

    def test_dt_at_cfl(self):
        cfg = small_config(dx=0.05, t_final=0.5)
        bound = cfl_dt(cfg.grid, 1.0)
        assert cfg.dt <= bound * (1 + 1e-12)
        assert round(cfg.t_final / cfg.dt) == cfg.t_final / cfg.dt

    def test_snapshot_validation(self):
        with pytest.raises(ConfigError):
            small_config(snapshot_times=(0.9, 0.2))
        with pytest.raises(ConfigError):
            small_config(snapshot_times=(2.0,))


class TestStepDirect:
    def test_zero_state_zero_source_term_stays_zero(self):
        cfg = small_config()
        fld = ScalarField2D.zeros(cfg.grid)
        out = step_direct(fld, cfg, cfg.dt)
        # one step deposits dt * mollified rate and nothing else
        expected = cfg.dt * rasterize(cfg.source, cfg.grid, k=cfg.mollify_k)
        assert np.array_equal(out.values, expected)

    def test_inside_source_gains_exact_quantum(self):
        cfg = small_config(c=2.0)
        out = step_direct(ScalarField2D.zeros(cfg.grid), cfg, cfg.dt)
        X, Y = cfg.grid.meshgrid()
        inside = np.hypot(X, Y) <= 0.45
        assert np.allclose(out.values[inside], 2.0 * cfg.dt)

    def test_rejects_large_dt(self):
        cfg = small_config()
        with pytest.raises(ConfigError):
            step_direct(ScalarField2D.zeros(cfg.grid), cfg, 10 * cfg.dt)

    def test_paraboloid_update(self):
        # u = |x|^2/2 with no source: one step adds dt*(1 + |Du|) + O(dx^2)
        cfg = small_config()
        g = cfg.grid
        fld = ScalarField2D.from_function(g, lambda x, y: 0.5 * (x * x + y * y))
        zero_src = replace(cfg, source=BallSource(1e-6, c=1e-12))
        out = step_direct(fld, zero_src, cfg.dt)
        X, Y = g.meshgrid()
        r = np.hypot(X, Y)
        upd = (out.values - fld.values) / cfg.dt
        mask = np.zeros(g.shape, bool)
        mask[2:-2, 2:-2] = True
        mask &= r > 0.3
        assert np.allclose(upd[mask], (1.0 + r)[mask], atol=0.1)


class TestSolveDirect:
    def test_subcritical_bounded_by_cap(self):
        # the mollified source reaches to R0 + c/k, so the bound is the cap
        # of that slightly larger ball
        cfg = small_config(r0=0.5, t_final=1.0, dx=0.05, snapshot_times=(0.5, 1.0))
        traj = solve_direct(cfg)
        skirt = 1.0 / cfg.mollify_k
        cap = psi_exact(RadialParams(n=2, c=1.0, r0=0.5 + skirt), 0.0)
        assert traj.fields[-1].values.max() <= cap + 5 * cfg.grid.dx
        assert traj.fields[0].values.max() == 0.0
        assert traj.times[0] == 0.0

    def test_quadrant_matches_full(self):
        cfg = small_config(t_final=0.4, dx=0.05, snapshot_times=(0.4,))
        a = solve_direct(cfg)
        b = solve_direct(replace(cfg, symmetry="off"))
        assert cfg.use_quadrant and not replace(cfg, symmetry="off").use_quadrant
        assert np.abs(a.fields[-1].values - b.fields[-1].values).max() < 1e-12
        assert np.abs(a.log.probe_values - b.log.probe_values).max() < 1e-12

    def test_solve_equals_repeated_steps(self):
        cfg = small_config(t_final=0.02, dx=0.1, symmetry="off")
        traj = solve_direct(cfg)
        fld = ScalarField2D.zeros(cfg.grid)
        for _ in range(int(round(cfg.t_final / cfg.dt))):
            fld = step_direct(fld, cfg, cfg.dt)
        assert np.array_equal(traj.fields[-1].values, fld.values)

    def test_bounds_invariant(self):
        cfg = small_config(t_final=0.8, dx=0.05, snapshot_times=(0.2, 0.5, 0.8))
        traj = solve_direct(cfg)
        for t, fld in zip(traj.times, traj.fields):
            assert fld.values.min() >= 0.0
            assert fld.values.max() <= 1.0 * t + 5 * cfg.grid.dx + 1e-12

    def test_monotone_in_time_inside_source(self):
        cfg = small_config(t_final=0.6, dx=0.05, snapshot_times=(0.2, 0.4, 0.6))
        traj = solve_direct(cfg)
        X, Y = cfg.grid.meshgrid()
        inside = np.hypot(X, Y) <= 0.45
        prev = traj.fields[0].values
        for fld in traj.fields[1:]:
            assert (fld.values[inside] >= prev[inside] - 1e-12).all()
            prev = fld.values

    def test_comparison_between_nested_sources(self):
        big = small_config(r0=0.5, t_final=0.4, dx=0.05)
        lil = replace(big, source=BallSource(0.3, c=1.0))
        uf = solve_direct(lil).fields[-1].values
        ug = solve_direct(big).fields[-1].values
        assert (uf <= ug + 5 * big.grid.dx * 1.0 + 1e-12).all()

    def test_nucleation_domain_monotonicity(self):
        base = small_config(r0=0.5, t_final=0.4, dx=0.05)
        grown = replace(base, source=BallSource(0.55, c=1.0))
        ua = solve_direct(base).fields[-1].values
        ub = solve_direct(grown).fields[-1].values
        assert (ub >= ua - 1e-12).all()

    def test_probe_log_shape_and_origin(self):
        cfg = small_config(t_final=0.2, dx=0.05, probes=((0.0, 0.0), (0.3, 0.0)))
        traj = solve_direct(cfg)
        n = int(round(cfg.t_final / cfg.dt))
        assert traj.log.t.shape == (n + 1,)
        assert traj.log.probe_values.shape == (n + 1, 2)
        # at this coarse dx the rounded cap erodes a little below c*t
        assert traj.log.u_origin[-1] == pytest.approx(0.2, rel=0.2)


class TestNucleation:
    def test_square_deposit(self):
        g = Grid2D.centered(1.5, 0.1)
        spec = SquareSource(0.6, c=2.0)
        out = nucleation_step(ScalarField2D.zeros(g), spec, 0.25)
        assert np.array_equal(out.values, 0.25 * rasterize(spec, g))

    def test_zero_tau_identity(self):
        g = Grid2D.centered(1.0, 0.1)
        fld = ScalarField2D.from_function(g, lambda x, y: np.maximum(0.0, 0.3 - x * x))
        out = nucleation_step(fld, BallSource(0.4), 0.0)
        assert np.array_equal(out.values, fld.values)

    def test_additivity(self):
        g = Grid2D.centered(1.0, 0.1)
        spec = BallSource(0.4, c=1.5)
        fld = ScalarField2D.zeros(g)
        once = nucleation_step(fld, spec, 0.7)
        twice = nucleation_step(nucleation_step(fld, spec, 0.3), spec, 0.4)
        assert np.allclose(once.values, twice.values, atol=1e-15)


class TestPropagation:
    def test_constant_unchanged(self):
        g = Grid2D.centered(1.0, 0.1)
        fld = ScalarField2D(g, np.full(g.shape, 1.3))
        out = propagation_step(fld, 0.05)
        assert np.array_equal(out.values, fld.values)

    def test_supercritical_cap_grows(self):
        g = Grid2D.centered(2.6, 0.05)
        fld = ScalarField2D.from_function(
            g, lambda x, y: np.maximum(0.0, 1.0 - np.hypot(x, y) / 1.8)
        )
        before = (fld.values > 1e-6).sum()
        out = propagation_step(fld, 0.3)
        assert out.values.max() <= fld.values.max() + 1e-12
        assert (out.values > 1e-6).sum() > before

    def test_subcritical_cap_shrinks_to_extinction(self):
        g = Grid2D.centered(1.2, 0.05)
        fld = ScalarField2D.from_function(
            g, lambda x, y: np.maximum(0.0, 0.2 * (1.0 - np.hypot(x, y) / 0.5))
        )
        out = propagation_step(fld, 0.5)
        # a sub-cell residue can survive the collapse; it must be far below
        # the initial 0.2 apex
        assert out.values.max() < 1e-3

    def test_boundary_abort(self):
        g = Grid2D.centered(1.6, 0.1)
        fld = ScalarField2D.from_function(
            g, lambda x, y: np.maximum(0.0, 1.0 - np.hypot(x, y) / 1.4)
        )
        with pytest.raises(SimulationAbort):
            propagation_step(fld, 1.0)


class TestTrotterKato:
    def test_leading_deposit(self):
        cfg = small_config(t_final=0.5, dx=0.05, tk_tau=0.25)
        traj = trotter_kato(cfg)
        assert traj.times[0] == 0.0
        expected = 0.25 * rasterize(cfg.source, cfg.grid)
        assert np.array_equal(traj.fields[0].values, expected)

    def test_matches_direct_solve_coarsely(self):
        cfg = small_config(r0=0.5, t_final=1.0, dx=0.05, tk_tau=0.125)
        tk = trotter_kato(cfg)
        direct = solve_direct(cfg)
        gap = np.abs(tk.fields[-1].values - direct.fields[-1].values).max()
        assert gap < 0.25  # one nucleation quantum plus splitting error

    def test_quadrant_matches_full(self):
        cfg = small_config(t_final=0.5, dx=0.1, tk_tau=0.25)
        a = trotter_kato(cfg)
        b = trotter_kato(replace(cfg, symmetry="off"))
        assert np.abs(a.fields[-1].values - b.fields[-1].values).max() < 1e-12

    def test_supercritical_origin_rate_matches_direct(self):
        # double-step product on the expanding ball: origin height per unit
        # time stays within a nucleation quantum of the full deposition rate
        src = BallSource(2.0, c=1.0)
        grid = Grid2D.centered(12.8, 0.05)
        cfg = SimConfig(grid=grid, source=src, t_final=10.0, tk_tau=0.25)
        traj = trotter_kato(cfg, collect_fields=False)
        rate = traj.log.u_origin[-1] / 10.0
        assert 0.9 <= rate <= 1.0 + 0.25 / 10.0


class TestSplittingError:
    def test_gaps_decrease(self):
        cfg = small_config(r0=0.5, t_final=1.0, dx=0.05)
        out = splitting_error(cfg, [0.5, 0.25, 0.125])
        gaps = [g for _, g in out]
        assert gaps[0] > gaps[1] > gaps[2] > 0
        assert gaps[1] / gaps[0] <= 0.9
        assert gaps[2] / gaps[1] <= 0.9

    def test_tau_equals_dt_gap_bounded(self):
        cfg = small_config(r0=0.5, t_final=0.1, dx=0.1)
        tau = cfg.dt  # 0.1/80 divides T exactly
        (_, gap), = splitting_error(cfg, [tau])
        c = cfg.source.c
        assert gap <= 2.0 * c * tau + cfg.grid.dx * c

    def test_rejects_non_dividing_tau(self):
        cfg = small_config(t_final=1.0)
        with pytest.raises(ConfigError):
            splitting_error(cfg, [0.3])


class TestEngineInternals:
    def test_active_box_restriction_is_exact(self):
        # growing box vs always-full box produce identical states
        cfg = small_config(t_final=0.05, dx=0.1, symmetry="off")
        src = _source_rates(cfg, True, False)
        lazy = _Engine(cfg.grid, src, cfg.eps_grad, False, scale=1.0)
        eager = _Engine(cfg.grid, src, cfg.eps_grad, False, scale=1.0)
        eager.box = [1, cfg.grid.nx - 2, 1, cfg.grid.ny - 2]
        eager._since_refresh = -(10**9)
        for _ in range(40):
            lazy.step(cfg.dt)
            eager.step(cfg.dt)
            eager.box = [1, cfg.grid.nx - 2, 1, cfg.grid.ny - 2]
        assert np.array_equal(lazy.u, eager.u)
