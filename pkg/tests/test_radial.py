import numpy as np
import pytest
from scipy.integrate import quad

from crystalspeed import (
    ConfigError,
    RadialParams,
    StepProfile,
    control_value_dp,
    extinction_time,
    indicator_params,
    psi_eps,
    psi_exact,
    radial_speeds,
    radius_ode,
    u_exact,
)
from crystalspeed.radial import _dp_table, flattening_time, phi_supercritical, ramp

SUB = RadialParams(n=2, c=1.0, r0=0.5)
SUP = RadialParams(n=2, c=1.0, r0=2.0)
CRIT = RadialParams(n=2, c=1.0, r0=1.0)


def psi_by_quadrature(params, r):
    """Independent oracle: integrate the stationary-profile ODE directly."""
    n1 = params.n - 1

    def integrand(s):
        return params.c / (1.0 - n1 / s)

    val, _ = quad(integrand, r, params.r0, limit=200)
    return -val


class TestPsi:
    def test_value_at_origin(self):
        # closed form: -0.5 - log(0.5); cross-checked against quadrature
        expect = -0.5 - np.log(0.5)
        assert psi_exact(SUB, 0.0) == pytest.approx(expect, abs=1e-12)
        assert psi_by_quadrature(SUB, 1e-9) == pytest.approx(expect, rel=1e-7)

    def test_zero_at_edge_and_beyond(self):
        assert psi_exact(SUB, 0.5) == 0.0
        assert psi_exact(SUB, 1.7) == 0.0

    def test_higher_dimension_value(self):
        # n=3, c=2, R0=1: psi(0) = 2 (2 log 2 - 1)
        p = RadialParams(n=3, c=2.0, r0=1.0)
        expect = 2.0 * (2.0 * np.log(2.0) - 1.0)
        assert psi_exact(p, 0.0) == pytest.approx(expect, abs=1e-12)
        assert psi_by_quadrature(p, 1e-10) == pytest.approx(expect, rel=1e-6)

    def test_monotone_decreasing_inside(self):
        r = np.linspace(0.0, 0.5, 64)
        v = psi_exact(SUB, r)
        assert v[0] > 0 and v[-1] == 0.0
        assert (np.diff(v) <= 1e-14).all()

    def test_rejects_other_regimes(self):
        with pytest.raises(ConfigError):
            psi_exact(SUP, 0.0)
        with pytest.raises(ConfigError):
            psi_exact(CRIT, 0.0)

    def test_flattening_time(self):
        assert flattening_time(SUB) == pytest.approx(psi_exact(SUB, 0.0))


class TestPsiEps:
    def test_zero_beyond_support(self):
        assert psi_eps(SUB, 0.1, 0.6) == 0.0

    def test_ramp_endpoints(self):
        cut = ramp(0.5, 0.1)
        assert cut(0.5) == 1.0
        assert cut(0.6) == 0.0
        assert cut(0.55) == pytest.approx(0.5)

    def test_monotone_in_eps_toward_psi(self):
        target = psi_exact(SUB, 0.0)
        vals = [psi_eps(SUB, e, 0.0) for e in (0.1, 0.05, 0.025)]
        assert vals[0] > vals[1] > vals[2] > target
        assert vals[2] - target < 0.05

    def test_matches_scipy_quadrature(self):
        eps = 0.07
        cut = ramp(0.5, eps)
        val, _ = quad(lambda s: cut(s) / (1.0 - 1.0 / s), 0.2, 0.5 + eps,
                      points=[0.5], limit=200)
        assert psi_eps(SUB, eps, 0.2) == pytest.approx(-val, abs=1e-8)

    def test_rejects_bad_eps(self):
        with pytest.raises(ConfigError):
            psi_eps(SUB, 0.6, 0.0)  # 0.5 + 0.6 >= 1


class TestUExact:
    def test_supercritical_closed_form(self):
        # (10 - 3 - log 2 + 2 + log 1)_+ = 9 - log 2
        assert u_exact(SUP, (3.0, 0.0), 10.0) == pytest.approx(9.0 - np.log(2.0))

    def test_supercritical_inside(self):
        assert u_exact(SUP, (1.0, 1.0), 4.0) == 4.0

    def test_critical_dichotomy(self):
        assert u_exact(CRIT, (2.0, 0.0), 7.0) == 0.0
        assert u_exact(CRIT, (0.5, 0.0), 7.0) == 7.0
        assert u_exact(CRIT, (1.0, 0.0), 7.0) == 7.0  # closed ball

    def test_initial_condition(self):
        for p in (SUB, CRIT, SUP):
            assert u_exact(p, (0.3, 0.1), 0.0) == 0.0

    def test_subcritical_cap(self):
        assert u_exact(SUB, (0.0, 0.0), 100.0) == pytest.approx(psi_exact(SUB, 0.0))
        assert u_exact(SUB, (0.0, 0.0), 0.05) == pytest.approx(0.05)

    def test_supercritical_exact_linear_growth_after_onset(self):
        # once phi > 0 the height grows exactly at rate c
        t0 = 5.0
        for s in (0.5, 1.0, 3.0):
            a = u_exact(SUP, (3.0, 0.0), t0)
            b = u_exact(SUP, (3.0, 0.0), t0 + s)
            assert b - a == pytest.approx(s, abs=1e-12)


class TestRadiusOde:
    def test_fixed_point_exact(self):
        p = RadialParams(n=3, c=1.0, r0=2.0)
        assert radius_ode(p, 50.0) == 2.0

    def test_asymptotic_unit_speed(self):
        # for R0 > n-1 the radius satisfies t = (R - R0) + (n-1) log((R-n+1)/(R0-n+1))
        for t in (50.0, 100.0):
            r = radius_ode(SUP, t)
            implied = (r - 2.0) + np.log((r - 1.0) / 1.0)
            assert implied == pytest.approx(t, rel=1e-6)
        slope = (radius_ode(SUP, 100.0) - radius_ode(SUP, 50.0)) / 50.0
        assert slope > 0.98

    def test_extinction_against_quadrature(self):
        # dt = dR / ((n-1)/R - 1) integrated by scipy as the oracle
        t_star, _ = quad(lambda s: s / (1.0 - s), 0.0, 0.5)
        assert extinction_time(SUB) == pytest.approx(t_star, abs=1e-8)
        assert radius_ode(SUB, t_star * 1.0001) == 0.0
        assert radius_ode(SUB, t_star * 0.9) > 0.0

    def test_smaller_ball_stays_smaller(self):
        small = RadialParams(n=2, c=1.0, r0=0.3)
        for t in (0.01, 0.02, 0.04):
            assert radius_ode(small, t) < radius_ode(SUB, t)


class TestControlValue:
    def test_zero_profile(self):
        p = RadialParams(n=2, c=1.0, r0=0.5, h=StepProfile([(0.0, 1.0, 0.0)]))
        assert control_value_dp(p, 0.7, 3.0) == 0.0

    def test_supercritical_rate_approaches_c(self):
        p = indicator_params(2, 1.0, 2.0)
        tab = _dp_table(p, r_max=4.0, t_max=12.0)
        v = tab.at(0.8, 12.0)
        assert v / 12.0 > 0.9

    def test_subcritical_bounded_matches_cap(self):
        p = indicator_params(2, 1.0, 0.5)
        r = 0.25
        cap = psi_exact(SUB, r)
        tab = _dp_table(p, r_max=3.0, t_max=20.0)
        for t in (1.0, 5.0, 20.0):
            v = tab.at(r, t)
            expect = min(cap, t)
            assert v == pytest.approx(expect, rel=0.05)

    def test_rejects_bad_input(self):
        p = indicator_params(2, 1.0, 0.5)
        with pytest.raises(ConfigError):
            control_value_dp(p, -1.0, 1.0)
        with pytest.raises(ConfigError):
            control_value_dp(RadialParams(n=2, c=1.0, r0=0.5), 1.0, 1.0)


class TestRadialSpeeds:
    def test_thin_annulus_beyond_critical(self):
        w = 0.02
        prof = StepProfile([(1.5 - w, 1.5 + w, 1.0)])
        c1, c2 = radial_speeds(RadialParams(n=2, c=1.0, r0=1.5, h=prof))
        assert (c1, c2) == (1.0, 1.0)

    def test_mass_inside_critical_only(self):
        prof = StepProfile([(0.0, 1.0, 3.0, True, False)])  # open at r=1
        c1, c2 = radial_speeds(RadialParams(n=2, c=3.0, r0=0.5, h=prof))
        assert (c1, c2) == (0.0, 0.0)

    def test_step_straddling_critical_point(self):
        prof = StepProfile([(1.0, 2.0, 0.7)])
        c1, c2 = radial_speeds(RadialParams(n=2, c=0.7, r0=1.5, h=prof))
        assert (c1, c2) == (0.7, 0.7)

    def test_closed_endpoint_at_critical_radius(self):
        # mass exactly at r = n-1 counts for c1 but not c2
        prof = StepProfile([(1.0, 1.0, 2.0, True, True), (1.2, 1.4, 0.5)])
        c1, c2 = radial_speeds(RadialParams(n=2, c=2.0, r0=1.0, h=prof))
        assert c1 == 2.0 and c2 == 0.5


class TestRegime:
    def test_exact_classification(self):
        assert RadialParams(n=2, c=1.0, r0=1.0).regime == "critical"
        assert RadialParams(n=2, c=1.0, r0=0.9999999).regime == "subcritical"
        assert RadialParams(n=3, c=1.0, r0=2.0).regime == "critical"

    def test_validation(self):
        with pytest.raises(ConfigError):
            RadialParams(n=1, c=1.0, r0=0.5)
        with pytest.raises(ConfigError):
            RadialParams(n=2, c=-1.0, r0=0.5)
