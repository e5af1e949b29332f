"""Front propagation V = kappa + 1 with optional inner/outer obstacles.

A compact set is tracked as the negative region of a level-set function
phi (approximately a signed distance).  The zero set moves with outward
normal speed kappa + 1, so circles obey dR/dt = 1 - (n-1)/R; on phi this
is the contracting-branch update

    phi_t = tr[(I - Dphi (x) Dphi/|Dphi|^2) D^2 phi] - |Dphi|.

Obstacles are enforced by projection after every step:

  inner (front trimmed to stay inside A):   phi := max(phi, phi_A),
  outer (front keeps int A inside):         phi := min(phi, phi_A).

The inner flow from a slightly enlarged set dying out in finite time, and
the outer flow from the set eventually covering every ball, are the two
geometric certificates that bound the asymptotic growth rate of the
height equation from above and below.

Also here: the two analytic graph barriers used for square sources --
a shrinking cone-capped profile scaled by the pinch ODE
lambda' = 1/lambda - 1, and a rising circular-arc subsolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, SimulationAbort
from .grid import EPS_GRAD_DEFAULT, Grid2D, ScalarField2D, cfl_dt
from .radial import RadialParams, extinction_time, integrate
from .sources import SourceSpec

#: reinitialize to signed distance every this many steps
N_REINIT = 20

INNER = "inner"
OUTER = "outer"


@dataclass
class Obstacle:
    mode: str  # inner | outer
    levelset: np.ndarray

    def __post_init__(self):
        if self.mode not in (INNER, OUTER):
            raise ConfigError(f"obstacle mode must be 'inner' or 'outer' (got {self.mode!r})")


@dataclass
class FrontState:
    """Level-set snapshot of an evolving compact set (negative inside)."""

    levelset: ScalarField2D
    obstacle: Obstacle = None  # type: ignore[assignment]
    time: float = 0.0

    def area(self) -> float:
        dx = self.levelset.grid.dx
        return float((self.levelset.values < 0.0).sum()) * dx * dx

    def is_empty(self) -> bool:
        """Set extinct: levelset positive with at least half-cell margin."""
        return float(self.levelset.values.min()) > self.levelset.grid.dx / 2.0

    def covers_ball(self, radius: float) -> bool:
        g = self.levelset.grid
        X, Y = g.meshgrid()
        inside = X * X + Y * Y <= radius * radius
        if not inside.any():
            return False
        return float(self.levelset.values[inside].max()) < -g.dx / 2.0

    def contour_points(self):
        """Zero-crossing points along grid lines (for dumps/diagnostics)."""
        g = self.levelset.grid
        v = self.levelset.values
        pts = []
        for axis in (0, 1):
            a = v if axis == 0 else v.T
            for i in range(a.shape[0]):
                row = a[i]
                sign = row[:-1] * row[1:]
                for j in np.nonzero(sign < 0.0)[0]:
                    frac = row[j] / (row[j] - row[j + 1])
                    if axis == 0:
                        pts.append((g.x(i), g.y(j) + frac * g.dx))
                    else:
                        pts.append((g.x(j) + frac * g.dx, g.y(i)))
        return pts


def signed_distance_field(grid: Grid2D, spec: SourceSpec, dilate: float = 0.0) -> ScalarField2D:
    """Signed distance (negative inside) to E dilated by `dilate`."""
    X, Y = grid.meshgrid()
    return ScalarField2D(grid, np.asarray(spec.signed_distance(X, Y), float) - dilate)


def front_from_set(
    grid: Grid2D, spec: SourceSpec, dilate: float = 0.0, obstacle_mode: str = None
) -> FrontState:
    """Initial front equal to (a dilation of) E, optionally as its own obstacle."""
    phi = signed_distance_field(grid, spec, dilate)
    obs = None
    if obstacle_mode is not None:
        obs = Obstacle(obstacle_mode, phi.values.copy())
    return FrontState(phi.copy(), obs, 0.0)


def evolve_front(
    state: FrontState,
    duration: float,
    eps_grad: float = EPS_GRAD_DEFAULT,
    n_reinit: int = N_REINIT,
    stop_when=None,
) -> FrontState:
    """Advance the front by `duration` (sub-stepped at the CFL bound).

    Applies the obstacle projection after every step and rebuilds the
    signed distance every `n_reinit` steps.  `stop_when(state) -> bool`
    is evaluated after each step; when it fires, integration stops early
    and the state carries the reached time.
    """
    if duration < 0:
        raise ConfigError(f"duration >= 0 required (got {duration})")
    g = state.levelset.grid
    state.levelset.check_finite()
    bound = cfl_dt(g, 0.0)
    n = max(1, int(math.ceil(duration / bound - 1e-12)))
    dt = duration / n
    phi = state.levelset.values.copy()
    buf = phi.copy()
    obs = state.obstacle
    eps2 = eps_grad * eps_grad
    inv = 1.0 / g.dx
    nx, ny = g.shape
    t = state.time
    out = FrontState(ScalarField2D(g, phi), obs, t)
    for k in range(1, n + 1):
        vmax, vmin = _kernels.step_front(
            phi, buf, 2, nx - 2, 2, ny - 2, inv, dt, eps2,
        )
        buf[:2, :] = phi[:2, :]
        buf[-2:, :] = phi[-2:, :]
        buf[:, :2] = phi[:, :2]
        buf[:, -2:] = phi[:, -2:]
        phi, buf = buf, phi
        if not np.isfinite(vmax) or not np.isfinite(vmin):
            raise SimulationAbort("non-finite level-set values")
        if obs is not None:
            if obs.mode == INNER:
                np.maximum(phi, obs.levelset, out=phi)
            else:
                np.minimum(phi, obs.levelset, out=phi)
        if k % n_reinit == 0:
            _kernels.reinit_signed_distance(phi, g.dx, 2)
            if obs is not None:
                if obs.mode == INNER:
                    np.maximum(phi, obs.levelset, out=phi)
                else:
                    np.minimum(phi, obs.levelset, out=phi)
        t = state.time + k * dt
        out.levelset = ScalarField2D(g, phi)
        out.time = t
        _check_front_inside(out)
        if stop_when is not None and stop_when(out):
            break
    return out


def _check_front_inside(state: FrontState):
    """Abort when the tracked set gets within a stencil of the ring."""
    v = state.levelset.values
    dx = state.levelset.grid.dx
    edge = min(
        v[1, :].min(), v[-2, :].min(), v[:, 1].min(), v[:, -2].min()
    )
    if edge < 2.0 * dx:
        raise SimulationAbort("front reached the boundary ring; enlarge the grid")


@dataclass(frozen=True)
class FrontVerdict:
    status: str  # empty_at | survived | covered_at | stalled
    time: float

    def __str__(self):
        return f"{self.status}({self.time:.6g})"


def _grid_for(radius: float, dx: float) -> Grid2D:
    return Grid2D.centered(radius, dx)


def check_G1(
    spec: SourceSpec, margin: float, t_max: float, dx: float = 0.02
) -> FrontVerdict:
    """Inner-obstacle certificate: does the front of the dilated set die out?

    Runs the inner-obstacle flow started from D = E dilated by `margin`
    (with D itself as the obstacle) and reports the first time the set is
    empty, or that it survived to t_max.
    """
    if not margin > 0:
        raise ConfigError(f"margin > 0 required (got {margin})")
    radius = spec.bounding_radius + margin
    grid = _grid_for(radius + 0.4, dx)
    state = front_from_set(grid, spec, dilate=margin, obstacle_mode=INNER)
    if state.is_empty():
        return FrontVerdict("empty_at", 0.0)
    done = evolve_front(state, t_max, stop_when=lambda s: s.is_empty())
    if done.is_empty():
        return FrontVerdict("empty_at", done.time)
    return FrontVerdict("survived", t_max)


def check_G2(
    spec: SourceSpec, r_target: float, t_max: float, dx: float = 0.02
) -> FrontVerdict:
    """Outer-obstacle certificate: does the front from E cover B(0, r_target)?

    r_target > 1 certifies unbounded growth in the plane, since balls
    beyond the critical radius expand without bound.
    """
    if not r_target > 1.0:
        raise ConfigError(f"r_target > 1 required in the plane (got {r_target})")
    radius = max(spec.bounding_radius, r_target)
    grid = _grid_for(radius + 0.75, dx)
    state = front_from_set(grid, spec, dilate=0.0, obstacle_mode=OUTER)
    X, Y = grid.meshgrid()
    mask = X * X + Y * Y <= r_target * r_target
    lim = -grid.dx / 2.0

    def covered(s: FrontState) -> bool:
        return bool(s.levelset.values[mask].max() < lim)

    if covered(state):
        return FrontVerdict("covered_at", 0.0)
    done = evolve_front(state, t_max, stop_when=covered)
    if covered(done):
        return FrontVerdict("covered_at", done.time)
    return FrontVerdict("stalled", t_max)


# ------------------------------------------------------------ graph barriers

@dataclass(frozen=True)
class BarrierParams:
    """Geometry for the square-source barriers.

    d is the square half-width, D = sqrt(2) d the corner radius, s the
    initial margin of the shrinking cap (upper barrier, needs d + s < 1),
    r the rising-arc radius (lower barrier, needs 1 < r < D).
    """

    d: float
    s: float = 0.1
    r: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if not self.d > 0:
            raise ConfigError(f"d > 0 required (got {self.d})")
        if not 0 < self.s:
            raise ConfigError(f"s > 0 required (got {self.s})")

    @property
    def D(self) -> float:
        return math.sqrt(2.0) * self.d

    @property
    def lambda0(self) -> float:
        return self.s / 2.0

    def require_cap_regime(self):
        if not (math.sqrt(0.5) < self.d < 1.0 and self.d + self.s < 1.0):
            raise ConfigError(
                f"cap barrier needs 1/sqrt(2) < d < 1 and d + s < 1 (got d={self.d}, s={self.s})"
            )

    def require_arc_regime(self):
        if self.r is None or not (1.0 < self.r < self.D):
            raise ConfigError(
                f"arc barrier needs 1 < r < D = sqrt(2) d (got r={self.r}, D={self.D:.6g})"
            )


def lambda_ode(params: BarrierParams, t: float) -> float:
    """Pinch factor: lambda' = 1/lambda - 1, lambda(0) = s/2 (RK4)."""
    lam0 = params.lambda0
    if lam0 >= 1.0:
        raise ConfigError(f"s/2 < 1 required (got s={params.s})")
    if t < 0:
        raise ConfigError(f"t >= 0 required (got {t})")

    def rhs(lam):
        return 1.0 / lam - 1.0

    lam = lam0
    s = 0.0
    while s < t:
        speed = abs(rhs(lam)) + 1e-12
        dt = min(0.02 * lam / speed + 1e-6, t - s)
        k1 = rhs(lam)
        k2 = rhs(lam + 0.5 * dt * k1)
        k3 = rhs(lam + 0.5 * dt * k2)
        k4 = rhs(lam + dt * k3)
        lam = lam + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += dt
    return lam


def lambda_hit_time(params: BarrierParams) -> tuple[float, float]:
    """(T, eps0): first time lambda(T) = d + s/sqrt(2), and the rate floor.

    T is obtained by quadrature of dt = lambda d(lambda) / (1 - lambda);
    the bound T <= 1/eps0 with eps0 = 1/(d + s/sqrt(2)) - 1 is verified.
    """
    params.require_cap_regime()
    target = params.d + params.s / math.sqrt(2.0)
    if target >= 1.0:
        raise ConfigError(f"target pinch d + s/sqrt(2) must stay below 1 (got {target})")
    T = integrate(lambda lam: lam / (1.0 - lam), params.lambda0, target)
    eps0 = 1.0 / target - 1.0
    if not T <= 1.0 / eps0 + 1e-9:
        raise AssertionError("pinch time exceeded its analytic bound 1/eps0")
    return T, eps0


def cap_profile(x: float) -> float:
    """Cone-capped profile: -|x| outside 1/sqrt(2), -sqrt(2)+sqrt(1-x^2) inside."""
    ax = abs(x)
    if ax >= math.sqrt(0.5):
        return -ax
    return -math.sqrt(2.0) + math.sqrt(1.0 - x * x)


def barrier_supersolution_w(params: BarrierParams, x: float, t: float) -> float:
    """Shrinking cap w(x, t) = lambda(t) W(x / lambda(t)) over the corner graph."""
    params.require_cap_regime()
    lam = lambda_ode(params, t)
    return lam * cap_profile(x / lam)


def subsolution_escape_time(params: BarrierParams) -> float:
    """T = r (2D - r) / (r - 1), when the rising arc clears the obstacle."""
    params.require_arc_regime()
    r = params.r
    return r * (2.0 * params.D - r) / (r - 1.0)


def barrier_subsolution_v(params: BarrierParams, x: float, t: float) -> float:
    """Rising arc v = max(-|x|, -2D + sqrt(r^2 - x^2) + (1 - 1/r) t) for |x| < r."""
    params.require_arc_regime()
    r = params.r
    if abs(x) >= r:
        return -abs(x)
    arc = -2.0 * params.D + math.sqrt(r * r - x * x) + (1.0 - 1.0 / r) * t
    return max(-abs(x), arc)


def default_g1_t_max(params: BarrierParams) -> float:
    """3x the pinch bound plus the collapse time of the residual ball."""
    T, eps0 = lambda_hit_time(params)
    residual = params.d + params.s / math.sqrt(2.0)
    collapse = extinction_time(RadialParams(n=2, c=1.0, r0=residual))
    return 3.0 * (1.0 / eps0 + collapse)


def default_g2_t_max(params: BarrierParams) -> float:
    return 3.0 * subsolution_escape_time(params)
