"""Exact and semi-exact solutions for radially symmetric sources.

With f(x) = c on the closed ball of radius R0 (or more generally
f(x) = h(|x|)), the growth equation reduces on profiles u = phi(|x|, t) to

    phi_t - (n-1)/r * phi_r - |phi_r| = h(r),      phi(., 0) = 0.

The stationary ball radius of the underlying front motion (outward speed
1 - (n-1)/R for a ball of radius R) splits three regimes by R0 vs n-1:

  subcritical  R0 < n-1 : u = min(psi(|x|), c t) with the closed form
      psi(r) = c[(r + (n-1) log|r-n+1|) - (R0 + (n-1) log|R0-n+1|)], r <= R0,
      psi = 0 beyond R0; u is bounded by psi(0).
  supercritical R0 > n-1 : u = c t on the ball and (phi(|x|, t))_+ outside,
      phi(r,t) = c( t - r - (n-1) log(r-n+1) + R0 + (n-1) log(R0-n+1) );
      u/t -> c locally uniformly.
  critical     R0 = n-1 : u = c t exactly on the closed critical ball and
      0 outside.

For general h the height admits the control representation

    phi(r,t) = sup { int_0^t h(gamma(s)) ds :
                     gamma(t) = r, |gamma' + (n-1)/gamma| <= 1 },

evaluated here by dynamic programming on an (r, t) lattice, and the
asymptotic speeds are

    c1 = max over [n-1, oo) of h     (growth rate on the critical ball),
    c2 = sup over (n-1, oo) of h     (growth rate outside it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError
from .sources import StepProfile

#: lattice floor keeping dynamic-programming trajectories off the r=0 singularity
DR_FLOOR = 1.0e-6

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class RadialParams:
    """Dimension n >= 2, deposition rate c > 0, ball radius R0 > 0."""

    n: int = 2
    c: float = 1.0
    r0: float = 1.0
    h: StepProfile = None  # type: ignore[assignment]

    def __post_init__(self):
        errs = []
        if int(self.n) != self.n or self.n < 2:
            errs.append(f"dimension n must be an integer >= 2 (got {self.n})")
        if not self.c > 0:
            errs.append(f"rate c > 0 required (got {self.c})")
        if not self.r0 > 0:
            errs.append(f"R0 > 0 required (got {self.r0})")
        if errs:
            raise ConfigError(errs)

    @property
    def regime(self) -> str:
        # exact comparison on purpose: equality is a user-declared regime
        if self.r0 == self.n - 1:
            return CRITICAL
        return SUBCRITICAL if self.r0 < self.n - 1 else SUPERCRITICAL


def _adaptive_simpson(f, a, b, tol):
    """Classic recursive adaptive Simpson quadrature (absolute tolerance)."""

    def simpson(fa, fm, fb, a_, b_):
        return (b_ - a_) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a_, b_, fa, fm, fb, whole, tol_, depth):
        m = 0.5 * (a_ + b_)
        lm = 0.5 * (a_ + m)
        rm = 0.5 * (m + b_)
        flm = f(lm)
        frm = f(rm)
        left = simpson(fa, flm, fm, a_, m)
        right = simpson(fm, frm, fb, m, b_)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol_:
            return left + right + (left + right - whole) / 15.0
        return recurse(a_, m, fa, flm, fm, left, tol_ / 2.0, depth - 1) + recurse(
            m, b_, fm, frm, fb, right, tol_ / 2.0, depth - 1
        )

    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(fa, fm, fb, a, b)
    return recurse(a, b, fa, fm, fb, whole, tol, 48)


def integrate(f, a, b, breakpoints=(), tol=1.0e-8):
    """Adaptive Simpson with the interval split at interior breakpoints."""
    pts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    return sum(_adaptive_simpson(f, lo, hi, tol) for lo, hi in zip(pts[:-1], pts[1:]))


# --------------------------------------------------------------- closed forms

def psi_exact(params: RadialParams, r) -> float:
    """Stationary cap height psi(r) for the subcritical regime (R0 < n-1)."""
    if params.regime != SUBCRITICAL:
        raise ConfigError(
            f"psi is defined for R0 < n-1 only (R0={params.r0}, n={params.n})"
        )
    n1 = params.n - 1
    r = np.asarray(r, dtype=float)
    edge = params.r0 + n1 * np.log(abs(params.r0 - n1))
    with np.errstate(divide="ignore"):
        val = params.c * ((r + n1 * np.log(np.abs(r - n1))) - edge)
    out = np.where(r >= params.r0, 0.0, val)
    return float(out) if out.ndim == 0 else out


def flattening_time(params: RadialParams) -> float:
    """Time after which the subcritical solution equals psi everywhere."""
    return psi_exact(params, 0.0) / params.c


def ramp(r0: float, eps: float):
    """Linear cutoff: 1 on [0, r0], down to 0 across [r0, r0+eps]."""

    def f(r):
        if r <= r0:
            return 1.0
        if r >= r0 + eps:
            return 0.0
        return (r0 + eps - r) / eps

    return f


def psi_eps(params: RadialParams, eps: float, r) -> float:
    """Regularized cap: quadrature of (1 - (n-1)/s) psi_r = c * ramp(s).

    Decreases pointwise to psi_exact as eps -> 0.  Requires R0 + eps < n-1.
    """
    n1 = params.n - 1
    if not eps > 0:
        raise ConfigError(f"eps > 0 required (got {eps})")
    if params.r0 + eps >= n1:
        raise ConfigError(
            f"R0 + eps < n-1 required (got {params.r0} + {eps} >= {n1})"
        )
    cut = ramp(params.r0, eps)

    def integrand(s):
        if s == 0.0:
            return 0.0
        return params.c * cut(s) / (1.0 - n1 / s)

    hi = params.r0 + eps

    def one(rv):
        rv = abs(rv)
        if rv >= hi:
            return 0.0
        return -integrate(integrand, rv, hi, breakpoints=(params.r0,))

    r = np.asarray(r, dtype=float)
    if r.ndim == 0:
        return one(float(r))
    return np.array([one(v) for v in r.ravel()]).reshape(r.shape)


def phi_supercritical(params: RadialParams, r, t):
    """Outward ramp phi(r, t) for R0 > n-1 (may be negative before onset)."""
    n1 = params.n - 1
    r = np.asarray(r, dtype=float)
    return params.c * (
        t - r - n1 * np.log(r - n1) + params.r0 + n1 * np.log(params.r0 - n1)
    )


def u_exact(params: RadialParams, x, t: float) -> float:
    """Maximal-solution height at point x = (x1, x2, ...) and time t.

    Dispatches on the regime; x may also be a plain radius (scalar).
    """
    r = float(np.hypot(*x)) if np.ndim(x) > 0 else float(abs(x))
    if t <= 0:
        return 0.0
    n1 = params.n - 1
    reg = params.regime
    if reg == SUBCRITICAL:
        return float(min(psi_exact(params, r), params.c * t))
    if reg == CRITICAL:
        return params.c * t if r <= n1 else 0.0
    if r < params.r0:
        return params.c * t
    return float(max(phi_supercritical(params, r, t), 0.0))


# ----------------------------------------------------------------- radius ODE

def _radius_rhs(n1: float, r: float) -> float:
    return 1.0 - n1 / r


def radius_ode(params: RadialParams, t: float, floor: float = DR_FLOOR) -> float:
    """Ball radius under the front motion dR/dt = 1 - (n-1)/R, R(0) = R0.

    Adaptive RK4 (step shrinks as R approaches 0); returns 0.0 at and after
    extinction.  R0 = n-1 is recognized exactly and returns the fixed point.
    """
    if t < 0:
        raise ConfigError(f"t >= 0 required (got {t})")
    n1 = float(params.n - 1)
    if params.r0 == n1:
        return params.r0
    r = params.r0
    s = 0.0
    while s < t:
        # keep |dR| per step below ~2% of R; cap by the remaining time
        speed = abs(_radius_rhs(n1, r)) + 1e-12
        dt = min(0.02 * r / speed, t - s)
        k1 = _radius_rhs(n1, r)
        k2 = _radius_rhs(n1, r + 0.5 * dt * k1)
        k3 = _radius_rhs(n1, r + 0.5 * dt * k2)
        k4 = _radius_rhs(n1, r + dt * k3)
        rn = r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(rn) or rn <= floor:
            return 0.0
        r = rn
        s += dt
    return r


def extinction_time(params: RadialParams) -> float:
    """Collapse time for R0 < n-1 by quadrature of dt = dR / ((n-1)/R - 1)."""
    n1 = params.n - 1
    if params.r0 >= n1:
        raise ConfigError(f"extinction requires R0 < n-1 (got R0={params.r0}, n={params.n})")
    return integrate(lambda s: s / (n1 - s), 0.0, params.r0)


# ------------------------------------------------------- control representation

@dataclass
class ValueTable:
    """Dynamic-programming value table V(r_i, t_k) on a radius lattice."""

    r: np.ndarray
    times: np.ndarray
    values: np.ndarray  # shape (len(times), len(r))

    def at(self, r: float, t: float) -> float:
        k = int(np.argmin(np.abs(self.times - t)))
        return float(np.interp(r, self.r, self.values[k]))


def _dp_table(params: RadialParams, r_max: float, t_max: float, n_controls: int = 41):
    """Backward DP for the running-reward control problem.

    Looking back one step from radius r, admissible pre-step positions are
    r + dt*((n-1)/r + a) with |a| <= 1 (the time-reversed constraint set of
    |gamma' + (n-1)/gamma| <= 1); each step collects dt*h(r).
    """
    if params.h is None:
        raise ConfigError("control values need a radial profile h")
    n1 = float(params.n - 1)
    dr = 0.01 * n1
    dt = dr / 2.0
    r_lattice = np.arange(dr, r_max + dr / 2.0, dr)
    nr = r_lattice.size
    h_vals = np.array([params.h(rv) for rv in r_lattice])
    controls = np.linspace(-1.0, 1.0, n_controls)
    prev = r_lattice[None, :] + dt * (n1 / r_lattice[None, :] + controls[:, None])
    prev = np.clip(prev, r_lattice[0], r_lattice[-1])
    idx = np.clip(((prev - r_lattice[0]) / dr).astype(np.int64), 0, nr - 2)
    frac = (prev - r_lattice[0]) / dr - idx
    lo_w = np.ascontiguousarray(1.0 - frac)
    hi_w = np.ascontiguousarray(frac)
    idx = np.ascontiguousarray(idx)

    n_steps = int(round(t_max / dt))
    times = np.arange(n_steps + 1) * dt
    values = np.empty((n_steps + 1, nr))
    values[0] = 0.0
    v = np.zeros(nr)
    reward = dt * h_vals
    for k in range(1, n_steps + 1):
        _kernels.dp_backward_sweep(v, reward, idx, lo_w, hi_w, 1)
        values[k] = v
    return ValueTable(r_lattice, times, values)


def control_value_dp(params: RadialParams, r: float, t: float, r_max: float = None) -> float:
    """Optimal running reward sup int_0^t h(gamma) over admissible curves ending at r."""
    if not r > 0:
        raise ConfigError(f"r > 0 required (got {r})")
    if params.h is None:
        raise ConfigError("control values need a radial profile h")
    if r_max is None:
        r_max = max(r, params.h.support_hi, params.n - 1.0) + min(t, 6.0) + 1.0
    table = _dp_table(params, r_max, t)
    return table.at(r, t)


def indicator_params(n: int, c: float, r0: float) -> RadialParams:
    """Radial parameters whose profile is the ball indicator c*1_[0, R0]."""
    return RadialParams(n=n, c=c, r0=r0, h=StepProfile([(0.0, r0, c, True, True)]))


# -------------------------------------------------------------- speed formulas

def radial_speeds(params: RadialParams) -> tuple[float, float]:
    """(c1, c2): max of h on [n-1, oo) and sup of h on (n-1, oo).

    Empty mass beyond n-1 gives 0 by the convention sup(empty) = 0 for
    nonnegative h.  Always c1 >= c2 (the closed max includes r = n-1).
    """
    if params.h is None:
        raise ConfigError("radial speeds need a radial profile h")
    n1 = params.n - 1
    c1 = 0.0
    c2 = 0.0
    for s in params.h.steps:
        touches_closed = s.hi > n1 or (s.hi == n1 and s.closed_hi) or s.contains(n1)
        if s.lo > n1 or touches_closed:
            c1 = max(c1, s.value)
        touches_open = s.hi > n1  # any interval with hi > n-1 meets (n-1, oo)
        if touches_open or s.lo > n1:
            c2 = max(c2, s.value)
    if c1 < c2:
        raise AssertionError("c1 >= c2 must hold by construction")
    return c1, c2
