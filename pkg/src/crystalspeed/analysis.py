"""Post-processing: top/bottom sets, growth-rate fits, and global bounds.

For a height trajectory with rate c, the top set {u = ct} (where deposits
never lost ground) stays inside the source set, while the positivity set
{u > 0} contains its interior; tracking both, plus fitted u/t slopes at
probe points, summarizes how fast and where the surface grows.  When an
inner-obstacle certificate supplies a die-out time t0, the measured
b = max_x u(x, t0)/t0 < c extends to the global bound
u <= b t + (c - b) t0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SimulationAbort
from .evolve import Trajectory
from .grid import ScalarField2D

TOP_TOL = 0.02


def extract_top(fld: ScalarField2D, t: float, c: float, tol: float = TOP_TOL) -> np.ndarray:
    """Cells with u >= c*t*(1 - tol): the discrete top set at time t."""
    if not t > 0:
        raise ConfigError(f"t > 0 required (got {t})")
    return fld.values >= c * t * (1.0 - tol)


def extract_bottom(fld: ScalarField2D, tol_abs: float) -> np.ndarray:
    """Cells with u > tol_abs: the discrete positivity set."""
    return fld.values > tol_abs


def fit_speed(times, values, window: float = 0.5) -> float:
    """Least-squares slope of u vs t over the trailing fraction of [0, T]."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 10:
        raise ConfigError(f"series too short for a fit ({times.size} < 10 samples)")
    if not 0.0 < window < 1.0:
        raise ConfigError(f"window must be in (0, 1) (got {window})")
    t_end = times[-1]
    sel = times >= t_end * (1.0 - window) - 1e-12
    ts = times[sel]
    vs = values[sel]
    if ts.size < 2:
        raise ConfigError("trailing window contains fewer than 2 samples")
    tbar = ts.mean()
    vbar = vs.mean()
    denom = float(((ts - tbar) ** 2).sum())
    if denom == 0.0:
        raise ConfigError("degenerate time window")
    return float(((ts - tbar) * (vs - vbar)).sum() / denom)


def global_bounds(traj: Trajectory, g1_t0: float):
    """Measured rate bound b = max u(., t0)/t0 and the affine envelope check.

    Verifies u(., t) <= b t + (c - b) t0 + slack on every later snapshot
    and returns (b, envelope callable).
    """
    if not g1_t0 > 0:
        raise ConfigError(f"t0 > 0 required (got {g1_t0})")
    c = traj.meta.source.c
    f0 = traj.field_at(g1_t0)
    k0 = int(np.argmin([abs(t - g1_t0) for t in traj.times]))
    t0 = traj.times[k0]
    if abs(t0 - g1_t0) > max(0.05 * g1_t0, traj.meta.dt * 2):
        raise ConfigError(
            f"no snapshot near t0={g1_t0} (closest {t0}); add it to snapshot_times"
        )
    b = float(f0.values.max()) / t0

    def envelope(t):
        return b * t + (c - b) * t0

    slack = 5.0 * traj.meta.grid.dx * c
    for t, fld in zip(traj.times, traj.fields):
        if t <= t0:
            continue
        top = float(fld.values.max())
        if top > envelope(t) + slack:
            raise SimulationAbort(
                f"affine bound violated at t={t}: max u = {top:.6g} >"
                f" {envelope(t) + slack:.6g} (inconsistent t0 or scheme issue)"
            )
    return b, envelope


@dataclass
class SpeedReport:
    """Asymptotic-speed summary of one run."""

    c: float
    probes: tuple
    slopes: tuple
    global_upper_b: float = None  # type: ignore[assignment]
    g1_t0: float = None  # type: ignore[assignment]
    lower_a: float = None  # type: ignore[assignment]
    lower_radius: float = None  # type: ignore[assignment]
    amax_cells: tuple = ()
    amin_cells: tuple = ()
    verdicts: dict = field(default_factory=dict)

    def __post_init__(self):
        tol = 0.05 * self.c
        for s in self.slopes:
            if not -1e-9 <= s <= self.c + tol:
                raise SimulationAbort(f"fitted slope {s} outside [0, c + tolerance]")
        if self.global_upper_b is not None and not self.global_upper_b < self.c:
            raise SimulationAbort(
                f"measured bound b={self.global_upper_b} is not below c={self.c}"
            )

    def lines(self):
        out = [f"rate c = {self.c}"]
        for (px, py), s in zip(self.probes, self.slopes):
            out.append(f"probe ({px:g},{py:g}): slope {s:.6g}")
        if self.global_upper_b is not None:
            out.append(f"global upper bound b = {self.global_upper_b:.6g} (t0 = {self.g1_t0:.6g})")
        if self.lower_a is not None:
            out.append(f"lower rate a = {self.lower_a:.6g} inside radius {self.lower_radius:g}")
        for (t, n_top), (_, n_bot) in zip(self.amax_cells, self.amin_cells):
            out.append(f"t={t:g}: top cells {n_top}, bottom cells {n_bot}")
        for name, verdict in self.verdicts.items():
            out.append(f"{name}: {verdict}")
        return out

    def to_text(self, path):
        with open(path, "w") as fh:
            fh.write("\n".join(self.lines()) + "\n")

    def slopes_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("probe_x,probe_y,slope\n")
            for (px, py), s in zip(self.probes, self.slopes):
                fh.write(f"{px:.17g},{py:.17g},{s:.17g}\n")

    def sets_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("t,amax_cells,amin_cells\n")
            for (t, n_top), (_, n_bot) in zip(self.amax_cells, self.amin_cells):
                fh.write(f"{t:.17g},{n_top},{n_bot}\n")


def build_speed_report(
    traj: Trajectory,
    window: float = 0.5,
    g1_t0: float = None,
    bottom_tol: float = None,
    verdicts: dict = None,
) -> SpeedReport:
    """Fit probe slopes and collect set sizes from a finished trajectory."""
    log = traj.log
    c = traj.meta.source.c
    slopes = tuple(
        fit_speed(log.t, log.probe_values[:, p], window) for p in range(len(log.probes))
    )
    if bottom_tol is None:
        bottom_tol = 10.0 * c * traj.meta.dt
    amax = []
    amin = []
    for t, fld in zip(traj.times, traj.fields):
        if t <= 0:
            continue
        amax.append((t, int(extract_top(fld, t, c).sum())))
        amin.append((t, int(extract_bottom(fld, bottom_tol).sum())))
    b = None
    if g1_t0 is not None:
        b, _ = global_bounds(traj, g1_t0)
    return SpeedReport(
        c=c,
        probes=log.probes,
        slopes=slopes,
        global_upper_b=b,
        g1_t0=g1_t0,
        amax_cells=tuple(amax),
        amin_cells=tuple(amin),
        verdicts=verdicts or {},
    )
