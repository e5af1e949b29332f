"""Nucleation sources: compact sets E with deposition rate c, f = c*1_E.

Every source kind supports exact closed-form point membership, Euclidean
distance to the set, signed distance (negative inside), and the Lipschitz
upper mollification

    f_k(x) = sup_y ( f*(y) - k |x - y| ),

which for an indicator source reduces to max(0, c - k * dist(x, E)).
The mollified family decreases pointwise to c*1_E as k grows; solving with
f_k and shrinking 1/k together with the mesh is how the maximal solution
is approximated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import Grid2D


@dataclass(frozen=True)
class Step:
    """One closed/open interval of a piecewise-constant radial profile."""

    lo: float
    hi: float
    value: float
    closed_lo: bool = True
    closed_hi: bool = True

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi):
            raise ConfigError(f"interval requires 0 <= lo <= hi (got [{self.lo}, {self.hi}])")
        if self.value < 0:
            raise ConfigError(f"profile values must be >= 0 (got {self.value})")

    def contains(self, r: float) -> bool:
        if self.lo < r < self.hi:
            return True
        if r == self.lo and self.closed_lo:
            return True
        if r == self.hi and self.closed_hi:
            return True
        return False

    def radial_dist(self, r: float) -> float:
        return max(self.lo - r, r - self.hi, 0.0)


class StepProfile:
    """Nonnegative piecewise-constant h(r), stored with interval closures.

    Evaluation takes the max over all intervals containing r (the upper
    semicontinuous envelope of overlapping steps), 0 elsewhere.
    """

    def __init__(self, steps):
        self.steps = tuple(
            s if isinstance(s, Step) else Step(*s) for s in steps
        )
        if not self.steps:
            raise ConfigError("profile needs at least one interval")

    def __call__(self, r: float) -> float:
        best = 0.0
        for s in self.steps:
            if s.contains(r) and s.value > best:
                best = s.value
        return best

    @property
    def max_value(self) -> float:
        return max(s.value for s in self.steps)

    @property
    def support_hi(self) -> float:
        return max((s.hi for s in self.steps if s.value > 0), default=0.0)

    def mollified(self, k: float, r: float) -> float:
        best = 0.0
        for s in self.steps:
            cand = s.value - k * s.radial_dist(r)
            if cand > best:
                best = cand
        return best

    def radial_support_dist(self, r: float) -> float:
        return min((s.radial_dist(r) for s in self.steps if s.value > 0), default=np.inf)


class SourceSpec:
    """Base class: a compact nucleation set with rate c."""

    kind = "abstract"

    def __init__(self, c: float):
        if not c > 0:
            raise ConfigError(f"rate c > 0 required (got {c})")
        self.c = float(c)

    # membership / geometry -- subclasses implement the array forms; the
    # scalar spec operations below delegate to them.

    def contains(self, x, y):
        raise NotImplementedError

    def distance(self, x, y):
        raise NotImplementedError

    def signed_distance(self, x, y):
        raise NotImplementedError

    @property
    def bounding_radius(self) -> float:
        raise NotImplementedError

    @property
    def is_axis_symmetric(self) -> bool:
        """Invariant under both reflections x -> -x and y -> -y."""
        return False

    def rate_at(self, x, y):
        return np.where(self.contains(x, y), self.c, 0.0)

    def mollified(self, k: float, x, y):
        return np.maximum(0.0, self.c - k * self.distance(x, y))


class BallSource(SourceSpec):
    kind = "ball"

    def __init__(self, r0: float, c: float = 1.0, center=(0.0, 0.0)):
        super().__init__(c)
        if not r0 > 0:
            raise ConfigError(f"R0 > 0 required (got {r0})")
        self.r0 = float(r0)
        self.center = (float(center[0]), float(center[1]))

    def contains(self, x, y):
        return np.hypot(x - self.center[0], y - self.center[1]) <= self.r0

    def signed_distance(self, x, y):
        return np.hypot(x - self.center[0], y - self.center[1]) - self.r0

    def distance(self, x, y):
        return np.maximum(self.signed_distance(x, y), 0.0)

    @property
    def bounding_radius(self):
        return float(np.hypot(*self.center) + self.r0)

    @property
    def is_axis_symmetric(self):
        return self.center == (0.0, 0.0)


class SquareSource(SourceSpec):
    """Axis-aligned square {max(|x|, |y|) <= d}."""

    kind = "square"

    def __init__(self, d: float, c: float = 1.0):
        super().__init__(c)
        if not d > 0:
            raise ConfigError(f"halfwidth d > 0 required (got {d})")
        self.d = float(d)

    def contains(self, x, y):
        return np.maximum(np.abs(x), np.abs(y)) <= self.d

    def signed_distance(self, x, y):
        qx = np.abs(x) - self.d
        qy = np.abs(y) - self.d
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return outside + inside

    def distance(self, x, y):
        return np.hypot(np.maximum(np.abs(x) - self.d, 0.0), np.maximum(np.abs(y) - self.d, 0.0))

    @property
    def bounding_radius(self):
        return self.d * np.sqrt(2.0)

    @property
    def is_axis_symmetric(self):
        return True


class UnionBallsSource(SourceSpec):
    kind = "union_balls"

    def __init__(self, balls, c: float = 1.0, disjoint: bool = False):
        super().__init__(c)
        self.balls = tuple((float(x), float(y), float(r)) for x, y, r in balls)
        if not self.balls:
            raise ConfigError("union_balls needs at least one ball")
        if any(r <= 0 for _, _, r in self.balls):
            raise ConfigError("ball radii must be > 0")
        self.disjoint = bool(disjoint)
        if self.disjoint:
            for a in range(len(self.balls)):
                for b in range(a + 1, len(self.balls)):
                    xa, ya, ra = self.balls[a]
                    xb, yb, rb = self.balls[b]
                    if np.hypot(xa - xb, ya - yb) <= ra + rb:
                        raise ConfigError(
                            f"balls {a} and {b} are not disjoint but disjoint=True was set"
                        )

    def signed_distance(self, x, y):
        d = np.hypot(x - self.balls[0][0], y - self.balls[0][1]) - self.balls[0][2]
        for bx, by, br in self.balls[1:]:
            d = np.minimum(d, np.hypot(x - bx, y - by) - br)
        return d

    def contains(self, x, y):
        return self.signed_distance(x, y) <= 0.0

    def distance(self, x, y):
        return np.maximum(self.signed_distance(x, y), 0.0)

    @property
    def bounding_radius(self):
        return max(np.hypot(bx, by) + br for bx, by, br in self.balls)

    @property
    def is_axis_symmetric(self):
        pts = {(bx, by, br) for bx, by, br in self.balls}
        return all(
            (-bx, by, br) in pts and (bx, -by, br) in pts for bx, by, br in self.balls
        )


class TwoBallsSource(UnionBallsSource):
    """Two equal balls centered at (+-a, 0); they overlap when R0 > a."""

    kind = "two_balls"

    def __init__(self, a: float, r0: float, c: float = 1.0):
        if not a > 0:
            raise ConfigError(f"offset a > 0 required (got {a})")
        self.a = float(a)
        self.r0 = float(r0)
        UnionBallsSource.__init__(self, [(a, 0.0, r0), (-a, 0.0, r0)], c=c)


class AnnulusSource(SourceSpec):
    """Closed annulus of mid-radius R0 and radial thickness w."""

    kind = "annulus"

    def __init__(self, r0: float, thickness: float, c: float = 1.0):
        super().__init__(c)
        if not r0 > 0 or not thickness > 0 or thickness / 2.0 >= r0:
            raise ConfigError(
                f"annulus requires 0 < thickness/2 < R0 (got R0={r0}, thickness={thickness})"
            )
        self.r0 = float(r0)
        self.thickness = float(thickness)

    def signed_distance(self, x, y):
        return np.abs(np.hypot(x, y) - self.r0) - self.thickness / 2.0

    def contains(self, x, y):
        return self.signed_distance(x, y) <= 0.0

    def distance(self, x, y):
        return np.maximum(self.signed_distance(x, y), 0.0)

    @property
    def bounding_radius(self):
        return self.r0 + self.thickness / 2.0

    @property
    def is_axis_symmetric(self):
        return True

    def profile(self) -> StepProfile:
        return StepProfile(
            [(self.r0 - self.thickness / 2.0, self.r0 + self.thickness / 2.0, self.c, True, True)]
        )


class RadialProfileSource(SourceSpec):
    """Radially symmetric rate f(x) = h(|x|) given by a step table."""

    kind = "radial_profile"

    def __init__(self, profile, c: float = None):
        self.profile = profile if isinstance(profile, StepProfile) else StepProfile(profile)
        cmax = self.profile.max_value
        if cmax <= 0:
            raise ConfigError("radial profile must be positive somewhere")
        if c is not None and abs(c - cmax) > 1e-12 * max(1.0, cmax):
            raise ConfigError(f"rate c={c} disagrees with the profile maximum {cmax}")
        super().__init__(cmax)

    def rate_at(self, x, y):
        r = np.hypot(x, y)
        out = np.zeros_like(np.asarray(r, dtype=float))
        for s in self.profile.steps:
            inside = (r > s.lo) & (r < s.hi)
            if s.closed_lo:
                inside = inside | (r == s.lo)
            if s.closed_hi:
                inside = inside | (r == s.hi)
            out = np.maximum(out, np.where(inside, s.value, 0.0))
        return out if np.ndim(r) > 0 else float(out)

    def contains(self, x, y):
        return np.asarray(self.rate_at(x, y)) > 0.0

    def distance(self, x, y):
        r = np.asarray(np.hypot(x, y), dtype=float)
        d = np.full_like(r, np.inf)
        for s in self.profile.steps:
            if s.value > 0:
                d = np.minimum(d, np.maximum(np.maximum(s.lo - r, r - s.hi), 0.0))
        return d if np.ndim(r) > 0 else float(d)

    def signed_distance(self, x, y):
        # distance to the support; the inner structure of h carries no sign
        return self.distance(x, y)

    def mollified(self, k: float, x, y):
        r = np.asarray(np.hypot(x, y), dtype=float)
        out = np.zeros_like(r)
        for s in self.profile.steps:
            rd = np.maximum(np.maximum(s.lo - r, r - s.hi), 0.0)
            out = np.maximum(out, s.value - k * rd)
        return out if np.ndim(r) > 0 else float(out)

    @property
    def bounding_radius(self):
        return self.profile.support_hi

    @property
    def is_axis_symmetric(self):
        return True


# ------------------------------------------------------------------ ops

def source_rate(spec: SourceSpec, point) -> float:
    """f(point): c on the closed set E (h(|point|) for radial profiles)."""
    return float(spec.rate_at(point[0], point[1]))


def dist_to_set(spec: SourceSpec, point) -> float:
    """Euclidean distance from point to E (0 inside)."""
    return float(spec.distance(point[0], point[1]))


def mollify(spec: SourceSpec, k: float, point) -> float:
    """f_k(point) = sup_y (f*(y) - k|point - y|), clamped at 0."""
    if not k > 0:
        raise ConfigError(f"mollification index k > 0 required (got {k})")
    return float(spec.mollified(k, point[0], point[1]))


def rasterize(
    spec: SourceSpec,
    grid: Grid2D,
    k: float = None,
    supersample: bool = False,
) -> np.ndarray:
    """Per-cell source rates.

    k=None samples the exact indicator at cell centers (a cell gets rate c
    iff its center lies in E); with supersample=True the indicator is
    averaged over 4 sub-points per cell instead.  A finite k samples the
    mollified rate f_k at cell centers.
    """
    X, Y = grid.meshgrid()
    if k is not None:
        if not k > 0:
            raise ConfigError(f"mollification index k > 0 required (got {k})")
        return np.asarray(spec.mollified(k, X, Y), dtype=np.float64)
    if supersample:
        q = grid.dx / 4.0
        acc = np.zeros(grid.shape)
        for sx, sy in ((-q, -q), (-q, q), (q, -q), (q, q)):
            acc += np.asarray(spec.rate_at(X + sx, Y + sy), dtype=np.float64)
        return acc / 4.0
    return np.asarray(spec.rate_at(X, Y), dtype=np.float64)
