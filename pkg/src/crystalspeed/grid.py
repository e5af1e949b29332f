"""Uniform 2-D grid, scalar fields, and the discrete spatial operators.

The continuum operator being discretized is

    L[u] = tr[(I - Du (x) Du / |Du|^2) D^2 u] + |Du|
         = |Du| ( div(Du/|Du|) + 1 ),

the level-set form of motion by mean curvature plus a unit outward drive.
The curvature part uses central second differences, the |Du| part Godunov
upwinding, and cells where |Du| falls below a small threshold contribute
zero curvature (the degenerate-gradient convention under which the
operator vanishes on flats).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, SimulationAbort

#: cells with values above this count as "support" for boundary checks
SUPPORT_TOL = 1.0e-8

#: default regularization threshold for |Du| in the curvature term
EPS_GRAD_DEFAULT = 1.0e-6


@dataclass(frozen=True)
class Grid2D:
    """Uniform isotropic cell-centered grid.

    Cell (i, j) has center ``origin + (i*dx, j*dx)``.  The default origin
    centers the grid on 0, i.e. ``origin = (-(nx-1)*dx/2, -(ny-1)*dx/2)``.
    """

    nx: int
    ny: int
    dx: float
    origin: tuple[float, float] = None  # type: ignore[assignment]

    def __post_init__(self):
        errs = []
        if self.nx < 8 or self.ny < 8:
            errs.append(f"nx, ny >= 8 required (got {self.nx} x {self.ny})")
        if not self.dx > 0:
            errs.append(f"dx > 0 required (got {self.dx})")
        if errs:
            raise ConfigError(errs)
        if self.origin is None:
            object.__setattr__(
                self,
                "origin",
                (-(self.nx - 1) * self.dx / 2.0, -(self.ny - 1) * self.dx / 2.0),
            )
        else:
            object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def centered(cls, half_width: float, dx: float) -> "Grid2D":
        """Smallest even-sized centered grid whose box contains [-hw, hw]^2."""
        n = int(np.ceil(2.0 * half_width / dx)) + 2
        if n % 2:
            n += 1
        n = max(n, 8)
        return cls(nx=n, ny=n, dx=dx)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def x(self, i):
        return self.origin[0] + np.asarray(i) * self.dx

    def y(self, j):
        return self.origin[1] + np.asarray(j) * self.dx

    def meshgrid(self):
        """Cell-center coordinate arrays X, Y of shape (nx, ny)."""
        xs = self.origin[0] + np.arange(self.nx) * self.dx
        ys = self.origin[1] + np.arange(self.ny) * self.dx
        return np.meshgrid(xs, ys, indexing="ij")

    @property
    def half_width(self) -> tuple[float, float]:
        """Distance from 0 to the nearest box edge along each axis."""
        x0 = self.origin[0] - self.dx / 2.0
        x1 = self.origin[0] + (self.nx - 0.5) * self.dx
        y0 = self.origin[1] - self.dx / 2.0
        y1 = self.origin[1] + (self.ny - 0.5) * self.dx
        return (min(-x0, x1), min(-y0, y1))

    def contains_ball(self, radius: float) -> bool:
        hx, hy = self.half_width
        return radius < hx and radius < hy

    @property
    def is_centered_even(self) -> bool:
        """Grid symmetric under both axis reflections with no cell on an axis."""
        ox, oy = self.origin
        return (
            self.nx % 2 == 0
            and self.ny % 2 == 0
            and abs(ox + (self.nx - 1) * self.dx / 2.0) < 1e-12 * self.dx
            and abs(oy + (self.ny - 1) * self.dx / 2.0) < 1e-12 * self.dx
        )


@dataclass
class ScalarField2D:
    """A scalar field sampled at the cell centers of a :class:`Grid2D`."""

    grid: Grid2D
    values: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros(self.grid.shape)
        else:
            self.values = np.ascontiguousarray(self.values, dtype=np.float64)
            if self.values.shape != self.grid.shape:
                raise ConfigError(
                    f"field shape {self.values.shape} does not match grid {self.grid.shape}"
                )

    @classmethod
    def zeros(cls, grid: Grid2D) -> "ScalarField2D":
        return cls(grid)

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "ScalarField2D":
        X, Y = grid.meshgrid()
        return cls(grid, np.asarray(fn(X, Y), dtype=np.float64))

    def copy(self) -> "ScalarField2D":
        return ScalarField2D(self.grid, self.values.copy())

    def check_finite(self):
        if not np.isfinite(self.values).all():
            raise SimulationAbort("field contains non-finite values")

    def support_mask(self, tol: float = SUPPORT_TOL) -> np.ndarray:
        return self.values > tol

    def support_touches_boundary(self, tol: float = SUPPORT_TOL) -> bool:
        v = self.values
        return bool(
            (v[0, :] > tol).any()
            or (v[-1, :] > tol).any()
            or (v[:, 0] > tol).any()
            or (v[:, -1] > tol).any()
        )

    def assert_support_inside(self, tol: float = SUPPORT_TOL):
        if self.support_touches_boundary(tol):
            raise SimulationAbort(
                "support reached the boundary ring; enlarge the grid or shorten the horizon"
            )

    def sample(self, x: float, y: float) -> float:
        """Bilinear interpolation at a physical point (clamped to the box)."""
        g = self.grid
        fi = (x - g.origin[0]) / g.dx
        fj = (y - g.origin[1]) / g.dx
        fi = min(max(fi, 0.0), g.nx - 1.000001)
        fj = min(max(fj, 0.0), g.ny - 1.000001)
        i = int(fi)
        j = int(fj)
        ti = fi - i
        tj = fj - j
        v = self.values
        return float(
            (1 - ti) * (1 - tj) * v[i, j]
            + ti * (1 - tj) * v[i + 1, j]
            + (1 - ti) * tj * v[i, j + 1]
            + ti * tj * v[i + 1, j + 1]
        )

    # ---------------------------------------------------------------- dumps

    def to_csv(self, path):
        """Row-major dump with header ``i,j,x,y,value``."""
        g = self.grid
        with open(path, "w", newline="") as fh:
            fh.write("i,j,x,y,value\n")
            for i in range(g.nx):
                xi = g.origin[0] + i * g.dx
                row = self.values[i]
                for j in range(g.ny):
                    yj = g.origin[1] + j * g.dx
                    fh.write(f"{i},{j},{xi:.17g},{yj:.17g},{row[j]:.17g}\n")

    def to_pgm(self, path):
        """8-bit binary PGM with linear value mapping; min/max in a sidecar."""
        v = self.values
        vmin = float(v.min())
        vmax = float(v.max())
        scale = 255.0 / (vmax - vmin) if vmax > vmin else 0.0
        img = np.clip((v - vmin) * scale, 0.0, 255.0).astype(np.uint8)
        # PGM rasters are row-major top-to-bottom: put y on rows, x on columns
        img = img.T[::-1, :]
        with open(path, "wb") as fh:
            fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
            fh.write(img.tobytes())
        base, _ = os.path.splitext(path)
        with open(base + ".pgm.txt", "w") as fh:
            fh.write(f"min {vmin:.17g}\nmax {vmax:.17g}\n")


@dataclass(frozen=True)
class CurvatureOperator:
    """Discretization choices for the curvature + advection operator."""

    eps_grad: float = EPS_GRAD_DEFAULT
    scheme: str = "central2+godunov1"

    def __post_init__(self):
        if not self.eps_grad > 0:
            raise ConfigError(f"eps_grad > 0 required (got {self.eps_grad})")


def _one_sided_gradients(values: np.ndarray, dx: float):
    """First derivatives: central in the interior, one-sided on the ring."""
    ux = np.gradient(values, dx, axis=0)
    uy = np.gradient(values, dx, axis=1)
    return ux, uy


def curvature_term(fld: ScalarField2D, op: CurvatureOperator = CurvatureOperator()) -> ScalarField2D:
    """Per-cell value of tr[(I - Du (x) Du/|Du|^2) D^2 u].

    In 2-D this is the second derivative along the level-line tangent,

        (u_xx u_y^2 - 2 u_x u_y u_xy + u_yy u_x^2) / |Du|^2,

    computed with central differences in the interior and one-sided
    differences on the boundary ring.  Cells with |Du| < eps_grad return 0.
    """
    fld.check_finite()
    v = fld.values
    dx = fld.grid.dx
    out = np.empty_like(v)
    _kernels.curvature_interior(
        v, out, 1, fld.grid.nx - 1, 1, fld.grid.ny - 1, 1.0 / dx, op.eps_grad**2
    )
    # Boundary ring: same formula from one-sided/nested gradients.
    ux, uy = _one_sided_gradients(v, dx)
    uxx = np.gradient(ux, dx, axis=0)
    uxy = np.gradient(ux, dx, axis=1)
    uyy = np.gradient(uy, dx, axis=1)
    g2 = ux * ux + uy * uy
    with np.errstate(divide="ignore", invalid="ignore"):
        ring = np.where(
            g2 >= op.eps_grad**2,
            (uxx * uy * uy - 2.0 * ux * uy * uxy + uyy * ux * ux) / np.maximum(g2, op.eps_grad**2),
            0.0,
        )
    out[0, :] = ring[0, :]
    out[-1, :] = ring[-1, :]
    out[:, 0] = ring[:, 0]
    out[:, -1] = ring[:, -1]
    return ScalarField2D(fld.grid, out)


def gradnorm_upwind(fld: ScalarField2D, direction: str = "expanding") -> ScalarField2D:
    """Monotone upwind |Du|.

    direction="expanding"  : branch for a +|Du| term on height-type fields
                             (support spreads outward, maxima do not grow);
                             per axis g = max(D+ u, -D- u, 0).
    direction="contracting": mirror branch for a -|Du| term on level-set
                             fields (negative inside); per axis
                             g = max(D- u, -D+ u, 0).

    On the ring the unavailable one-sided difference is treated as 0,
    which keeps the scheme monotone with the Dirichlet ring.
    """
    if direction not in ("expanding", "contracting"):
        raise ConfigError(f"direction must be 'expanding' or 'contracting' (got {direction!r})")
    fld.check_finite()
    v = fld.values
    dx = fld.grid.dx
    dxp = np.zeros_like(v)
    dxm = np.zeros_like(v)
    dyp = np.zeros_like(v)
    dym = np.zeros_like(v)
    dxp[:-1, :] = (v[1:, :] - v[:-1, :]) / dx
    dxm[1:, :] = (v[1:, :] - v[:-1, :]) / dx
    dyp[:, :-1] = (v[:, 1:] - v[:, :-1]) / dx
    dym[:, 1:] = (v[:, 1:] - v[:, :-1]) / dx
    if direction == "expanding":
        gx = np.maximum(np.maximum(dxp, -dxm), 0.0)
        gy = np.maximum(np.maximum(dyp, -dym), 0.0)
    else:
        gx = np.maximum(np.maximum(dxm, -dxp), 0.0)
        gy = np.maximum(np.maximum(dym, -dyp), 0.0)
    return ScalarField2D(fld.grid, np.sqrt(gx * gx + gy * gy))


def cfl_dt(grid: Grid2D, c: float = 0.0) -> float:
    """Stable explicit step: min(dx^2/8, dx/4).

    The dx^2/8 piece bounds the parabolic curvature part (unit tangential
    diffusivity), the dx/4 piece the unit-speed advection part.  The rate
    c enters the source term only, which does not tighten the bound; it is
    validated here because the step is always used with a source attached.
    """
    if c < 0:
        raise ConfigError(f"rate c >= 0 required (got {c})")
    return min(grid.dx * grid.dx / 8.0, grid.dx / 4.0)
