"""Growth of a crystal surface by nucleation on a compact set plus
curvature-driven lateral spreading, at desk scale.

Public surface:

* grids and discrete operators (:mod:`crystalspeed.grid`)
* nucleation sources and mollification (:mod:`crystalspeed.sources`)
* time integration, direct and splitting (:mod:`crystalspeed.evolve`)
* exact radial solutions and control values (:mod:`crystalspeed.radial`)
* obstacle front propagation and barriers (:mod:`crystalspeed.fronts`)
* speed extraction and bounds (:mod:`crystalspeed.analysis`)
* command line front end (:mod:`crystalspeed.cli`)
"""

from .analysis import SpeedReport, build_speed_report, extract_bottom, extract_top, fit_speed, global_bounds
from .errors import ConfigError, CrystalSpeedError, SimulationAbort
from .evolve import (
    SimConfig,
    Trajectory,
    nucleation_step,
    propagation_step,
    solve_direct,
    splitting_error,
    step_direct,
    trotter_kato,
)
from .fronts import (
    BarrierParams,
    FrontState,
    FrontVerdict,
    barrier_subsolution_v,
    barrier_supersolution_w,
    check_G1,
    check_G2,
    evolve_front,
    front_from_set,
    lambda_hit_time,
    lambda_ode,
)
from .grid import CurvatureOperator, Grid2D, ScalarField2D, cfl_dt, curvature_term, gradnorm_upwind
from .radial import (
    RadialParams,
    control_value_dp,
    extinction_time,
    indicator_params,
    psi_eps,
    psi_exact,
    radial_speeds,
    radius_ode,
    u_exact,
)
from .sources import (
    AnnulusSource,
    BallSource,
    RadialProfileSource,
    SourceSpec,
    SquareSource,
    StepProfile,
    TwoBallsSource,
    UnionBallsSource,
    dist_to_set,
    mollify,
    rasterize,
    source_rate,
)

__version__ = "0.1.0"
