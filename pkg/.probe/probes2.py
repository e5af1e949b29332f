import numpy as np, time, json, sys
import crystalspeed as cs
from crystalspeed.evolve import SimConfig, solve_direct
from crystalspeed.analysis import fit_speed

out = {}

# --- criterion 2: supercritical R0=2, dx=0.04, T=10
g = cs.Grid2D.centered(12.6, 0.04)
probes = tuple((x, 0.0) for x in (0.0, 1.0, 2.0, 3.0))
cfg = SimConfig(grid=g, source=cs.BallSource(2.0, c=1.0), t_final=10.0,
                probes=probes, snapshot_times=(10.0,))
t0 = time.perf_counter()
tr = solve_direct(cfg)
el = time.perf_counter() - t0
sl = {f"{p[0]}": fit_speed(tr.log.t, tr.log.probe_values[:, k]) for k, p in enumerate(probes)}
f = tr.fields[-1]
pex = cs.RadialParams(n=2, c=1.0, r0=2.0)
X, Y = g.meshgrid()
R = np.hypot(X, Y)
mask = R <= 3.0
ue = np.vectorize(lambda r: cs.u_exact(pex, (r, 0.0), 10.0))(R[mask])
gap = float(np.abs(f.values[mask] - ue).max())
prof = {f"{r:.1f}": (f.sample(r, 0.0), cs.u_exact(pex, (r, 0.0), 10.0)) for r in (0.0, 1.0, 1.8, 2.0, 2.2, 2.6, 3.0)}
out["crit2"] = {"elapsed": el, "slopes": sl, "gap_r3_t10": gap, "profile": prof}
print(json.dumps(out["crit2"], indent=1), flush=True)

# --- criterion 8: thin annulus R0=1.5, w=2dx, dx=0.02, T=15
dx = 0.02
g = cs.Grid2D.centered(17.2, dx)
probes = ((0.0, 0.0), (0.75, 0.0), (1.5, 0.0), (3.0, 0.0))
cfg = SimConfig(grid=g, source=cs.AnnulusSource(1.5, 2 * dx, c=1.0), t_final=15.0, probes=probes)
t0 = time.perf_counter()
tr = solve_direct(cfg, collect_fields=False)
el = time.perf_counter() - t0
sl = {f"{p[0]}": fit_speed(tr.log.t, tr.log.probe_values[:, k]) for k, p in enumerate(probes)}
out["crit8"] = {"elapsed": el, "slopes": sl, "support": tr.log.support_radius[-1]}
print(json.dumps(out["crit8"], indent=1), flush=True)

# --- critical-case refinement trend, short horizon
trend = {}
for dx in (0.08, 0.04, 0.02):
    g = cs.Grid2D.centered(5.6, dx)
    cfg = SimConfig(grid=g, source=cs.BallSource(1.0, c=1.0), t_final=4.0,
                    probes=((0.0, 0.0), (2.0, 0.0)))
    t0 = time.perf_counter()
    tr = solve_direct(cfg, collect_fields=False)
    trend[str(dx)] = {
        "elapsed": time.perf_counter() - t0,
        "origin_slope_2_4": fit_speed(tr.log.t, tr.log.probe_values[:, 0]),
        "r2_slope_2_4": fit_speed(tr.log.t, tr.log.probe_values[:, 1]),
        "u_origin_T4": float(tr.log.u_origin[-1]),
    }
    print(dx, json.dumps(trend[str(dx)]), flush=True)
out["crit_trend"] = trend
json.dump(out, open(".probe/probes2.json", "w"), indent=1)
