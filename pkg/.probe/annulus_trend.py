import numpy as np, time, json
import crystalspeed as cs
from crystalspeed.evolve import SimConfig, solve_direct
from crystalspeed.analysis import fit_speed

res = {}
# mesh-coupled thickness (w = 2 dx) at a coarser mesh, same horizon
for dx, wmul, T in ((0.04, 2, 15.0), (0.02, 4, 10.0), (0.02, 8, 10.0)):
    src = cs.AnnulusSource(1.5, thickness=wmul * dx, c=1.0)
    g = cs.Grid2D.centered(1.5 + wmul * dx / 2 + T + 0.8, dx)
    cfg = SimConfig(grid=g, source=src, t_final=T)
    t0 = time.perf_counter()
    tr = solve_direct(cfg, collect_fields=False)
    res[f"dx={dx},w={wmul}dx,T={T}"] = {
        "elapsed": round(time.perf_counter() - t0, 1),
        "origin_slope": fit_speed(tr.log.t, tr.log.probe_values[:, 0]),
    }
    print(json.dumps(res), flush=True)
json.dump(res, open(".probe/annulus_trend.json", "w"), indent=1)
