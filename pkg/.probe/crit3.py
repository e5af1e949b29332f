import numpy as np, time, json
import crystalspeed as cs
from crystalspeed.evolve import SimConfig, solve_direct

g = cs.Grid2D.centered(22.0, 0.02)
probes = tuple((x, 0.0) for x in (0.0, 0.5, 0.8, 1.0, 1.2, 1.4, 2.0, 3.0))
cfg = SimConfig(grid=g, source=cs.BallSource(1.0, c=1.0), t_final=20.0, probes=probes)
t0 = time.perf_counter()
tr = solve_direct(cfg, collect_fields=False)
el = time.perf_counter() - t0
lg = tr.log
np.savez('.probe/crit3.npz', t=lg.t[::20], pv=lg.probe_values[::20], rad=lg.support_radius[::20])
from crystalspeed.analysis import fit_speed
slopes = {f"{px}": fit_speed(lg.t, lg.probe_values[:, k]) for k, (px, py) in enumerate(probes)}
print(json.dumps({"elapsed_s": el, "support": lg.support_radius[-1], "slopes": slopes}, indent=1))
