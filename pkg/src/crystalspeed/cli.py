"""Command line front end.

    crystal-speed <command> --config <path> [--out <dir>] [--threads N]

Commands: simulate, radial, fronts, speed, compare, verify.  One JSON
configuration file describes one run; unknown keys are rejected so typos
fail loudly.  Artifacts land in <out>/<case-name>/ as CSV tables, PGM
rasters (with min/max sidecars) and a manifest.txt echoing the resolved
configuration.  Given the same config, all CSV outputs are byte
identical between runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, acceptance
from .acceptance import SAMPLE_SEED
from .analysis import build_speed_report
from .errors import ConfigError, CrystalSpeedError
from .evolve import SimConfig, solve_direct, splitting_error, trotter_kato
from .fronts import check_G1, check_G2, evolve_front, front_from_set
from .grid import EPS_GRAD_DEFAULT, Grid2D
from .radial import RadialParams, _dp_table, u_exact
from .sources import (
    AnnulusSource,
    BallSource,
    RadialProfileSource,
    SquareSource,
    StepProfile,
    TwoBallsSource,
    UnionBallsSource,
)

COMMANDS = ("simulate", "radial", "fronts", "speed", "compare", "verify")


def _require_keys(block: dict, allowed: set, required: set, where: str, errors: list):
    for key in block:
        if key not in allowed:
            errors.append(f"{where}: unknown key {key!r}")
    for key in required:
        if key not in block:
            errors.append(f"{where}: missing required key {key!r}")


def _parse_grid(block: dict, errors: list):
    _require_keys(block, {"nx", "ny", "dx", "origin", "half_width"}, {"dx"}, "grid", errors)
    if errors:
        return None
    try:
        if "half_width" in block:
            if "nx" in block or "ny" in block:
                errors.append("grid: give either half_width or nx/ny, not both")
                return None
            return Grid2D.centered(float(block["half_width"]), float(block["dx"]))
        origin = tuple(block["origin"]) if "origin" in block else None
        return Grid2D(int(block["nx"]), int(block["ny"]), float(block["dx"]), origin)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        errors.append(f"grid: {exc}")
        return None


SOURCE_KEYS = {
    "ball": {"r0", "center"},
    "square": {"d"},
    "union_balls": {"balls", "disjoint"},
    "two_balls": {"a", "r0"},
    "annulus": {"r0", "thickness"},
    "radial_profile": {"profile"},
}


def _parse_source(block: dict, errors: list):
    kind = block.get("kind")
    if kind not in SOURCE_KEYS:
        errors.append(f"source: kind must be one of {sorted(SOURCE_KEYS)} (got {kind!r})")
        return None
    _require_keys(block, SOURCE_KEYS[kind] | {"kind", "c"}, {"kind"}, "source", errors)
    if errors:
        return None
    c = float(block.get("c", 1.0))
    try:
        if kind == "ball":
            return BallSource(float(block["r0"]), c=c, center=tuple(block.get("center", (0.0, 0.0))))
        if kind == "square":
            return SquareSource(float(block["d"]), c=c)
        if kind == "union_balls":
            return UnionBallsSource(block["balls"], c=c, disjoint=bool(block.get("disjoint", False)))
        if kind == "two_balls":
            return TwoBallsSource(float(block["a"]), float(block["r0"]), c=c)
        if kind == "annulus":
            return AnnulusSource(float(block["r0"]), float(block["thickness"]), c=c)
        return RadialProfileSource(StepProfile(block["profile"]), c=None if "c" not in block else c)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        errors.append(f"source: {exc}")
        return None


class RunConfig:
    """Validated payload for one CLI command."""

    def __init__(self, command: str, raw: dict, name: str):
        self.command = command
        self.raw = raw
        self.name = name
        self.grid = None
        self.source = None
        self.sim = None
        self.numerics = {}
        self.run = {}
        self.radial = None
        self.fronts = {}
        self.speed = {}
        self.compare = {}
        self.verify = {}
        self.formats = ("csv",)

    def resolved_lines(self):
        out = [f"command {self.command}", f"name {self.name}"]
        if self.sim is not None:
            cfg = self.sim
            out += [
                f"grid nx={cfg.grid.nx} ny={cfg.grid.ny} dx={cfg.grid.dx:.17g}",
                f"source kind={self.source.kind} c={self.source.c:.17g}",
                f"t_final {cfg.t_final:.17g}",
                f"dt {cfg.dt:.17g}",
                f"mollify_k {cfg.mollify_k:.17g}",
                f"eps_grad {cfg.eps_grad:.17g}",
                f"tk_tau {cfg.tk_tau}",
                f"snapshot_times {list(cfg.snapshot_times)}",
                f"probes {list(cfg.probes)}",
                f"supersample {cfg.supersample}",
                f"symmetry {cfg.symmetry} (quadrant={cfg.use_quadrant})",
            ]
        out.append(f"sample_seed {SAMPLE_SEED}")
        return out


TOP_KEYS = {
    "simulate": {"name", "grid", "source", "numerics", "run", "output"},
    "speed": {"name", "grid", "source", "numerics", "run", "speed", "output"},
    "compare": {"name", "grid", "source", "numerics", "run", "compare", "output"},
    "radial": {"name", "radial", "output"},
    "fronts": {"name", "source", "fronts", "output"},
    "verify": {"name", "verify", "output"},
}

NUMERICS_KEYS = {"mollify_k", "tk_tau", "eps_grad", "n_reinit", "supersample", "symmetry"}
RUN_KEYS = {"t_final", "snapshot_times", "probes", "k_sweep"}


def parse_config(text: str, command: str, default_name: str = "run") -> RunConfig:
    """Parse + validate one JSON config for `command`.

    Raises ConfigError carrying every field-level problem found.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    errors: list = []
    _require_keys(raw, TOP_KEYS[command], set(), "top level", errors)
    cfg = RunConfig(command, raw, str(raw.get("name", default_name)))

    out_block = raw.get("output", {})
    _require_keys(out_block, {"formats", "directory"}, set(), "output", errors)
    cfg.formats = tuple(out_block.get("formats", ("csv",)))
    for f in cfg.formats:
        if f not in ("csv", "pgm"):
            errors.append(f"output: unknown format {f!r}")

    if command in ("simulate", "speed", "compare"):
        for key in ("grid", "source", "run"):
            if key not in raw:
                errors.append(f"top level: missing required section {key!r}")
        if errors:
            raise ConfigError(errors)
        grid = _parse_grid(raw["grid"], errors)
        source = _parse_source(raw["source"], errors)
        num = raw.get("numerics", {})
        _require_keys(num, NUMERICS_KEYS, set(), "numerics", errors)
        run = raw["run"]
        _require_keys(run, RUN_KEYS, {"t_final"}, "run", errors)
        if errors:
            raise ConfigError(errors)
        try:
            cfg.sim = SimConfig(
                grid=grid,
                source=source,
                t_final=float(run["t_final"]),
                mollify_k=num.get("mollify_k"),
                tk_tau=num.get("tk_tau"),
                snapshot_times=tuple(run.get("snapshot_times", ())),
                probes=tuple(tuple(p) for p in run.get("probes", [])) or SimConfig.probes,
                eps_grad=float(num.get("eps_grad", EPS_GRAD_DEFAULT)),
                supersample=bool(num.get("supersample", False)),
                symmetry=str(num.get("symmetry", "auto")),
            )
        except ConfigError as exc:
            errors.extend(exc.errors)
            raise ConfigError(errors) from exc
        cfg.grid, cfg.source = grid, source
        cfg.numerics = dict(num)
        cfg.run = dict(run)
        if command == "speed":
            blk = raw.get("speed", {})
            _require_keys(blk, {"window", "g1_t0", "bottom_tol"}, set(), "speed", errors)
            cfg.speed = dict(blk)
        if command == "compare":
            blk = raw.get("compare", {})
            _require_keys(blk, {"taus"}, {"taus"}, "compare", errors)
            cfg.compare = dict(blk)
            for tau in blk.get("taus", ()):
                ratio = cfg.sim.t_final / float(tau)
                if abs(ratio - round(ratio)) > 1e-9:
                    errors.append(
                        f"compare: tau={tau} must divide T={cfg.sim.t_final} a whole"
                        f" number of times (double-step product requirement)"
                    )
    elif command == "radial":
        blk = raw.get("radial")
        if blk is None:
            errors.append("top level: missing required section 'radial'")
            raise ConfigError(errors)
        _require_keys(
            blk, {"n", "c", "r0", "profile", "radii", "times"}, {"n", "c", "r0"}, "radial", errors
        )
        if errors:
            raise ConfigError(errors)
        try:
            prof = StepProfile(blk["profile"]) if "profile" in blk else None
            cfg.radial = RadialParams(
                n=int(blk["n"]), c=float(blk["c"]), r0=float(blk["r0"]), h=prof
            )
        except ConfigError as exc:
            errors.extend(exc.errors)
        cfg.run = {
            "radii": [float(r) for r in blk.get("radii", (0.25, 0.5, 1.0, 1.5, 2.0))],
            "times": [float(t) for t in blk.get("times", (1.0, 2.0, 5.0))],
        }
        for r in cfg.run["radii"]:
            if r <= 0:
                errors.append(f"radial: radii must satisfy r > 0 (got {r})")
    elif command == "fronts":
        if "source" not in raw or "fronts" not in raw:
            errors.append("top level: fronts command needs 'source' and 'fronts' sections")
            raise ConfigError(errors)
        cfg.source = _parse_source(raw["source"], errors)
        blk = raw["fronts"]
        _require_keys(
            blk,
            {"check", "margin", "r_target", "t_max", "dx", "duration", "mode"},
            {"dx"},
            "fronts",
            errors,
        )
        cfg.fronts = dict(blk)
        check = blk.get("check", "none")
        if check not in ("g1", "g2", "none"):
            errors.append(f"fronts: check must be g1|g2|none (got {check!r})")
        if check == "g1" and "margin" not in blk:
            errors.append("fronts: g1 check needs 'margin' > 0")
        if check == "g2" and "r_target" not in blk:
            errors.append("fronts: g2 check needs 'r_target' > 1")
        if check == "none" and "duration" not in blk:
            errors.append("fronts: plain evolution needs 'duration'")
    else:  # verify
        blk = raw.get("verify", {})
        _require_keys(blk, {"cases"}, set(), "verify", errors)
        cfg.verify = {"cases": list(blk.get("cases", ["all"]))}
        known = set(acceptance.CASE_NAMES)
        for case in cfg.verify["cases"]:
            if case != "all" and case not in known:
                errors.append(f"verify: unknown case {case!r} (known: {sorted(known)})")
    if errors:
        raise ConfigError(errors)
    return cfg


# ------------------------------------------------------------------ outputs

def _write_manifest(path, cfg: RunConfig, wall: float, extra=()):
    with open(path, "w") as fh:
        fh.write(f"crystalspeed {__version__}\n")
        fh.write(f"numpy {np.__version__}\n")
        fh.write(f"python {sys.version.split()[0]}\n")
        for line in cfg.resolved_lines():
            fh.write(line + "\n")
        for line in extra:
            fh.write(line + "\n")
        fh.write(f"wall_seconds {wall:.3f}\n")


def _dump_trajectory(traj, outdir, formats):
    traj.log.to_csv(os.path.join(outdir, "scalar_log.csv"))
    with open(os.path.join(outdir, "probes.csv"), "w", newline="") as fh:
        heads = ",".join(f"u_{px:g}_{py:g}" for px, py in traj.log.probes)
        fh.write(f"t,{heads}\n")
        for k in range(traj.log.t.size):
            vals = ",".join(f"{v:.17g}" for v in traj.log.probe_values[k])
            fh.write(f"{traj.log.t[k]:.17g},{vals}\n")
    for t, fld in zip(traj.times, traj.fields):
        tag = f"{t:.6g}".replace(".", "p")
        if "csv" in formats:
            fld.to_csv(os.path.join(outdir, f"field_t{tag}.csv"))
        if "pgm" in formats:
            fld.to_pgm(os.path.join(outdir, f"field_t{tag}.pgm"))


def _cmd_simulate(cfg: RunConfig, outdir: str):
    lines = []
    if cfg.run.get("k_sweep"):
        from dataclasses import replace

        dx = cfg.sim.grid.dx
        ks = [1.0 / dx, 2.0 / dx, 4.0 / dx]
        finals = []
        for k in ks:
            traj = solve_direct(replace(cfg.sim, mollify_k=k))
            finals.append(traj.fields[-1].values)
            lines.append(f"k={k:.17g} max_u_final={finals[-1].max():.17g}")
        spread = max(
            float(np.abs(a - b).max()) for a in finals for b in finals
        )
        lines.append(f"k_sweep_sup_spread {spread:.17g}")
        with open(os.path.join(outdir, "k_sweep.csv"), "w", newline="") as fh:
            fh.write("k,max_u_final\n")
            for k, f in zip(ks, finals):
                fh.write(f"{k:.17g},{f.max():.17g}\n")
    if cfg.sim.tk_tau is not None:
        traj = trotter_kato(cfg.sim)
        lines.append("scheme double-step")
    else:
        traj = solve_direct(cfg.sim)
        lines.append("scheme direct")
    _dump_trajectory(traj, outdir, cfg.formats)
    return lines


def _cmd_speed(cfg: RunConfig, outdir: str):
    traj = solve_direct(cfg.sim)
    rep = build_speed_report(
        traj,
        window=float(cfg.speed.get("window", 0.5)),
        g1_t0=cfg.speed.get("g1_t0"),
        bottom_tol=cfg.speed.get("bottom_tol"),
    )
    _dump_trajectory(traj, outdir, cfg.formats)
    rep.to_text(os.path.join(outdir, "report.txt"))
    rep.slopes_to_csv(os.path.join(outdir, "slopes.csv"))
    rep.sets_to_csv(os.path.join(outdir, "sets.csv"))
    return rep.lines()


def _cmd_compare(cfg: RunConfig, outdir: str):
    taus = [float(t) for t in cfg.compare["taus"]]
    rows = splitting_error(cfg.sim, taus)
    with open(os.path.join(outdir, "compare.csv"), "w", newline="") as fh:
        fh.write("tau,gap\n")
        for tau, gap in rows:
            fh.write(f"{tau:.17g},{gap:.17g}\n")
    return [f"tau={tau:g} gap={gap:.6g}" for tau, gap in rows]


def _cmd_radial(cfg: RunConfig, outdir: str):
    p = cfg.radial
    radii = cfg.run["radii"]
    times = cfg.run["times"]
    rows = []
    if p.h is not None:
        r_max = max(max(radii), p.h.support_hi, p.n - 1.0) + min(max(times), 6.0) + 1.0
        table = _dp_table(p, r_max, max(times))
    else:
        table = None
    for r in radii:
        for t in times:
            ue = u_exact(p, (r, 0.0), t) if p.h is None else float("nan")
            if p.h is not None and len(p.h.steps) == 1 and p.h.steps[0].lo == 0.0:
                ue = u_exact(
                    RadialParams(n=p.n, c=p.h.steps[0].value, r0=p.h.steps[0].hi), (r, 0.0), t
                )
            udp = table.at(r, t) if table is not None else float("nan")
            rows.append((r, t, ue, udp))
    with open(os.path.join(outdir, "radial.csv"), "w", newline="") as fh:
        fh.write("r,t,u_exact,u_dp\n")
        for r, t, ue, udp in rows:
            fh.write(f"{r:.17g},{t:.17g},{ue:.17g},{udp:.17g}\n")
    return [f"{len(rows)} radial samples written"]


def _cmd_fronts(cfg: RunConfig, outdir: str):
    blk = cfg.fronts
    dx = float(blk["dx"])
    check = blk.get("check", "none")
    if check == "g1":
        verdict = check_G1(cfg.source, float(blk["margin"]), float(blk["t_max"]), dx=dx)
        return [f"G1 verdict: {verdict}"]
    if check == "g2":
        verdict = check_G2(cfg.source, float(blk["r_target"]), float(blk["t_max"]), dx=dx)
        return [f"G2 verdict: {verdict}"]
    duration = float(blk["duration"])
    mode = blk.get("mode")
    grid = Grid2D.centered(cfg.source.bounding_radius + duration + 0.75, dx)
    state = front_from_set(grid, cfg.source, obstacle_mode=mode)
    r_target = float(blk.get("r_target", 1.0))
    X, Y = grid.meshgrid()
    inside = X * X + Y * Y <= r_target * r_target
    rows = []

    def on_step(s):
        v = s.levelset.values
        rows.append((s.time, s.area(), float(v.min()), float(v[inside].max())))
        return False

    done = evolve_front(state, duration, stop_when=on_step)
    with open(os.path.join(outdir, "front_log.csv"), "w", newline="") as fh:
        fh.write("t,area,min_ls,max_ls_in_target\n")
        for t, area, mn, mxt in rows:
            fh.write(f"{t:.17g},{area:.17g},{mn:.17g},{mxt:.17g}\n")
    with open(os.path.join(outdir, "contour.csv"), "w", newline="") as fh:
        fh.write("t,x,y\n")
        for x, y in done.contour_points():
            fh.write(f"{done.time:.17g},{float(x):.17g},{float(y):.17g}\n")
    return [f"front evolved to t={done.time:.6g}, area {done.area():.6g}"]


def _cmd_verify(cfg: RunConfig, outdir: str, threads: int):
    wanted = cfg.verify.get("cases", ["all"])
    names = acceptance.CASE_NAMES if "all" in wanted else [n for n in acceptance.CASE_NAMES if n in wanted]

    def run_one(name):
        case_dir = os.path.join(outdir, name)
        os.makedirs(case_dir, exist_ok=True)
        return acceptance.run_case(name, case_dir)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, names))
    else:
        results = [run_one(n) for n in names]
    lines = []
    n_pass = 0
    for res in results:
        mark = "PASS" if res.passed else "FAIL"
        n_pass += res.passed
        lines.append(f"{mark}  {res.name}")
        lines.extend(f"      {l}" for l in res.lines)
    lines.append(f"{n_pass}/{len(results)} acceptance cases passed")
    with open(os.path.join(outdir, "verify.csv"), "w", newline="") as fh:
        fh.write("case,passed\n")
        for res in results:
            fh.write(f"{res.name},{int(res.passed)}\n")
    ok = n_pass == len(results)
    return lines, ok


def run(cfg: RunConfig, out_root: str, threads: int = 1) -> int:
    """Execute a validated config; returns the process exit status."""
    outdir = os.path.join(out_root, cfg.name)
    os.makedirs(outdir, exist_ok=True)
    t0 = time.perf_counter()
    ok = True
    try:
        if cfg.command == "simulate":
            lines = _cmd_simulate(cfg, outdir)
        elif cfg.command == "speed":
            lines = _cmd_speed(cfg, outdir)
        elif cfg.command == "compare":
            lines = _cmd_compare(cfg, outdir)
        elif cfg.command == "radial":
            lines = _cmd_radial(cfg, outdir)
        elif cfg.command == "fronts":
            lines = _cmd_fronts(cfg, outdir)
        else:
            lines, ok = _cmd_verify(cfg, outdir, threads)
    except CrystalSpeedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_manifest(
            os.path.join(outdir, "manifest.txt"), cfg, time.perf_counter() - t0,
            extra=[f"error {exc}"],
        )
        return 1
    wall = time.perf_counter() - t0
    _write_manifest(os.path.join(outdir, "manifest.txt"), cfg, wall, extra=lines)
    for line in lines:
        print(line)
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crystal-speed",
        description="Desk-scale solver and analysis toolkit for nucleation-driven "
        "crystal growth with curvature-limited lateral spreading.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=False, help="path to a JSON run configuration")
    parser.add_argument("--out", default="out", help="output root directory")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads for verify (default: CRYSTAL_SPEED_THREADS or 1)",
    )
    args = parser.parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("CRYSTAL_SPEED_THREADS", "1"))
    if args.config is None:
        if args.command != "verify":
            parser.error("--config is required for this command")
        text = "{}"
        name = "verify"
    else:
        with open(args.config) as fh:
            text = fh.read()
        name = os.path.splitext(os.path.basename(args.config))[0]
    try:
        cfg = parse_config(text, args.command, default_name=name)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 1
    return run(cfg, args.out, threads)


if __name__ == "__main__":
    sys.exit(main())
