"""Command-line driver.

    nematicflow simulate      --config run.toml --out results/
    nematicflow mms           --config run.toml
    nematicflow weak-strong   --config run.toml
    nematicflow picard-study  --config run.toml
    nematicflow energy-report --out results/

Exit status: 0 on success, 2 for configuration errors, 3 for solver
failures, 1 for anything else (I/O included).  Failures print a JSON error
block on stderr and, when the output directory exists, record it in
``manifest.json``.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import RunConfig, config_hash, load_config, serialize
from .diagnostics import ENERGY_COLUMNS, REL_ENERGY_COLUMNS, energy_record
from .errors import ConfigError, IncompatibleRhs, MaxHalvingsExceeded, NonConvergence
from .grid import make_grid
from .io import read_csv, write_csv, write_snapshot, write_vtk
from .mms import MMS_COLUMNS, ManufacturedCase, MmsConfig, run_mms
from .presets import build_preset
from .stepper import advance_to
from .study import STUDY_COLUMNS, contraction_study
from .weak_strong import ComparisonConfig, compare_runs

log = logging.getLogger("nematicflow")

PICARD_COLUMNS = ("slab_index", "iter", "U_bar", "ratio", "halvings")
EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class Run:
    """Output directory plus the manifest shared by every artifact of one command."""

    def __init__(self, command, cfg, out, threads):
        self.command = command
        self.cfg = cfg
        self.out = Path(out)
        self.threads = threads
        self.artifacts = []
        self.started = time.perf_counter()
        self.config_hash = config_hash(cfg)
        self.hash = config_hash(cfg, salt=f"{command}\n")
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name):
        p = self.out / name
        self.artifacts.append(name)
        return p

    def csv(self, name, columns, rows):
        return write_csv(self.path(name), columns, rows, self.hash)

    def map_fn(self):
        if self.threads <= 1:
            return map, contextlib.nullcontext()
        pool = ThreadPoolExecutor(max_workers=self.threads)
        return pool.map, pool

    def manifest(self, status="ok", error=None):
        data = {
            "manifest_hash": self.hash,
            "config_hash": self.config_hash,
            "command": self.command,
            "status": status,
            "seed": self.cfg.seed,
            "threads": self.threads,
            "versions": {
                "nematicflow": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "wall_time_s": time.perf_counter() - self.started,
            "artifacts": list(self.artifacts),
            "config": serialize(self.cfg),
        }
        if error is not None:
            data["error"] = error
        (self.out / "manifest.json").write_text(json.dumps(data, indent=2) + "\n")


def cmd_simulate(run):
    cfg = run.cfg
    grid = cfg.grid_spec()
    physics, poisson = cfg.physics_model(), cfg.poisson_config()
    s0 = build_preset(grid, cfg.initial.preset, cfg.initial.preset_params(), cfg.seed, poisson)
    records = [energy_record(s0, physics=physics)]

    def on_step(prev, nxt, dt):
        records.append(energy_record(nxt, prev, dt, physics))

    s, reports = advance_to(s0, cfg.stepper.t_end, cfg.slab_config(), physics, poisson,
                            renormalize=cfg.diagnostics.renormalize, on_step=on_step)
    run.csv("energy.csv", ENERGY_COLUMNS, [r.row() for r in records])
    run.csv("picard.csv", PICARD_COLUMNS, [row for rep in reports for row in rep.rows()])
    if cfg.output.snapshot:
        write_snapshot(s, run.out / "final_state")
        run.artifacts += ["final_state.bin", "final_state.txt"]
    if cfg.output.vtk:
        write_vtk(s, run.path("final_state.vtk"))
    halvings = sum(r.halvings for r in reports)
    log.info("simulate: %d slabs, %d halvings, E %.6g -> %.6g", len(reports), halvings,
             records[0].E, records[-1].E)
    return {"slabs": len(reports), "halvings": halvings, "E0": records[0].E, "E_final": records[-1].E}


def cmd_mms(run):
    m = run.cfg.mms
    mcfg = MmsConfig(m.t_end, m.dt0, m.steps_per_slab, run.cfg.physics_model(), run.cfg.poisson_config(),
                     run.cfg.stepper.picard_tol)
    mapper, ctx = run.map_fn()
    with ctx:
        table = run_mms(ManufacturedCase.named(m.case), m.resolutions, mcfg, map_fn=mapper)
    run.csv("mms.csv", MMS_COLUMNS, [r.row() for r in table.rows])
    order_u, order_d = table.fitted_order()
    floor = table.at_floor()
    lines = [f"case = {m.case}", f"fitted order u = {order_u:.6g}", f"fitted order d = {order_d:.6g}"]
    if floor:
        lines.append("errors at rounding floor (exact)")
    run.path("mms_summary.txt").write_text("\n".join(lines) + "\n")
    return {"order_u": order_u, "order_d": order_d, "floor": floor}


def _dims_tag(dims):
    return "x".join(str(n) for n in dims)


def cmd_weak_strong(run):
    cfg = run.cfg
    ws = cfg.weak_strong
    lengths = cfg.grid.lengths
    if len(lengths) != len(ws.fine_dims):
        raise ConfigError("weak_strong.fine_dims", "number of axes must match grid.lengths")
    fine = make_grid(ws.fine_dims, lengths, cfg.grid.bc_mode)
    coarse = [make_grid(c, lengths, cfg.grid.bc_mode) for c in ws.coarse_dims]
    ccfg = ComparisonConfig(fine, coarse, ws.t_end, ws.sample_dt, cfg.initial.preset,
                            cfg.initial.preset_params(), cfg.seed, ws.initial, cfg.slab_config(),
                            cfg.physics_model(), cfg.poisson_config())
    result = compare_runs(ccfg)
    for lvl in result.levels:
        run.csv(f"weak_strong_{_dims_tag(lvl.grid.dims)}.csv", REL_ENERGY_COLUMNS,
                [r.row() for r in lvl.records])
    run.path("weak_strong_summary.txt").write_text(result.summary())
    return {"max_R": [lvl.max_R for lvl in result.levels], "C_fit": [lvl.C_fit for lvl in result.levels],
            "factors": result.convergence_factors()}


def cmd_picard_study(run):
    cfg = run.cfg
    ps = cfg.picard_study
    mapper, ctx = run.map_fn()
    with ctx:
        rows = contraction_study(cfg.grid_spec(), ps.eps_ladder, ps.slab_ladder, ps.steps_per_slab,
                                 ps.tilt_ratio, cfg.slab_config(), cfg.physics_model(),
                                 cfg.poisson_config(), map_fn=mapper)
    run.csv("picard_study.csv", STUDY_COLUMNS, [r.row() for r in rows])
    return {"rows": len(rows)}


def energy_summary(rows, columns):
    col = {name: i for i, name in enumerate(columns)}
    E = np.array([r[col["E"]] for r in rows])
    res = np.array([r[col["residual"]] for r in rows])
    drift = np.array([r[col["drift"]] for r in rows])
    E0 = float(E[0])
    tol = float(res.max()) if res.size else 0.0
    increments = np.diff(E)
    return {
        "samples": int(E.size),
        "E0": E0,
        "E_final": float(E[-1]),
        "max_residual": tol,
        "max_residual_over_E0": tol / E0 if E0 > 0.0 else (0.0 if tol == 0.0 else math.inf),
        "max_increment": float(increments.max()) if increments.size else 0.0,
        "monotone_within_residual": bool(np.all(increments <= res[1:] + 1e-300)),
        "drift_final": float(drift[-1]),
        "drift_max": float(drift.max()),
    }


def cmd_energy_report(run, source):
    source = Path(source) if source else run.out / "energy.csv"
    _, columns, rows = read_csv(source)
    if tuple(columns) != ENERGY_COLUMNS:
        raise ConfigError("input", f"{source} is not an energy CSV (columns {columns})")
    summary = energy_summary(rows, columns)
    summary["source"] = str(source)
    run.path("energy_report.json").write_text(json.dumps(summary, indent=2) + "\n")
    for key, value in summary.items():
        print(f"{key}: {value}")
    return summary


def build_parser():
    parser = argparse.ArgumentParser(prog="nematicflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "run one simulation and write energy, Picard and snapshot artifacts"),
        ("mms", "manufactured-solution convergence table"),
        ("weak-strong", "coarse-versus-fine relative energy comparison"),
        ("picard-study", "Picard contraction ratios over slab and amplitude ladders"),
        ("energy-report", "summarise an energy CSV"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", type=Path, help="TOML run configuration (defaults if omitted)")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent runs; 1 is fully deterministic")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "energy-report":
            p.add_argument("--input", type=Path, help="energy CSV (default: OUT/energy.csv)")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "mms": cmd_mms,
    "weak-strong": cmd_weak_strong,
    "picard-study": cmd_picard_study,
}


def _error_block(exc, code):
    block = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("field", "line", "data_size", "iterations", "residual"):
        value = getattr(exc, attr, None)
        if value is not None:
            block[attr] = value
    return block


def _load(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed", "must be non-negative")
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = str(args.out)
    return cfg.replace(**changes) if changes else cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = None
    try:
        if args.threads < 1:
            raise ConfigError("threads", "must be at least 1")
        try:
            cfg = _load(args)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
        run = Run(args.command, cfg, cfg.out, args.threads)
        if args.command == "energy-report":
            result = cmd_energy_report(run, args.input)
        else:
            result = COMMANDS[args.command](run)
        run.manifest()
        log.info("%s: %s", args.command, result)
        return EXIT_OK
    except ConfigError as exc:
        code = EXIT_CONFIG
        err = exc
    except (NonConvergence, MaxHalvingsExceeded, IncompatibleRhs, FloatingPointError) as exc:
        code = EXIT_SOLVER
        err = exc
    except OSError as exc:
        code = EXIT_OTHER
        err = exc
    block = _error_block(err, code)
    print(json.dumps({"error": block}), file=sys.stderr)
    if run is not None:
        with contextlib.suppress(OSError):
            run.manifest(status="failed", error=block)
    return code


if __name__ == "__main__":
    sys.exit(main())
