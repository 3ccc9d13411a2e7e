"""Run configuration: TOML in, validated frozen dataclasses out.

Every section maps to a dataclass whose fields carry a ``kind`` (the
accepted TOML type) and an optional range check.  Parsing fills defaults,
so ``serialize`` always writes the complete normalised form and
``parse_config(serialize(c)) == c``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
import re
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .errors import ConfigError, ConfigTypeError, RangeError, UnknownKey
from .grid import make_grid
from .presets import PRESETS
from .projection import PoissonSolveConfig
from .stepper import Physics, SlabConfig

TWO_PI = 2.0 * math.pi


def _opt(default, kind, check=None, why=""):
    return field(default=default, metadata={"kind": kind, "check": check, "why": why})


def _positive(x):
    return x > 0.0


def _non_negative(x):
    return x >= 0.0


@dataclass(frozen=True)
class GridConfig:
    dims: tuple = _opt((32, 32), "int_list", lambda v: len(v) in (2, 3) and min(v) >= 4,
                       "need 2 or 3 axes with at least 4 cells each")
    lengths: tuple = _opt((TWO_PI, TWO_PI), "float_list",
                          lambda v: all(x > 0.0 and math.isfinite(x) for x in v),
                          "box lengths must be positive")
    bc_mode: str = _opt("periodic", "str", lambda v: v in ("periodic", "wall"),
                        "expected 'periodic' or 'wall'")


@dataclass(frozen=True)
class PhysicsConfig:
    mu: float = _opt(1.0, "float", _positive, "must be positive")
    lam: float = _opt(1.0, "float", _positive, "must be positive")
    gamma: float = _opt(1.0, "float", _positive, "must be positive")
    stress_form: str = _opt("identity", "str", lambda v: v in ("identity", "direct"),
                            "expected 'identity' or 'direct'")


@dataclass(frozen=True)
class InitialConfig:
    preset: str = _opt("taylor_green", "str", lambda v: v in PRESETS,
                       "expected one of " + ", ".join(PRESETS))
    eps: float = _opt(0.1, "float", _positive, "must be positive")
    tilt: float = _opt(0.0, "float")
    k: float = _opt(1.0, "float")
    max_mode: int = _opt(1, "int", lambda v: v >= 1, "must be at least 1")
    angle_scale: float = _opt(1.0, "float", _non_negative, "must be non-negative")

    def preset_params(self):
        if self.preset == "taylor_green":
            return {"eps": self.eps, "tilt": self.tilt}
        if self.preset == "twist":
            return {"k": self.k}
        if self.preset == "random_smooth":
            return {"eps": self.eps, "max_mode": self.max_mode, "angle_scale": self.angle_scale}
        return {}


@dataclass(frozen=True)
class StepperConfig:
    dt: float = _opt(1e-3, "float", _positive, "must be positive")
    slab_T: float = _opt(1e-2, "float", _positive, "must be positive")
    t_end: float = _opt(0.1, "float", _non_negative, "must be non-negative")
    contraction_target: float = _opt(0.5, "float", lambda v: 0.0 < v < 1.0, "must lie in (0, 1)")
    picard_tol: float = _opt(1e-10, "float", _positive, "must be positive")
    max_picard: int = _opt(40, "int", lambda v: v >= 1, "must be at least 1")
    max_halvings: int = _opt(8, "int", lambda v: v >= 0, "must be non-negative")


@dataclass(frozen=True)
class DiagnosticsConfig:
    renormalize: bool = _opt(False, "bool")
    skew_advection: bool = _opt(False, "bool")


@dataclass(frozen=True)
class SolverConfig:
    tol: float = _opt(1e-10, "float", lambda v: 0.0 < v < 1.0, "must lie in (0, 1)")
    max_iter: int = _opt(500, "int", lambda v: v >= 1, "must be at least 1")
    method: str = _opt("spectral", "str", lambda v: v in ("spectral", "cg"),
                       "expected 'spectral' or 'cg'")


@dataclass(frozen=True)
class OutputConfig:
    snapshot: bool = _opt(True, "bool")
    vtk: bool = _opt(False, "bool")


@dataclass(frozen=True)
class MmsSection:
    case: str = _opt("time_dependent", "str",
                     lambda v: v in ("time_dependent", "steady_twist", "constant"),
                     "expected 'time_dependent', 'steady_twist' or 'constant'")
    resolutions: tuple = _opt((16, 32, 64), "int_list",
                              lambda v: len(v) >= 3 and min(v) >= 4 and list(v) == sorted(set(v)),
                              "need at least 3 increasing resolutions of 4 or more cells")
    t_end: float = _opt(0.2, "float", _positive, "must be positive")
    dt0: float = _opt(0.02, "float", _positive, "must be positive")
    steps_per_slab: int = _opt(10, "int", lambda v: v >= 1, "must be at least 1")


@dataclass(frozen=True)
class WeakStrongSection:
    fine_dims: tuple = _opt((128, 128), "int_list", lambda v: len(v) in (2, 3) and min(v) >= 4,
                            "need 2 or 3 axes with at least 4 cells each")
    coarse_dims: tuple = _opt(((32, 32), (64, 64)), "int_list_list",
                              lambda v: len(v) >= 1 and all(min(c) >= 4 for c in v),
                              "need at least one coarse grid with 4 or more cells per axis")
    t_end: float = _opt(0.1, "float", _non_negative, "must be non-negative")
    sample_dt: float = _opt(0.01, "float", _positive, "must be positive")
    initial: str = _opt("sample", "str", lambda v: v in ("sample", "restrict"),
                        "expected 'sample' or 'restrict'")


@dataclass(frozen=True)
class PicardStudySection:
    slab_ladder: tuple = _opt((0.1, 0.05, 0.025), "float_list",
                              lambda v: len(v) >= 1 and min(v) > 0.0, "slab lengths must be positive")
    eps_ladder: tuple = _opt((0.01, 0.1), "float_list",
                             lambda v: len(v) >= 1 and min(v) >= 0.0, "amplitudes must be non-negative")
    steps_per_slab: int = _opt(10, "int", lambda v: v >= 1, "must be at least 1")
    tilt_ratio: float = _opt(1.0, "float", _non_negative, "must be non-negative")


SECTIONS = {
    "grid": GridConfig,
    "physics": PhysicsConfig,
    "initial": InitialConfig,
    "stepper": StepperConfig,
    "diagnostics": DiagnosticsConfig,
    "solver": SolverConfig,
    "output": OutputConfig,
    "mms": MmsSection,
    "weak_strong": WeakStrongSection,
    "picard_study": PicardStudySection,
}
TOP_LEVEL = {"seed": ("int", 0), "out": ("str", "out")}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out: str = "out"
    grid: GridConfig = field(default_factory=GridConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    stepper: StepperConfig = field(default_factory=StepperConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    mms: MmsSection = field(default_factory=MmsSection)
    weak_strong: WeakStrongSection = field(default_factory=WeakStrongSection)
    picard_study: PicardStudySection = field(default_factory=PicardStudySection)

    def grid_spec(self):
        return make_grid(self.grid.dims, self.grid.lengths, self.grid.bc_mode)

    def physics_model(self):
        return Physics(self.physics.mu, self.physics.lam, self.physics.gamma,
                       self.diagnostics.skew_advection, self.physics.stress_form)

    def slab_config(self):
        s = self.stepper
        return SlabConfig(s.dt, s.slab_T, s.contraction_target, s.picard_tol,
                          s.max_picard, s.max_halvings)

    def poisson_config(self):
        return PoissonSolveConfig(self.solver.tol, self.solver.max_iter, self.solver.method)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _locate(text, section, key):
    """Best-effort line number of ``key`` inside ``[section]`` (1-based)."""
    current = None
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=") if key else None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"^\s*\[([^\[\]]+)\]\s*(#.*)?$", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno
            continue
        if pattern is not None and current == section and pattern.match(line):
            return lineno
    return None


def _convert(kind, value, name, line):
    def fail(expected):
        raise ConfigTypeError(name, f"expected {expected}, got {type(value).__name__} {value!r}", line)

    if kind == "bool":
        if not isinstance(value, bool):
            fail("a boolean")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            fail("a string")
        return value
    if kind in ("int_list", "float_list"):
        if not isinstance(value, list):
            fail("an array")
        return tuple(_convert(kind[:-5], v, name, line) for v in value)
    if kind == "int_list_list":
        if not isinstance(value, list):
            fail("an array of arrays")
        return tuple(_convert("int_list", v, name, line) for v in value)
    raise AssertionError(kind)


def _build_section(cls, table, section, text):
    known = {f.name: f for f in dataclasses.fields(cls)}
    values = {}
    for key, raw in table.items():
        name = f"{section}.{key}"
        line = _locate(text, section, key)
        if key not in known:
            raise UnknownKey(name, f"unknown key; expected one of {', '.join(known)}", line)
        meta = known[key].metadata
        value = _convert(meta["kind"], raw, name, line)
        check = meta["check"]
        if check is not None and not check(value):
            raise RangeError(name, f"{meta['why']} (got {raw!r})", line)
        values[key] = value
    return cls(**values)


def _cross_checks(cfg, text):
    def err(section, key, message):
        raise RangeError(f"{section}.{key}", message, _locate(text, section, key))

    g = cfg.grid
    if len(g.lengths) != len(g.dims):
        err("grid", "lengths", f"expected {len(g.dims)} lengths to match dims")
    if cfg.stepper.dt > cfg.stepper.slab_T * (1.0 + 1e-12):
        err("stepper", "dt", "dt must not exceed slab_T")
    ws = cfg.weak_strong
    for c in ws.coarse_dims:
        if len(c) != len(ws.fine_dims) or any(f % n for f, n in zip(ws.fine_dims, c)):
            err("weak_strong", "coarse_dims", f"coarse dims {list(c)} must divide fine dims {list(ws.fine_dims)}")


def parse_config(text):
    """Parse TOML text into a validated :class:`RunConfig`.

    Raises :class:`UnknownKey`, :class:`ConfigTypeError` or :class:`RangeError`
    naming the offending field; TOML syntax errors become :class:`ConfigError`.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError("<toml>", f"syntax error: {exc}", int(m.group(1)) if m else None) from None
    top = {}
    sections = {}
    for key, value in data.items():
        if key in SECTIONS:
            if not isinstance(value, dict):
                raise ConfigTypeError(key, "expected a table", _locate(text, None, key))
            sections[key] = _build_section(SECTIONS[key], value, key, text)
        elif key in TOP_LEVEL:
            kind, _ = TOP_LEVEL[key]
            top[key] = _convert(kind, value, key, _locate(text, None, key))
        else:
            raise UnknownKey(key, "unknown key or section", _locate(text, None, key))
    if "seed" in top and top["seed"] < 0:
        raise RangeError("seed", "must be non-negative", _locate(text, None, "seed"))
    grid = sections.get("grid", GridConfig())
    if "lengths" not in data.get("grid", {}):
        # the default box is [0, 2 pi] along every axis
        grid = dataclasses.replace(grid, lengths=(TWO_PI,) * len(grid.dims))
    sections["grid"] = grid
    cfg = RunConfig(**top, **sections)
    _cross_checks(cfg, text)
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def to_dict(cfg):
    out = {"seed": cfg.seed, "out": cfg.out}
    for name in SECTIONS:
        section = getattr(cfg, name)
        out[name] = {f.name: _plain(getattr(section, f.name)) for f in dataclasses.fields(section)}
    return out


def serialize(cfg):
    """Complete normalised TOML text for ``cfg``."""
    return tomli_w.dumps(to_dict(cfg))


def config_hash(cfg, salt=""):
    """Short content hash of everything except the output directory."""
    text = salt + serialize(dataclasses.replace(cfg, out=""))
    return hashlib.sha256(text.encode()).hexdigest()[:16]
