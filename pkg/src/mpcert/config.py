"""Config ingestion for the batch front door.

Configs are TOML documents; every key is validated against the schema and
unknown or out-of-range entries are rejected with their full key path, so a
typo never silently falls back to a default.
"""

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .problem_model import (
    ConstantPotential,
    ExpDecayPotential,
    ExpThresholdNonlinearity,
    GaussianWellPotential,
    InversePowerPotential,
    Modulation,
    PowerNonlinearity,
    ProblemSpec,
    QuadraticWellPotential,
)


class ConfigError(ValueError):
    """A config file problem, always carrying the offending key path."""


_POTENTIALS = {
    "constant": ConstantPotential,
    "inverse_power": InversePowerPotential,
    "gaussian_well": GaussianWellPotential,
    "quadratic_well": QuadraticWellPotential,
    "exp_decay": ExpDecayPotential,
}

_NONLINEARITIES = {
    "power": PowerNonlinearity,
    "exp_threshold": ExpThresholdNonlinearity,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated problem, grid, solver, and output settings for one run."""

    spec: ProblemSpec
    r_max: float = 20.0
    nodes: int = 1000
    path_points: int = 64
    tol: float = 1e-8
    max_iter: int = 5000
    seed: int = 42
    out_dir: Path = Path(".")

    def __post_init__(self):
        if self.nodes < 4:
            raise ConfigError("grid.nodes: need at least 4 cells")
        if self.r_max <= self.spec.splice_radius:
            raise ConfigError(
                "grid.r_max: the grid must extend past radius_R, otherwise "
                "no tail node exists to certify")
        if self.path_points < 8:
            raise ConfigError("solver.path_points: need at least 8 segments")
        if self.tol <= 0.0:
            raise ConfigError("solver.tol: need a positive tolerance")
        if self.max_iter < 1:
            raise ConfigError("solver.max_iter: need at least one iteration")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed: need an unsigned 64-bit integer")


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return int(value)


def _as_bool(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{where}: expected true/false, got {value!r}")
    return value


def _as_table(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a table")
    return dict(value)


def _build_family(table, registry, where: str):
    work = _as_table(table, where)
    family = work.pop("family", None)
    if family is None:
        raise ConfigError(f"missing key: {where}.family")
    cls = registry.get(family)
    if cls is None:
        raise ConfigError(
            f"{where}.family: unknown family {family!r}; known families: "
            f"{', '.join(sorted(registry))}")
    params = _as_table(work.pop("params", {}), f"{where}.params")
    if work:
        extra = sorted(work)
        raise ConfigError(f"unknown key: {where}.{extra[0]}")
    if "modulation" in params:
        mod = _as_table(params["modulation"], f"{where}.params.modulation")
        try:
            params["modulation"] = Modulation(
                **{k: _as_float(v, f"{where}.params.modulation.{k}")
                   for k, v in mod.items()})
        except TypeError as exc:
            raise ConfigError(f"{where}.params.modulation: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{where}.params.modulation: {exc}") from None
    for key, val in list(params.items()):
        if key != "modulation":
            params[key] = _as_float(val, f"{where}.params.{key}")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"{where}.params: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}.params: {exc}") from None


def _sup_on_ball(potential, radius: float) -> float:
    """Sampled sup of V over the profile ball, the default for v_infty."""
    r = np.linspace(0.0, radius, 4097)
    return float(np.max(np.asarray(potential(r), dtype=float)))


def _pop_float(table: dict, key: str, where: str, default=None) -> float:
    if key not in table:
        if default is None:
            raise ConfigError(f"missing key: {where}.{key}")
        return default
    return _as_float(table.pop(key), f"{where}.{key}")


def parse_config(path) -> RunConfig:
    """Read and validate one TOML config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    known_sections = {"problem", "exponential", "grid", "solver",
                      "sweep", "output"}
    for section in doc:
        if section not in known_sections:
            raise ConfigError(f"unknown key: {section}")

    if "problem" not in doc:
        raise ConfigError("missing key: problem")
    prob = _as_table(doc["problem"], "problem")

    if "potential" not in prob:
        raise ConfigError("missing key: problem.potential")
    potential = _build_family(prob.pop("potential"), _POTENTIALS,
                              "problem.potential")
    if "nonlinearity" not in prob:
        raise ConfigError("missing key: problem.nonlinearity")
    nonlinearity = _build_family(prob.pop("nonlinearity"), _NONLINEARITIES,
                                 "problem.nonlinearity")

    if "dimension" not in prob:
        raise ConfigError("missing key: problem.dimension")
    dim = _as_int(prob.pop("dimension"), "problem.dimension")

    fields = dict(
        q=_pop_float(prob, "q", "problem"),
        p=_pop_float(prob, "p", "problem"),
        theta=_pop_float(prob, "theta", "problem"),
        a1=_pop_float(prob, "a1", "problem"),
        a2=_pop_float(prob, "a2", "problem", default=0.0),
        s0=_pop_float(prob, "s0", "problem", default=0.0),
        splice_radius=_pop_float(prob, "radius_R", "problem"),
        lam=_pop_float(prob, "lambda", "problem", default=1.0),
        bump_radius=_pop_float(prob, "r0", "problem"),
    )
    v_infty = prob.pop("v_infty", None)
    if v_infty is None:
        v_infty = _sup_on_ball(potential, fields["bump_radius"])
    else:
        v_infty = _as_float(v_infty, "problem.v_infty")
    odd = _as_bool(prob.pop("odd", False), "problem.odd")
    for leftover in prob:
        raise ConfigError(f"unknown key: problem.{leftover}")

    mode = "standard"
    a = 0.0
    mu = 0.0
    if "exponential" in doc and "sweep" in doc:
        raise ConfigError(
            "sections [exponential] and [sweep] are mutually exclusive")
    if "exponential" in doc:
        exp = _as_table(doc["exponential"], "exponential")
        a = _pop_float(exp, "a", "exponential")
        mu = _pop_float(exp, "mu", "exponential")
        for leftover in exp:
            raise ConfigError(f"unknown key: exponential.{leftover}")
        mode = "exponential"

    pairs = ()
    if "sweep" in doc:
        sweep = _as_table(doc["sweep"], "sweep")
        if "table" not in sweep:
            raise ConfigError("missing key: sweep.table")
        raw = sweep.pop("table")
        for leftover in sweep:
            raise ConfigError(f"unknown key: sweep.{leftover}")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("sweep.table: expected a non-empty list of "
                              "[R, Lambda] rows")
        rows = []
        for i, row in enumerate(raw):
            if not isinstance(row, list) or len(row) != 2:
                raise ConfigError(
                    f"sweep.table[{i}]: expected a [R, Lambda] pair")
            rows.append((_as_float(row[0], f"sweep.table[{i}][0]"),
                         _as_float(row[1], f"sweep.table[{i}][1]")))
        radii = [r for r, _ in rows]
        if any(b <= a_ for a_, b in zip(radii, radii[1:])):
            raise ConfigError("sweep.table: radii must be strictly increasing")
        pairs = tuple(rows)
        mode = "sweep"

    try:
        spec = ProblemSpec(dim=dim, potential=potential,
                           nonlinearity=nonlinearity, v_infty=v_infty,
                           odd=odd, mode=mode, a=a, mu=mu, pairs=pairs,
                           **fields)
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from None

    grid_kw = {}
    if "grid" in doc:
        gtab = _as_table(doc["grid"], "grid")
        if "r_max" in gtab:
            grid_kw["r_max"] = _as_float(gtab.pop("r_max"), "grid.r_max")
        if "nodes" in gtab:
            grid_kw["nodes"] = _as_int(gtab.pop("nodes"), "grid.nodes")
        for leftover in gtab:
            raise ConfigError(f"unknown key: grid.{leftover}")

    solver_kw = {}
    if "solver" in doc:
        stab = _as_table(doc["solver"], "solver")
        if "path_points" in stab:
            solver_kw["path_points"] = _as_int(stab.pop("path_points"),
                                               "solver.path_points")
        if "tol" in stab:
            solver_kw["tol"] = _as_float(stab.pop("tol"), "solver.tol")
        if "max_iter" in stab:
            solver_kw["max_iter"] = _as_int(stab.pop("max_iter"),
                                            "solver.max_iter")
        for leftover in stab:
            raise ConfigError(f"unknown key: solver.{leftover}")

    out_dir = Path(".")
    if "output" in doc:
        otab = _as_table(doc["output"], "output")
        if "dir" in otab:
            raw_dir = otab.pop("dir")
            if not isinstance(raw_dir, str):
                raise ConfigError("output.dir: expected a path string")
            out_dir = Path(raw_dir)
        for leftover in otab:
            raise ConfigError(f"unknown key: output.{leftover}")

    return RunConfig(spec=spec, out_dir=out_dir, **grid_kw, **solver_kw)
