"""Pipeline orchestration and file outputs behind the command line.

Stages run in a fixed order (hypotheses, penalize, grid, endpoint, solve,
certificates, thresholds, emit) with wall-clock timing per stage; a failing
stage aborts the run but the partial report is still written so the failure
is inspectable. Every number in the JSON report is wrapped as
{"value," "source"} naming the operation that produced it.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .certificates import (
    certificate_report,
    multi_bump_D_l,
    sweep_pair_record,
    trend_verdict,
)
from .config import RunConfig
from .mountain_pass import estimate_beta_rho, find_endpoint_e, mpa_solve, seed_bump
from .penalization import PenalizedNonlinearity
from .problem_model import check_hypotheses
from .radial import DiscreteEnergy, RadialGrid, build_grid

try:
    from importlib.metadata import PackageNotFoundError, version

    _VERSION = version("mpcert")
except PackageNotFoundError:  # running from a source tree
    _VERSION = "0.1.0"


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and partial report."""

    def __init__(self, stage: str, cause: Exception, report=None):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.report = report


@dataclass
class Report:
    """JSON-ready run record plus the arrays the file emitters need."""

    data: dict
    grid: RadialGrid = None
    spec: object = None
    profile: np.ndarray = field(default=None, repr=False)
    history: np.ndarray = field(default=None, repr=False)
    decay_constant: float = math.nan
    exit_code: int = 1
    outputs: dict = field(default_factory=dict)


def _num(value, source: str):
    """Wrap one numeric leaf with the name of the operation that made it."""
    if value is None:
        return {"value": None, "source": source}
    value = float(value)
    if math.isnan(value):
        return {"value": None, "source": source}
    if math.isfinite(value) and value == int(value) and abs(value) < 2 ** 53:
        return {"value": int(value), "source": source}
    return {"value": value, "source": source}


def _wrap(obj, source: str):
    """Recursively wrap every numeric leaf of a plain structure."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return _num(obj, source)
    if isinstance(obj, (list, tuple)):
        return [_wrap(x, source) for x in obj]
    if isinstance(obj, dict):
        return {k: _wrap(v, source) for k, v in obj.items()}
    return str(obj)


def _provenance(cfg: RunConfig) -> dict:
    import matplotlib
    import scipy

    return {
        "package": _VERSION,
        "libraries": {"numpy": np.__version__, "scipy": scipy.__version__,
                      "matplotlib": matplotlib.__version__},
        "grid": {"dim": _num(cfg.spec.dim, "config"),
                 "r_max": _num(cfg.r_max, "config"),
                 "nodes": _num(cfg.nodes, "config")},
        "solver": {"path_points": _num(cfg.path_points, "config"),
                   "tol": _num(cfg.tol, "config"),
                   "max_iter": _num(cfg.max_iter, "config"),
                   "seed": _num(cfg.seed, "config")},
        "mode": cfg.spec.mode,
        "odd": cfg.spec.odd,
    }


def _empty_report(cfg: RunConfig) -> Report:
    data = {"hypotheses": None, "solve": None, "certificates": None,
            "thresholds": None, "provenance": _provenance(cfg),
            "timings": {}}
    return Report(data=data, spec=cfg.spec)


def _try_emit(report: Report, out_dir):
    """Best-effort write of a partial report after a stage failure."""
    try:
        emit_profile(report, out_dir)
    except Exception:
        pass


def _run_stage(report: Report, name: str, fn):
    t0 = time.perf_counter()
    try:
        out = fn()
    except Exception as exc:
        report.data["timings"][name] = _num(time.perf_counter() - t0,
                                            "wall-clock")
        report.data["error"] = {"stage": name, "message": str(exc)}
        raise StageError(name, exc, report) from exc
    report.data["timings"][name] = _num(time.perf_counter() - t0,
                                        "wall-clock")
    return out


def _hypotheses_stage(report: Report, spec, strict: bool = True):
    hyp = check_hypotheses(spec)
    src = "problem_model.check_hypotheses"
    entry = _wrap(hyp.to_dict(), src)
    entry["all_ok"] = hyp.all_ok
    report.data["hypotheses"] = entry
    if strict and not hyp.all_ok:
        failing = [k for k, v in hyp.to_dict().items()
                   if k.endswith("_ok") and k != "all_ok" and v is False]
        if hyp.sweep_ok is not None and not all(hyp.sweep_ok):
            failing.append("sweep_ok")
        raise ValueError("structural hypotheses failed: "
                         + ", ".join(sorted(set(failing))))
    return hyp


def _certificates_to_json(rep, beta, rho, seed: int) -> dict:
    checks = []
    for rec in rep.checks:
        checks.append({
            "name": rec.name,
            "passed": rec.passed,
            "margin": _num(rec.margin, rec.provenance),
            "constants": _wrap(rec.constants, rec.provenance),
            "provenance": rec.provenance,
        })
    diag = dict(rep.diagnostic)
    diag_json = {
        "passed": diag["passed"],
        "note": diag["note"],
        "sigma": _num(diag["sigma"], "certificates.moser_diagnostic"),
        "constants": _wrap(diag["constants"],
                           "certificates.moser_diagnostic"),
        "rungs": _wrap(diag["rungs"], "certificates.moser_diagnostic"),
    }
    bounds = _wrap(asdict(rep.bounds), "certificates.energy_bounds")
    bounds["beta"] = _num(beta, "mountain_pass.estimate_beta_rho")
    bounds["rho"] = _num(rho, "mountain_pass.estimate_beta_rho")
    bounds["seed"] = _num(seed, "config")
    return {
        "verdict": rep.verdict,
        "all_passed": rep.all_passed,
        "checks": checks,
        "diagnostic": diag_json,
        "sup_constants": _wrap(asdict(rep.moser),
                               "certificates.moser_constants"),
        "bounds": bounds,
        "notes": list(rep.notes),
    }


def _thresholds_to_json(th, spec) -> dict:
    src = "certificates.thresholds"
    out = {
        "mode": th.mode,
        "lambda_star": _num(th.lambda_star, src),
        "lambda_tilde_star": _num(th.lambda_tilde_star, src),
        "factors": _wrap(th.factors, src),
        "claimed_lambda": _num(spec.lam, "config"),
        "admissible": bool(spec.lam >= th.lambda_star),
    }
    if th.mode == "exponential":
        out["mu_star"] = _num(th.mu_star, src)
        out["claimed_mu"] = _num(spec.mu, "config")
        out["admissible_mu"] = bool(spec.mu <= th.mu_star)
    return out


def run_pipeline(cfg: RunConfig, j_max: int = 4, write: bool = True) -> Report:
    """Hypotheses, solve, certificates, thresholds, and file outputs.

    Returns the report; raises StageError (with the partial report written
    when `write` is set) if any stage fails. The exit_code field follows the
    contract: 0 exactly when the solver converged and every certificate
    check passed.
    """
    if cfg.spec.mode == "sweep":
        raise ValueError("sweep configs run under run_sweep")
    spec = cfg.spec
    report = _empty_report(cfg)

    try:
        _run_stage(report, "hypotheses",
                   lambda: _hypotheses_stage(report, spec))
        pen = _run_stage(report, "penalize",
                         lambda: PenalizedNonlinearity(spec))
        grid = _run_stage(report, "grid",
                          lambda: build_grid(spec.dim, cfg.r_max, cfg.nodes))
        report.grid = grid
        energy = DiscreteEnergy(spec, grid)

        def _endpoint():
            bump = seed_bump(spec, grid).on_grid(grid)
            return find_endpoint_e(energy, bump)

        e = _run_stage(report, "endpoint", _endpoint)

        def _solve():
            result = mpa_solve(energy, e, m=cfg.path_points, tol=cfg.tol,
                               max_iter=cfg.max_iter)
            beta, rho = estimate_beta_rho(energy, seed=cfg.seed)
            report.data["solve"] = {
                "converged": result.converged,
                "message": result.message,
                "c": _num(result.c, "mountain_pass.mpa_solve"),
                "residual": _num(result.residual, "mountain_pass.mpa_solve"),
                "iterations": _num(result.iterations,
                                   "mountain_pass.mpa_solve"),
                "beta": _num(beta, "mountain_pass.estimate_beta_rho"),
                "rho": _num(rho, "mountain_pass.estimate_beta_rho"),
                "seed": _num(cfg.seed, "config"),
            }
            return result, beta, rho

        result, beta, rho = _run_stage(report, "solve", _solve)
        report.profile = result.u
        report.history = result.path_max_history

        def _certify():
            rep = certificate_report(grid, spec, result.u, j_max=j_max)
            report.data["certificates"] = _certificates_to_json(
                rep, beta, rho, cfg.seed)
            return rep

        cert = _run_stage(report, "certificates", _certify)
        report.decay_constant = cert.moser.bound

        def _thresholds():
            entry = _thresholds_to_json(cert.thresholds, spec)
            if spec.odd:
                _, d_l, lam_l = multi_bump_D_l(spec, 2, grid)
                entry["paired_profiles"] = {
                    "count": _num(2, "certificates.multi_bump_D_l"),
                    "D_l": _num(d_l, "certificates.multi_bump_D_l"),
                    "lambda_star_l": _num(lam_l,
                                          "certificates.multi_bump_D_l"),
                }
            report.data["thresholds"] = entry
            return entry

        _run_stage(report, "thresholds", _thresholds)

        report.exit_code = 0 if (result.converged and cert.all_passed) else 1
        if write:
            _run_stage(report, "emit", lambda: emit_profile(report, cfg.out_dir))
    except StageError:
        if write:
            _try_emit(report, cfg.out_dir)
        raise
    return report


def run_check(cfg: RunConfig, write: bool = True) -> Report:
    """Hypotheses stage only; a failing hypothesis is an answer, not an
    abort, so the report is always complete."""
    report = _empty_report(cfg)
    try:
        hyp = _run_stage(report, "hypotheses",
                         lambda: _hypotheses_stage(report, cfg.spec,
                                                   strict=False))
        report.exit_code = 0 if hyp.all_ok else 1
    except StageError:
        if write:
            _try_emit(report, cfg.out_dir)
        raise
    if write:
        _run_stage(report, "emit", lambda: emit_profile(report, cfg.out_dir))
    return report


def run_thresholds(cfg: RunConfig, write: bool = True) -> Report:
    """A-priori constant chain only: no grid, no solve."""
    from .certificates import apriori_chain

    report = _empty_report(cfg)
    try:
        _run_stage(report, "hypotheses",
                   lambda: _hypotheses_stage(report, cfg.spec))

        def _chain():
            bounds, hat_m, th = apriori_chain(cfg.spec)
            entry = _thresholds_to_json(th, cfg.spec)
            entry["apriori"] = {
                "bounds": _wrap(asdict(bounds), "certificates.energy_bounds"),
                "sup_constants": _wrap(asdict(hat_m),
                                       "certificates.moser_constants"),
            }
            report.data["thresholds"] = entry
            return th

        _run_stage(report, "thresholds", _chain)
        report.exit_code = 0
    except StageError:
        if write:
            _try_emit(report, cfg.out_dir)
        raise
    if write:
        _run_stage(report, "emit", lambda: emit_profile(report, cfg.out_dir))
    return report


def run_certify(cfg: RunConfig, profile_path, j_max: int = 4,
                write: bool = True) -> Report:
    """Certificates on an externally supplied profile CSV."""
    spec = cfg.spec
    report = _empty_report(cfg)
    try:
        _run_stage(report, "hypotheses",
                   lambda: _hypotheses_stage(report, spec))
        grid = _run_stage(report, "grid",
                          lambda: build_grid(spec.dim, cfg.r_max, cfg.nodes))
        report.grid = grid

        def _ingest():
            r, u = read_profile_csv(profile_path)
            if r.size != grid.r.size or \
                    float(np.max(np.abs(r - grid.r))) > 1e-9 * cfg.r_max:
                raise ValueError(
                    "profile nodes do not match the configured grid "
                    f"({r.size} rows vs {grid.r.size} nodes)")
            return u

        u = _run_stage(report, "ingest", _ingest)
        report.profile = u

        def _certify():
            rep = certificate_report(grid, spec, u, j_max=j_max)
            report.data["certificates"] = _certificates_to_json(
                rep, None, None, cfg.seed)
            return rep

        cert = _run_stage(report, "certificates", _certify)
        report.decay_constant = cert.moser.bound
        _run_stage(report, "thresholds", lambda: report.data.__setitem__(
            "thresholds", _thresholds_to_json(cert.thresholds, spec)))
        report.exit_code = 0 if cert.all_passed else 1
    except StageError:
        if write:
            _try_emit(report, cfg.out_dir)
        raise
    if write:
        _run_stage(report, "emit", lambda: emit_profile(report, cfg.out_dir))
    return report


def run_sweep(cfg: RunConfig, write: bool = True) -> Report:
    """Concurrent per-pair threshold chains plus the trend verdict.

    Each (R_j, Lambda_j) pair gets its own worker; assembly of the ratios,
    the verdict, and the report is single-threaded afterwards.
    """
    spec = cfg.spec
    if spec.mode != "sweep" or not spec.pairs:
        raise ValueError("sweep needs a config with a [sweep] table")
    report = _empty_report(cfg)
    try:
        _run_stage(report, "hypotheses",
                   lambda: _hypotheses_stage(report, spec))

        def _table():
            exponent = spec.tail_exponent
            base = spec
            if base.bump_radius >= base.pairs[0][0]:
                raise ValueError(
                    "the profile ball must fit inside the smallest sweep "
                    "radius")
            with ThreadPoolExecutor(
                    max_workers=min(8, len(base.pairs))) as pool:
                records = list(pool.map(
                    lambda rl: sweep_pair_record(base, rl[0], rl[1]),
                    base.pairs))
            ratios = [lam / r ** exponent for r, lam in base.pairs]
            entry = {
                "mode": "sweep",
                "R_exponent": _num(exponent, "certificates.sweep_check"),
                "ratios": _wrap(ratios, "certificates.sweep_check"),
                "verdict": trend_verdict(ratios),
                "pairs": _wrap(records, "certificates.sweep_check"),
            }
            report.data["thresholds"] = entry
            return entry

        _run_stage(report, "thresholds", _table)
        report.exit_code = 0
    except StageError:
        if write:
            _try_emit(report, cfg.out_dir)
        raise
    if write:
        _run_stage(report, "emit", lambda: emit_profile(report, cfg.out_dir))
    return report


# ---------------------------------------------------------------------------
# file outputs
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_profile_csv(grid: RadialGrid, spec, u: np.ndarray,
                      decay_constant: float, path) -> Path:
    """One row per node: r,u,V,f_of_u,g_of_u,decay_bound.

    The decay column is empty inside the splice radius, where the envelope
    makes no claim; 17 significant digits round-trip 64-bit floats exactly.
    """
    path = Path(path)
    pen = PenalizedNonlinearity(spec)
    u = np.asarray(u, dtype=float)
    v_vals = np.asarray(spec.V(grid.r), dtype=float)
    f_vals = np.asarray(spec.f(grid.r, u), dtype=float)
    g_vals = np.asarray(pen.g(grid.r, u), dtype=float)
    radius = spec.splice_radius
    rows = ["r,u,V,f_of_u,g_of_u,decay_bound"]
    for i, r in enumerate(grid.r):
        if r >= radius and math.isfinite(decay_constant):
            decay = _fmt(decay_constant * (radius / r) ** (grid.dim - 2))
        else:
            decay = ""
        rows.append(",".join([_fmt(r), _fmt(u[i]), _fmt(v_vals[i]),
                              _fmt(f_vals[i]), _fmt(g_vals[i]), decay]))
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def read_profile_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read r and u back from a profile CSV (extra columns are ignored)."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty profile file")
    header = [h.strip() for h in lines[0].split(",")]
    if header[:2] != ["r", "u"]:
        raise ValueError(f"{path}: expected a header starting with 'r,u', "
                         f"got {lines[0]!r}")
    r_vals, u_vals = [], []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) < 2:
            raise ValueError(f"{path}:{i}: expected at least two columns")
        r_vals.append(float(parts[0]))
        u_vals.append(float(parts[1]))
    return np.asarray(r_vals), np.asarray(u_vals)


def emit_profile(report: Report, out_dir) -> dict:
    """Write the JSON report, the node CSV, and the figures.

    Rerunning on identical inputs reproduces the report and CSV byte for
    byte except for the wall-clock "timings" section; figures carry no
    timestamps but PNG encoding is not part of the stability contract.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {}

    report_path = out_dir / "report.json"
    report_path.write_text(
        json.dumps(report.data, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    outputs["report"] = report_path

    if report.profile is not None and report.grid is not None:
        outputs["profile"] = write_profile_csv(
            report.grid, report.spec, report.profile,
            report.decay_constant, out_dir / "profile.csv")

    from . import figures

    if report.profile is not None and report.grid is not None:
        outputs["profile_figure"] = figures.render_profile(
            report.grid, report.spec, report.profile,
            report.decay_constant, out_dir / "profile.png")
        outputs["consistency_figure"] = figures.render_consistency(
            report.grid, report.spec, report.profile,
            out_dir / "consistency.png")
    if report.history is not None and len(report.history) > 1:
        outputs["history_figure"] = figures.render_history(
            report.history, out_dir / "history.png")
    sweep_entry = (report.data.get("thresholds") or {})
    if sweep_entry.get("mode") == "sweep":
        outputs["sweep_figure"] = figures.render_sweep(
            sweep_entry, out_dir / "sweep.png")

    report.outputs.update(outputs)
    return outputs
