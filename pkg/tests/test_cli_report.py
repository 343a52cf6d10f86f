import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from mpcert import (
    ConfigError,
    PenalizedNonlinearity,
    StageError,
    build_grid,
    parse_config,
    read_profile_csv,
    run_certify,
    run_check,
    run_pipeline,
    run_sweep,
    run_thresholds,
    sweep_check,
    write_profile_csv,
)
from mpcert.cli import main

BASE = """\
[problem]
dimension = 3
q = 3.0
p = 3.0
theta = 3.0
a1 = 1.0
radius_R = 5.0
r0 = 4.0
v_infty = 1.0

[problem.potential]
family = "constant"
params = {{value = 1.0}}

[problem.nonlinearity]
family = "power"
params = {{c1 = 1.0, g1 = 3.0}}

[grid]
r_max = 20.0
nodes = {nodes}

[output]
dir = "{out}"
"""

SWEEP_TABLE = """
[sweep]
table = [[1.0, 1.0], [2.0, 4.0], [3.0, 9.0], [4.0, 16.0], [5.0, 25.0], [6.0, 36.0]]
"""


def write_cfg(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def base_cfg_text(out_dir, nodes=400):
    return BASE.format(nodes=nodes, out=str(out_dir))


@pytest.fixture(scope="module")
def solve_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("solve")
    out = tmp / "out"
    cfg = parse_config(write_cfg(tmp, base_cfg_text(out)))
    report = run_pipeline(cfg)
    return cfg, report


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def test_parse_fills_defaults(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace("[grid]\nr_max = 20.0\nnodes = 400\n\n", "")
    cfg = parse_config(write_cfg(tmp_path, text))
    assert cfg.r_max == 20.0
    assert cfg.nodes == 1000
    assert cfg.path_points == 64
    assert cfg.tol == 1e-8
    assert cfg.max_iter == 5000
    assert cfg.seed == 42
    spec = cfg.spec
    assert spec.dim == 3
    assert spec.splice_radius == 5.0
    assert spec.bump_radius == 4.0
    assert spec.lam == 1.0
    assert spec.a2 == 0.0
    assert spec.s0 == 0.0
    assert spec.odd is False
    assert spec.mode == "standard"


def test_parse_derives_v_infty_from_potential(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace("v_infty = 1.0\n", "")
    text = text.replace(
        'family = "constant"\nparams = {value = 1.0}',
        'family = "gaussian_well"\nparams = {level = 2.0, depth = 1.0, width = 3.0}')
    cfg = parse_config(write_cfg(tmp_path, text))
    r = np.linspace(0.0, cfg.spec.bump_radius, 4097)
    expected = float(np.max(cfg.spec.potential(r)))
    assert cfg.spec.v_infty == expected


def test_parse_range_error_names_p(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace("p = 3.0", "p = 7.0")
    with pytest.raises(ConfigError, match="p"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_unknown_key_has_path(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace("a1 = 1.0", "a1 = 1.0\nwobble = 2")
    with pytest.raises(ConfigError, match=r"unknown key: problem\.wobble"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_unknown_section(tmp_path):
    text = base_cfg_text(tmp_path / "o") + "\n[extra]\nx = 1\n"
    with pytest.raises(ConfigError, match="unknown key: extra"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_unknown_solver_key(tmp_path):
    text = base_cfg_text(tmp_path / "o") + "\n[solver]\nstep = 0.5\n"
    with pytest.raises(ConfigError, match=r"unknown key: solver\.step"):
        parse_config(write_cfg(tmp_path, text))


@pytest.mark.parametrize("cut,missing", [
    ("q = 3.0\n", "problem.q"),
    ("dimension = 3\n", "problem.dimension"),
    ("r0 = 4.0\n", "problem.r0"),
])
def test_parse_missing_mandatory_key(tmp_path, cut, missing):
    text = base_cfg_text(tmp_path / "o").replace(cut, "")
    with pytest.raises(ConfigError, match=f"missing key: {missing}".replace(".", r"\.")):
        parse_config(write_cfg(tmp_path, text))


def test_parse_missing_potential_section(tmp_path):
    text = base_cfg_text(tmp_path / "o")
    text = text.replace(
        '[problem.potential]\nfamily = "constant"\nparams = {value = 1.0}\n\n', "")
    with pytest.raises(ConfigError, match=r"missing key: problem\.potential"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_unknown_family_lists_known(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace('family = "constant"',
                                                 'family = "mystery"')
    with pytest.raises(ConfigError, match="unknown family 'mystery'.*constant"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_bad_family_param_has_path(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace("params = {value = 1.0}",
                                                 "params = {vallue = 1.0}")
    with pytest.raises(ConfigError, match=r"problem\.potential\.params"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_rejects_bool_as_number(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace("a1 = 1.0", "a1 = true")
    with pytest.raises(ConfigError, match=r"problem\.a1"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_modulation_subtable(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace(
        "params = {c1 = 1.0, g1 = 3.0}",
        "params = {c1 = 1.0, g1 = 3.0, modulation = {base = 1.0, amp = 0.25, freq = 2.0}}")
    cfg = parse_config(write_cfg(tmp_path, text))
    mod = cfg.spec.nonlinearity.modulation
    assert mod.amp == 0.25
    assert mod.freq == 2.0


def test_parse_sweep_requires_increasing_radii(tmp_path):
    text = base_cfg_text(tmp_path / "o") + "\n[sweep]\ntable = [[2.0, 1.0], [2.0, 4.0]]\n"
    with pytest.raises(ConfigError, match="strictly increasing"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_sweep_malformed_row(tmp_path):
    text = base_cfg_text(tmp_path / "o") + "\n[sweep]\ntable = [[2.0, 1.0, 3.0]]\n"
    with pytest.raises(ConfigError, match=r"sweep\.table\[0\]"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_sweep_and_exponential_exclusive(tmp_path):
    text = (base_cfg_text(tmp_path / "o")
            + "\n[exponential]\na = 1.0\nmu = 0.5\n"
            + "\n[sweep]\ntable = [[6.0, 1.0], [7.0, 2.0]]\n")
    with pytest.raises(ConfigError, match="mutually exclusive"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_output_dir_must_be_string(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace(
        f'dir = "{tmp_path / "o"}"', "dir = 3")
    with pytest.raises(ConfigError, match=r"output\.dir"):
        parse_config(write_cfg(tmp_path, text))


def test_parse_file_not_found(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "absent.toml")


def test_parse_toml_syntax_error(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(write_cfg(tmp_path, "problem = [unclosed\n"))


def test_runconfig_rejects_grid_without_tail(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace("r_max = 20.0", "r_max = 4.0")
    with pytest.raises(ConfigError, match="tail node"):
        parse_config(write_cfg(tmp_path, text))


def test_runconfig_rejects_tiny_mesh(tmp_path):
    text = base_cfg_text(tmp_path / "o").replace("nodes = 400", "nodes = 2")
    with pytest.raises(ConfigError, match="nodes"):
        parse_config(write_cfg(tmp_path, text))


# ---------------------------------------------------------------------------
# pipeline: solve route
# ---------------------------------------------------------------------------


def test_pipeline_converges_and_passes(solve_run):
    _, report = solve_run
    assert report.exit_code == 0
    assert report.data["solve"]["converged"] is True
    assert report.data["certificates"]["all_passed"] is True
    assert report.data["certificates"]["verdict"] == "solves-original"


def test_report_top_level_keys(solve_run):
    _, report = solve_run
    data = json.loads((report.outputs["report"]).read_text())
    assert set(data) == {"hypotheses", "solve", "certificates", "thresholds",
                         "provenance", "timings"}


def _bare_numbers(node, path=""):
    bad = []
    if isinstance(node, dict):
        if set(node) == {"value", "source"}:
            return bad
        for k, v in node.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                bad.append(f"{path}.{k}")
            else:
                bad.extend(_bare_numbers(v, f"{path}.{k}"))
    elif isinstance(node, list):
        for i, v in enumerate(node):
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                bad.append(f"{path}[{i}]")
            else:
                bad.extend(_bare_numbers(v, f"{path}[{i}]"))
    return bad


def test_every_number_carries_a_source(solve_run):
    _, report = solve_run
    data = json.loads((report.outputs["report"]).read_text())
    assert _bare_numbers(data) == []


def test_sources_name_operations(solve_run):
    _, report = solve_run
    data = json.loads((report.outputs["report"]).read_text())
    sources = set()

    def collect(node):
        if isinstance(node, dict):
            if set(node) == {"value", "source"}:
                sources.add(node["source"])
                return
            for v in node.values():
                collect(v)
        elif isinstance(node, list):
            for v in node:
                collect(v)

    collect(data)
    assert "mountain_pass.mpa_solve" in sources
    assert "problem_model.check_hypotheses" in sources
    assert "certificates.thresholds" in sources
    assert "wall-clock" in sources
    assert all(src for src in sources)


def test_provenance_records_versions_and_grid(solve_run):
    cfg, report = solve_run
    prov = json.loads((report.outputs["report"]).read_text())["provenance"]
    for lib in ("numpy", "scipy", "matplotlib"):
        assert prov["libraries"][lib]
    assert prov["grid"]["nodes"]["value"] == cfg.nodes
    assert prov["grid"]["r_max"]["value"] == cfg.r_max
    assert prov["solver"]["seed"]["value"] == cfg.seed
    assert prov["solver"]["path_points"]["value"] == cfg.path_points


def test_timings_cover_stages(solve_run):
    _, report = solve_run
    timings = json.loads((report.outputs["report"]).read_text())["timings"]
    for stage in ("hypotheses", "grid", "endpoint", "solve",
                  "certificates", "thresholds"):
        assert stage in timings
        assert timings[stage]["source"] == "wall-clock"
        assert timings[stage]["value"] >= 0


def test_csv_header_and_shape(solve_run):
    cfg, report = solve_run
    lines = (report.outputs["profile"]).read_text().splitlines()
    assert lines[0] == "r,u,V,f_of_u,g_of_u,decay_bound"
    assert len(lines) == 1 + report.grid.r.size


def test_csv_decay_column_empty_inside_splice_radius(solve_run):
    cfg, report = solve_run
    lines = (report.outputs["profile"]).read_text().splitlines()[1:]
    radius = cfg.spec.splice_radius
    for line in lines:
        parts = line.split(",")
        r = float(parts[0])
        if r < radius:
            assert parts[5] == ""
        else:
            assert float(parts[5]) * (1 + 1e-8) >= abs(float(parts[1]))


def test_csv_roundtrips_solution_bitwise(solve_run):
    _, report = solve_run
    r, u = read_profile_csv(report.outputs["profile"])
    assert np.array_equal(r, report.grid.r)
    assert np.array_equal(u, report.profile)


def test_csv_g_column_matches_penalization(solve_run):
    cfg, report = solve_run
    lines = (report.outputs["profile"]).read_text().splitlines()[1:]
    pen = PenalizedNonlinearity(cfg.spec)
    g = np.asarray(pen.g(report.grid.r, report.profile), dtype=float)
    got = np.array([float(line.split(",")[4]) for line in lines])
    assert np.array_equal(got, g)


def test_figures_are_rendered(solve_run):
    _, report = solve_run
    for key in ("profile_figure", "history_figure", "consistency_figure"):
        path = report.outputs[key]
        assert path.exists()
        assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_emits_are_byte_stable(tmp_path):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    cfg1 = parse_config(write_cfg(tmp_path, base_cfg_text(out1), "a.toml"))
    cfg2 = parse_config(write_cfg(tmp_path, base_cfg_text(out2), "b.toml"))
    rep1 = run_pipeline(cfg1)
    rep2 = run_pipeline(cfg2)
    assert (out1 / "profile.csv").read_bytes() == (out2 / "profile.csv").read_bytes()
    d1 = json.loads((out1 / "report.json").read_text())
    d2 = json.loads((out2 / "report.json").read_text())
    d1.pop("timings")
    d2.pop("timings")
    assert json.dumps(d1, sort_keys=True) == json.dumps(d2, sort_keys=True)


def test_certify_reproduces_solve_verdict(solve_run, tmp_path):
    cfg, report = solve_run
    cert_cfg = replace(cfg, out_dir=tmp_path)
    cert = run_certify(cert_cfg, report.outputs["profile"])
    assert cert.exit_code == 0
    a = report.data["certificates"]
    b = cert.data["certificates"]
    assert b["verdict"] == a["verdict"]
    for rec_a, rec_b in zip(a["checks"], b["checks"]):
        assert rec_b["name"] == rec_a["name"]
        assert rec_b["margin"]["value"] == rec_a["margin"]["value"]


def test_certify_rejects_mismatched_grid(solve_run, tmp_path):
    cfg, report = solve_run
    other = replace(cfg, nodes=cfg.nodes + 10, out_dir=tmp_path)
    with pytest.raises(StageError) as err:
        run_certify(other, report.outputs["profile"])
    assert err.value.stage == "ingest"


def test_certify_zero_profile_passes_vacuously(tmp_path):
    out = tmp_path / "out"
    cfg = parse_config(write_cfg(tmp_path, base_cfg_text(out)))
    grid = build_grid(cfg.spec.dim, cfg.r_max, cfg.nodes)
    out.mkdir()
    csv = write_profile_csv(grid, cfg.spec, np.zeros_like(grid.r),
                            math.nan, out / "profile.csv")
    report = run_certify(cfg, csv)
    assert report.exit_code == 0
    assert report.data["certificates"]["verdict"] == "solves-original"


def test_stage_failure_yields_partial_report(tmp_path):
    out = tmp_path / "out"
    text = base_cfg_text(out).replace(
        "params = {c1 = 1.0, g1 = 3.0}",
        "params = {c1 = 1.0, g1 = 3.0, c2 = 1.0, g2 = 5.0}")
    cfg = parse_config(write_cfg(tmp_path, text))
    with pytest.raises(StageError) as err:
        run_pipeline(cfg)
    assert err.value.stage == "hypotheses"
    data = json.loads((out / "report.json").read_text())
    assert data["error"]["stage"] == "hypotheses"
    assert data["hypotheses"] is not None
    assert data["solve"] is None


def test_run_check_reports_failure_without_abort(tmp_path):
    out = tmp_path / "out"
    text = base_cfg_text(out).replace(
        "params = {c1 = 1.0, g1 = 3.0}",
        "params = {c1 = 1.0, g1 = 3.0, c2 = 1.0, g2 = 5.0}")
    cfg = parse_config(write_cfg(tmp_path, text))
    report = run_check(cfg)
    assert report.exit_code == 1
    assert report.data["hypotheses"]["all_ok"] is False
    assert "error" not in report.data


def test_run_thresholds_matches_apriori_chain(tmp_path):
    from mpcert import apriori_chain

    out = tmp_path / "out"
    cfg = parse_config(write_cfg(tmp_path, base_cfg_text(out)))
    report = run_thresholds(cfg)
    assert report.exit_code == 0
    _, _, th = apriori_chain(cfg.spec)
    entry = report.data["thresholds"]
    assert entry["lambda_star"]["value"] == th.lambda_star
    assert entry["lambda_tilde_star"]["value"] == th.lambda_tilde_star
    assert entry["admissible"] is (cfg.spec.lam >= th.lambda_star)


# ---------------------------------------------------------------------------
# pipeline: sweep route
# ---------------------------------------------------------------------------


def sweep_cfg_text(out_dir):
    text = BASE.format(nodes=400, out=str(out_dir))
    text = text.replace("radius_R = 5.0", "radius_R = 1.0")
    text = text.replace("r0 = 4.0", "r0 = 0.5")
    text = text.replace("v_infty = 1.0", "v_infty = 36.0")
    text = text.replace("params = {value = 1.0}", "params = {value = 36.0}")
    return text + SWEEP_TABLE


def test_sweep_concurrent_matches_sequential(tmp_path):
    out = tmp_path / "out"
    cfg = parse_config(write_cfg(tmp_path, sweep_cfg_text(out)))
    report = run_sweep(cfg)
    assert report.exit_code == 0
    entry = report.data["thresholds"]
    assert entry["verdict"] == "unbounded"

    seq = sweep_check(cfg.spec.pairs, cfg.spec)
    assert [x["value"] for x in entry["ratios"]] == seq["ratios"]
    for rec, ref in zip(entry["pairs"], seq["pairs"]):
        assert rec["lambda_star"]["value"] == ref["lambda_star"]
        assert rec["admissible"] == ref["admissible"]
    assert entry["verdict"] == seq["verdict"]


def test_sweep_renders_figure(tmp_path):
    out = tmp_path / "out"
    cfg = parse_config(write_cfg(tmp_path, sweep_cfg_text(out)))
    report = run_sweep(cfg)
    path = report.outputs["sweep_figure"]
    assert path.exists()
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_sweep_rejected_outside_sweep_mode(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, base_cfg_text(tmp_path / "o")))
    with pytest.raises(ValueError, match="sweep"):
        run_sweep(cfg)
    sweep = parse_config(write_cfg(tmp_path, sweep_cfg_text(tmp_path / "s"),
                                   "s.toml"))
    with pytest.raises(ValueError, match="sweep"):
        run_pipeline(sweep)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def test_cli_check_exit_codes(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, base_cfg_text(tmp_path / "o"))
    assert main(["check", "--config", str(cfg_path)]) == 0
    assert "hypotheses: ok" in capsys.readouterr().out


def test_cli_solve_prints_summary(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, base_cfg_text(tmp_path / "o"))
    code = main(["solve", "--config", str(cfg_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "solve: converged" in out
    assert "verdict solves-original" in out
    assert "lambda*" in out


def test_cli_config_error_is_exit_2(tmp_path, capsys):
    bad = write_cfg(tmp_path, base_cfg_text(tmp_path / "o").replace(
        "p = 3.0", "p = 7.0"))
    assert main(["solve", "--config", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "nope.toml")]) == 2


def test_cli_mode_routing(tmp_path, capsys):
    sweep_path = write_cfg(tmp_path, sweep_cfg_text(tmp_path / "s"), "s.toml")
    plain_path = write_cfg(tmp_path, base_cfg_text(tmp_path / "o"))
    assert main(["solve", "--config", str(sweep_path)]) == 2
    assert main(["sweep", "--config", str(plain_path)]) == 2
    capsys.readouterr()
    assert main(["sweep", "--config", str(sweep_path)]) == 0
    assert "trend verdict: unbounded" in capsys.readouterr().out


def test_cli_overrides_reach_report(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, base_cfg_text(tmp_path / "ignored"))
    out = tmp_path / "override"
    code = main(["check", "--config", str(cfg_path), "--out", str(out),
                 "--mesh", "500", "--rmax", "25.0", "--seed", "7"])
    assert code == 0
    prov = json.loads((out / "report.json").read_text())["provenance"]
    assert prov["grid"]["nodes"]["value"] == 500
    assert prov["grid"]["r_max"]["value"] == 25.0
    assert prov["solver"]["seed"]["value"] == 7


def test_cli_certify_needs_existing_profile(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, base_cfg_text(tmp_path / "empty"))
    assert main(["certify", "--config", str(cfg_path)]) == 2
    assert "profile" in capsys.readouterr().err


def test_cli_failed_hypotheses_exit_1(tmp_path, capsys):
    text = base_cfg_text(tmp_path / "o").replace(
        "params = {c1 = 1.0, g1 = 3.0}",
        "params = {c1 = 1.0, g1 = 3.0, c2 = 1.0, g2 = 5.0}")
    cfg_path = write_cfg(tmp_path, text)
    assert main(["check", "--config", str(cfg_path)]) == 1
    assert "hypotheses: FAILED" in capsys.readouterr().out
    assert main(["solve", "--config", str(cfg_path)]) == 1
    assert "stage 'hypotheses' failed" in capsys.readouterr().err
