import json

import numpy as np
import pytest
from click.testing import CliRunner

from ambient_riemann import cli
from ambient_riemann import manifolds as mf


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args, env=None):
    return runner.invoke(cli.main, [str(a) for a in args], env=env)


@pytest.mark.parametrize("manifold", ["sphere", "so_n", "stiefel", "grassmann", "flag",
                                      "sasaki_sphere_tangent"])
def test_check_passes_everywhere(runner, manifold):
    r = invoke(runner, "check", "--manifold", manifold, "--seed", 3, "--samples", 2)
    assert r.exit_code == 0, r.output
    rep = json.loads(r.output)
    assert rep["meta"]["seed"] == 3
    assert rep["meta"]["command"] == "check"
    assert rep["checks"] and all(c["pass"] for c in rep["checks"])


def test_same_seed_same_bytes(runner):
    args = ("jacobi", "--manifold", "grassmann", "--seed", 5, "--random", 2)
    a, b = invoke(runner, *args), invoke(runner, *args)
    assert a.exit_code == 0
    assert a.output == b.output
    c = invoke(runner, "jacobi", "--manifold", "grassmann", "--seed", 6, "--random", 2)
    assert c.output != a.output


def test_config_equals_flags(runner, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"manifold": "sphere", "n": 4, "seed": 9, "samples": 2}))
    a = invoke(runner, "curvature", "--config", cfg)
    b = invoke(runner, "curvature", "--manifold", "sphere", "--n", 4, "--seed", 9, "--samples", 2)
    assert a.exit_code == 0
    assert a.output == b.output
    # flags override the config
    c = invoke(runner, "curvature", "--config", cfg, "--seed", 10)
    assert json.loads(c.output)["meta"]["seed"] == 10


def test_env_seed_fallback(runner):
    a = invoke(runner, "geodesic", "--manifold", "so_n", env={cli.SEED_ENV: "4"})
    b = invoke(runner, "geodesic", "--manifold", "so_n", "--seed", 4)
    assert a.output == b.output
    bad = invoke(runner, "geodesic", "--manifold", "so_n", env={cli.SEED_ENV: "x"})
    assert bad.exit_code == 2


def test_default_seed_is_zero(monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)
    assert cli.default_seed() == 0


def test_exit_codes(runner, tmp_path):
    assert invoke(runner, "check", "--manifold", "sphere", "--tol", 1e-30).exit_code == 1
    assert invoke(runner, "check", "--manifold", "moebius").exit_code == 2
    assert invoke(runner, "check").exit_code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert invoke(runner, "check", "--config", bad).exit_code == 2
    extra = tmp_path / "extra.json"
    extra.write_text(json.dumps({"manifold": "sphere", "colour": "red"}))
    assert invoke(runner, "check", "--config", extra).exit_code == 2
    assert invoke(runner, "check", "--manifold", "flag", "--partition", "2,x").exit_code == 2
    assert invoke(runner, "check", "--manifold", "stiefel", "--n", 2, "--p", 3).exit_code == 2


def test_out_file_and_csv(runner, tmp_path):
    out = tmp_path / "r.csv"
    r = invoke(runner, "geodesic", "--manifold", "grassmann", "--format", "csv", "--out", out,
               "--t-grid", "0,0.5,1")
    assert r.exit_code == 0
    text = out.read_text()
    assert text.startswith("# table checks")
    assert "# table geodesic" in text
    assert r.output == ""


def test_number_format_round_trips(runner):
    r = invoke(runner, "geodesic", "--manifold", "sphere", "--seed", 1, "--random", 1)
    rep = json.loads(r.output)
    row = rep["tables"]["geodesic"][-1]
    assert row["closed_vs_rk4"] < 1e-8
    assert cli._num(0.1) == "0.10000000000000001"
    assert cli._num(2.0) == "2.0"


def _write_inputs(path, samples):
    path.write_text(json.dumps({"samples": [{k: np.asarray(v).tolist() for k, v in s.items()}
                                            for s in samples]}))


def test_inputs_json(runner, tmp_path):
    rng = np.random.default_rng(0)
    e = mf.sphere(3)
    x = e.random_point(rng)
    s = {"x": x, **{k: e.random_tangent(rng, x) for k in ("xi", "eta", "phi")}}
    path = tmp_path / "in.json"
    _write_inputs(path, [s])
    r = invoke(runner, "curvature", "--manifold", "sphere", "--inputs", path)
    assert r.exit_code == 0, r.output
    rep = json.loads(r.output)
    R = np.array(rep["tables"]["curvature"][0]["R"], dtype=float)
    assert np.abs(R - e.closed["curvature"](x, s["xi"], s["eta"], s["phi"])).max() < 1e-9


def test_inputs_off_manifold(runner, tmp_path):
    path = tmp_path / "in.json"
    _write_inputs(path, [{"x": [1.0, 1.0, 0.0], "xi": [0, 0, 1.0], "eta": [0, 0, 1.0],
                          "phi": [0, 0, 1.0]}])
    r = invoke(runner, "curvature", "--manifold", "sphere", "--inputs", path)
    assert r.exit_code == 2
    assert "membership_residual" in r.output


def test_inputs_non_tangent_and_missing_key(runner, tmp_path):
    path = tmp_path / "in.json"
    _write_inputs(path, [{"x": [1.0, 0.0, 0.0], "xi": [1.0, 0, 0], "eta": [0, 1.0, 0],
                          "phi": [0, 0, 1.0]}])
    assert invoke(runner, "curvature", "--manifold", "sphere", "--inputs", path).exit_code == 2
    _write_inputs(path, [{"x": [1.0, 0.0, 0.0]}])
    assert invoke(runner, "curvature", "--manifold", "sphere", "--inputs", path).exit_code == 2


def test_inputs_csv_blocks(runner, tmp_path):
    rng = np.random.default_rng(1)
    e = mf.so_n(3)
    lines = []
    for _ in range(2):
        U = e.random_point(rng)
        v = e.random_tangent(rng, U)
        for key, M in (("x", U), ("v", v)):
            lines.append(f"# {key}")
            lines += [",".join(repr(float(a)) for a in row) for row in M]
    path = tmp_path / "in.csv"
    path.write_text("\n".join(lines) + "\n")
    r = invoke(runner, "geodesic", "--manifold", "so_n", "--n", 3, "--inputs", path)
    assert r.exit_code == 0, r.output
    rows = json.loads(r.output)["tables"]["geodesic"]
    assert sorted({row["sample"] for row in rows}) == [0, 1]


def test_jacobi_inits(runner):
    for init in ("velocity", "scaled_velocity"):
        r = invoke(runner, "jacobi", "--manifold", "flag", "--init", init, "--random", 1)
        assert r.exit_code == 0, r.output


def test_jacobi_rejects_bad_double_tangent(runner, tmp_path):
    rng = np.random.default_rng(2)
    e = mf.so_n(3)
    U = e.random_point(rng)
    v = e.random_tangent(rng, U)
    path = tmp_path / "in.json"
    _write_inputs(path, [{"x": U, "v": v, "dm": v, "dt": U}])
    r = invoke(runner, "jacobi", "--manifold", "so_n", "--n", 3, "--inputs", path)
    assert r.exit_code == 2


def test_natmetric_command(runner):
    for metric in ("sasaki", "cheeger_gromoll"):
        r = invoke(runner, "natmetric", "--manifold", "grassmann", "--metric", metric,
                   "--random", 1)
        assert r.exit_code == 0, r.output
        tables = json.loads(r.output)["tables"]
        for name in ("gamma_G", "gamma_HQ"):
            assert {row["part"] for row in tables[name]} == {"hh", "hv", "vh", "vv"}


def test_empty_t_grid(runner):
    r = invoke(runner, "geodesic", "--manifold", "sphere", "--t-grid", "")
    assert r.exit_code == 0
    assert json.loads(r.output)["tables"]["geodesic"] == []


def test_per_check_tolerance_override():
    cfg = {"manifold": "sphere", "seed": 0, "samples": 1,
           "tol": {"curvature.sectional_unit": 1e-30}}
    code, text = cli.execute("check", cfg)
    rep = json.loads(text)
    failed = {c["name"] for c in rep["checks"] if not c["pass"]}
    assert code == 1
    assert failed <= {"curvature.sectional_unit"}


def test_version(runner):
    r = invoke(runner, "--version")
    assert r.exit_code == 0
    assert "0.1.0" in r.output


def test_integration_failure_exits_one(runner, tmp_path):
    path = tmp_path / "in.json"
    _write_inputs(path, [{"x": [1.0, 0.0, 0.0], "v": [0.0, 2.0, 0.0]}])
    r = invoke(runner, "geodesic", "--manifold", "sphere", "--inputs", path, "--steps", 1,
               "--t-grid", "0,1")
    assert r.exit_code == 1
    assert "drifted" in r.output
