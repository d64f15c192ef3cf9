import math
import os

import pytest
from click.testing import CliRunner

from dynlab.cli import main
from dynlab.config import ExperimentConfig, build_map, parse_config
from dynlab.errors import ConfigError
from dynlab.experiments import run_experiment, scan_family
from dynlab.intervals import IntervalMap
from dynlab.parallel import pmap
from dynlab.polynomials import Polynomial
from dynlab.reports import csv_text, dumps_json, fmt_float, svg_plot

GOOD_CONFIG = """\
# logistic with both real checks
map = logistic
a = 4.0
checks = ld bc
ld.K = 10
ld.radius = 0.1
ld.N = 100
bc.r = 2
bc.delta0 = 0.05
bc.grid = 2
bc.depth = 8
seed = 3
"""

CHECKS = (("ld", {"K": 10.0, "radius": 0.1, "N": 100}),
          ("bc", {"r": 2.0, "delta0": 0.05, "grid": 2, "depth": 8}))


# -------------------------------------------------------------------- config

def test_parse_config_roundtrip():
    cfg = parse_config(GOOD_CONFIG)
    assert cfg.kind == "logistic" and cfg.params == {"a": 4.0}
    assert cfg.seed == 3 and cfg.axis is None
    assert [n for n, _ in cfg.checks] == ["ld", "bc"]
    assert cfg.checks[0][1] == {"K": 10.0, "radius": 0.1, "N": 100}
    # canonicalization is stable: reparsing the canonical text is a fixpoint
    again = parse_config(cfg.canonical())
    assert again.config_hash == cfg.config_hash


def test_parse_config_polynomial_complex():
    cfg = parse_config("map = polynomial\ncoefficients = 1j 0j 1+0j\n")
    m = build_map(cfg.kind, cfg.params)
    assert isinstance(m, Polynomial) and m.coefficients[0] == 1j


def test_parse_config_axis():
    cfg = parse_config("map = logistic\naxis = 3.6 3.9 4.0\n")
    assert cfg.axis == (3.6, 3.9, 4.0)


@pytest.mark.parametrize("text", [
    "a = 4.0\n",                                   # missing map
    "map = henon\na = 1.4\n",                      # unknown kind
    "map = logistic\n",                            # missing parameter
    "map = logistic\na = 4\nchecks = ld\n",        # missing budget key
    "map = logistic\na = 4\nchecks = ld\nld.K = -1\nld.radius = 0.1\n"
    "ld.N = 10\n",                                 # non-positive budget
    "map = logistic\na = 4\nbogus = 1\n",          # unknown key
    "map = logistic\na = 4\na = 5\n",              # duplicate key
    "map = polynomial\naxis = 1 2\ncoefficients = 0j 0j 1+0j\n",
    "not a pair\n",
])
def test_parse_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_build_map_families():
    assert isinstance(build_map("quadratic", {"c": -2.0}), IntervalMap)
    assert isinstance(build_map("cubic", {"s": 1.5}), IntervalMap)


# ------------------------------------------------------------------- reports

def test_dumps_json_sorted_and_fixed_precision():
    s = dumps_json({"b": 0.1, "a": [1, True, None, "x"]})
    assert s == '{"a": [1, true, null, "x"], "b": 0.10000000000000001}'


def test_dumps_json_specials():
    s = dumps_json([float("nan"), float("inf"), 2.0])
    assert s == "[NaN, Infinity, 2.0]"


def test_dumps_json_rejects_unserializable():
    with pytest.raises(TypeError):
        dumps_json({"f": object()})


def test_fmt_float_digits():
    assert fmt_float(1 / 3, 17) == "0.33333333333333331"
    assert fmt_float(1 / 3, 12) == "0.333333333333"
    assert fmt_float(2.0) == "2.0"


def test_csv_text_digits():
    out = csv_text(("a", "b"), [(1 / 3, "x"), (2.0, True)])
    assert out == "a,b\n0.333333333333,x\n2.0,true\n"


def test_svg_plot_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    curves = [("growth", [0, 1, 2], [1.0, 4.0, 16.0])]
    svg_plot(str(p1), curves=curves, title="t", log_y=True)
    svg_plot(str(p2), curves=curves, title="t", log_y=True)
    b = p1.read_bytes()
    assert b == p2.read_bytes()
    assert b.startswith(b"<svg") and b"polyline" in b


# --------------------------------------------------------------- experiments

def test_run_experiment_bundle(tmp_path):
    cfg = parse_config(GOOD_CONFIG + f"out = {tmp_path}\n")
    bundle = run_experiment(cfg)
    assert set(bundle) == {"ld", "bc"}
    for rep in bundle.values():
        assert rep["schema"] == 1
        assert rep["config_hash"] == cfg.config_hash
        assert rep["data"]["verdict"] == "no-violation-within-budget"
    assert (tmp_path / "report-ld.json").exists()
    assert (tmp_path / "summary.csv").exists()
    assert (tmp_path / "plot-derivative-growth.svg").exists()


def test_run_experiment_empty_checks():
    cfg = parse_config("map = logistic\na = 4.0\n")
    assert run_experiment(cfg) == {}


def test_run_experiment_workers_byte_identical():
    cfg = parse_config(GOOD_CONFIG)
    blobs = {dumps_json(run_experiment(cfg, workers=w)) for w in (1, 4)}
    assert len(blobs) == 1


def test_scan_family_rows_and_matrix():
    res = scan_family("logistic", [3.6, 4.0], CHECKS, seed=0)
    assert len(res.rows) == len(res.axis) == 2
    matrix = res.consistency_matrix()
    assert matrix[1] == (4.0, True, True)


def test_scan_family_row_errors_recorded():
    # c = 0.5 has no invariant interval: the row records the error and the
    # scan continues
    res = scan_family("quadratic", [0.5, -2.0], CHECKS, seed=0)
    assert res.rows[0]["error"] is not None
    assert res.rows[1]["error"] is None
    assert res.rows[1]["verdicts"]["ld"] == "no-violation-within-budget"


def test_scan_family_deterministic_across_workers(tmp_path):
    blobs = set()
    for w in (1, 4):
        res = scan_family("logistic", [3.6, 3.9, 4.0], CHECKS, seed=0,
                          workers=w, out_dir=str(tmp_path / f"w{w}"))
        blobs.add(dumps_json(res.to_json()))
        blobs_csv = (tmp_path / f"w{w}" / "scan.csv").read_bytes()
    assert len(blobs) == 1
    assert (tmp_path / "w1" / "scan.csv").read_bytes() == blobs_csv
    assert (tmp_path / "w1" / "consistency.csv").exists()


def test_scan_result_row_count_invariant():
    from dynlab.experiments import ScanResult
    with pytest.raises(ValueError):
        ScanResult(kind="logistic", axis=(1.0, 2.0), rows=({},), seed=0,
                   config_hash="x")


def test_pmap_preserves_order():
    items = list(range(20))
    assert pmap(_square, items, workers=1) == [i * i for i in items]
    assert pmap(_square, items, workers=4) == [i * i for i in items]


def _square(x):
    return x * x


# ------------------------------------------------------------------------ cli

runner = CliRunner()


def test_cli_check_ld():
    r = runner.invoke(main, ["check-ld", "--poly", "-2 0 1", "-K", "10",
                             "--radius", "0.1", "-N", "50"])
    assert r.exit_code == 0
    assert '"verdict": "no-violation-within-budget"' in r.output


def test_cli_interval_example():
    r = runner.invoke(main, ["interval", "check-bc", "--family", "logistic",
                             "-a", "4.0", "-r", "2", "--delta0", "0.05",
                             "--grid", "2", "--depth", "8"])
    assert r.exit_code == 0
    assert '"condition": "BC"' in r.output


def test_cli_orbit_and_classify():
    r = runner.invoke(main, ["orbit", "--poly", "0 0 1", "--z0", "2",
                             "-n", "3"])
    assert r.exit_code == 0 and '"escaped_at"' in r.output
    r = runner.invoke(main, ["classify", "--poly", "-2 0 1"])
    assert r.exit_code == 0 and '"julia"' in r.output


def test_cli_ray_out_file(tmp_path):
    r = runner.invoke(main, ["--out", str(tmp_path), "ray", "--poly",
                             "0 0 1", "--angle", "1/4"])
    assert r.exit_code == 0
    assert (tmp_path / "ray.json").exists()


def test_cli_usage_errors_exit_2():
    assert runner.invoke(main, ["check-ld", "--poly", "zzz", "-K", "1",
                                "--radius", "0.1", "-N", "5"]).exit_code == 2
    assert runner.invoke(main, ["ray", "--poly", "0 0 1", "--angle",
                                "x"]).exit_code == 2
    assert runner.invoke(main, ["run"]).exit_code == 2   # needs --config


def test_cli_engine_error_exit_1():
    # basilica has an attracting cycle: puzzle construction refuses
    r = runner.invoke(main, ["puzzle", "--poly", "-1 0 1", "--angles",
                             "1/3", "--depth", "1"])
    assert r.exit_code == 1
    assert "PuzzleError" in r.output


def test_cli_run_and_scan(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(GOOD_CONFIG)
    r = runner.invoke(main, ["--config", str(cfg), "run"])
    assert r.exit_code == 0 and '"check-ld"' in r.output

    scan_cfg = tmp_path / "scan.txt"
    scan_cfg.write_text(GOOD_CONFIG.replace("a = 4.0", "axis = 3.9 4.0"))
    r = runner.invoke(main, ["--config", str(scan_cfg), "--out",
                             str(tmp_path / "out"), "scan"])
    assert r.exit_code == 0
    assert (tmp_path / "out" / "scan.csv").exists()


def test_cli_malformed_config_exit_2(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("map = henon\n")
    r = runner.invoke(main, ["--config", str(bad), "run"])
    assert r.exit_code == 2
