import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from speclab import analytic, geometry, io, mps
from speclab.errors import ConfigError, MissingArtifact
from speclab.harness import apply_overrides, load_config, validate
from speclab.harness.cli import main

SMALL_DISK = {
    "domain": {"kind": "disk", "R": 1.0},
    "solver": {"K": 400},
    "grid": {"n_nodes": 1024},
    "weights": [{"name": "cos2", "type": "trig", "p": 2, "level": 1}],
    "packets": {"schedules": [{"alpha": 0.5, "k_min": 50, "k_max": 300, "k_step": 5},
                              {"alpha": 0.0, "N_min": 8, "k_min": 50, "k_max": 300, "k_step": 5}]},
    "weyl": {"window": [100.0, 1200.0], "n_points": 60},
    # the second Weyl term still biases the counting slope this low in the spectrum
    "checks": {"counting_slope_tol": 0.1},
}


def write_config(tmp_path, raw, name="cfg.yaml"):
    raw = dict(raw, outputs={"directory": str(tmp_path / "out")})
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return path


# ---- io ---------------------------------------------------------------------

def test_fmt_is_exact():
    x = 0.1 + 0.2
    assert float(io.fmt(x)) == x
    assert io.fmt(True) == "true" and io.fmt(np.int64(3)) == "3"
    assert io.fmt(float("nan")) == "nan" and io.fmt(-float("inf")) == "-inf"


def test_analytic_spectrum_round_trip(tmp_path):
    spec = analytic.disk_spectrum(1.0, 60)
    path = tmp_path / "s.csv"
    io.write_spectrum(path, spec)
    back = io.read_analytic_spectrum(path, spec.domain)
    assert np.array_equal(back.lambdas, spec.lambdas)
    assert [m.family for m in back.modes] == [m.family for m in spec.modes]
    grid = geometry.build_grid(spec.domain, 256)
    assert np.array_equal(back.rho_matrix(grid), spec.rho_matrix(grid))
    ball = analytic.ball_spectrum(1.0, 30)
    io.write_spectrum(tmp_path / "b.csv", ball)
    assert np.array_equal(io.read_analytic_spectrum(tmp_path / "b.csv", ball.domain).lambdas, ball.lambdas)


def test_mps_round_trip(tmp_path):
    spec = mps.mps_spectrum(geometry.ellipse(1.0, 0.8), 6)
    io.write_mps_coeffs(tmp_path / "c.json", spec)
    back = io.read_mps_spectrum(tmp_path / "c.json", spec.domain)
    grid = geometry.build_grid(spec.domain, 256)
    assert np.array_equal(back.lambdas, spec.lambdas)
    assert np.array_equal(back.traces(grid), spec.traces(grid))


def test_missing_artifact(tmp_path):
    with pytest.raises(MissingArtifact):
        io.read_csv(tmp_path / "nope.csv")
    with pytest.raises(MissingArtifact):
        io.read_json(tmp_path / "nope.json")


# ---- config -----------------------------------------------------------------

def test_overrides():
    raw = apply_overrides(SMALL_DISK, ["solver.K=500", "packets.schedules.0.alpha=0.25",
                                       "checks.ratio_band=[0.5, 2]"])
    assert raw["solver"]["K"] == 500 and raw["packets"]["schedules"][0]["alpha"] == 0.25
    assert raw["checks"]["ratio_band"] == [0.5, 2]
    assert SMALL_DISK["solver"]["K"] == 400
    with pytest.raises(ConfigError):
        apply_overrides(SMALL_DISK, ["solver.K"])
    with pytest.raises(ConfigError):
        apply_overrides(SMALL_DISK, ["packets.schedules.7.alpha=1"])


@pytest.mark.parametrize("sets", [
    ["packets.schedules.0.alpha=1.2"],
    ["solver.method=analytic", "domain.kind=ellipse", "domain.a=1", "domain.b=0.5"],
    ["solver.K=100"],
    ["weights.0.p=0"],
    ["weights.0.type=curvature"],
    ["weights.0.name=unit"],
    ["domain.R=-1"],
    ["checks.bogus=1"],
])
def test_invalid_configs(sets):
    with pytest.raises(ConfigError):
        validate(apply_overrides(SMALL_DISK, sets))


def test_collocation_ceiling():
    raw = {"domain": {"kind": "ellipse", "a": 1.0, "b": 0.8}, "solver": {"K": 400}}
    with pytest.raises(ConfigError):
        validate(raw)


def test_config_defaults_and_hash(tmp_path):
    cfg = validate(SMALL_DISK)
    assert cfg.method == "analytic" and cfg.checks["rellich_tol"] == 1e-10
    assert cfg.sha256 == validate(json.loads(json.dumps(SMALL_DISK))).sha256
    path = write_config(tmp_path, SMALL_DISK)
    assert load_config(path)["solver"]["K"] == 400
    bad = tmp_path / "bad.yaml"
    bad.write_text("domain: [unclosed", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(bad)


# ---- cli --------------------------------------------------------------------

def test_run_passes_and_is_deterministic(tmp_path, capsys):
    path = write_config(tmp_path, SMALL_DISK)
    assert main(["run", str(path)]) == 0
    out = tmp_path / "out"
    names = sorted(p.name for p in out.iterdir())
    for want in ("spectrum.csv", "functionals.csv", "packets.csv", "packet_fits.json",
                 "cancellation_fits.json", "weyl_fits.json", "report.txt", "summary.json", "manifest.json"):
        assert want in names
    first = {n: (out / n).read_bytes() for n in names}
    manifest = json.loads(first["manifest.json"])
    assert "time" not in json.dumps(manifest).lower()
    assert manifest["config_sha256"] == validate(load_config(path)).sha256
    assert main(["run", str(path)]) == 0
    assert {n: (out / n).read_bytes() for n in names} == first
    assert "PASS" in capsys.readouterr().out


def test_check_failure_exit_code(tmp_path):
    path = write_config(tmp_path, SMALL_DISK)
    assert main(["run", str(path), "--set", "checks.ratio_band=[0.999, 1.001]"]) == 1


def test_config_error_exit_code(tmp_path):
    path = write_config(tmp_path, SMALL_DISK)
    assert main(["run", str(path), "--set", "packets.schedules.0.alpha=1.2"]) == 2
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_missing_artifact_exit_code(tmp_path):
    path = write_config(tmp_path, SMALL_DISK)
    assert main(["packets", str(path)]) == 3
    err = json.loads((tmp_path / "out" / "error.json").read_text())
    assert err["error"] == "MissingArtifact" and err["stage"] == "packets"


def test_stagewise_matches_run(tmp_path):
    path = write_config(tmp_path, SMALL_DISK)
    for stage in ("spectrum", "rellich", "packets", "cancellation", "weyl", "report"):
        assert main([stage, str(path)]) == 0
    staged = (tmp_path / "out" / "packets.csv").read_bytes()
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "out" / "packets.csv").read_bytes() == staged


def test_console_script_entry(tmp_path):
    path = write_config(tmp_path, SMALL_DISK)
    res = subprocess.run([sys.executable, "-m", "speclab.harness.cli", "spectrum", str(path)],
                         capture_output=True, text=True, timeout=300)
    assert res.returncode == 0, res.stderr


def test_minimal_disk_config(tmp_path):
    raw = {"domain": {"kind": "disk", "R": 1.0}, "solver": {"K": 200},
           "weights": [{"name": "cos2", "type": "trig", "p": 2}],
           "packets": {"schedules": [{"alpha": 0.5, "k_min": 50, "k_max": 150}]}}
    path = write_config(tmp_path, raw)
    assert main(["run", str(path)]) == 0
    csvs = sorted(p.name for p in (tmp_path / "out").glob("*.csv"))
    assert csvs == ["functionals.csv", "packets.csv", "spectrum.csv"]
