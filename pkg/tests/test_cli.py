import json
import math
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kleinx.cli import RunConfig, load_config, main, parse_config, build_parser
from kleinx.errors import DomainError

P38 = str(math.sqrt(3 / 8))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_config_round_trip_default():
    c = RunConfig()
    assert RunConfig.from_text(c.to_text()) == c


@given(st.floats(1e-15, 1e-2), st.integers(1, 5000), st.integers(1, 16),
       st.sampled_from(["csv", "json", "obj"]), st.sampled_from([".", "out dir", "/tmp/x"]))
def test_config_round_trip(rel, steps, workers, fmt, out):
    c = RunConfig(rel_tol=rel, sweep_steps=steps, workers=workers, format=fmt, output_dir=out)
    assert RunConfig.from_text(c.to_text()) == c


def test_config_validation():
    with pytest.raises(DomainError):
        RunConfig(rel_tol=0.0)
    with pytest.raises(DomainError):
        RunConfig(sweep_steps=0)
    with pytest.raises(DomainError):
        RunConfig(format="xml")
    with pytest.raises(DomainError):
        parse_config("just words")
    with pytest.raises(DomainError):
        RunConfig().updated({"bogus": "1"})
    assert parse_config("# comment\nrel_tol = 1e-9  # trailing\n\n") == {"rel_tol": "1e-9"}


def test_flags_override_file(tmp_path, monkeypatch):
    cfg = tmp_path / "k.cfg"
    cfg.write_text("rel_tol = 1e-9\nworkers = 3\n")
    args = build_parser().parse_args(["sturm", "--config", str(cfg), "--rel-tol", "1e-12"])
    c = load_config(args)
    assert c.rel_tol == 1e-12 and c.workers == 3
    monkeypatch.setenv("KLEINX_CONFIG", str(cfg))
    c = load_config(build_parser().parse_args(["sturm"]))
    assert c.rel_tol == 1e-9


def test_solve_extremal(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--p", P38, "--output-dir", str(tmp_path), "--json")
    assert code == 0
    summary = json.loads(out)
    assert summary["max_drift"] < 1e-9
    data = json.loads((tmp_path / "trajectory.json").read_text())
    assert data["trajectory"]["y"][0] == 0.0


def test_solve_full_near_one(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--p", "0.999", "--system", "full", "--y-end", "5",
                       "--output-dir", str(tmp_path), "--json")
    assert code == 0 and json.loads(out)["E1"] > 0


def test_usage_and_io_exit_codes(tmp_path, capsys):
    assert run(capsys, "solve", "--p", "1.5", "--output-dir", str(tmp_path))[0] == 2
    assert run(capsys, "sturm", "--rel-tol", "-1")[0] == 2
    assert run(capsys, "solve", "--p", "0.5", "--output-dir", "/proc/kleinx-no-such-dir")[0] == 3


def test_numerical_failure_exit_code(tmp_path, capsys):
    # a crossing cutoff shorter than the half period is a numerical failure
    code, _, err = run(capsys, "interval-check", "--p", "0.3", "--y-max", "0.5", "--output-dir", str(tmp_path))
    assert code == 1 and "NoCrossingError" in err
    code, _, err = run(capsys, "solve", "--p", "0.5", "--rel-tol", "1e-20", "--output-dir", str(tmp_path))
    assert code == 2


def test_sweep_small(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--steps", "12", "--p-min", "0.1", "--p-max", "0.8",
                       "--output-dir", str(tmp_path), "--no-refine")
    assert code == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0] == "p,y_half,cot_alpha,E0,E1,E2,rotation_ok" and len(rows) == 13
    cots = [float(r.split(",")[2]) for r in rows[1:]]
    assert sum(1 for a, b in zip(cots, cots[1:]) if (a > 0) != (b > 0)) == 1


def test_sweep_deterministic_across_workers(tmp_path, capsys):
    outs = []
    for w in ("1", "3"):
        d = tmp_path / w
        assert run(capsys, "sweep", "--steps", "20", "--p-min", "0.2", "--p-max", "0.7", "--workers", w,
                   "--output-dir", str(d), "--no-refine")[0] == 0
        outs.append(((d / "sweep.csv").read_bytes(), (d / "sweep_report.json").read_bytes()))
    assert outs[0] == outs[1]


def test_sturm_k1(tmp_path, capsys):
    code, out, _ = run(capsys, "sturm", "--k", "1", "--output-dir", str(tmp_path))
    assert code == 0
    vals = [ln["eigenvalue"] for ln in json.loads(out)["channels"]["1"]]
    assert min(abs(v - 1) for v in vals) < 1e-8


def test_embed_obj(tmp_path, capsys):
    code, _, _ = run(capsys, "embed", "--nx", "64", "--ny", "64", "--format", "obj", "--output-dir", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "embedding.obj").read_text().splitlines()
    verts = [list(map(float, ln.split()[1:])) for ln in lines if ln.startswith("v ")]
    assert len(verts) == 4096
    code, _, _ = run(capsys, "embed", "--nx", "4", "--ny", "4", "--axes", "1,2,9", "--format", "obj",
                     "--output-dir", str(tmp_path))
    assert code == 2


def test_embed_csv_unit_norm(tmp_path, capsys):
    assert run(capsys, "embed", "--nx", "8", "--ny", "8", "--output-dir", str(tmp_path))[0] == 0
    rows = (tmp_path / "embedding.csv").read_text().splitlines()[1:]
    for r in rows:
        c = list(map(float, r.split(",")[2:]))
        assert abs(sum(v * v for v in c) - 1) < 1e-10


def test_geometry(tmp_path, capsys):
    code, out, _ = run(capsys, "geometry", "--check-identity", "--lawson", "3", "1", "--bipolar", "3", "1",
                       "--output-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "lawson_3_1.obj").exists()
    assert (tmp_path / "bipolar_3_1.csv").read_text().startswith("u,v,E_coef,G_coef")
    assert (tmp_path / "geometry.json").exists()


def test_rule_out_and_interval(tmp_path, capsys):
    code, out, _ = run(capsys, "rule-out", "--p", "0.95", "--output-dir", str(tmp_path))
    assert code == 0 and json.loads(out)["falsified"] is False
    code, out, _ = run(capsys, "interval-check", "--p", "0.2", "--output-dir", str(tmp_path))
    assert code == 0 and json.loads(out)["passed"] is True
    assert run(capsys, "interval-check", "--p", "0.87", "--output-dir", str(tmp_path))[0] == 2


def test_specfun_selftest(capsys):
    code, out, _ = run(capsys, "specfun-selftest", "--json")
    assert code == 0


def test_verify_subset_json(capsys):
    code, out, _ = run(capsys, "verify", "--only", "1,2,12", "--json")
    rep = json.loads(out)
    assert code == 0 and [r["number"] for r in rep] == [1, 2, 12] and all(r["passed"] for r in rep)


def test_verify_loose_tolerance_still_reports(capsys):
    # criteria run at their own tolerances regardless of the config
    code, out, _ = run(capsys, "verify", "--only", "4", "--rel-tol", "1e-3", "--json")
    rep = json.loads(out)
    assert code == 0 and rep[0]["passed"]


def test_entry_points():
    out = subprocess.run([sys.executable, "-m", "kleinx", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for name in ("verify", "solve", "sweep", "sturm", "embed", "geometry", "specfun-selftest"):
        assert name in out.stdout
    bad = subprocess.run([sys.executable, "-m", "kleinx", "nope"], capture_output=True, text=True)
    assert bad.returncode == 2
