import json
from fractions import Fraction as F

import pytest

from updown import cli, separation
from updown.cli import UsageError, main


def read_manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def test_verify_pass(tmp_path, capsys):
    code = main([
        "verify", "--instance", "perm", "--nmax", "3", "--p", "1/3",
        "--out-dir", str(tmp_path),
    ])
    assert code == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["all_passed"]
    assert "PASS commutation" in capsys.readouterr().out
    manifest = read_manifest(tmp_path)
    assert manifest["subcommand"] == "verify"
    assert manifest["config"] == {"instance": "perm", "nmax": 3, "p": "1/3"}
    assert manifest["master_seed"] == 0
    assert manifest["outputs"] == ["verify_report.json"]
    assert manifest["execution"]["workers"] is None


def test_verify_level_cap_is_usage_error(tmp_path):
    code = main([
        "verify", "--instance", "perm", "--nmax", "6", "--p", "1/2",
        "--out-dir", str(tmp_path),
    ])
    assert code == 2
    assert not (tmp_path / "manifest.json").exists()


def test_missing_flag_is_usage_error(tmp_path):
    assert main(["verify", "--instance", "perm", "--out-dir", str(tmp_path)]) == 2


def test_float_p_rejected(tmp_path):
    code = main([
        "stationary", "--instance", "perm", "--n", "3", "--p", "0.5",
        "--out-dir", str(tmp_path),
    ])
    assert code == 2


def test_unknown_subcommand_exits_via_argparse():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_sepdist_discrete_exact_rows(tmp_path):
    code = main([
        "sepdist", "--mode", "discrete", "--n", "3", "--m", "0..2",
        "--out-dir", str(tmp_path),
    ])
    assert code == 0
    header, rows = read_csv(tmp_path / "sepdist.csv")
    assert header == ["mode", "n", "p", "abscissa", "value", "method", "err_bound"]
    assert [r[3] for r in rows] == ["0", "1", "2"]
    assert [r[4] for r in rows] == ["1/1", "1/1", "11/12"]
    assert all(r[2] == "NA" and r[5] == "formula-exact" for r in rows)
    assert all(F(r[6]) == 0 for r in rows)


def test_sepdist_continuous_matches_library(tmp_path):
    code = main([
        "sepdist", "--mode", "continuous", "--n", "50", "--t", "1",
        "--p", "1/2", "--out-dir", str(tmp_path),
    ])
    assert code == 0
    _, rows = read_csv(tmp_path / "sepdist.csv")
    assert len(rows) == 1
    sv = separation.sepdist_continuous(50, 1.0)
    assert float(rows[0][4]) == sv.value
    assert rows[0][2] == "1/2" and rows[0][5] == sv.method


def test_sepdist_limit_with_eta_columns(tmp_path):
    code = main([
        "sepdist", "--mode", "limit", "--t", "1..2:1", "--check-eta",
        "--out-dir", str(tmp_path),
    ])
    assert code == 0
    header, rows = read_csv(tmp_path / "sepdist.csv")
    assert header[-2:] == ["eta_product_residual", "eta_symmetry_residual"]
    assert len(rows) == 2
    for row in rows:
        assert abs(float(row[-2])) < 1e-12
        assert abs(float(row[-1])) < 1e-10
    assert abs(float(rows[0][4]) - separation.sepdist_limit(1.0).value) == 0


def test_check_eta_outside_limit_mode_rejected(tmp_path):
    code = main([
        "sepdist", "--mode", "discrete", "--n", "3", "--m", "1",
        "--check-eta", "--out-dir", str(tmp_path),
    ])
    assert code == 2


def test_simulate_writes_curve_and_manifest(tmp_path):
    argv = [
        "simulate", "--instance", "perm", "--n", "5", "--p", "1/2",
        "--pattern", "12", "--t", "0..1/2:1/4", "--traj", "4",
        "--seed", "7", "--workers", "2", "--out-dir", str(tmp_path),
    ]
    assert main(argv) == 0
    header, rows = read_csv(tmp_path / "density_curve.csv")
    assert header == [
        "instance", "n", "p", "pattern", "t", "estimate", "stderr", "prediction"
    ]
    assert len(rows) == 3
    assert rows[0][:4] == ["perm", "5", "1/2", "12"]
    manifest = read_manifest(tmp_path)
    assert manifest["master_seed"] == 7
    assert "workers" not in manifest["config"]
    assert manifest["execution"]["workers"] == 2

    # worker count changes scheduling only, never output bytes
    other = tmp_path / "serial"
    assert main([a if a != "2" else "1" for a in argv[:-2]]
                + ["--out-dir", str(other)]) == 0
    assert (other / "density_curve.csv").read_bytes() == \
        (tmp_path / "density_curve.csv").read_bytes()


def test_frames_perm_defaults(tmp_path):
    code = main([
        "frames", "--instance", "perm", "--n", "6", "--steps", "0..20:10",
        "--seed", "3", "--out-dir", str(tmp_path),
    ])
    assert code == 0
    names = sorted(q.name for q in tmp_path.glob("frame_*.pgm"))
    assert names == ["frame_000000.pgm", "frame_000001.pgm", "frame_000002.pgm"]
    blob = (tmp_path / "frame_000000.pgm").read_bytes()
    assert blob.startswith(b"P5\n6 6\n255\n")
    manifest = read_manifest(tmp_path)
    assert manifest["config"]["p"] == "1/2"
    assert manifest["config"]["initial"] == "identity"
    assert manifest["outputs"] == names


def test_frames_graph_default_initial(tmp_path):
    code = main([
        "frames", "--instance", "graph", "--n", "5", "--steps", "0..5:5",
        "--out-dir", str(tmp_path),
    ])
    assert code == 0
    assert read_manifest(tmp_path)["config"]["initial"] == "empty"


def test_stationary_json(tmp_path):
    code = main([
        "stationary", "--instance", "graph", "--n", "2", "--p", "1/3",
        "--out-dir", str(tmp_path),
    ])
    assert code == 0
    payload = json.loads((tmp_path / "stationary.json").read_text())
    assert payload["distribution"] == {"2:0": "1/3", "2:1": "2/3"}
    assert payload["p"] == "1/3"


def test_semidiscrete_report(tmp_path):
    code = main([
        "semidiscrete", "--sigma", "2413", "--pi", "12", "--p", "1/2",
        "--eps", "0.1", "--out-dir", str(tmp_path),
    ])
    assert code == 0
    payload = json.loads((tmp_path / "semidiscrete_report.json").read_text())
    assert payload["density"] == "1/2"
    assert payload["eps_polynomial"] == ["1/2", "0/1", "0/1"]
    assert payload["limit_value"] == "0/1"
    assert payload["constant_coefficient_zero"]
    assert payload["quadratic_identity"]
    assert payload["eps"] == "1/10"


def test_semidiscrete_eps_out_of_range(tmp_path):
    code = main([
        "semidiscrete", "--sigma", "21", "--pi", "12", "--p", "1/2",
        "--eps", "1", "--out-dir", str(tmp_path),
    ])
    assert code == 2


def test_config_file_merge(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("instance = graph\nn = 2\np = 1/3  # comment\n")
    out = tmp_path / "out"
    code = main([
        "stationary", "--config", str(cfg), "--n", "3", "--out-dir", str(out),
    ])
    assert code == 0
    payload = json.loads((out / "stationary.json").read_text())
    assert payload["n"] == 3  # flag beats config file
    assert payload["instance"] == "graph"


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus = 1\n")
    assert main(["stationary", "--config", str(cfg)]) == 2


def test_precision_error_maps_to_exit_one(tmp_path, monkeypatch):
    def boom(t):
        raise separation.PrecisionError("forced")

    monkeypatch.setattr(separation, "sepdist_limit", boom)
    code = main([
        "sepdist", "--mode", "limit", "--t", "1", "--out-dir", str(tmp_path),
    ])
    assert code == 1
    assert not (tmp_path / "manifest.json").exists()


def test_parse_grid_forms():
    assert cli._parse_grid("7", "--m", integer=True) == [7]
    assert cli._parse_grid("0..5", "--m", integer=True) == [0, 1, 2, 3, 4, 5]
    assert cli._parse_grid("0..6:2", "--m", integer=True) == [0, 2, 4, 6]
    grid = cli._parse_grid("1..2", "--t")
    assert len(grid) == 50 and grid[0] == 1 and grid[-1] == 2
    grid = cli._parse_grid("0.05..10:0.05", "--t")
    assert len(grid) == 200 and grid[0] == F("0.05")
    assert cli._parse_grid("3..3", "--t") == [F(3)]
    with pytest.raises(UsageError):
        cli._parse_grid("5..1", "--m", integer=True)
    with pytest.raises(UsageError):
        cli._parse_grid("1..2:0", "--t")
    with pytest.raises(UsageError):
        cli._parse_grid("a..b", "--t")
