import csv
import json

import pytest

from wallcross import jsonio
from wallcross.cli import EXIT_FAIL, EXIT_MODULE, EXIT_OK, EXIT_SCHEMA, build_parser, config_from_args, main
from wallcross.config import DEFAULT_TOL, JobConfig, default_tol
from wallcross.workbench import dispatch


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_pentagon_verb_passes(capsys):
    code, out, _ = run(["pentagon", "--order", "8"], capsys)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["passed"] and doc["verb"] == "pentagon"


def test_out_file_matches_stdout(tmp_path, capsys):
    path = tmp_path / "p.json"
    code, out, _ = run(["pentagon", "--order", "6", "--out", str(path)], capsys)
    assert code == EXIT_OK
    assert json.loads(path.read_text())["results"] == json.loads(out)["results"]


def test_unknown_config_key_names_the_key(tmp_path, capsys):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"verb": "pentagon", "truncation": {"N": 4, "X": 1}}))
    code, _, err = run(["run", str(cfg)], capsys)
    assert code == EXIT_SCHEMA
    assert "(key: truncation.X)" in err


def test_unknown_param_and_verb(tmp_path, capsys):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"verb": "pentagon", "params": {"bogus": 1}}))
    code, _, err = run(["run", str(cfg)], capsys)
    assert code == EXIT_SCHEMA and "params.bogus" in err
    cfg.write_text(json.dumps({"verb": "nope"}))
    code, _, err = run(["run", str(cfg)], capsys)
    assert code == EXIT_SCHEMA and "(key: verb)" in err


def test_bad_schema_version(tmp_path, capsys):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"schema_version": 99, "verb": "pentagon"}))
    code, _, err = run(["run", str(cfg)], capsys)
    assert code == EXIT_SCHEMA and "schema_version" in err


def test_missing_file_and_bad_json(tmp_path, capsys):
    code, _, err = run(["cover", "canon", "--file", str(tmp_path / "absent.json")], capsys)
    assert code == EXIT_SCHEMA and "no such file" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = run(["cover", "canon", "--file", str(bad)], capsys)
    assert code == EXIT_SCHEMA


def test_argparse_usage_error_is_schema_exit(capsys):
    code, _, _ = run(["stab"], capsys)
    assert code == EXIT_SCHEMA


def test_module_error_exit(capsys):
    # direction of the sector is zero: a geometry error raised by the library
    code, _, err = run(["stab", "product", "--file", "tests/data/two_charges.json", "--sector", "0,0:1,0"], capsys)
    assert code in (EXIT_SCHEMA, EXIT_MODULE)
    assert err.startswith("wallcross:")


def test_failed_certificate_exit(tmp_path, capsys):
    # a nonflat connection: the flatness certificate fails, the run itself succeeds
    from wallcross.hlt import AlmostStandardConnection, PolyField, perturb, zgen

    st = AlmostStandardConnection.standard(1, 3, 3)
    bad = perturb(st, 0, PolyField({(1,): (zgen(1, 0),)}, 1))
    path = tmp_path / "conn.json"
    jsonio.save({"connection": bad.to_json()}, path)
    code, out, _ = run(["hlt", "flat", "--file", str(path)], capsys)
    assert code == EXIT_FAIL
    assert json.loads(out)["passed"] is False


@pytest.mark.parametrize("row", [0, 17, 101, 250, 299])
def test_cover_canon_matches_frozen_table(row, tmp_path, capsys):
    rows = json.loads(open("tests/data/cover_table.json").read())["rows"]
    r = rows[row]
    path = tmp_path / "in.json"
    path.write_text(json.dumps({k: r[k] for k in ("system", "cover", "element")}))
    code, out, _ = run(["cover", "canon", "--file", str(path)], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["results"]["canonical"] == r["canonical"]


def test_cover_rewrite_and_min(tmp_path, capsys):
    r = json.loads(open("tests/data/cover_table.json").read())["rows"][40]
    path = tmp_path / "in.json"
    path.write_text(json.dumps(r))
    assert run(["cover", "rewrite", "--file", str(path), "--trace"], capsys)[0] == EXIT_OK
    assert run(["cover", "min", "--file", str(path)], capsys)[0] == EXIT_OK


def test_report_is_deterministic_apart_from_timing():
    ns = build_parser().parse_args(["stab", "rays", "--file", "tests/data/two_charges.json"])
    a = dispatch(config_from_args(ns)).to_json(timing=False)
    b = dispatch(config_from_args(ns)).to_json(timing=False)
    assert a == b
    assert len(a["inputs_digest"]) == 64


def test_stability_verbs(capsys):
    f = "tests/data/two_charges.json"
    assert run(["stab", "product", "--file", f, "--sector", "1,1:-1,1"], capsys)[0] == EXIT_OK
    code, out, _ = run(["stab", "factorize", "--file", f, "--sector", "1,1:-1,1", "--ray", "1,2"], capsys)
    assert code == EXIT_OK
    assert run(["stab", "growth", "--planted", "1/3"], capsys)[0] == EXIT_OK


def test_hlt_verbs(capsys):
    f = "tests/data/gauged_connection.json"
    for verb in (["invariants"], ["flat"], ["normalize", "--method", "sj"]):
        assert run(["hlt", *verb, "--file", f], capsys)[0] == EXIT_OK


def test_env_tolerance(monkeypatch, capsys):
    monkeypatch.setenv("WALLCROSS_TOL", "1e-6")
    assert default_tol() == 1e-6
    assert JobConfig("pentagon").precision.tol == 1e-6
    ns = build_parser().parse_args(["pentagon"])
    assert config_from_args(ns).precision.tol == 1e-6
    # an explicit flag wins over the environment
    ns = build_parser().parse_args(["pentagon", "--tol", "1e-3"])
    assert config_from_args(ns).precision.tol == 1e-3
    monkeypatch.setenv("WALLCROSS_TOL", "lots")
    code, _, err = run(["pentagon"], capsys)
    assert code == EXIT_SCHEMA and "WALLCROSS_TOL" in err
    monkeypatch.delenv("WALLCROSS_TOL")
    assert default_tol() == DEFAULT_TOL


def test_thimble_csv(tmp_path, capsys):
    path = tmp_path / "t.csv"
    code, out, _ = run(["res", "thimble", "--poly", "x^3/3-x", "--t", "0.01+0.002j;0.02", "--index", "0",
                        "--csv", str(path)], capsys)
    assert code == EXIT_OK
    rows = list(csv.reader(path.open()))
    assert rows[0][:3] == ["index", "t_re", "t_im"] and len(rows) == 3
    assert len(json.loads(out)["results"]["integrals"]) == 2


def test_psi_and_borel(capsys):
    code, out, _ = run(["res", "psi", "--stokes", "tests/data/airy_stokes.json", "--t", "0.05j", "--depth", "3"],
                       capsys)
    assert code == EXIT_OK
    code, out, _ = run(["res", "borel", "--poly", "x^3/3-x"], capsys)
    assert code == EXIT_OK
    assert abs(json.loads(out)["results"]["nearest"]["distance"] - 4 / 3) < 0.05


def test_ev_verbs(capsys):
    assert run(["res", "ev", "solve", "--a-plus", "0.001", "--delta", "0.5"], capsys)[0] == EXIT_OK
    code, _, err = run(["res", "ev", "check"], capsys)
    assert code == EXIT_SCHEMA and "params.c" in err


def test_repro_single_suite(capsys):
    code, out, err = run(["repro", "pentagon"], capsys)
    assert code == EXIT_OK
    assert "[PASS] pentagon" in err
    assert json.loads(out)["results"]["suites"]["pentagon"]["passed"]
    code, _, err = run(["repro", "nosuch"], capsys)
    assert code == EXIT_SCHEMA
