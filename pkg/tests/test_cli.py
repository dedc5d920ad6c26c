from __future__ import annotations

import csv
import io
import json
import math

import pytest

from torsionlab.cli import main, render_csv
from torsionlab.config import ConfigError, apply_override, default_document, parse_config
from torsionlab.experiments import sweep_points


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, list(csv.DictReader(io.StringIO(out))), err


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# -- config --------------------------------------------------------------------
def test_defaults_validate():
    for exp in ("ball-rigidity", "fem-solve", "symmetrize", "compare", "rkd", "perelman", "cheeger-family", "verify"):
        cfg = parse_config(default_document(exp))
        assert cfg.experiment == exp and len(cfg.digest()) == 16


@pytest.mark.parametrize("edit", [
    {"schema": "torsionlab/0"},
    {"bogus": 1},
    {"manifold": {"kind": "klein_bottle"}},
    {"sweep": {"r0": []}},
    {"params": {"cg_tol_extra": -1}},
    {"seed": -3},
])
def test_invalid_documents(edit):
    doc = {**default_document("ball-rigidity"), **edit}
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_domain_requirements():
    doc = default_document("fem-solve")
    doc["domain"] = {"kind": "star", "a": 0.2}
    with pytest.raises(ConfigError):
        parse_config(doc)
    doc["domain"] = {"kind": "rects"}
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_override_parsing():
    doc = default_document("rkd")
    apply_override(doc, "sweep.D=[1.0, 2.0]")
    apply_override(doc, "params.label=plain")
    assert doc["sweep"]["D"] == [1.0, 2.0] and doc["params"]["label"] == "plain"
    with pytest.raises(ConfigError):
        apply_override(doc, "no-equals-sign")


def test_sweep_order_is_deterministic():
    doc = default_document("rkd")
    doc["sweep"] = {"K": [1.0, 0.0], "D": [1.0, 2.0]}
    pts = sweep_points(parse_config(doc))
    assert pts == [{"K": 1.0, "D": 1.0}, {"K": 1.0, "D": 2.0}, {"K": 0.0, "D": 1.0}, {"K": 0.0, "D": 2.0}]


def test_digest_tracks_content():
    a = parse_config(default_document("rkd"))
    doc = default_document("rkd")
    doc["seed"] = 7
    assert parse_config(doc).digest() != a.digest()
    assert parse_config(default_document("rkd")).digest() == a.digest()


# -- CLI -------------------------------------------------------------------------
def test_ball_rigidity_row(capsys):
    code, rows, err = run(["ball-rigidity", "--jobs", "1"], capsys)
    assert code == 0
    assert float(rows[0]["E"]) == pytest.approx(0.125, rel=1e-12)
    assert rows[0]["ok"] == "true" and len(rows[0]["config_hash"]) == 16
    assert err.count("row 0: ok") == 1


def test_rkd_row(capsys):
    code, rows, _ = run(["rkd"], capsys)
    assert code == 0 and float(rows[0]["R"]) == pytest.approx(1.0, abs=1e-12)


def test_header_names_every_column(capsys):
    code = main(["rkd", "--set", "sweep.K=[1.0,-1.0]", "--set", "sweep.D=[1.0]"])
    out = capsys.readouterr().out
    header = out.splitlines()[0].split(",")
    assert header[0] == "id" and header[-2:] == ["ok", "config_hash"]
    assert "attained_by" in header and code == 0


def test_csv_is_byte_reproducible(tmp_path, capsys):
    cfg = default_document("ball-rigidity")
    cfg["sweep"] = {"r0": [0.5, 1.0]}
    cfg["params"] = {"lam": 2.0}
    path = write_config(tmp_path, cfg)
    outs = []
    for jobs in ("1", "2"):
        target = tmp_path / f"out{jobs}.csv"
        assert main(["ball-rigidity", "--config", path, "--out", str(target), "--jobs", jobs]) == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(io.StringIO(outs[0].decode())))
    assert [float(r["E"]) for r in rows] == [pytest.approx(0.03125, rel=1e-12), pytest.approx(0.125, rel=1e-12)]


def test_timing_column_is_opt_in(capsys):
    _, rows, _ = run(["perelman", "--timing"], capsys)
    assert "wall_time" in rows[0]
    _, rows, _ = run(["perelman"], capsys)
    assert "wall_time" not in rows[0]


def test_run_uses_config_experiment(tmp_path, capsys):
    doc = default_document("perelman")
    doc["sweep"] = {"eps": [math.pi / 2], "n": [2]}
    code, rows, _ = run(["run", "--config", write_config(tmp_path, doc)], capsys)
    assert code == 0 and float(rows[0]["factor"]) == pytest.approx(math.cos(math.pi / 4), rel=1e-12)


def test_exit_code_config_errors(tmp_path, capsys):
    assert main(["rkd", "--config", write_config(tmp_path, default_document("perelman"))]) == 2
    assert main(["run"]) == 2
    assert main(["rkd", "--config", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "broken.json").write_text("{not json")
    assert main(["run", "--config", str(tmp_path / "broken.json")]) == 2
    assert main(["verify", "--select", ""]) == 2
    assert main(["verify", "--select", "radial,astrology"]) == 2
    # schema-valid but impossible: a compact manifold against an infinite model
    assert main(["compare", "--set", "manifold.kind=sphere", "--set", "model.kind=euclidean",
                 "--set", "solver.mesh=32"]) == 2
    capsys.readouterr()


def test_exit_code_nonconvergence(capsys):
    assert main(["fem-solve", "--set", "solver.mesh=64", "--set", "solver.cg_tol=1e-17"]) == 3
    assert "did not converge" in capsys.readouterr().err


def test_failed_row_is_identified(capsys, monkeypatch):
    import torsionlab.experiments as ex

    monkeypatch.setitem(ex.RUNNERS, "rkd", lambda cfg, point: {"K": point["K"], "ok": point["K"] > 0})
    code = main(["rkd", "--set", "sweep.K=[1.0,-1.0]", "--jobs", "1"])
    err = capsys.readouterr().err
    assert code == 1 and "failed rows: 1" in err


def test_cheeger_family_columns(capsys):
    code, rows, _ = run(["cheeger-family", "--set", "sweep.epsilon=[0.5,0.1]", "--jobs", "1"], capsys)
    assert code == 0 and len(rows) == 2
    for col in ("epsilon", "delta", "R", "r", "beta", "lambda", "eta", "H_rad", "E", "paper_bound", "product"):
        assert col in rows[0]
    assert float(rows[1]["E"]) >= 0.9


def test_seed_flag_reaches_hash(capsys):
    _, a, _ = run(["rkd", "--seed", "5"], capsys)
    _, b, _ = run(["rkd", "--seed", "6"], capsys)
    assert a[0]["config_hash"] != b[0]["config_hash"]
    with pytest.raises(SystemExit):
        main(["rkd", "--seed", str(2**64)])


def test_verify_selections(capsys):
    code, rows, _ = run(["verify", "--select", "cheeger"], capsys)
    names = {r["property"] for r in rows}
    assert code == 0 and "sweep_monotone" in names
    code, rows, _ = run(["verify", "--select", "radial"], capsys)
    names = {r["property"] for r in rows}
    assert code == 0 and {"homogeneity", "closed_form_euclidean"} <= names


def test_full_verify_passes(capsys):
    code, rows, _ = run(["verify"], capsys)
    assert code == 0
    assert {r["suite"] for r in rows} == {"radial", "fem", "symmetrization", "models", "cheeger"}


def test_dumps(tmp_path, capsys):
    dump = tmp_path / "field.csv"
    prof = tmp_path / "profile.csv"
    assert main(["fem-solve", "--set", "solver.mesh=32", "--set", f"params.dump={json.dumps(str(dump))}"]) == 0
    assert main(["symmetrize", "--set", "solver.mesh=64", "--set", f"params.dump_profile={json.dumps(str(prof))}"]) == 0
    capsys.readouterr()
    assert dump.read_text().splitlines()[0] == "t,theta,f"
    assert len(dump.read_text().splitlines()) == 32 * 32 + 1
    assert prof.read_text().splitlines()[0] == "rho,fbar"


def test_render_csv_formats():
    text = render_csv([{"x": 0.1, "flag": True, "ok": True}, {"x": 1, "extra": None, "ok": False}], "abc")
    lines = text.splitlines()
    assert lines[0] == "id,x,flag,extra,ok,config_hash"
    assert lines[1] == "0,0.10000000000000001,true,,true,abc"
    assert lines[2] == "1,1,,,false,abc"
