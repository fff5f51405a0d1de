import json

import numpy as np
import pytest

from qmac import cli, io
from qmac.errors import ValidationError


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_region_eval_xor(capsys, data_dir):
    code, out, _ = run(capsys, "region-eval", data_dir / "xor_cq.json", "--kind", "cq_noiseless_sc",
                       "--ensemble", data_dir / "uniform_ens.json")
    assert code == 0
    doc = json.loads(out)
    assert doc["bounds"] == pytest.approx({"b1": 1.0, "b2": 1.0, "b12": 1.0})
    assert doc["manifest"]["command"] == "region-eval"


def test_malformed_json_line_anchored(capsys, data_dir):
    code, _, err = run(capsys, "region-eval", data_dir / "bad.json", "--kind", "none",
                       "--ensemble", data_dir / "uniform_ens.json")
    assert code == 2 and "bad.json:5" in err


def test_bad_key_named(tmp_path, capsys, data_dir):
    p = tmp_path / "ens.json"
    p.write_text('{\n  "p_u": [1.0],\n  "p_x1": [[0.5, 0.7]],\n  "p_x2": [[1.0]]\n}\n')
    code, _, err = run(capsys, "region-eval", data_dir / "xor_cq.json", "--kind", "none", "--ensemble", p)
    assert code == 2 and "'p_x1'" in err and ":3:" in err
    p.write_text('{\n  "p_u": [1.0],\n  "p_x1": [[1.0]],\n  "p_x2": [[1.0]],\n  "bogus": 1\n}\n')
    code, _, err = run(capsys, "region-eval", data_dir / "xor_cq.json", "--kind", "none", "--ensemble", p)
    assert code == 2 and "'bogus'" in err and ":5:" in err


def test_instrument_required(capsys, data_dir):
    code, _, err = run(capsys, "region-eval", data_dir / "xor_cq.json", "--kind", "df_caus",
                       "--ensemble", data_dir / "uniform_ens.json")
    assert code == 2 and "ensemble shape error" in err


def read_csv(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    header = lines[0].split(",")
    return header, [dict(zip(header, l.split(","))) for l in lines[1:]]


def test_bosonic_csv(capsys):
    code, out, _ = run(capsys, "bosonic", "--eta1", 0.5, "--eta2", 0.5, "--na1", 1, "--na2", 1, "--nc", 0, "--sweep", 5)
    assert code == 0 and "\r" not in out
    header, rows = read_csv(out)
    assert header == ["lambda", "r1_crib", "r2_crib", "r1_none", "r2_none"]
    assert len(rows) == 5
    assert all(float(r["r1_crib"]) >= float(r["r1_none"]) for r in rows)


def test_bosonic_single_lambda_matches_corner(capsys):
    from qmac import channels as ch, regions as rg
    code, out, _ = run(capsys, "bosonic", "--eta1", 0.7, "--eta2", 0.3, "--na1", 1, "--na2", 1, "--nc", 0.1, "--sweep", 1)
    _, rows = read_csv(out)
    want = rg.corner(rg.bosonic_region(ch.BosonicParams(0.7, 0.3, 1, 1, 0.1), True), 1.0)
    assert float(rows[0]["lambda"]) == 1.0
    assert (float(rows[0]["r1_crib"]), float(rows[0]["r2_crib"])) == want


def test_bosonic_zero_photons(capsys):
    _, out, _ = run(capsys, "bosonic", "--eta1", 0.5, "--eta2", 0.5, "--na1", 0, "--na2", 0, "--sweep", 3)
    _, rows = read_csv(out)
    assert all(float(v) == 0.0 for r in rows for k, v in r.items() if k != "lambda")


def test_bosonic_out_of_range(capsys):
    code, _, err = run(capsys, "bosonic", "--eta1", 1.5, "--eta2", 0.5, "--na1", 1, "--na2", 1)
    assert code == 2 and "eta1" in err


def test_optimize_bit_and_bsc(capsys, data_dir):
    code, out, _ = run(capsys, "optimize", data_dir / "bit_cq.json", "--kind", "none", "--lambdas", "1", "--restarts", 2)
    _, rows = read_csv(out)
    assert code == 0 and float(rows[0]["r1"]) == pytest.approx(1.0, abs=1e-7)
    _, out, _ = run(capsys, "optimize", data_dir / "bsc_cq.json", "--kind", "none", "--lambdas", "1", "--restarts", 2)
    _, rows = read_csv(out)
    assert float(rows[0]["r1"]) == pytest.approx(0.500084, abs=1e-3)


def test_simulate(capsys, data_dir):
    args = ["simulate", data_dir / "xor_cq.json", "--ensemble", data_dir / "uniform_ens.json", "--n", 4, "--trials", 5]
    code, out, _ = run(capsys, *args, "--rates", "0,0")
    doc = json.loads(out)
    assert code == 0 and doc["empirical_error"] == 0.0 and doc["wall_time_ms"] is None
    code, _, err = run(capsys, *args, "--rates", "6,6")
    assert code == 3 and "rate too large for desk scale" in err


def test_simulate_dim_cap(capsys, data_dir, monkeypatch):
    monkeypatch.setenv("QMAC_DIM_CAP", "64")
    code, _, err = run(capsys, "simulate", data_dir / "xor_cq.json", "--ensemble", data_dir / "uniform_ens.json",
                       "--n", 8, "--trials", 1, "--rates", "0.1,0.1")
    assert code == 3 and "dimension cap" in err


def test_check_robust(capsys, data_dir):
    _, out, _ = run(capsys, "check-robust", data_dir / "xor_cq.json")
    doc = json.loads(out)
    assert doc["certified"] and doc["cmi_values"][0] == pytest.approx(0.0, abs=1e-12)
    _, out, _ = run(capsys, "check-robust", data_dir / "no_e_kraus.json")
    doc = json.loads(out)
    assert not doc["certified"] and doc["cmi_values"][0] == pytest.approx(2.0, abs=1e-6)
    _, out, _ = run(capsys, "check-robust", data_dir / "no_e_kraus.json", "--tol", 2.5)
    assert json.loads(out)["certified"]


def test_complex_entries_parse(tmp_path):
    p = tmp_path / "k.json"
    p.write_text(json.dumps({"kind": "kraus", "dims": [2, 2, 1, 1, 2],
                             "L": [[[[0, 1], 0], [0, [0, -1]]]], "N": [[[1, 0], [0, 1]]]}))
    mac = io.read_channel(p)
    assert np.allclose(mac.L.kraus_ops[0], np.diag([1j, -1j]))


def test_cq_q_matrix_parse(tmp_path, data_dir):
    doc = json.loads((data_dir / "xor_cq.json").read_text())
    doc["cribbing"] = {"Q": [[0.9, 0.1], [0.2, 0.8]]}
    p = tmp_path / "q.json"
    p.write_text(json.dumps(doc, indent=1))
    assert io.read_channel(p).q_matrix[1, 1] == 0.8
    doc["cribbing"] = {"Q": [[0.9, 0.2], [0.2, 0.8]]}
    p.write_text(json.dumps(doc, indent=1))
    with pytest.raises(ValidationError, match="cribbing"):
        io.read_channel(p)


def test_rates_parsing():
    assert io.parse_rates("0.1,0.2", 2) == (0.1, 0.2)
    with pytest.raises(ValidationError):
        io.parse_rates("0.1", 2)
    with pytest.raises(ValidationError):
        io.parse_rates("-1,0", 2)
