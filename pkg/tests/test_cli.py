import csv
import io
import json

import pytest

from xxcorr.cli import EVAL_FIELDS, THRESHOLDS, main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_eval_json_contract(capsys):
    code, out, err = run(["eval", "--n", "5", "--t", "0.5", "--h", "1", "--T", "1", "--grid", "256"], capsys)
    assert code == 0
    row = json.loads(out)
    assert set(EVAL_FIELDS) | {"warnings"} == set(row)
    assert row["n"] == 5 and row["grid"] == 256
    assert isinstance(row["warnings"], list) and row["warnings"]
    assert abs(complex(row["g_re"], row["g_im"])) == pytest.approx(row["abs_g"], rel=1e-15)
    assert "g =" in err


def test_seventeen_significant_digits(capsys):
    _, out, _ = run(["eval", "--n", "1", "--t", "0", "--h", "1", "--T", "1", "--grid", "128"], capsys)
    line = out.split('"abs_g": ')[1].split(",")[0]
    mantissa = line.split("e")[0].lstrip("-").replace(".", "")
    assert len(mantissa) == 17


def test_verify_tau_csv(capsys, tmp_path):
    path = tmp_path / "tau.csv"
    code, out, _ = run(["verify-tau", "--n", "3", "--t", "0.8", "--h", "1", "--T", "1",
                        "--fd-step", "1e-3", "--out", str(path)], capsys)
    assert code == 0
    assert "3/3" in out
    text = path.read_text()
    header = [line for line in text.splitlines() if not line.startswith("#")][0]
    assert header == "equation_id,n,t,h,T,N,fd_step,abs_residual"
    assert text.count(header) == 1
    rows = read_csv(text)
    assert [r["equation_id"] for r in rows] == ["TAU_20", "TAU_21", "TAU_22"]
    for r in rows:
        assert float(r["abs_residual"]) < THRESHOLDS[r["equation_id"]]


def test_verify_al_csv(capsys):
    code, out, _ = run(["verify-al", "--n", "3", "--t", "0.8", "--h", "1", "--T", "1"], capsys)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 2 and all(float(r["abs_residual"]) < 1e-5 for r in rows)


def test_converge(capsys):
    code, out, _ = run(["converge", "--n", "4", "--t", "1", "--h", "0", "--T", "1", "--grids", "128,256,512"], capsys)
    assert code == 0
    rows = read_csv(out)
    assert [int(r["N"]) for r in rows] == [128, 256, 512]
    assert float(rows[-1]["delta_g"]) < 1e-10
    assert float(rows[-1]["delta_sigma"]) < 1e-10


def test_sweep_row_order_and_warnings(capsys, monkeypatch):
    monkeypatch.setenv("XXCORR_THREADS", "2")
    code, out, _ = run(["sweep", "--n", "0:3", "--t", "0,0.5", "--h", "2.5", "--T", "1", "--grid", "128"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# warning:")
    rows = read_csv(out)
    assert [(int(r["n"]), float(r["t"])) for r in rows] == [(n, t) for n in range(4) for t in (0.0, 0.5)]
    assert all(not line.startswith("#") for line in lines[lines.index(next(l for l in lines if l.startswith("n,"))):])


def test_sweep_json_array(capsys):
    code, out, _ = run(["sweep", "--n", "1,2", "--h", "1", "--T", "1", "--format", "json", "--grid", "128"], capsys)
    data = json.loads(out)
    assert code == 0 and isinstance(data, list) and len(data) == 2


def test_byte_identical_outputs(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["sweep", "--n", "0:4", "--t", "0.5", "--h", "1", "--T", "1", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert b"\r\n" not in paths[0].read_bytes()


def test_asym_and_oracle(capsys):
    code, out, _ = run(["asym", "--n", "2", "--t", "1", "--h", "1", "--T", "1"], capsys)
    assert code == 0 and json.loads(out)["regime"] == "TIME_LIKE"
    code, out, _ = run(["oracle", "--n", "2", "--t", "0.3", "--h", "1", "--T", "1", "--L", "8"], capsys)
    assert code == 0 and len(read_csv(out)) == 1


@pytest.mark.parametrize("args", [
    ["eval", "--n", "1", "--T", "0", "--h", "1"],
    ["eval", "--n", "x", "--T", "1"],
    ["eval", "--n", "1", "--T", "1", "--grid", "16"],
    ["verify-al", "--n", "1", "--T", "1", "--fd-step", "0.5"],
    ["bogus"],
])
def test_argument_errors(args, capsys):
    code, _, err = run(args, capsys)
    assert code == 1 and "error" in err


def test_numerical_failure_names_the_point(capsys):
    code, _, err = run(["verify-tau", "--n", "2", "--t", "0.5", "--h", "0", "--T", "1"], capsys)
    assert code == 2
    assert "numerical failure" in err and "n=" in err
