import csv
import io
import json
import math

import pytest

from gibbsfisher.cli import main, parse_grid


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_fisher_sweep_product():
    code, out, _ = run(["fisher", "--model", "two-level", "--gap", "1", "--T", "0.05:20:200:log"])
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 200
    assert list(rows[0]) == ["T", "beta", "Cv", "F_S", "F_T", "product", "cr_var_S", "cr_var_T", "cr_product"]
    for r in rows:
        assert abs(float(r["product"]) * float(r["T"]) ** 2 - 1) < 1e-11


def test_fisher_single_point_values():
    _, out, _ = run(["fisher", "--model", "two-level", "--T", "1", "--n", "10"])
    (row,) = rows_of(out)
    assert float(row["F_S"]) == pytest.approx((1 + math.e) ** 2 / math.e, rel=1e-14)
    assert float(row["cr_product"]) == pytest.approx(0.01, rel=1e-14)


def test_thermo_beta_grid_is_echoed():
    _, out, _ = run(["thermo", "--model", "oscillator", "--beta", "0.5:2:4"])
    rows = rows_of(out)
    assert [r["beta"] for r in rows] == ["0.5", "1.0", "1.5", "2.0"]


def test_classical_model_from_flags():
    _, out, _ = run(["fisher", "--model", "classical", "--dof", "3", "--T", "2.0"])
    (row,) = rows_of(out)
    assert float(row["F_S"]) == pytest.approx(2 / 3, rel=1e-15)


def test_renyi_columns():
    code, out, _ = run(["renyi", "--model", "two-level", "--T", "1", "--alpha", "0.5,1,2"])
    assert code == 0
    rows = rows_of(out)
    assert [float(r["alpha"]) for r in rows] == [0.5, 1.0, 2.0]
    assert {"S_alpha", "F_S_alpha", "C_v_alpha", "product_FS_alpha_FT"} <= set(rows[0])
    assert float(rows[2]["F_S_alpha"]) == pytest.approx(2.19221, abs=1e-5)


def test_simulate_ratio_near_saturation():
    code, out, _ = run(["simulate", "--model", "two-level", "--beta", "1", "--n", "1000", "--trials", "4000"])
    assert code == 0
    (row,) = rows_of(out)
    assert 0.95 <= float(row["ratio_S"]) <= 1.05
    assert row["seed"] == "42"


def test_simulate_oscillator_is_truncated_internally():
    code, out, _ = run(["simulate", "--model", "oscillator", "--beta", "1", "--n", "200", "--trials", "500"])
    assert code == 0
    assert 0.8 < float(rows_of(out)[0]["ratio_S"]) < 1.3


def test_scaling_rows_and_fit():
    code, out, _ = run(["scaling", "--L", "4,6,8"])
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 3
    f_s = [float(r["F_S"]) for r in rows]
    assert f_s[0] > f_s[1] > f_s[2]
    assert len({r["fit_slope"] for r in rows}) == 1
    assert rows[0]["fit_mode"] == "logarithmic"


def test_scaling_without_enough_sizes_omits_fit():
    _, out, _ = run(["scaling", "--L", "2,3", "--T", "3.0"])
    assert "fit_slope" not in rows_of(out)[0]


def test_json_keys_mirror_csv_header():
    argv = ["fisher", "--model", "oscillator", "--T", "0.5:2:3"]
    _, csv_out, _ = run(argv)
    _, json_out, _ = run(argv + ["--format", "json"])
    doc = json.loads(json_out)
    assert len(doc) == 3
    assert list(doc[0]) == list(rows_of(csv_out)[0])
    assert doc[1]["F_S"] == float(rows_of(csv_out)[1]["F_S"])


def test_model_file_input(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({"model": "spectrum", "levels": [{"e": 0, "g": 1}, {"e": 1, "g": 1}]}))
    _, a, _ = run(["fisher", "--model-file", str(path), "--T", "1"])
    _, b, _ = run(["fisher", "--model", "two-level", "--T", "1"])
    assert a == b


def test_ensemble_file_gge(tmp_path):
    path = tmp_path / "gge.json"
    path.write_text(json.dumps({"lambdas": [1.0], "states": [{"charges": [0]}, {"charges": [1]}]}))
    code, out, _ = run(["ensemble", "--ensemble-file", str(path)])
    assert code == 0
    (row,) = rows_of(out)
    assert float(row["F_S"]) == pytest.approx((1 + math.e) ** 2 / math.e, rel=1e-12)
    assert {"F_0_0", "grad_S_0", "C_v_eff"} <= set(row)


def test_ensemble_file_gce(tmp_path):
    path = tmp_path / "gce.json"
    states = [{"E": 0, "N": 0}, {"E": 1, "N": 1}]
    path.write_text(json.dumps({"beta": 1.0, "mu": 0.5, "states": states}))
    _, out, _ = run(["ensemble", "--ensemble-file", str(path), "--format", "json"])
    (row,) = json.loads(out)
    q = math.exp(-0.5) / (1 + math.exp(-0.5))
    assert row["F_mu_mu"] == pytest.approx(q * (1 - q), rel=1e-12)


def test_output_file(tmp_path):
    target = tmp_path / "out.csv"
    code, out, _ = run(["thermo", "--model", "two-level", "--T", "1", "--output", str(target)])
    assert code == 0 and out == ""
    assert target.read_text().startswith("T,beta,")


def test_byte_identical_reruns():
    argv = ["simulate", "--model", "two-level", "--beta", "1", "--n", "50,100", "--trials", "300", "--seed", "7"]
    assert run(argv)[1] == run(argv)[1]
    other = run(argv[:-1] + ["8"])[1]
    assert other != run(argv)[1]


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fisher", "--model", "two-level"],
        ["fisher", "--model", "two-level", "--T", "1:0:5"],
        ["fisher", "--model", "two-level", "--T", "abc"],
        ["fisher", "--model", "two-level", "--T", "1", "--beta", "1"],
        ["fisher", "--T", "1"],
        ["fisher", "--model", "classical", "--T", "1"],
        ["renyi", "--model", "two-level", "--T", "1", "--alpha", "x"],
        ["scaling", "--L", "4,x"],
        ["bogus"],
    ],
)
def test_parse_errors_exit_2(argv):
    code, out, err = run(argv)
    assert code == 2 and out == ""
    doc = json.loads(err)
    assert doc["error"] == "parse" and "\n" not in err.rstrip("\n")


@pytest.mark.parametrize(
    "argv",
    [
        ["fisher", "--model", "two-level", "--gap", "0", "--T", "1"],
        ["fisher", "--model", "two-level", "--n", "0", "--T", "1"],
        ["renyi", "--model", "two-level", "--T", "1", "--alpha", "-1"],
        ["scaling", "--L", "13"],
        ["scaling", "--L", "1"],
        ["simulate", "--model", "two-level", "--beta", "1", "--n", "1"],
    ],
)
def test_domain_errors_exit_3(argv):
    code, _, err = run(argv)
    assert code == 3
    assert json.loads(err)["error"] == "domain"


def test_io_errors_exit_4(tmp_path):
    code, _, err = run(["fisher", "--model-file", str(tmp_path / "missing.json"), "--T", "1"])
    assert code == 4 and json.loads(err)["error"] == "io"
    code, _, _ = run(["thermo", "--model", "two-level", "--T", "1", "--output", str(tmp_path / "no" / "dir.csv")])
    assert code == 4


def test_invalid_json_is_a_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(["fisher", "--model-file", str(path), "--T", "1"])[0] == 2


@pytest.mark.parametrize(
    "text,expected",
    [("2.5", [2.5]), ("1:3:3", [1.0, 2.0, 3.0]), ("1:100:3:log", [1.0, 10.0, 100.0]), ("4:4:1", [4.0])],
)
def test_parse_grid(text, expected):
    assert parse_grid(text).tolist() == pytest.approx(expected, rel=1e-15)
