import csv
import json
import math
import subprocess
import sys

import jsonschema
import pytest

from rdiag_brown import cli

QC = {"type": "density", "density": {"name": "quarter_circle", "params": {"radius": 2}}}
QC8 = {"type": "density", "density": {"name": "quarter_circle", "params": {"radius": 2}, "nodes": 8}}
BERN = {"type": "atomic", "atoms": [[1, 0.5], [2, 0.5]]}
DIRAC = {"type": "atomic", "atoms": [[1, 1.0]]}
MP = {"type": "density", "density": {"name": "marchenko_pastur", "params": {"rate": 1}}}


@pytest.fixture
def spec(tmp_path):
    def write(obj, name="m.json"):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)

    return write


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(text.splitlines()))
    return rows[0], [[float(c) for c in r] for r in rows[1:]]


def test_cdf_quarter_circle(spec, capsys):
    code, out, _ = run(["cdf", "--measure", spec(QC), "--grid", "0.05:0.95:19"], capsys)
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["r", "cdf", "density"]
    assert len(rows) == 19
    for r, f, d in rows:
        assert abs(f - r * r) < 1e-8
        assert abs(d - 2 * r) < 1e-6


def test_csv_full_precision(spec, capsys):
    _, out, _ = run(["cdf", "--measure", spec(QC), "--grid", "0.5:0.5:1"], capsys)
    cell = out.splitlines()[1].split(",")[0]
    mantissa = cell.split("e")[0].replace("-", "").replace(".", "")
    assert len(mantissa) == 17


def test_det_outer(spec, capsys):
    for m in (QC, BERN, MP):
        code, out, _ = run(["det", "--measure", spec(m), "--lambda", "3,0"], capsys)
        assert code == 0
        _, rows = read_csv(out)
        assert rows[0][3] == pytest.approx(math.log(3.0), abs=1e-15)


def test_det_regularized(spec, capsys):
    code, out, _ = run(["det", "--measure", spec(BERN), "--lambda", "1,1", "--t", "0.5"], capsys)
    assert code == 0
    _, rows = read_csv(out)
    assert rows[0][2] == 0.5 and math.isfinite(rows[0][3])


def test_subord(spec, capsys):
    code, out, _ = run(["subord", "--measure", spec(BERN), "--grid", "0.5:2:4", "--t", "0.1"], capsys)
    assert code == 0
    _, rows = read_csv(out)
    for r, t, s, w2, w1, res in rows:
        assert abs(w1 - s) < 1e-9 * max(1.0, s)
        assert res < 1e-10 * max(1.0, r * r)


def test_missing_file(capsys):
    code, _, err = run(["cdf", "--measure", "/nonexistent/m.json", "--grid", "0.1:0.2:2"], capsys)
    assert code == 2
    payload = json.loads(err)
    jsonschema.validate(payload, cli.ERROR_SCHEMA)
    assert payload["code"] == "input_not_found"


def test_bad_grid(spec, capsys):
    code, _, err = run(["cdf", "--measure", spec(QC), "--grid", "0.9:0.1:5"], capsys)
    assert code == 2
    assert json.loads(err)["code"] == "input_error"


def test_unknown_tolerance(spec, capsys):
    code, _, err = run(["consistency", "--measure", spec(BERN), "--tol", "bogus=1"], capsys)
    assert code == 2


def test_bad_spec(spec, capsys):
    code, _, err = run(["moments", "--measure", spec({"type": "atomic", "atoms": [[1, 0.5], [2, 0.6]]})], capsys)
    assert code == 2
    assert json.loads(err)["code"] == "non_normalized"


def test_density_outside_annulus(spec, capsys):
    code, _, err = run(["density", "--measure", spec(BERN), "--grid", "1.3:2.0:3"], capsys)
    assert code == 1
    assert json.loads(err)["code"] == "regime_error"


def test_moments(spec, capsys):
    code, out, _ = run(["moments", "--measure", spec(BERN)], capsys)
    assert code == 0
    payload = json.loads(out)
    jsonschema.validate(payload, cli.MOMENTS_SCHEMA)
    assert payload["lambda1"] == pytest.approx(math.sqrt(1.6))
    assert payload["lambda2"] == pytest.approx(math.sqrt(2.5))


def test_consistency_bernoulli(spec, capsys):
    code, out, _ = run(["consistency", "--measure", spec(BERN)], capsys)
    assert code == 0
    payload = json.loads(out)
    jsonschema.validate(payload, cli.CONSISTENCY_SCHEMA)
    assert payload["passed"]
    names = {c["name"] for c in payload["checks"]}
    assert {"cdf_route_agreement", "log_potential", "gradient", "solver_equivalence"} <= names


def test_consistency_dirac(spec, capsys):
    code, out, err = run(["consistency", "--measure", spec(DIRAC)], capsys)
    assert code == 1
    payload = json.loads(err)
    jsonschema.validate(payload, cli.ERROR_SCHEMA)
    assert payload["code"] == "dirac_measure"


def test_consistency_coarse_rule(spec, capsys):
    code, out, err = run(["consistency", "--measure", spec(QC8)], capsys)
    assert code == 1
    payload = json.loads(out)
    jsonschema.validate(payload, cli.CONSISTENCY_SCHEMA)
    failed = [c["name"] for c in payload["checks"] if not c["passed"]]
    assert "quadrature_resolution" in failed
    assert json.loads(err)["context"]["failed_checks"] == failed


def test_tolerance_override_makes_check_fail(spec, capsys):
    code, out, _ = run(["consistency", "--measure", spec(BERN), "--tol", "gradient=1e-20"], capsys)
    assert code == 1
    failed = [c["name"] for c in json.loads(out)["checks"] if not c["passed"]]
    assert failed == ["gradient"]


def test_json_rows_schema(spec, capsys):
    code, out, _ = run(["cdf", "--measure", spec(MP), "--grid", "0.1:1.5:5", "--format", "json"], capsys)
    assert code == 0
    payload = json.loads(out)
    jsonschema.validate(payload, cli.ROWS_SCHEMA)
    assert payload["summary"]["regimes"]["outer"][1] == "+inf"


def test_validate_mc(spec, capsys):
    argv = ["validate-mc", "--measure", spec(BERN), "--n", "150", "--samples", "2", "--seed", "5",
            "--lambda", "1.4,0", "--t", "1.0", "--tol", "ks=0.2", "--tol", "h=0.05", "--tol", "trace=0.1"]
    code, out, _ = run(argv, capsys)
    payload = json.loads(out)
    jsonschema.validate(payload, cli.MC_SCHEMA)
    assert code == 0 and payload["passed"]
    code2, out2, _ = run(argv, capsys)
    assert out2 == out


def test_validate_mc_ginibre(capsys):
    code, out, _ = run(["validate-mc", "--model", "ginibre", "--n", "300", "--tol", "ks=0.1"], capsys)
    assert code == 0
    assert json.loads(out)["ks"] < 0.1


def test_atomic_output_and_idempotence(spec, tmp_path, capsys):
    out_path = tmp_path / "sub" / "cdf.csv"
    argv = ["cdf", "--measure", spec(BERN), "--grid", "1.3:1.6:7", "--out", str(out_path)]
    assert run(argv, capsys)[0] == 0
    first = out_path.read_bytes()
    assert run(argv, capsys)[0] == 0
    assert out_path.read_bytes() == first
    assert sorted(p.name for p in out_path.parent.iterdir()) == ["cdf.csv"]


def test_module_entry_point(spec):
    proc = subprocess.run([sys.executable, "-m", "rdiag_brown", "det", "--measure", spec(BERN), "--lambda", "0,3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "re_lambda,im_lambda,t,log_delta"


def test_module_entry_point_missing_file():
    proc = subprocess.run([sys.executable, "-m", "rdiag_brown", "moments", "--measure", "nope.json"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stderr)["code"] == "input_not_found"
