import csv
import json

import numpy as np
import pytest

from magnuspulse import cli


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture(scope="module")
def qubit_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("qubit")
    code = cli.main(["run", "--scenario", "qubit", "--order", "2", "--tf-sweep", "1:30:60",
                     "--out", str(out)])
    return code, out


@pytest.mark.slow
def test_qubit_run_table(qubit_run):
    code, out = qubit_run
    assert code == 0
    header, rows = read_csv(out / "fidelity.csv")
    assert header == ["t_f", "eps_uncorrected", "eps_order1", "eps_order2"]
    assert len(rows) == 60
    for cell in rows[3]:
        mantissa = cell.split("e")[0].replace("-", "").replace(".", "")
        assert len(mantissa) >= 12
    assert float(rows[0][0]) == 1.0 and float(rows[-1][0]) == 30.0


@pytest.mark.slow
def test_verify_roundtrip(qubit_run, capsys):
    _, out = qubit_run
    assert cli.main(["verify", str(out / "coefficients.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["max_deviation"] <= 1e-10
    assert report["points"] == 60


@pytest.mark.slow
def test_coefficient_file_layout(qubit_run):
    _, out = qubit_run
    doc = json.loads((out / "coefficients.json").read_text(encoding="utf-8"))
    meta = doc["metadata"]
    for key in ("scenario", "params", "seed", "tolerances", "code_version"):
        assert key in meta
    order = doc["points"][0]["orders"][1]
    assert order["order"] == 2
    ops = {c["operator"] for c in order["coefficients"]}
    assert ops == {"drive_x", "drive_y", "sz"}
    for c in order["coefficients"]:
        assert len(c["k"]) == len(c["c"]) == len(c["d"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["csv_schema"] == cli.CSV_SCHEMA


def test_config_file_and_overrides(tmp_path):
    cfg = {"scenario": "qubit", "order": 1, "tf_sweep": {"start": 4, "end": 6, "count": 2},
           "seed": 3, "emit": {"bloch_csv": True, "pulse_csv": True}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(path), "--order", "2", "--out", str(out)]) == 0
    header, rows = read_csv(out / "fidelity.csv")
    assert header[-1] == "eps_order2" and len(rows) == 2
    assert (out / "bloch_tf4.csv").exists()
    h, pulse = read_csv(out / "pulse_tf6.csv")
    assert h[0] == "t" and len(pulse) == 512
    meta = json.loads((out / "coefficients.json").read_text())["metadata"]
    assert meta["seed"] == 3


def test_identical_seed_gives_identical_files(tmp_path):
    args = ["run", "--scenario", "qubit", "--tf-sweep", "5:6:2", "--seed", "1"]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--out", str(tmp_path / "b")])
    for name in ("fidelity.csv", "coefficients.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bad_sweep_is_a_config_error(tmp_path, capsys):
    code = cli.main(["run", "--scenario", "qubit", "--tf-sweep", "3:1", "--out", str(tmp_path)])
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigError"


def test_order_out_of_range(tmp_path):
    assert cli.main(["run", "--scenario", "qubit", "--order", "7", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("spec, expected", [
    ("1:3:3", [1.0, 2.0, 3.0]), ("5", [5.0]), ([2, 4], [2.0, 4.0]),
    ({"start": 1, "end": 2, "count": 2}, [1.0, 2.0]),
])
def test_parse_sweep(spec, expected):
    assert cli.parse_sweep(spec) == expected


@pytest.mark.parametrize("spec", ["1:2", "0:1:2", "1:2:0"])
def test_parse_sweep_rejects(spec):
    with pytest.raises(cli.ConfigError):
        cli.parse_sweep(spec)


@pytest.mark.slow
def test_failed_point_keeps_partial_results(tmp_path):
    out = tmp_path / "tr"
    code = cli.main(["run", "--scenario", "transmon", "--tf-sweep", "3:5:2", "--out", str(out)])
    assert code == 1
    errors = json.loads((out / "errors.json").read_text())
    assert errors[0]["error"] == "DivergingCorrection" and errors[0]["tf"] == 3.0
    header, rows = read_csv(out / "fidelity.csv")
    assert len(rows) == 2
    first = dict(zip(header, rows[0]))
    assert first["eps_order6"] == "nan" and first["eps_order1"] != "nan"
    assert all(v != "nan" for v in rows[1])


def test_bloch_only_for_qubit(tmp_path):
    assert cli.main(["bloch", "--scenario", "pdc", "--tf-sweep", "5", "--out", str(tmp_path)]) == 2


@pytest.mark.slow
def test_snap_spectrum_tables(tmp_path):
    cfg = {"scenario": "snap", "order": 2, "tf_sweep": [50.0], "params": {"n_trunc": 5}}
    path = tmp_path / "snap.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "snap"
    assert cli.main(["run", "--config", str(path), "--out", str(out)]) == 0
    assert cli.main(["spectrum", "--coefficients", str(out / "coefficients.json"),
                     "--out", str(out)]) == 0
    header, rows = read_csv(out / "snap_peaks.csv")
    assert header == ["t_f", "k", "omega_k", "peak_original", "peak_corrected"]
    original = {int(float(r[1])): float(r[3]) for r in rows}
    assert original == {0: 1.0, 1: 0.0, 2: 0.0, 3: 0.0, 4: 1.0}
    h, spec = read_csv(out / "spectrum_tf50.csv")
    assert h[0] == "omega" and len(spec) > 100
