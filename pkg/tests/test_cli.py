import csv
import io
import json

import pytest

from jcspectra.run_spectra import HEADERS, expand_args_from, build_parser, run
from jcspectra.constants import Command

def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))

def test_headers_are_fixed():
    assert ",".join(HEADERS[Command.SPECTRUM]) == "m,eigenvalue,ladder_index"
    assert ",".join(HEADERS[Command.VALIDATE]) == "check,status,value,threshold,detail"
    assert set(HEADERS) == set(Command)

def test_spectrum(capsys):
    code = run(["spectrum", "--variant", "h2", "--omega", "1", "--omega0", "1", "--g", "0", "--m-max", "3"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0] == "m,eigenvalue,ladder_index"
    rows = read_csv(out)
    assert [float(row["eigenvalue"]) for row in rows] == pytest.approx([2, 2, 4, 4])
    assert [row["m"] for row in rows] == ["0", "1", "2", "3"]

def test_output_is_deterministic(capsys):
    argv = ["spectrum", "--variant", "h1", "--omega0", "0.2", "--g", "0.5", "--m-max", "10"]
    run(argv)
    first = capsys.readouterr().out
    run(argv)
    assert capsys.readouterr().out == first

def test_json_report(capsys):
    code = run(["spectrum", "--variant", "a0", "--omega0", "0.5", "--g", "0.3", "--m-max", "2", "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["meta"]["command"] == "spectrum"
    assert report["meta"]["params"]["g"] == 0.3
    assert report["meta"]["sturm_certified"] is True
    assert report["rows"][0]["eigenvalue"] == pytest.approx(0.41)
    assert [row["ladder_index"] for row in report["rows"]] == [0, 1, 2]

def test_output_file(tmp_path, capsys):
    path = tmp_path / "spectrum.csv"
    code = run(["spectrum", "--variant", "h2", "--g", "0.5", "--m-max", "2", "--output", str(path)])
    assert code == 0
    assert capsys.readouterr().out == ""
    assert path.read_text().startswith("m,eigenvalue,ladder_index\n")

@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "--variant", "h2"],
        ["spectrum", "--variant", "h3", "--m-max", "2"],
        ["spectrum", "--variant", "h2", "--m-max", "2", "--omega", "0"],
        ["spectrum", "--variant", "h2", "--m-max", "-1"],
        ["spectrum", "--variant", "h2", "--m-max", "2", "--g", "-0.5"],
        ["perturb", "--variant", "h2", "--m", "3", "--order", "9"],
        ["unknown"],
    ],
)
def test_argument_errors(argv, capsys):
    assert run(argv) == 2
    assert capsys.readouterr().out == ""

def test_computational_error(capsys):
    code = run(["spectrum", "--variant", "h2", "--g", "0.5", "--m-max", "50", "--max-n", "100"])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.out == ""
    assert "NoConvergence" in captured.err

def test_args_from(tmp_path, capsys):
    args_file = tmp_path / "args.txt"
    args_file.write_text("# model\n--omega0 1\n--g 0\n\n--variant h2\n--m-max 5\n")
    code = run(["spectrum", "--args-from", str(args_file), "--m-max", "3"])
    rows = read_csv(capsys.readouterr().out)
    assert code == 0
    assert [float(row["eigenvalue"]) for row in rows] == pytest.approx([2, 2, 4, 4])

def test_expand_args_from(tmp_path):
    args_file = tmp_path / "args.txt"
    args_file.write_text("--g 0.5\n--variant 'h1'\n")
    argv = expand_args_from(["perturb", f"--args-from={args_file}", "--m", "2"], build_parser())
    assert argv == ["perturb", "--g", "0.5", "--variant", "h1", "--m", "2"]

def test_args_from_missing_file(tmp_path):
    assert run(["spectrum", "--args-from", str(tmp_path / "missing.txt")]) == 2

def test_overlaps(capsys):
    code = run(["overlaps", "--g", "0.8", "--m", "3", "--n-max", "8"])
    rows = read_csv(capsys.readouterr().out)
    assert code == 0
    assert len(rows) == 9
    assert max(float(row["residual"]) for row in rows) <= 1e-9

def test_projectors(capsys):
    code = run(["projectors", "--variant", "p1", "--g", "0.7", "--k", "3", "--m", "5"])
    (row,) = read_csv(capsys.readouterr().out)
    assert code == 0
    assert float(row["defect"]) <= 1e-9
    assert float(row["complement_defect"]) <= 1e-15

def test_perturb_residual_within_bound(capsys):
    code = run(["perturb", "--variant", "h2", "--omega", "1", "--omega0", "0.2", "--g", "0.5",
                "--m", "60", "--order", "4", "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    rows = report["rows"]
    assert [row["order"] for row in rows] == [0, 1, 2, 3, 4]
    assert rows[0]["remainder_bound"] is None
    for row in rows[3:]:
        assert row["residual"] <= row["remainder_bound"]
    assert report["meta"]["m0"]["covers_m"] is True

def test_perturb_outside_convergent_regime(capsys):
    code = run(["perturb", "--variant", "h1", "--omega0", "0.5", "--g", "0.5", "--m", "5", "--order", "3"])
    rows = read_csv(capsys.readouterr().out)
    assert code == 0
    assert rows[3]["remainder_bound"] == ""

def test_asymptotics(capsys):
    code = run(["asymptotics", "--variant", "h2", "--omega0", "0.2", "--g", "0.5", "--m-list", "60,40", "--order", "3"])
    rows = read_csv(capsys.readouterr().out)
    assert code == 0
    assert [row["m"] for row in rows] == ["60", "40"]
    for row in rows:
        assert float(row["residual_series"]) <= float(row["remainder_bound"])

def test_splitting(capsys):
    code = run(["splitting", "--variant", "h2", "--omega", "1", "--omega0", "1", "--g", "0.5", "--m-max", "150"])
    rows = read_csv(capsys.readouterr().out)
    assert code == 0
    assert len(rows) == 151
    assert abs(float(rows[150]["delta"]) - 1.0) <= 0.2
    assert float(rows[150]["rwa_delta"]) > float(rows[25]["rwa_delta"]) > 2

def test_splitting_off_resonance_has_no_rwa_column(capsys):
    run(["splitting", "--variant", "h2", "--omega0", "0.4", "--g", "0.5", "--m-max", "3"])
    rows = read_csv(capsys.readouterr().out)
    assert all(row["rwa_delta"] == "" for row in rows)

def test_validate_small_grid(tmp_path, capsys):
    grid = tmp_path / "grid.yaml"
    grid.write_text("composition_counts:\n  k_max: 6\nprojector_complementarity:\n"
                    "  n_basis: 30\n  g_values: [0.5]\n  tol: 1.0e-15\n")
    code = run(["validate", "--grid", str(grid), "--max-workers", "2"])
    captured = capsys.readouterr()
    rows = read_csv(captured.out)
    assert code == 0
    assert [row["check"] for row in rows] == ["projector_complementarity", "composition_counts"]
    assert all(row["status"] == "pass" for row in rows)
    assert "2/2 checks passed" in captured.err

def test_validate_failure(tmp_path, capsys):
    grid = tmp_path / "grid.yaml"
    grid.write_text("projector_complementarity:\n  n_basis: 30\n  g_values: [0.5]\n  tol: -1.0\n")
    assert run(["validate", "--grid", str(grid)]) == 1
    (row,) = read_csv(capsys.readouterr().out)
    assert row["status"] == "fail"
