import json

import pytest

from willmore_lab.main import build_parser, config_from_args, main


@pytest.mark.parametrize("argv", [
    [],
    ["energies", "--suite", "quartic"],
    ["energies", "--surface", "sphere", "--dsl-file", "x.wl"],
    ["energies", "--grid", "64"],
    ["energies", "--grid", "4x4"],
    ["energies", "--jet-order", "9"],
    ["energies", "--radii", "0.5:2:3"],
    ["energies", "--levels", "2"],
    ["energies", "--surface", "trefoil"],
    ["energies", "--surface", "ellipsoid(1,2)"],
    ["energies", "--dsl-file", "missing.wl"],
])
def test_configuration_errors_exit_with_two(argv, capsys):
    assert main(argv) == 2
    assert "willmore-lab: " in capsys.readouterr().err


def test_unknown_suite_is_rejected_by_the_parser():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["everything"])
    assert exc.value.code == 2


def test_positional_and_flag_suites_agree():
    args = build_parser().parse_args(["quartic", "--suite", "quartic", "--surface", "ellipsoid:1,1,2"])
    cfg = config_from_args(args)
    assert cfg.suite == "quartic"
    assert cfg.surface.params == [1.0, 1.0, 2.0]


def test_report_to_stdout(capsys):
    assert main(["energies", "--surface", "sphere"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["config"]["suite"] == "energies"
    assert data["exit_code"] == 0


def test_report_and_csv_files(tmp_path):
    out, table = tmp_path / "report.json", tmp_path / "q.csv"
    code = main(["quartic", "--surface", "clifford-torus-projected", "--grid", "16x16",
                 "--out", str(out), "--csv", str(table)])
    assert code == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["results"][0]["surface"] == "clifford-torus-projected"
    lines = table.read_text(encoding="utf-8").splitlines()
    assert lines[4].startswith("r_or_z,abs_q")
    assert len(lines) > 5
