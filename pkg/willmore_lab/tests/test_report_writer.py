import csv
import json

import numpy as np

from willmore_lab.schemas import Report, SuiteResult
from willmore_lab.services.quartic_analysis import QuarticSample
from willmore_lab.services.report_writer import (
    CSV_COLUMNS,
    QUARTIC_TABLE,
    quartic_rows,
    write_csv,
    write_json,
)


def _sample(radius=None):
    z = np.array([0.5 + 1.0j, 1.0 + 0.5j])
    return QuarticSample(
        z=z, q=np.array([1.0 + 0.0j, 0.0 + 2.0j]), dzbar_q=np.array([1e-12, 0.0]),
        residual_scale=np.ones(2), q_scale=np.ones(2), conformality=np.zeros(2),
        local_radius=radius, disk_factor=None if radius is None else radius ** -4.0,
    )


def test_rows_use_radius_or_chart_coordinate():
    rows = quartic_rows(_sample(np.array([0.5, 0.25])))
    assert rows[1]["r_or_z"] == 0.25
    assert rows[1]["abs_q"] == 2.0 * 0.25 ** -4
    assert rows[1]["weight_z4"] == 2.0
    flat = quartic_rows(_sample())
    assert flat[0]["r_or_z"].endswith("j")
    assert flat[1]["arg_q"] == np.pi / 2


def _report(rows):
    result = SuiteResult(suite="quartic", surface="inverted-enneper", tables={QUARTIC_TABLE: rows})
    return Report(config={"suite": "quartic", "surface": "inverted-enneper"}, results=[result])


def test_write_csv_header_and_columns(tmp_path):
    path = write_csv(_report(quartic_rows(_sample(np.array([0.5, 0.25])))), tmp_path / "out" / "q.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# schema=willmore-lab/1"
    assert lines[2] == "# suite=quartic"
    body = [line for line in lines if not line.startswith("#")]
    rows = list(csv.DictReader(body))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 2
    assert float(rows[0]["r_or_z"]) == 0.5


def test_write_json_round_trips_canonical_text(tmp_path):
    report = _report([])
    path = write_json(report, tmp_path / "report.json")
    assert json.loads(path.read_text(encoding="utf-8")) == json.loads(report.canonical_json())
