"""JSON reports and CSV sample tables."""
import csv
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import numpy as np

from willmore_lab.exceptions import ConfigError
from willmore_lab.schemas import Report
from willmore_lab.services.quartic_analysis import QuarticSample
from willmore_lab.utils.logger import lab_logger

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("r_or_z", "abs_q", "arg_q", "abs_dzbar_q", "weight_z4", "weight_z2", "weight_z1")
QUARTIC_TABLE = "quartic_samples"


def quartic_rows(sample: QuarticSample) -> List[Dict[str, object]]:
    weights = sample.weights()
    if sample.local_radius is not None:
        where = [float(r) for r in sample.local_radius]
    else:
        where = [f"{z.real:.17g}{z.imag:+.17g}j" for z in sample.z]
    abs_q, arg_q, dzbar = sample.disk_abs_q, sample.arg_q, sample.abs_dzbar_q
    return [
        {
            "r_or_z": where[i],
            "abs_q": float(abs_q[i]),
            "arg_q": float(arg_q[i]),
            "abs_dzbar_q": float(dzbar[i]),
            "weight_z4": float(weights["weight_z4"][i]),
            "weight_z2": float(weights["weight_z2"][i]),
            "weight_z1": float(weights["weight_z1"][i]),
        }
        for i in range(len(where))
    ]


def _ensure_parent(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Cannot create the directory of {path}: {e.strerror}", {"path": str(path)})


def write_json(report: Report, path: Union[str, Path], request_id: Optional[str] = None) -> Path:
    path = Path(path)
    _ensure_parent(path)
    path.write_text(report.canonical_json() + "\n", encoding="utf-8")
    lab_logger.log_report_written(str(path), "json", request_id)
    return path


def collect_rows(report: Report, table: str = QUARTIC_TABLE) -> Iterable[Dict[str, object]]:
    for result in report.results:
        for row in result.tables.get(table, []):
            yield row


def write_csv(report: Report, path: Union[str, Path], request_id: Optional[str] = None) -> Path:
    """Quartic sample rows of every suite result, after a '# key=value' provenance header."""
    path = Path(path)
    _ensure_parent(path)
    header = {"schema": report.schema_version, "version": report.version,
              "suite": report.config.get("suite"), "surface": report.config.get("surface")}
    rows = 0
    with path.open("w", encoding="utf-8", newline="") as f:
        for key, value in header.items():
            f.write(f"# {key}={value}\n")
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in collect_rows(report):
            writer.writerow({k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                             for k, v in row.items()})
            rows += 1
    logger.debug("Wrote %d CSV rows to %s", rows, path)
    lab_logger.log_report_written(str(path), "csv", request_id)
    return path
