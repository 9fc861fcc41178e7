"""CSV and structured-text (JSON) report emission.

CSV files always carry a header row, use '.' decimals, UTF-8 and LF line
endings.  The JSON document mirrors every field and parses back to an equal
report.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import asdict, dataclass, field

from lctcq.trellis import OpCounters

_COUNTERS = OpCounters.FIELDS

BENCH_COLUMNS = (
    ["qp", "sigma", "width", "height", "blocks", "q_step", "lambda_rd",
     "mean_cost_full", "mean_cost_accel", "rel_cost_delta"]
    + [f"full_{c}" for c in _COUNTERS]
    + [f"accel_{c}" for c in _COUNTERS]
    + [f"savings_{c}" for c in _COUNTERS]
    + ["hdq_last_median", "tcq_last_median", "accel_last_median",
       "hdq_last_mean", "tcq_last_mean", "wall_full_s", "wall_accel_s"]
)
HISTOGRAM_COLUMNS = ["qp", "sigma", "width", "height", "last_pos",
                     "hdq_count", "tcq_count", "accel_count"]
FIT_COLUMNS = ["qp", "alpha", "beta", "gamma", "epsilon", "r_squared", "rms", "n_obs"]
STATS_COLUMNS = (
    ["sigma", "qp", "q_step", "lambda_lap", "lambda_q", "tau", "p_nz", "d_expected",
     "d_zero", "d_nonzero", "num_tau", "num_d_expected", "num_d_zero", "num_d_nonzero",
     "max_rel_err", "r0_exact", "r0_taylor1", "r0_taylor2", "r0_taylor3"]
    + [f"self_info_{lv}" for lv in range(9)]
)


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    cells: list = field(default_factory=list)
    fit: dict | None = None
    histograms: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    generated_at: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.generated_at is None:
            del d["generated_at"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**d)


class ReportIOError(OSError):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(rows: list, columns: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def dumps(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, allow_nan=True) + "\n"


def loads(text: str) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(text))


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_report(report: ExperimentReport, out_dir: str, stem: str, tables: dict) -> list:
    """Write ``<stem>.json`` plus one CSV per entry of ``tables``.

    ``tables`` maps a file suffix to (rows, columns).  Returns written paths.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ReportIOError(f"cannot create {out_dir}: {exc.strerror or exc}") from exc
    paths = []
    for suffix, (rows, columns) in tables.items():
        path = os.path.join(out_dir, f"{stem}{suffix}.csv")
        _write(path, csv_text(rows, columns))
        paths.append(path)
    path = os.path.join(out_dir, f"{stem}.json")
    _write(path, dumps(report))
    paths.append(path)
    return paths


def fit_rows(fits: dict) -> list:
    rows = []
    for qp, rep in fits.items():
        d = rep.to_dict() if hasattr(rep, "to_dict") else rep
        rows.append({"qp": int(qp), **d["params"], "r_squared": d["r_squared"],
                     "rms": d["rms"], "n_obs": d["n_obs"]})
    return rows
