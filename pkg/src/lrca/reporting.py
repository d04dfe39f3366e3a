"""CSV and markdown writers (and CSV readers) for experiment results."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

import pandas as pd

from lrca.errors import DataFormatError
from lrca.models import (
    CalibrationSummary,
    ConfidenceInterval,
    PowerCurve,
    RejectionRow,
    RejectionTable,
    TestOutcome,
)

logger = logging.getLogger(__name__)

REJECTION_COLUMNS = ["dgp", "n", "test", "level", "rate", "failures"]
POWER_COLUMNS = ["grid", "test", "rate"]


def rejection_frame(table: RejectionTable) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in table.rows], columns=REJECTION_COLUMNS)


def power_frame(curve: PowerCurve) -> pd.DataFrame:
    records = [
        {"grid": g, "test": test, "rate": rate}
        for test, rates in curve.rates.items()
        for g, rate in zip(curve.grid, rates)
    ]
    return pd.DataFrame(records, columns=POWER_COLUMNS)


def calibration_frame(summaries: Iterable[CalibrationSummary]) -> pd.DataFrame:
    records = []
    for s in summaries:
        record = {"dgp": s.dgp, "n": s.n, "test": s.test, "df": s.df, "failures": s.failures}
        record.update({f"q{p}": v for p, v in s.quantiles.items()})
        record.update({f"chi2_q{p}": v for p, v in s.reference_quantiles.items()})
        record.update({"ks": s.ks_distance, "ks_band": s.ks_band, "flagged": s.flagged})
        records.append(record)
    return pd.DataFrame(records)


def outcomes_frame(outcomes: Iterable[TestOutcome]) -> pd.DataFrame:
    return pd.DataFrame([o.model_dump() for o in outcomes])


def interval_frame(param: str, intervals: Iterable[ConfidenceInterval]) -> pd.DataFrame:
    return pd.DataFrame([
        {
            "param": param,
            "method": ci.method,
            "level": ci.level,
            "estimate": ci.estimate,
            "lower": ci.lower,
            "upper": ci.upper,
            "truncated": ci.truncated_at_boundary,
            "disconnected": ci.disconnected,
        }
        for ci in intervals
    ])


def markdown(frame: pd.DataFrame, digits: int = 4) -> str:
    """Aligned pipe table; floats rounded to `digits` places."""
    cells = [[_cell(v, digits) for v in row] for row in frame.itertuples(index=False)]
    header = [str(c) for c in frame.columns]
    widths = [max([len(h), *(len(r[j]) for r in cells)]) for j, h in enumerate(header)]

    def line(values: list[str]) -> str:
        return "| " + " | ".join(v.ljust(w) for v, w in zip(values, widths)) + " |"

    rule = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([line(header), rule, *(line(r) for r in cells)]) + "\n"


def _cell(value, digits: int) -> str:
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def write_frame(frame: pd.DataFrame, out_dir: Path | str, stem: str, formats: Iterable[str] = ("csv", "md")) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        path = out_dir / f"{stem}.{fmt}"
        if fmt == "csv":
            frame.to_csv(path, index=False)
        else:
            path.write_text(markdown(frame))
        written.append(path)
        logger.info("wrote %s", path)
    return written


def read_rejection_table(path: Path | str, replications: int) -> RejectionTable:
    """Inverse of the rejection CSV writer; replications is not stored per row."""
    frame = pd.read_csv(path)
    missing = [c for c in REJECTION_COLUMNS if c not in frame.columns]
    if missing:
        raise DataFormatError(f"{path}: missing column(s) {missing}")
    rows = [RejectionRow.model_validate(r) for r in frame[REJECTION_COLUMNS].to_dict("records")]
    failures = int(frame["failures"].iloc[0]) if len(frame) else 0
    return RejectionTable(rows=rows, replications=replications, failures=failures)


def read_power_curve(path: Path | str) -> pd.DataFrame:
    frame = pd.read_csv(path)
    if list(frame.columns) != POWER_COLUMNS:
        raise DataFormatError(f"{path}: expected columns {POWER_COLUMNS}, found {list(frame.columns)}")
    return frame
