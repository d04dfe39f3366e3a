"""Strict CSV readers for series, survival and panel data.

Every reader fails on blank lines, ragged rows, missing cells and
non-numeric entries; nothing is imputed or dropped.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from lrca.errors import DataFormatError, UnbalancedPanel
from lrca.models import PanelData, SurvivalData

logger = logging.getLogger(__name__)

INTERCEPT = "intercept"


def _read(path: Path | str, required: list[str], numeric_except: tuple[str, ...] = ()) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path, skip_blank_lines=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFormatError(f"{path}: {e}") from e
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DataFormatError(f"{path}: missing column(s) {missing}; found {list(frame.columns)}")
    if frame.empty:
        raise DataFormatError(f"{path}: no data rows")
    bad_rows = frame.index[frame.isna().any(axis=1)]
    if len(bad_rows):
        # header is line 1
        raise DataFormatError(f"{path}: blank or missing cells on line(s) {[int(i) + 2 for i in bad_rows[:5]]}")
    for column in frame.columns:
        if column in numeric_except:
            continue
        try:
            frame[column] = pd.to_numeric(frame[column]).astype(float)
        except (ValueError, TypeError) as e:
            raise DataFormatError(f"{path}: column {column!r} is not numeric") from e
    if not np.all(np.isfinite(frame.drop(columns=list(numeric_except)).to_numpy())):
        raise DataFormatError(f"{path}: non-finite values")
    logger.debug("read %d rows from %s", len(frame), path)
    return frame


def read_series(path: Path | str) -> np.ndarray:
    """Univariate series from column `x`."""
    return _read(path, ["x"])["x"].to_numpy()


def read_survival(path: Path | str) -> SurvivalData:
    """Event times from column `time`; remaining columns are covariates.

    An intercept column is prepended to the covariates.
    """
    frame = _read(path, ["time"])
    names = [c for c in frame.columns if c != "time"]
    X = np.column_stack([np.ones(len(frame)), frame[names].to_numpy()])
    return SurvivalData(times=frame["time"].to_numpy(), X=X, covariate_names=[INTERCEPT, *names])


def read_panel(path: Path | str) -> PanelData:
    """Balanced panel with columns id, t, y and covariates, sorted id-major.

    An intercept column is prepended to the covariates.
    """
    frame = _read(path, ["id", "t", "y"], numeric_except=("id",))
    ids = pd.unique(frame["id"])
    blocks = frame.groupby("id", sort=False)
    sizes = blocks.size()
    if sizes.nunique() != 1:
        raise UnbalancedPanel(f"{path}: individuals have between {sizes.min()} and {sizes.max()} periods")
    T = int(sizes.iloc[0])
    N = len(ids)

    expected_ids = np.repeat(ids, T)
    if not np.array_equal(frame["id"].to_numpy(), expected_ids):
        raise DataFormatError(f"{path}: rows are not grouped by id")
    periods = frame["t"].to_numpy().reshape(N, T)
    if np.any(np.diff(periods, axis=1) <= 0):
        raise DataFormatError(f"{path}: periods are not strictly increasing within each id")
    if np.any(periods != periods[0]):
        raise UnbalancedPanel(f"{path}: individuals are observed in different periods")

    names = [c for c in frame.columns if c not in ("id", "t", "y")]
    X = np.column_stack([np.ones(len(frame)), frame[names].to_numpy()])
    return PanelData.build(N, T, frame["y"].to_numpy(), X, covariate_names=[INTERCEPT, *names])
