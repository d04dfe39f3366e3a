"""Seeded replication engine for size tables, power curves and null calibration."""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from typing import Optional

import numpy as np
from scipy.stats import kstest

from lrca.config import CALIBRATION_QUANTILES, KS_BAND_CONSTANT
from lrca.designs import kernel_for, null_dimension, null_values, validate
from lrca.errors import ConfigInvalid, IdentityViolation, NotConverged, NumericalError
from lrca.models import (
    CalibrationSummary,
    ExperimentConfig,
    PowerCurve,
    RejectionRow,
    RejectionTable,
)
from lrca.numeric_core import chi2_quantile

logger = logging.getLogger(__name__)

Draw = Optional[dict[str, float]]


def replication_seed(master_seed: int, index: int) -> int:
    """64-bit stream seed for replication `index`, mixed by SeedSequence."""
    if index < 0:
        raise ConfigInvalid(f"replication index must be nonnegative, got {index}")
    if master_seed < 0:
        raise ConfigInvalid(f"master seed must be nonnegative, got {master_seed}")
    state = np.random.SeedSequence(master_seed, spawn_key=(index,)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def replicate(config: ExperimentConfig, index: int) -> Draw:
    """Statistics of one replication; None when a fit fails numerically."""
    kernel = kernel_for(config)
    try:
        return kernel(config, replication_seed(config.master_seed, index))
    except IdentityViolation:
        raise
    except NumericalError as e:
        logger.debug("replication %d failed: %s", index, e)
        return None


def _draws(config: ExperimentConfig) -> list[Draw]:
    indices = range(config.replications)
    if config.workers == 1:
        return [replicate(config, i) for i in indices]
    chunk = max(1, config.replications // (4 * config.workers))
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(replicate, repeat(config), indices, chunksize=chunk))


def _collect(config: ExperimentConfig) -> tuple[list[dict[str, float]], int]:
    validate(config)
    started = time.monotonic()
    logger.info(
        "experiment %s n=%d R=%d seed=%d workers=%d",
        config.dgp, config.n, config.replications, config.master_seed, config.workers,
    )
    draws = _draws(config)
    kept = [d for d in draws if d is not None]
    failures = len(draws) - len(kept)
    if failures:
        logger.info("%d of %d replications failed and are excluded", failures, len(draws))
    if not kept:
        raise NotConverged(f"all {len(draws)} replications failed")
    logger.info("experiment %s n=%d finished in %.1fs", config.dgp, config.n, time.monotonic() - started)
    return kept, failures


def _rates(kept: list[dict[str, float]], df: int, level: float) -> dict[str, float]:
    critical = chi2_quantile(df, 1.0 - level)
    tests = list(kept[0])
    return {
        test: sum(int(d[test] >= critical) for d in kept) / len(kept)
        for test in tests
    }


def run_level_experiment(config: ExperimentConfig) -> RejectionTable:
    """Empirical rejection rates per (test, level) over converged replications."""
    kept, failures = _collect(config)
    df = null_dimension(config)
    rows = []
    for level in config.levels:
        for test, rate in _rates(kept, df, level).items():
            rows.append(RejectionRow(
                dgp=config.dgp, n=config.n, test=test, level=level, rate=rate, failures=failures,
            ))
    return RejectionTable(rows=rows, replications=config.replications, failures=failures)


def run_power_experiment(config: ExperimentConfig, grid: list[float]) -> PowerCurve:
    """Rejection rates at the first level as the first null value moves along grid.

    Data come from the fixed truth at every grid point (same seeds, so the
    curve uses common random numbers).
    """
    if not grid:
        raise ConfigInvalid("power grid is empty")
    level = config.levels[0]
    nulls = null_values(config)
    rates: dict[str, list[float]] = {}
    failures: list[int] = []
    for value in grid:
        point = config.model_copy(update={"null": [float(value), *nulls[1:]]})
        table = run_level_experiment(point)
        failures.append(table.failures)
        for row in table.rows:
            if math.isclose(row.level, level):
                rates.setdefault(row.test, []).append(row.rate)
    return PowerCurve(
        grid=[float(g) for g in grid],
        rates=rates,
        level=level,
        n=config.n,
        replications=config.replications,
        failures=failures,
    )


def null_calibration(config: ExperimentConfig) -> list[CalibrationSummary]:
    """Empirical quantiles and KS distance against χ²_q, one summary per test."""
    kept, failures = _collect(config)
    df = config.df_override or null_dimension(config)
    band = KS_BAND_CONSTANT / math.sqrt(len(kept))
    summaries = []
    for test in kept[0]:
        values = np.array([d[test] for d in kept])
        distance = float(kstest(values, "chi2", args=(df,)).statistic)
        summaries.append(CalibrationSummary(
            dgp=config.dgp,
            n=config.n,
            test=test,
            df=df,
            replications=config.replications,
            failures=failures,
            quantiles={f"{p:.2f}": float(np.quantile(values, p)) for p in CALIBRATION_QUANTILES},
            reference_quantiles={f"{p:.2f}": chi2_quantile(df, p) for p in CALIBRATION_QUANTILES},
            ks_distance=distance,
            ks_band=band,
            flagged=distance >= band,
            statistics=values.tolist(),
        ))
        if distance >= band:
            logger.info("%s: KS distance %.4f exceeds band %.4f against χ²_%d", test, distance, band, df)
    return summaries
