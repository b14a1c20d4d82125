"""
Monte Carlo driver for empirical size and power.

``run_grid`` evaluates every (setting, n, p, s) cell of an ``ExperimentGrid``
by drawing ``reps`` datasets, testing each and tallying rejections. Each
replication's seed is a hash of the base seed and its cell coordinates, so a
cell gives the same answer whatever the evaluation order or worker count.
"""

import io
import json
import logging
import math
import time
from dataclasses import astuple, dataclass, fields
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from multiprocess import Pool

from .config import ExperimentGrid, derive_seed, resolve_workers
from .exceptions import ConfigError, ElliptestError, InvalidInput
from .generators import SettingSpec, generate, true_moments
from .inference import run_test
from .setting_registry import SettingRegistry

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMATS = ('csv', 'json', 'markdown')


@dataclass(frozen=True)
class RejectionRow:
    """
    Tally for one cell.

    ``reps`` counts completed replications and is the denominator of
    ``reject_rate``; ``failures`` counts replications that raised.
    """
    setting: int
    n: int
    p: int
    s: int
    reps: int
    failures: int
    reject_count: int
    reject_rate: float
    mc_standard_error: float
    wall_time: float = 0.0

    @classmethod
    def from_counts(cls, setting: int, n: int, p: int, s: int, reps: int, failures: int,
                    reject_count: int, wall_time: float = 0.0) -> 'RejectionRow':
        if reps:
            rate = reject_count / reps
            se = math.sqrt(rate * (1.0 - rate) / reps)
        else:
            rate = se = float('nan')
        return cls(setting, n, p, s, reps, failures, reject_count, rate, se, wall_time)


COLUMNS: Tuple[str, ...] = tuple(f.name for f in fields(RejectionRow))
INT_COLUMNS = ('setting', 'n', 'p', 's', 'reps', 'failures', 'reject_count')


@dataclass(frozen=True)
class RejectionTable:
    rows: Tuple[RejectionRow, ...] = ()

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def cell(self, setting: int, n: int, p: int, s: int) -> Optional[RejectionRow]:
        for row in self.rows:
            if (row.setting, row.n, row.p, row.s) == (setting, n, p, s):
                return row
        return None

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([astuple(r) for r in self.rows], columns=list(COLUMNS))
        return frame.astype({c: 'int64' for c in INT_COLUMNS}).astype(
            {c: 'float64' for c in COLUMNS if c not in INT_COLUMNS})

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> 'RejectionTable':
        missing = [c for c in COLUMNS if c not in frame.columns]
        if missing:
            raise InvalidInput(f"table is missing columns: {', '.join(missing)}")
        rows = []
        for record in frame[list(COLUMNS)].itertuples(index=False):
            values = [int(v) if c in INT_COLUMNS else float(v) for c, v in zip(COLUMNS, record)]
            rows.append(RejectionRow(*values))
        return cls(tuple(rows))


def parse_csv(text: str) -> RejectionTable:
    """Read a table written by ``emit_table(..., 'csv')``."""
    frame = pd.read_csv(io.StringIO(text), float_precision='round_trip')
    return RejectionTable.from_frame(frame)


def _markdown(frame: pd.DataFrame) -> str:
    def cell(value) -> str:
        if isinstance(value, float):
            return repr(float(value))
        return str(value)

    lines = ['| ' + ' | '.join(frame.columns) + ' |',
             '|' + '|'.join('---:' for _ in frame.columns) + '|']
    for record in frame.astype(object).itertuples(index=False):
        lines.append('| ' + ' | '.join(cell(v) for v in record) + ' |')
    return '\n'.join(lines) + '\n'


def emit_table(tbl: RejectionTable, format: str = 'csv') -> str:
    """
    Serialize a table as csv, json or markdown with columns in declared order.

    Floats keep their shortest round-trip representation so a csv read back
    with ``parse_csv`` equals the original.
    """
    frame = tbl.to_frame()
    if format == 'csv':
        return frame.to_csv(index=False, lineterminator='\n')
    if format == 'json':
        records = [dict(zip(COLUMNS, (int(v) if c in INT_COLUMNS else _json_float(v)
                                      for c, v in zip(COLUMNS, astuple(row)))))
                   for row in tbl.rows]
        return json.dumps({'schema_version': SCHEMA_VERSION, 'columns': list(COLUMNS), 'rows': records},
                          indent=2) + '\n'
    if format == 'markdown':
        return _markdown(frame)
    raise InvalidInput(f"format must be one of {', '.join(FORMATS)}, got {format!r}")


def _json_float(value: float):
    return None if math.isnan(value) else float(value)


def grid_cells(grid: ExperimentGrid) -> List[Tuple[int, int, int, int]]:
    """Cells in evaluation order: setting, then n, then p, then s."""
    return [(setting, n, p, s)
            for setting in grid.settings
            for n in grid.ns
            for p in grid.ps
            for s in grid.s_range(p)]


def replication_seed(base_seed: int, setting: int, n: int, p: int, s: int, rep: int) -> int:
    return derive_seed(base_seed, setting, n, p, s, rep)


def _replication(job) -> Tuple[Optional[bool], Optional[str]]:
    grid, (setting, n, p, s), rep = job
    seed = replication_seed(grid.base_seed, setting, n, p, s, rep)
    try:
        X = generate(SettingSpec(setting=setting, n=n, p=p, s=s, seed=seed), **grid.setting_options)
        mu = sigma = None
        if grid.mode == 'known':
            mu, sigma = true_moments(setting, p)
        result = run_test(X, mu, sigma, cfg=grid.test.replace(seed=seed, alpha=grid.alpha))
    except ElliptestError as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return result.reject, None


def _check_grid(grid: ExperimentGrid) -> None:
    for setting in grid.settings:
        if SettingRegistry.get_setting(setting) is None:
            raise ConfigError(f"unknown setting {setting}")
        for p in grid.ps:
            try:
                SettingSpec(setting=setting, n=max(grid.ns), p=p)
            except ElliptestError as exc:
                raise ConfigError(f"setting {setting}: {exc}")
            if grid.mode == 'known' and true_moments(setting, p) is None:
                raise ConfigError(f"setting {setting} has no known moments; use mode: unknown")


def run_grid(grid: ExperimentGrid, workers: Optional[int] = None, timing: bool = False) -> RejectionTable:
    """
    Empirical rejection rates over every cell of the grid.

    Parameters
    ----------
    grid : ExperimentGrid
    workers : int, optional
        Worker processes for replications; defaults to the physical core
        count capped by ELLIPTEST_THREADS.
    timing : bool
        Record each cell's wall time; left at 0.0 otherwise.

    Returns
    -------
    RejectionTable
        One row per cell, in ``grid_cells`` order. Replications that raise
        are logged, excluded from ``reps`` and counted in ``failures``.
    """
    _check_grid(grid)
    cells = grid_cells(grid)
    n_workers = min(resolve_workers(workers), grid.reps)
    logger.info("run_grid: %d cells x %d reps on %d worker(s)", len(cells), grid.reps, n_workers)
    pool = Pool(n_workers) if n_workers > 1 else None
    rows = []
    try:
        for cell in cells:
            jobs = [(grid, cell, rep) for rep in range(grid.reps)]
            start = time.perf_counter()
            outcomes = pool.map(_replication, jobs) if pool else [_replication(job) for job in jobs]
            elapsed = time.perf_counter() - start
            rows.append(_tally(cell, outcomes, elapsed if timing else 0.0))
    finally:
        if pool:
            pool.close()
            pool.join()
    return RejectionTable(tuple(rows))


def _tally(cell, outcomes: Sequence[Tuple[Optional[bool], Optional[str]]], wall_time: float) -> RejectionRow:
    setting, n, p, s = cell
    decisions = [d for d, _ in outcomes if d is not None]
    errors = [msg for d, msg in outcomes if d is None]
    for msg in errors[:5]:
        logger.warning("setting %d n=%d p=%d s=%d: replication failed: %s", setting, n, p, s, msg)
    if len(errors) > 5:
        logger.warning("setting %d n=%d p=%d s=%d: %d more failures", setting, n, p, s, len(errors) - 5)
    row = RejectionRow.from_counts(setting, n, p, s, reps=len(decisions), failures=len(errors),
                                   reject_count=int(np.sum(decisions)), wall_time=wall_time)
    logger.info("setting %d n=%d p=%d s=%d: %d/%d rejected (%d failed)",
                setting, n, p, s, row.reject_count, row.reps, row.failures)
    return row

