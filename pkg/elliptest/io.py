"""
Reading numeric CSV input and the inline vector/matrix flags of the CLI.
"""

import io
import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import InvalidInput

logger = logging.getLogger(__name__)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_matrix(source: Union[str, Path, io.TextIOBase]) -> Tuple[np.ndarray, Optional[List[str]]]:
    """
    Read a comma-separated numeric table.

    The first line is taken as a header when any of its fields is not a
    number. Every other cell must parse as a float.

    Returns
    -------
    data : np.ndarray
        n x p matrix.
    header : list of str or None
        Column names, when a header line was found.

    Raises
    ------
    InvalidInput
        On ragged rows, empty input or a non-numeric cell; the message names
        the file line and column (both 1-based).
    """
    try:
        raw = pd.read_csv(source, header=None, dtype=str, keep_default_na=False,
                          skipinitialspace=True, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise InvalidInput("input is empty")
    except pd.errors.ParserError as exc:
        raise InvalidInput(f"malformed CSV: {exc}")

    cells = raw.to_numpy()
    header = None
    first_line = 1
    if len(cells) and not all(_is_number(str(tok).strip()) for tok in cells[0]):
        header = [str(tok).strip() for tok in cells[0]]
        cells = cells[1:]
        first_line = 2
    if not len(cells):
        raise InvalidInput("input has no data rows")

    values = np.empty(cells.shape, dtype=float)
    for col in range(cells.shape[1]):
        column = pd.Series(cells[:, col], dtype=object).astype(str).str.strip()
        parsed = pd.to_numeric(column, errors='coerce').to_numpy(dtype=float)
        bad = np.flatnonzero(np.isnan(parsed))
        if bad.size:
            row = int(bad[0])
            token = cells[row, col]
            if not isinstance(token, str) or not token.strip():
                what = 'missing value'
            else:
                what = f"non-numeric value {token!r}"
            raise InvalidInput(f"{what} at line {row + first_line}, column {col + 1}")
        values[:, col] = parsed
    logger.debug("read_matrix: %d rows x %d columns, header=%s", values.shape[0], values.shape[1], header is not None)
    return values, header


def parse_vector(text: str) -> np.ndarray:
    """
    Parse a comma-separated vector such as "0,0".

    >>> parse_vector("1, 2.5")
    array([1. , 2.5])
    """
    try:
        return np.array([float(tok) for tok in text.split(',')], dtype=float)
    except ValueError:
        raise InvalidInput(f"cannot read a vector from {text!r}")


def parse_matrix(text: str) -> np.ndarray:
    """Parse a matrix written row by row, rows separated by ';' (e.g. "1,0;0,1")."""
    rows = [parse_vector(row) for row in text.split(';')]
    if len({len(r) for r in rows}) != 1:
        raise InvalidInput(f"matrix rows have different lengths in {text!r}")
    return np.vstack(rows)
