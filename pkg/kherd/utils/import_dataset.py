import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from kherd.constants import ErrorMessage
from kherd.exceptions import ConfigError, EmptyFile, EmptyInput, NonBinaryLabel, ParseError, RaggedRows

logger = logging.getLogger(__name__)

NumberedRow = Tuple[int, List[str]]


@dataclass(frozen=True)
class DatasetSchema:
    """CSV layout: comma-separated, label in the last column, no header by default."""
    delimiter: str = ','
    has_header: bool = False


def _read_rows(path, delimiter: str, has_header: bool = False) -> List[NumberedRow]:
    """Non-blank rows paired with their 1-based line number in the file."""
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(ErrorMessage.MISSING_FILE.format(path=path), field='input')
    rows = []
    with open(file_path, newline='', encoding='utf-8-sig') as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        for row in reader:
            # blank lines are not rows
            if row and any(cell.strip() for cell in row):
                rows.append((reader.line_num, row))
    if has_header and rows:
        rows = rows[1:]
    return rows


def _parse_float(value: str, row_number: int) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise ParseError(ErrorMessage.PARSE_ERROR.format(row=row_number, value=value), row=row_number)
    if not np.isfinite(parsed):
        raise ParseError(ErrorMessage.PARSE_ERROR.format(row=row_number, value=value), row=row_number)
    return parsed


def load_matrix_csv(path, has_header: bool = False, delimiter: str = ',') -> np.ndarray:
    """
    Read a numeric matrix, one sample per row.

    Raises:
        ConfigError: missing file
        EmptyInput: no data rows
        ParseError: non-numeric cell (1-based file row)
        RaggedRows: rows of different widths
    """
    rows = _read_rows(path, delimiter, has_header)
    if not rows:
        raise EmptyInput(ErrorMessage.EMPTY_INPUT)

    width = len(rows[0][1])
    values = []
    for row_number, row in rows:
        if len(row) != width:
            raise RaggedRows(ErrorMessage.RAGGED_ROWS.format(row=row_number, got=len(row), expected=width))
        values.append([_parse_float(cell, row_number) for cell in row])
    return np.asarray(values, dtype=float)


def load_labelled_csv(path, schema: DatasetSchema = DatasetSchema()) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read features and binary labels (last column).

    Returns:
        Tuple of (features (n, d), labels (n,))

    Raises:
        EmptyFile: the file holds no data rows
        ParseError: non-numeric feature (1-based file row)
        NonBinaryLabel: label other than 0/1
    """
    rows = _read_rows(path, schema.delimiter, schema.has_header)
    if not rows:
        raise EmptyFile(ErrorMessage.EMPTY_FILE.format(path=path))

    width = len(rows[0][1])
    features = []
    labels = []
    for row_number, row in rows:
        if len(row) != width or width < 2:
            raise ParseError(ErrorMessage.RAGGED_ROWS.format(row=row_number, got=len(row), expected=width),
                             row=row_number)
        features.append([_parse_float(cell, row_number) for cell in row[:-1]])
        label = row[-1].strip()
        try:
            label_value = float(label)
        except ValueError:
            label_value = None
        if label_value not in (0.0, 1.0):
            raise NonBinaryLabel(ErrorMessage.NON_BINARY_LABEL.format(row=row_number, value=label), row=row_number)
        labels.append(int(label_value))

    logger.debug(f"Parsed {len(rows)} rows from {path}")
    return np.asarray(features, dtype=float), np.asarray(labels, dtype=int)
