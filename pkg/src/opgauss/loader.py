"""
Reading and writing of two-column CSV sample files.
"""

import csv
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from opgauss.common import logger
from opgauss.exceptions import DomainError
from opgauss.grid import Samples


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_rows(rows: Iterable[Sequence[str]], source: str = "<data>") -> Samples:
    """
    Builds Samples from rows of (u, y). A first row that is not numeric is
    taken as a header; blank rows are skipped.
    """
    u: List[float] = []
    y: List[float] = []
    first = True
    for lineno, row in enumerate(rows, start=1):
        cells = [c.strip() for c in row]
        if not any(cells):
            continue
        if first and not all(_is_number(c) for c in cells):
            logger.debug("%s: skipping header %s", source, cells)
            first = False
            continue
        first = False
        if len(cells) != 2:
            raise DomainError(
                f"{source}:{lineno}: expected 2 columns, got {len(cells)}"
            )
        try:
            u.append(float(cells[0]))
            y.append(float(cells[1]))
        except ValueError as exc:
            raise DomainError(f"{source}:{lineno}: not a number ({exc})") from exc
    if not u:
        raise DomainError(f"{source}: no data")
    return Samples(np.array(u), np.array(y))


def load_samples(path: Path) -> Samples:
    """Reads a CSV file with columns u, y (header optional, CRLF tolerated)."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            return parse_rows(csv.reader(f), str(path))
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from exc


def write_columns(path: Path, header: Tuple[str, str], a, b) -> None:
    """Writes two equally long columns as CSV with a header row."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for x, v in zip(np.asarray(a).tolist(), np.asarray(b).tolist()):
            writer.writerow((repr(float(x)), repr(float(v))))
