"""CSV readers for the documented simulation output contracts.

Each reader returns a dict mapping column name to a float ndarray. Lines
whose first non-blank character is ``#`` are comments. Extra columns are
ignored; a missing required column raises :class:`SchemaError` naming both
the missing and the found columns.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

# One atomic unit of time in femtoseconds.
AU_TIME_FS = 0.024188843265857


class SchemaError(ValueError):
    """A CSV file does not provide the required columns."""

    def __init__(self, path: str | Path, missing: list[str], found: list[str]):
        self.path = str(path)
        self.missing = list(missing)
        self.found = list(found)
        super().__init__(
            f"{self.path}: missing required column(s) "
            f"{', '.join(self.missing)}; found columns: "
            f"{', '.join(self.found) if self.found else '(none)'}"
        )


def _read_table(
    path: str | Path,
    required: tuple[str, ...],
    optional: tuple[str, ...] = (),
) -> dict[str, np.ndarray]:
    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        for record in csv.reader(fh):
            if not record or not "".join(record).strip():
                continue
            if record[0].lstrip().startswith("#"):
                continue
            rows.append([cell.strip() for cell in record])
    if not rows:
        raise SchemaError(path, list(required), [])

    header = rows[0]
    missing = [name for name in required if name not in header]
    if missing:
        raise SchemaError(path, missing, header)

    wanted = [name for name in (*required, *optional) if name in header]
    index = {name: header.index(name) for name in wanted}
    out: dict[str, list[float]] = {name: [] for name in wanted}
    for record in rows[1:]:
        for name, col in index.items():
            cell = record[col] if col < len(record) else ""
            out[name].append(float(cell) if cell else np.nan)
    return {name: np.asarray(vals, dtype=float) for name, vals in out.items()}


def read_density(path: str | Path) -> dict[str, np.ndarray]:
    """Probability-density dump: columns z_au, R_au, density."""
    return _read_table(path, required=("z_au", "R_au", "density"))


def read_stats(path: str | Path) -> dict[str, np.ndarray]:
    """Propagation statistics: t_au and mean_R required, the rest optional."""
    table = _read_table(
        path,
        required=("t_au", "mean_R"),
        optional=("t_fs", "norm", "sigma_R", "energy"),
    )
    if "t_fs" not in table:
        table["t_fs"] = table["t_au"] * AU_TIME_FS
    return table


def read_yield(path: str | Path) -> dict[str, np.ndarray]:
    """Delay-scan yields: delay_au and yield required; other columns optional."""
    table = _read_table(
        path,
        required=("delay_au", "yield"),
        optional=("delay_fs", "mean_R", "k0", "delta_k", "omega_au"),
    )
    if "delay_fs" not in table:
        table["delay_fs"] = table["delay_au"] * AU_TIME_FS
    return table


def read_field(path: str | Path) -> dict[str, np.ndarray]:
    """Vector-potential trace: columns t_au, A_au."""
    return _read_table(path, required=("t_au", "A_au"))


def read_fit_curve(path: str | Path) -> dict[str, np.ndarray]:
    """Fitted-model curve table: tau, data, model, envelope_hi, envelope_lo.

    ``data`` may be empty on the dense model-sampling rows; empty cells
    parse to NaN.
    """
    return _read_table(
        path,
        required=("tau", "data", "model", "envelope_hi", "envelope_lo"),
    )
