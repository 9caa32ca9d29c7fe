"""Trace-file parsing.

A trace is the CSV the sampler CLI writes: header
``iter,nmi,active_dishes,K,maxT,t_cap_max,k_cap,restarts,log_joint``,
one row per iteration, `nmi` empty when the run had no truth labels.
"""

import numpy as np

HEADER = "iter,nmi,active_dishes,K,maxT,t_cap_max,k_cap,restarts,log_joint"
COLUMNS = HEADER.split(",")


class TraceFormatError(ValueError):
    """Raised with the offending file and line when a trace does not parse."""


class Trace:
    """Parsed trace columns as arrays; `nmi` is NaN where the cell was empty."""

    def __init__(self, path, columns):
        self.path = str(path)
        for name, values in columns.items():
            setattr(self, "iteration" if name == "iter" else name, values)

    @property
    def has_nmi(self):
        return bool(np.isfinite(self.nmi).any())


def read_trace(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != HEADER:
        raise TraceFormatError(f"{path}, line 1: expected header {HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(COLUMNS):
            raise TraceFormatError(
                f"{path}, line {lineno}: expected {len(COLUMNS)} cells, got {len(cells)}")
        try:
            rows.append((
                int(cells[0]),
                float(cells[1]) if cells[1] != "" else np.nan,
                int(cells[2]), int(cells[3]), int(cells[4]),
                int(cells[5]), int(cells[6]), int(cells[7]),
                float(cells[8]),
            ))
        except ValueError:
            raise TraceFormatError(f"{path}, line {lineno}: bad cell in {line!r}") from None
    if not rows:
        raise TraceFormatError(f"{path}, line 2: trace has no rows")
    data = list(zip(*rows))
    columns = {name: np.asarray(vals) for name, vals in zip(COLUMNS, data)}
    columns["iter"] = columns["iter"].astype(int)
    return Trace(path, columns)
