"""Delimited and JSON serialization of models, traces, and result tables.

Machine tables carry numbers at 10 significant digits; report-style
rounding (whole dollars, three-decimal QALYs) is applied only by the
human-format helpers. Every writer has a matching reader so emitted
files can be loaded back.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .cea import CeaTable
from .core import CohortTrace, StateSpace, TransitionModel
from .epi import EpiSeries
from .errors import StructureError

SIG_DIGITS = 10


def format_number(value) -> str:
    if value is None:
        return ""
    return f"{float(value):.{SIG_DIGITS}g}"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_number(value)


def write_table(path, header: list[str], rows: list[list], fmt: str = "csv") -> Path:
    """Write a rectangular table as CSV or JSON (columns/rows document)."""
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    elif fmt == "json":
        doc = {"columns": list(header), "rows": [[None if v is None else v for v in row] for row in rows]}
        path.write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")
    else:
        raise ValueError(f"unknown table format {fmt!r}")
    return path


def read_table(path, fmt: str | None = None) -> tuple[list[str], list[list]]:
    """Load a table written by :func:`write_table`.

    Numeric-looking cells come back as floats, empty cells as ``None``.
    """
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    if fmt == "json":
        doc = json.loads(path.read_text())
        return list(doc["columns"]), [list(r) for r in doc["rows"]]
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for rec in reader:
            row = []
            for cell in rec:
                if cell == "":
                    row.append(None)
                else:
                    try:
                        row.append(float(cell))
                    except ValueError:
                        row.append(cell)
            rows.append(row)
    return header, rows


# -- transition models -------------------------------------------------------

def transition_model_rows(tm: TransitionModel) -> tuple[list[str], list[list]]:
    """One row per (cycle, origin) with destination columns.

    A constant model emits a single cycle-0 block.
    """
    names = tm.space.names
    header = ["cycle", "from", *names]
    rows = []
    cycles = [0] if tm.kind == TransitionModel.CONSTANT else range(tm.horizon)
    for t in cycles:
        mat = tm.matrix_at(t)
        for i, origin in enumerate(names):
            rows.append([t, origin, *mat[i]])
    return header, rows


def write_transition_model(path, tm: TransitionModel, fmt: str = "csv") -> Path:
    if fmt == "json":
        doc = {
            "states": list(tm.space.names),
            "absorbing": sorted(tm.space.absorbing),
            "kind": tm.kind,
            "horizon": tm.horizon,
            "matrices": [
                {"cycle": t, "rows": tm.matrix_at(t).tolist()}
                for t in ([0] if tm.kind == TransitionModel.CONSTANT else range(tm.horizon))
            ],
        }
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
        return Path(path)
    header, rows = transition_model_rows(tm)
    return write_table(path, header, rows, fmt)


def read_transition_model(
    path,
    fmt: str | None = None,
    horizon: int | None = None,
    absorbing=(),
) -> TransitionModel:
    """Load a model written by :func:`write_transition_model`.

    The delimited form carries no kind/horizon metadata: a single-block
    file is read as a constant model (``horizon`` then required), a
    multi-block file as time-varying. JSON files are self-describing.
    """
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    if fmt == "json":
        doc = json.loads(path.read_text())
        space = StateSpace(doc["states"], doc.get("absorbing", ()))
        mats = {m["cycle"]: np.asarray(m["rows"], dtype=np.float64) for m in doc["matrices"]}
        if doc["kind"] == TransitionModel.CONSTANT:
            return TransitionModel.constant(space, mats[0], doc["horizon"])
        stack = np.stack([mats[t] for t in range(doc["horizon"])])
        return TransitionModel.time_varying(space, stack)

    header, rows = read_table(path, "csv")
    if len(header) < 3 or header[:2] != ["cycle", "from"]:
        raise StructureError(f"{path}: not a transition-model table")
    names = header[2:]
    space = StateSpace(names, absorbing)
    n = len(names)
    blocks: dict[int, np.ndarray] = {}
    for row in rows:
        t = int(row[0])
        origin = row[1]
        blocks.setdefault(t, np.full((n, n), np.nan))
        blocks[t][space.index(origin)] = row[2:]
    cycles = sorted(blocks)
    if any(np.any(np.isnan(blocks[t])) for t in cycles):
        raise StructureError(f"{path}: incomplete matrix block")
    if len(cycles) == 1:
        if horizon is None:
            raise StructureError(f"{path}: constant model needs an explicit horizon")
        return TransitionModel.constant(space, blocks[cycles[0]], horizon)
    if cycles != list(range(len(cycles))):
        raise StructureError(f"{path}: cycle blocks must cover 0..n_t-1 contiguously")
    return TransitionModel.time_varying(space, np.stack([blocks[t] for t in cycles]))


# -- traces and epi series ---------------------------------------------------

def trace_rows(trace: CohortTrace) -> tuple[list[str], list[list]]:
    header = ["cycle", *trace.space.names]
    rows = [[t, *trace.values[t]] for t in range(trace.values.shape[0])]
    return header, rows


def write_trace(path, trace: CohortTrace, fmt: str = "csv") -> Path:
    header, rows = trace_rows(trace)
    return write_table(path, header, rows, fmt)


def epi_series_rows(series_list: list[EpiSeries]) -> tuple[list[str], list[list]]:
    """Long-format rows (cycle, series, value); missing cycles emit blanks."""
    header = ["cycle", "series", "value"]
    rows = []
    for series in series_list:
        for t in range(len(series)):
            value = None if series.missing[t] else float(series.values[t])
            rows.append([t, series.label, value])
    return header, rows


# -- CEA tables --------------------------------------------------------------

CEA_COLUMNS = ["strategy", "cost", "effect", "inc_cost", "inc_effect", "icer", "status"]


def cea_rows(table: CeaTable) -> tuple[list[str], list[list]]:
    rows = [
        [r.label, r.cost, r.effect, r.inc_cost, r.inc_effect, r.icer, r.status]
        for r in table.rows
    ]
    return list(CEA_COLUMNS), rows


def write_cea_table(path, table: CeaTable, fmt: str = "csv") -> Path:
    header, rows = cea_rows(table)
    return write_table(path, header, rows, fmt)


def human_cea_rows(table: CeaTable) -> list[list[str]]:
    """Report-style rows: whole dollars with separators, 3-decimal QALYs."""
    out = []
    for r in table.rows:
        out.append(
            [
                r.label,
                f"{r.cost:,.0f}",
                f"{r.effect:.3f}",
                "NA" if r.inc_cost is None else f"{r.inc_cost:,.0f}",
                "NA" if r.inc_effect is None else f"{r.inc_effect:.3f}",
                "NA" if r.icer is None else f"{r.icer:,.0f}",
                r.status,
            ]
        )
    return out


# -- run manifests -----------------------------------------------------------

def write_manifest(path, entries: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n")
    return path
