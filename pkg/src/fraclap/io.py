"""Plot-ready CSV and JSON artifacts."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

CONVERGENCE_COLUMNS = ("s", "N", "h", "hs_error", "linf_error", "residual")
CONTROL_COLUMNS = ("s", "N", "h", "dt", "eps", "cost", "inf_F", "terminal_norm", "cg_iters")
SPECTRUM_COLUMNS = ("s", "N", "k", "lambda_discrete", "lambda_asymptotic", "rel_gap")
TRAJECTORY_COLUMNS = ("t", "x", "value")
SOLUTION_COLUMNS = ("x", "u_h")


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        # shortest string that round-trips exactly
        return repr(value)
    return str(value)


def write_csv(path, columns: Sequence[str], rows: Iterable[Mapping]) -> Path:
    """Header row, LF line endings, floats written so they read back bit-exact."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def error_report_rows(reports) -> list[dict]:
    return [
        {
            "s": r.s,
            "N": r.N,
            "h": r.h,
            "hs_error": r.hs_error,
            "linf_error": r.linf_error,
            "residual": r.residual,
        }
        for r in reports
    ]


def trajectory_rows(trajectory, problem):
    """Long format, including the zero boundary values at ``x = -L, L``."""
    x = np.concatenate([[-problem.L], problem.nodes, [problem.L]])
    for t, state in zip(trajectory.times, trajectory.states):
        values = np.concatenate([[0.0], state, [0.0]])
        for xi, vi in zip(x, values):
            yield {"t": t, "x": xi, "value": vi}


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload: Mapping) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path
