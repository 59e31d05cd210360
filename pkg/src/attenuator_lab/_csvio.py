"""Deterministic CSV output and tolerant golden comparison."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

FLOAT_FORMAT = "{:.12g}"


def format_value(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, float) or hasattr(x, "__float__") and not isinstance(x, str):
        x = float(x)
        if math.isnan(x):
            return "nan"
        # avoid "-0" in goldens
        return FLOAT_FORMAT.format(x + 0.0)
    return str(x)


def render_csv(columns, rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        if len(r) != len(columns):
            raise ValueError(f"row has {len(r)} fields, expected {len(columns)}")
        w.writerow([format_value(x) for x in r])
    return buf.getvalue()


def write_csv(path, columns, rows, comments=()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(columns, rows, comments), encoding="utf-8")
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Header and data rows, skipping ``#`` comment lines."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise ValueError(f"{path}: no header")
    return rows[0], rows[1:]


def read_tolerances(path) -> dict[tuple[str, str], float]:
    """Lines ``<file> <column> <abs_tol>``; ``*`` as column applies to every numeric column."""
    tol = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected '<file> <column> <tol>'")
        tol[(parts[0], parts[1])] = float(parts[2])
    return tol


def _num(s: str):
    try:
        return float(s)
    except ValueError:
        return None


def compare_csv(name: str, golden, fresh, tolerances) -> list[str]:
    """Differences between two CSV files beyond the per-column tolerances."""
    g_cols, g_rows = read_csv(golden)
    f_cols, f_rows = read_csv(fresh)
    if g_cols != f_cols:
        return [f"{name}: columns differ: {g_cols} vs {f_cols}"]
    if len(g_rows) != len(f_rows):
        return [f"{name}: {len(g_rows)} golden rows vs {len(f_rows)} fresh rows"]
    default = tolerances.get((name, "*"), 0.0)
    problems = []
    for i, (gr, fr) in enumerate(zip(g_rows, f_rows)):
        for col, a, b in zip(g_cols, gr, fr):
            if a == b:
                continue
            x, y = _num(a), _num(b)
            tol = tolerances.get((name, col), default)
            if x is None or y is None:
                problems.append(f"{name} row {i} {col}: {a!r} != {b!r}")
            elif math.isnan(x) and math.isnan(y):
                continue
            elif not abs(x - y) <= tol:
                problems.append(f"{name} row {i} {col}: {a} vs {b} (tol {tol:g})")
    return problems
