"""Writers for machine-readable files and human tables.

Machine CSVs carry 17 significant digits; JSON uses Python's shortest
round-trip float repr, which is exact.  Human tables round to 3 decimals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt_machine(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "TRUE" if v else "FALSE"
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "NaN"
        return format(float(v), ".17g")
    return str(v)


def fmt_human(v) -> str:
    if isinstance(v, (float, np.floating)) and not isinstance(v, bool):
        return "NaN" if math.isnan(v) else f"{float(v):.3f}"
    return fmt_machine(v)


def interval(iv, fmt=fmt_human) -> str:
    if iv is None:
        return ""
    return f"[{fmt(iv[0])}, {fmt(iv[1])}]"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_machine(v) for v in row])
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) else v
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(obj), encoding="utf-8")
    return path


def table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Fixed-width text table, 3 decimals."""
    cells = [list(header)] + [[fmt_human(v) if not isinstance(v, str) else v for v in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    buf = io.StringIO()
    for r in cells:
        buf.write("  ".join(c.ljust(w) if k == 0 else c.rjust(w) for k, (c, w) in enumerate(zip(r, widths))).rstrip() + "\n")
    return buf.getvalue()


def write_dataset(path: Path, data) -> Path:
    header = [data.outcome_name, data.treatment_name, *data.control_names]
    cols = np.column_stack([data.outcome, data.treatment, data.controls])
    return write_csv(path, header, (list(map(float, r)) for r in cols))
