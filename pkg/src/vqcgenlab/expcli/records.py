"""CSV and JSON emission.

CSV files are RFC-4180 (comma separated, CRLF line ends, minimal quoting) with
floats written at 17 significant digits.  Timing data is kept out of
``runs.csv`` so repeated runs give byte-identical files; it goes to
``timings.csv``.
"""
import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from ..circuits import dumps_json


def fmt_cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    return "" if x is None else str(x)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_cell(r.get(h)) for h in header])
    return buf.getvalue()


def write_csv(path, header, rows):
    Path(path).write_text(csv_text(header, rows), newline="")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path, doc):
    Path(path).write_text(dumps_json(_plain(doc)) + "\n")


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def load_json(path):
    return json.loads(Path(path).read_text())
