"""CSV/JSON emission with a provenance header."""

import csv
import hashlib
import io
import json
import math
import sys

import numpy as np


def config_hash(doc):
    """SHA-256 of the canonical JSON form of ``doc``."""
    text = json.dumps(doc, sort_keys=True, separators=(',', ':'),
                      default=_jsonable)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, 'value'):     # enums
        return value.value
    raise TypeError(f'not JSON serialisable: {type(value).__name__}')


def format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return 'nan'
        if math.isinf(v):
            return 'inf' if v > 0 else '-inf'
        out = f'{v:.6f}'
        return '0.000000' if out == '-0.000000' else out
    return str(value)


def render_csv(columns, rows, digest=None):
    buf = io.StringIO()
    if digest:
        buf.write(f'# config_sha256={digest}\n')
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def render_json(doc, digest=None):
    if digest:
        doc = {'config_sha256': digest, **doc}
    return json.dumps(doc, indent=2, default=_jsonable, allow_nan=True) + '\n'


def render_records(columns, rows, digest=None):
    """Tabular data as a JSON list of records."""
    records = [dict(zip(columns, (_plain(v) for v in row))) for row in rows]
    return render_json({'columns': list(columns), 'rows': records}, digest)


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def write_text(path, text):
    if path is None or str(path) == '-':
        sys.stdout.write(text)
        return None
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        fh.write(text)
    return path


def read_table(path):
    """Columns of a CSV file, skipping ``#`` comment lines."""
    with open(path, encoding='utf-8') as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith('#')]
    reader = csv.reader(lines)
    header = next(reader)
    cols = {name: [] for name in header}
    for row in reader:
        for name, cell in zip(header, row):
            cols[name].append(cell)
    return cols
