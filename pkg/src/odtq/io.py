"""Deterministic table output (CSV and JSON).

Floats are written in scientific notation with 9 significant digits,
independent of locale. JSON carries the same rounded values, so both
formats decode to identical numbers.
"""
import csv
import json
import math

INFINITE = "infinite"


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return INFINITE if x > 0 else "-" + INFINITE
    return f"{x:.8e}"


def _cell(value):
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (int, float)):
        return format_float(value)
    return "" if value is None else str(value)


def _json_value(value):
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (int, float)):
        text = format_float(value)
        return float(text) if math.isfinite(float(value)) else text
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return str(value)


def write_csv(columns, rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the header")
        writer.writerow([_cell(v) for v in row])


def write_json(columns, rows, stream, meta=None):
    doc = {"columns": list(columns),
           "rows": [[_json_value(v) for v in row] for row in rows]}
    if meta:
        doc["meta"] = _json_value(meta)
    json.dump(doc, stream, indent=1, sort_keys=False)
    stream.write("\n")


def write_record(record, stream):
    json.dump(_json_value(record), stream, indent=1)
    stream.write("\n")


def write_table(columns, rows, stream, fmt="csv", meta=None):
    if fmt == "csv":
        write_csv(columns, rows, stream)
    elif fmt == "json":
        write_json(columns, rows, stream, meta)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_csv(stream):
    """Parse a table written by :func:`write_csv` back into floats."""
    reader = csv.reader(stream)
    columns = next(reader)
    rows = []
    for raw in reader:
        row = []
        for cell in raw:
            try:
                row.append(float(cell))
            except ValueError:
                row.append(cell)
        rows.append(row)
    return columns, rows
