"""
CSV / JSON writers with fixed headers

Floats are written with repr(), the shortest round-tripping form, so
identical values always produce identical bytes.
"""

import csv
import json
from typing import Any, Dict, Iterable, List, Sequence, TextIO

TRACE_HEADER = ["pass", "linf", "l1", "fro"]
BENCH_HEADER = ["op", "k", "d", "flops", "wall_seconds", "flops_per_second"]
TABLE_HEADER = ["method", "grams", "applies", "trsm", "flops_per_k2d"]
TRAIN_HEADER = ["step", "loss", "lr", "grad_norm_preclip", "elapsed_seconds"]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(out: TextIO, header: Sequence[str], rows: Iterable[Dict[str, Any]]) -> int:
    """
    Write rows under a fixed header

    Returns:
        Number of data rows written
    """
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    count = 0
    for row in rows:
        writer.writerow([_cell(row.get(name)) for name in header])
        count += 1
    return count


def write_json(out: TextIO, payload: Any) -> None:
    json.dump(payload, out, indent=2, sort_keys=True, allow_nan=True)
    out.write("\n")


def records_as_rows(records: Iterable[Any]) -> List[Dict[str, Any]]:
    """Dataclass records to plain dicts keyed by field name"""
    return [dict(vars(r)) for r in records]
