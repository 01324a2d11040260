"""Deterministic JSON and CSV serialisation of Monte Carlo reports."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Sequence

import numpy as np

from .estimators import DEFAULT_GATE, McReport, Summary, aggregate

SCHEMA = "latpoisson.report/1"
CSV_COLUMNS = ("label", "n", "lambda", "k", "trials", "mean", "stderr", "target", "zscore", "verdict")
GATE_NOTE = (f"Gated reports pass when |z| <= {DEFAULT_GATE:g} (two-sided) or z <= {DEFAULT_GATE:g} "
             "(one-sided upper bounds). The wide gate controls false alarms across many reports.")

__all__ = ["SCHEMA", "CSV_COLUMNS", "jsonable", "report_document", "dumps_report", "csv_text", "reports_from_document"]


def jsonable(x: Any) -> Any:
    """Replace non-finite floats by strings and tuples by lists, recursively."""
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float):
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


def _unjson(x: Any) -> Any:
    if isinstance(x, str) and x in ("inf", "-inf", "nan"):
        return float(x)
    return x


def report_document(entries: Sequence[tuple[dict, Sequence[McReport]]], seed: int | None = None,
                    complete: bool = True) -> dict:
    """JSON document for a suite run; ``entries`` pairs each plan dict with its reports."""
    reports = [r for _, reps in entries for r in reps]
    summary: Summary = aggregate(reports)
    return {
        "schema": SCHEMA,
        "complete": complete,
        "seed": seed,
        "gate_note": GATE_NOTE,
        "summary": {"exit_code": summary.exit_code, "message": summary.message, "counts": summary.counts},
        "experiments": [{"plan": plan, "reports": [r.as_dict() for r in reps]} for plan, reps in entries],
    }


def dumps_report(doc: dict) -> str:
    return json.dumps(jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def reports_from_document(doc: dict) -> list[McReport]:
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
    out = []
    for exp in doc["experiments"]:
        for d in exp["reports"]:
            d = dict(d)
            for key in ("mean", "stderr", "zscore", "target"):
                d[key] = _unjson(d.get(key))
            d["ci95"] = [_unjson(v) for v in d["ci95"]]
            out.append(McReport.from_dict(d))
    return out


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(reports: Sequence[McReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([_cell(v) for v in (r.label, r.n, float(r.lam), r.k, r.trials, r.mean, r.stderr, r.target,
                                       r.zscore, r.verdict)])
    return buf.getvalue()
