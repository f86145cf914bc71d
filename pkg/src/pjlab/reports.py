"""Residual reports and their delimited/JSON serialization.

A report records one relation evaluated at one index: the signed residual,
the magnitude scale it was measured against, and the relative size.  The
fixed CSV column set is

    relation,n,alpha,t,bits,residual,relative,pass

sorted by (relation, n, t); runs with identical configuration are
byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import mpmath as mp

from .precision import GUARD_BITS as _GUARD_BITS

CSV_COLUMNS = ("relation", "n", "alpha", "t", "bits", "residual", "relative", "pass")


@dataclass(frozen=True)
class ResidualReport:
    relation: str
    n: int
    alpha: mp.mpf
    t: mp.mpf
    bits: int
    residual: mp.mpf
    scale: mp.mpf
    relative: mp.mpf
    passed: bool


def make_report(relation: str, n: int, params, bits: int, residual, scale,
                tolerance) -> ResidualReport:
    """Assemble a report; scale == 0 is tolerated only for exact-zero residuals.

    Runs at the report's own precision so callers need no ambient guard.
    """
    with mp.workprec(bits + _GUARD_BITS):
        residual = mp.mpf(residual)
        scale = mp.mpf(scale)
        if scale > 0:
            relative = abs(residual) / scale
        else:
            relative = mp.mpf(0) if residual == 0 else mp.inf
        return ResidualReport(relation=relation, n=n, alpha=params.alpha,
                              t=params.t, bits=bits, residual=residual,
                              scale=scale, relative=relative,
                              passed=bool(relative <= mp.mpf(tolerance)))


def format_mpf(x, digits: int) -> str:
    """Deterministic decimal rendering with enough digits to round-trip."""
    x = mp.mpf(x)
    if x == 0:
        return "0"
    if not mp.isfinite(x):
        return "inf" if x > 0 else "-inf"
    return mp.nstr(x, digits, strip_zeros=True, min_fixed=0, max_fixed=0)


def sort_reports(reports) -> list:
    return sorted(reports, key=lambda r: (r.relation, r.n, mp.mpf(r.t)))


def report_row(r: ResidualReport, digits: int) -> dict:
    return {
        "relation": r.relation,
        "n": r.n,
        "alpha": format_mpf(r.alpha, digits),
        "t": format_mpf(r.t, digits),
        "bits": r.bits,
        "residual": format_mpf(r.residual, digits),
        "relative": format_mpf(r.relative, digits),
        "pass": r.passed,
    }


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in columns})
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return v


def rows_to_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def reports_to_csv(reports, digits: int) -> str:
    return rows_to_csv([report_row(r, digits) for r in sort_reports(reports)],
                       CSV_COLUMNS)


def reports_to_json(reports, digits: int) -> str:
    return rows_to_json([report_row(r, digits) for r in sort_reports(reports)])
