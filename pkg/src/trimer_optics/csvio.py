"""Deterministic CSV output and the peak-table reader."""

from __future__ import annotations

import csv
import io
import math

from .errors import ParseError
from .spectro import PeakObservation


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if x is None:
        return ""
    return format(float(x), ".17g")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(header, rows))


PEAK_COLUMNS = ("phi_prime_deg", "phi_deg", "sigma_phi_rad")


def read_peaks(text: str):
    """Peak table with columns phi_prime_deg, phi_deg, sigma_phi_rad[, order_hint]."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty peak table") from None
    for col in PEAK_COLUMNS:
        if col not in header:
            raise ParseError(f"peak table lacks column {col!r}", line=1, key=col)
    extra = set(header) - set(PEAK_COLUMNS) - {"order_hint"}
    if extra:
        raise ParseError("unknown peak-table column", line=1, key=sorted(extra)[0])
    idx = {name: header.index(name) for name in header}
    peaks = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError("wrong number of fields", line=lineno)
        try:
            phi_p = math.radians(float(row[idx["phi_prime_deg"]]))
            phi = math.radians(float(row[idx["phi_deg"]]))
            sigma = float(row[idx["sigma_phi_rad"]])
            hint = row[idx["order_hint"]].strip() if "order_hint" in idx else ""
            peaks.append(PeakObservation(phi_p, phi, sigma, int(hint) if hint else None))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    if not peaks:
        raise ParseError("peak table has no rows")
    return peaks
