"""CSV ingestion for the photonkey harness outputs.

The curve contract is the header `curve,eps,eta,value_nats,value_bits`;
sweeps carry one row per grid point with empirical/analytic columns.  No
numeric transformation happens here beyond parsing.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

__all__ = ["SchemaError", "CurveFile", "SweepFile", "CURVE_HEADER", "SWEEP_HEADER"]

CURVE_HEADER = ["curve", "eps", "eta", "value_nats", "value_bits"]
SWEEP_HEADER = [
    "scheme",
    "eps",
    "eta",
    "uses",
    "trials",
    "empirical_nats",
    "empirical_bits",
    "empirical_ci95_nats",
    "exact_nats",
    "asymptote_nats",
    "gap_exact_nats",
    "gap_asymptote_nats",
    "agreement_rate",
    "decode_failure_rate",
]


class SchemaError(ValueError):
    """Input file does not match the documented CSV contract."""


def _read_rows(path: str | Path, header: list[str]) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or rows[0] != header:
        raise SchemaError(
            f"{path}: expected header {','.join(header)!r}, got {','.join(rows[0]) if rows else '<empty>'!r}"
        )
    return [dict(zip(header, row)) for row in rows[1:]]


@dataclass
class CurveFile:
    """Parsed efficiency-curve rows: (curve, eps, eta, value_nats)."""

    path: str
    rows: list[tuple[str, float, float, float]]

    @classmethod
    def load(cls, path: str | Path) -> "CurveFile":
        rows = []
        for rec in _read_rows(path, CURVE_HEADER):
            try:
                eps = float(rec["eps"])
                eta = float(rec["eta"])
                value = float(rec["value_nats"])
            except ValueError as exc:
                raise SchemaError(f"{path}: non-numeric row {rec!r}") from exc
            if eps <= 0.0:
                raise SchemaError(f"{path}: eps must be positive, got {eps}")
            rows.append((rec["curve"], eps, eta, value))
        if not rows:
            raise SchemaError(f"{path}: no data rows")
        return cls(path=str(path), rows=rows)

    def series(self, curve: str, eta: float | None = None) -> tuple[list[float], list[float]]:
        """(eps, value_nats) of one curve, sorted by eps; [] when absent."""
        picked = [
            (eps, value)
            for name, eps, row_eta, value in self.rows
            if name == curve and (eta is None or row_eta == eta)
        ]
        picked.sort()
        return [p[0] for p in picked], [p[1] for p in picked]


@dataclass
class SweepFile:
    """Parsed sweep rows keyed by scheme."""

    path: str
    rows: list[dict[str, float | str]]

    @classmethod
    def load(cls, path: str | Path) -> "SweepFile":
        rows: list[dict[str, float | str]] = []
        for rec in _read_rows(path, SWEEP_HEADER):
            parsed: dict[str, float | str] = {"scheme": rec["scheme"]}
            for key in SWEEP_HEADER[1:]:
                raw = rec[key].strip()
                if raw == "":
                    parsed[key] = float("nan")
                    continue
                try:
                    parsed[key] = float(raw)
                except ValueError as exc:
                    raise SchemaError(f"{path}: non-numeric {key}={raw!r}") from exc
            rows.append(parsed)
        if not rows:
            raise SchemaError(f"{path}: no data rows")
        return cls(path=str(path), rows=rows)

    def schemes(self) -> list[str]:
        seen: list[str] = []
        for row in self.rows:
            if row["scheme"] not in seen:
                seen.append(str(row["scheme"]))
        return seen
