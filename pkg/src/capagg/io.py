"""Forecast files: CSV with header ``judge,event,prob,truth`` or JSON lines with the same keys."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, TextIO

from .engine import Forecast, PooledForecastSet
from .errors import CapError, DataError
from .events import to_text

__all__ = ["read_forecasts", "write_forecasts", "parse_rows", "format_prob", "write_pooled"]

FIELDS = ("judge", "event", "prob", "truth")


def format_prob(p: float) -> str:
    # 17 significant digits round-trip any double exactly
    return format(float(p), ".17g")


def _parse_truth(raw, where: str) -> bool | None:
    if raw is None:
        return None
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip()
    if text == "":
        return None
    if text in ("1", "0"):
        return text == "1"
    raise DataError(f"{where}: truth must be 0, 1 or empty, got {raw!r}")


def _row_to_forecast(row: dict, where: str) -> Forecast:
    for name in ("judge", "event", "prob"):
        if row.get(name) in (None, ""):
            raise DataError(f"{where}: missing {name}")
    try:
        prob = float(row["prob"])
    except (TypeError, ValueError):
        raise DataError(f"{where}: probability {row['prob']!r} is not a number") from None
    try:
        return Forecast(str(row["judge"]), str(row["event"]), prob, _parse_truth(row.get("truth"), where))
    except CapError as exc:
        raise DataError(f"{where}: {exc}") from exc


def parse_rows(stream: TextIO, fmt: str = "csv") -> list[Forecast]:
    """Read forecasts from an open text stream; errors name the offending line."""
    forecasts = []
    if fmt == "jsonl":
        for n, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {n}: invalid JSON ({exc.msg})") from None
            if not isinstance(row, dict):
                raise DataError(f"line {n}: expected a JSON object")
            forecasts.append(_row_to_forecast(row, f"line {n}"))
        return forecasts

    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        return forecasts
    missing = {"judge", "event", "prob"} - {f.strip() for f in reader.fieldnames}
    if missing:
        raise DataError(f"header lacks column(s): {', '.join(sorted(missing))}")
    for row in reader:
        row = {(k or "").strip(): v for k, v in row.items()}
        # line 1 is the header
        forecasts.append(_row_to_forecast(row, f"row {reader.line_num}"))
    return forecasts


def _format_of(path: Path) -> str:
    return "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"


def read_forecasts(path: str | Path) -> list[Forecast]:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        return parse_rows(fh, _format_of(path))


def _truth_field(t: bool | None) -> str:
    return "" if t is None else ("1" if t else "0")


def dump_rows(forecasts: Iterable[Forecast], stream: TextIO, fmt: str = "csv") -> None:
    if fmt == "jsonl":
        for f in forecasts:
            stream.write(json.dumps({"judge": f.judge, "event": to_text(f.event),
                                     "prob": f.p_hat, "truth": None if f.truth is None else int(f.truth)}))
            stream.write("\n")
        return
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(FIELDS)
    for f in forecasts:
        writer.writerow([f.judge, to_text(f.event), format_prob(f.p_hat), _truth_field(f.truth)])


def write_forecasts(path: str | Path, forecasts: Iterable[Forecast]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        dump_rows(forecasts, fh, _format_of(path))


def write_pooled(stream: TextIO, pooled: PooledForecastSet, values) -> None:
    """Aggregate output: one row per pooled event."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("event", "prob", "input", "weight"))
    for entry, p in zip(pooled.entries, values):
        writer.writerow([to_text(entry.event), format_prob(p), format_prob(entry.q_hat), entry.weight])
