"""Daily time-series container, calendar helpers and CSV ingestion."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

CSV_HEADER = ("date", "temp_c", "precip_mm", "snow_cm")

#: Record fields that carry measurements (column order matches CSV_HEADER[1:]).
FIELD_NAMES = ("temperature", "precipitation", "snow_depth")


@dataclass(frozen=True)
class DailyRecord:
    """One day of observations; any measurement may be missing (None).

    temperature is the daily mean in deg C, precipitation the 24 h total in
    mm (>= 0), snow_depth in cm (>= 0).
    """

    date: dt.date
    temperature: float | None = None
    precipitation: float | None = None
    snow_depth: float | None = None

    def __post_init__(self) -> None:
        if self.precipitation is not None and self.precipitation < 0:
            raise ValueError(f"negative precipitation on {self.date}: {self.precipitation}")
        if self.snow_depth is not None and self.snow_depth < 0:
            raise ValueError(f"negative snow depth on {self.date}: {self.snow_depth}")

    def is_complete(self, fields: Iterable[str] = FIELD_NAMES) -> bool:
        return all(getattr(self, f) is not None for f in fields)


@dataclass(frozen=True)
class Dataset:
    """Gap-free daily series: consecutive dates, missing days as all-None rows."""

    records: tuple[DailyRecord, ...]
    station_label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        if len(self.records) < 2:
            raise ValueError("dataset needs at least two days")
        for prev, cur in zip(self.records, self.records[1:]):
            gap = (cur.date - prev.date).days
            if gap != 1:
                raise ValueError(
                    f"dates must advance by exactly one day, got {prev.date} -> {cur.date}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DailyRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> DailyRecord:
        return self.records[i]

    @property
    def start_date(self) -> dt.date:
        return self.records[0].date

    def column(self, field: str) -> list[float | None]:
        return [getattr(r, field) for r in self.records]


def season_day(date: dt.date) -> int:
    """Ordinal day of the calendar year: Jan 1 -> 1, Dec 31 -> 365 or 366."""
    return date.timetuple().tm_yday


def contiguous_windows(
    data: Dataset, required: Iterable[str], min_lag: int = 0
) -> list[tuple[int, int]]:
    """Maximal index ranges [start, stop) where all `required` fields are present.

    Runs of length <= min_lag are dropped: they cannot supply a single
    likelihood term once the first min_lag days are reserved for lags.
    """
    if min_lag < 0:
        raise ValueError("min_lag must be >= 0")
    required = tuple(required)
    windows: list[tuple[int, int]] = []
    start = None
    for i, rec in enumerate(data.records):
        if rec.is_complete(required):
            if start is None:
                start = i
        elif start is not None:
            windows.append((start, i))
            start = None
    if start is not None:
        windows.append((start, len(data)))
    return [(a, b) for a, b in windows if b - a > min_lag]


def _parse_float(text: str, line_no: int, column: str) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"row {line_no}: non-numeric {column} field {text!r}") from None


def load_csv(path: str | Path) -> Dataset:
    """Read a `date,temp_c,precip_mm,snow_cm` CSV into a Dataset.

    Empty fields are missing values; gaps between dates are filled with
    all-missing records. Malformed rows are rejected with their line number.
    """
    path = Path(path)
    rows: list[DailyRecord] = []
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ValueError(f"row {line_no}: expected 4 fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise ValueError(f"row {line_no}: malformed date {row[0]!r}") from None
            try:
                rec = DailyRecord(
                    date=date,
                    temperature=_parse_float(row[1], line_no, "temp_c"),
                    precipitation=_parse_float(row[2], line_no, "precip_mm"),
                    snow_depth=_parse_float(row[3], line_no, "snow_cm"),
                )
            except ValueError as err:
                raise ValueError(f"row {line_no}: {err}") from None
            if rows and rec.date <= rows[-1].date:
                raise ValueError(f"row {line_no}: dates must be strictly increasing")
            if rows:
                day = rows[-1].date
                while (rec.date - day).days > 1:
                    day += dt.timedelta(days=1)
                    rows.append(DailyRecord(date=day))
            rows.append(rec)
    if len(rows) < 2:
        raise ValueError(f"{path}: fewer than two data rows")
    return Dataset(records=tuple(rows), station_label=path.stem)


def _format_value(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_csv(data: Dataset | Sequence[DailyRecord], path: str | Path) -> None:
    """Write records in the load_csv format; floats keep full precision."""
    records = data.records if isinstance(data, Dataset) else data
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(
                [
                    rec.date.isoformat(),
                    _format_value(rec.temperature),
                    _format_value(rec.precipitation),
                    _format_value(rec.snow_depth),
                ]
            )
