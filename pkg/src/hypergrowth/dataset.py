"""Historical GDP tables: parsing, normalisation and windowing.

Two layouts are understood:

* the *long* layout, one observation per line under the header
  ``region,year,gdp``;
* the Maddison *horizontal* layout, where the first row carries year labels
  and every following row is a region followed by its values.

GDP values are billions of 1990 International Geary-Khamis dollars. Gaps in
the source are represented by the absence of an observation; nothing is ever
interpolated.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType

import numpy as np

LONG_HEADER = ("region", "year", "gdp")


class DataError(ValueError):
    """Base class for problems found in input data."""


class MalformedHeader(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, line: int, detail: str) -> None:
        self.line = line
        super().__init__(f"line {line}: {detail}")


class BadNumber(DataError):
    def __init__(self, value: str, line: int, column: int | None = None) -> None:
        self.value = value
        self.line = line
        self.column = column
        where = f"row {line}, column {column}" if column is not None else f"line {line}"
        super().__init__(f"{where}: cannot parse {value!r} as a number")


class NonPositiveGdp(DataError):
    def __init__(self, value: float, line: int, column: int | None = None) -> None:
        self.value = value
        self.line = line
        self.column = column
        where = f"row {line}, column {column}" if column is not None else f"line {line}"
        super().__init__(f"{where}: GDP must be positive, got {value!r}")


class DuplicateYear(DataError):
    def __init__(self, region: str, year: float) -> None:
        self.region = region
        self.year = year
        super().__init__(f"duplicate year {_format_number(year)} for region {region!r}")


class DuplicateRegion(DataError):
    def __init__(self, region: str, line: int) -> None:
        self.region = region
        self.line = line
        super().__init__(f"row {line}: region {region!r} appears more than once")


class InvertedWindow(ValueError):
    def __init__(self, start: float, end: float) -> None:
        super().__init__(f"window start {start} is after end {end}")


@dataclass(frozen=True)
class Observation:
    year: float
    gdp: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.year):
            raise ValueError(f"year must be finite, got {self.year!r}")
        if not (math.isfinite(self.gdp) and self.gdp > 0):
            raise ValueError(f"gdp must be finite and positive, got {self.gdp!r}")


@dataclass(frozen=True)
class TimeSeries:
    """Observations for one region, strictly increasing in year.

    An empty series is legal; it is what :func:`window` returns when nothing
    falls inside the requested range.
    """

    region: str
    observations: tuple[Observation, ...] = ()

    def __post_init__(self) -> None:
        obs = tuple(self.observations)
        object.__setattr__(self, "observations", obs)
        for prev, cur in zip(obs, obs[1:]):
            if cur.year <= prev.year:
                if cur.year == prev.year:
                    raise DuplicateYear(self.region, cur.year)
                raise ValueError(
                    f"{self.region}: years must be strictly increasing "
                    f"({prev.year} then {cur.year})"
                )

    @classmethod
    def from_pairs(
        cls, region: str, years: Iterable[float], gdp: Iterable[float]
    ) -> TimeSeries:
        """Build a series from unordered ``(year, gdp)`` columns."""
        pairs = sorted(zip((float(y) for y in years), (float(g) for g in gdp)))
        return cls(region, tuple(Observation(y, g) for y, g in pairs))

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self.observations)

    def __getitem__(self, i: int) -> Observation:
        return self.observations[i]

    @property
    def years(self) -> np.ndarray:
        return np.array([o.year for o in self.observations], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([o.gdp for o in self.observations], dtype=float)

    @property
    def span(self) -> tuple[float, float]:
        if not self.observations:
            raise ValueError(f"{self.region}: empty series has no span")
        return self.observations[0].year, self.observations[-1].year

    def map(self, year=None, gdp=None) -> TimeSeries:
        """Return a copy with ``year`` and/or ``gdp`` transformed elementwise."""
        fy = year or (lambda v: v)
        fg = gdp or (lambda v: v)
        return TimeSeries.from_pairs(
            self.region, [fy(o.year) for o in self], [fg(o.gdp) for o in self]
        )


@dataclass(frozen=True)
class RegionDataset:
    series: Mapping[str, TimeSeries]
    source: str = ""

    def __post_init__(self) -> None:
        items = dict(self.series)
        for label, s in items.items():
            if s.region != label:
                raise ValueError(f"series keyed {label!r} is labelled {s.region!r}")
        object.__setattr__(self, "series", MappingProxyType(items))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RegionDataset):
            return NotImplemented
        return self.source == other.source and dict(self.series) == dict(other.series)

    def __hash__(self) -> int:
        return hash((self.source, tuple(self.series.items())))

    def __getitem__(self, region: str) -> TimeSeries:
        return self.series[region]

    def __contains__(self, region: object) -> bool:
        return region in self.series

    def __len__(self) -> int:
        return len(self.series)

    @property
    def regions(self) -> list[str]:
        return list(self.series)

    def flatten(self) -> list[tuple[str, float, float]]:
        """All observations as ``(region, year, gdp)`` sorted by region then year."""
        rows = [(r, o.year, o.gdp) for r, s in self.series.items() for o in s]
        return sorted(rows)


def _format_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _parse_number(cell: str) -> float | None:
    """Parse a numeric cell; ``None`` for an empty cell.

    Thousands separators (``1,234.5``) are accepted; they can only reach us
    inside quoted cells.
    """
    text = cell.strip()
    if not text:
        return None
    value = float(text.replace(",", ""))
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def _reader(text: str) -> Iterator[tuple[int, list[str]]]:
    if text.startswith("\ufeff"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text, newline=""))
    for row in reader:
        yield reader.line_num, row


def parse_long_csv(text: str, source: str = "") -> RegionDataset:
    """Parse the long ``region,year,gdp`` layout."""
    rows = _reader(text)
    try:
        line, header = next(rows)
    except StopIteration:
        raise MalformedHeader("empty input; expected header 'region,year,gdp'") from None
    if tuple(header) != LONG_HEADER:
        raise MalformedHeader(f"expected header 'region,year,gdp', got {','.join(header)!r}")

    grouped: dict[str, dict[float, float]] = {}
    for line, row in rows:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise MalformedRow(line, f"expected 3 fields, got {len(row)}")
        region, year_cell, gdp_cell = row
        try:
            year = _parse_number(year_cell)
        except ValueError:
            raise BadNumber(year_cell, line) from None
        try:
            gdp = _parse_number(gdp_cell)
        except ValueError:
            raise BadNumber(gdp_cell, line) from None
        if year is None:
            raise BadNumber(year_cell, line)
        if gdp is None:
            raise BadNumber(gdp_cell, line)
        if gdp <= 0:
            raise NonPositiveGdp(gdp, line)
        per_region = grouped.setdefault(region, {})
        if year in per_region:
            raise DuplicateYear(region, year)
        per_region[year] = gdp

    series = {
        r: TimeSeries.from_pairs(r, obs.keys(), obs.values()) for r, obs in grouped.items()
    }
    return RegionDataset(series, source)


def parse_maddison_horizontal(text: str, source: str = "", scale: float = 1.0) -> RegionDataset:
    """Parse the horizontal layout: header row of years, one row per region.

    ``scale`` multiplies every value, e.g. ``1e-3`` to turn the millions of the
    original workbook into billions. Rows without any numeric cell (section
    titles, notes) are skipped.
    """
    rows = _reader(text)
    try:
        header_line, header = next(rows)
    except StopIteration:
        raise MalformedHeader("empty input; expected a header row of years") from None

    years: list[float | None] = []
    for col, cell in enumerate(header[1:], start=2):
        try:
            years.append(_parse_number(cell))
        except ValueError:
            raise MalformedHeader(f"column {col}: {cell!r} is not a year label") from None
    if not any(y is not None for y in years):
        raise MalformedHeader("header row carries no year labels")
    seen_years = [y for y in years if y is not None]
    if len(set(seen_years)) != len(seen_years):
        raise MalformedHeader("header row repeats a year label")

    series: dict[str, TimeSeries] = {}
    for line, row in rows:
        if not row or all(not c.strip() for c in row):
            continue
        label = row[0].strip()
        pairs: list[tuple[float, float]] = []
        for col, cell in enumerate(row[1:], start=2):
            try:
                value = _parse_number(cell)
            except ValueError:
                raise BadNumber(cell, line, col) from None
            if value is None:
                continue
            year = years[col - 2] if col - 2 < len(years) else None
            if year is None:
                raise MalformedRow(line, f"value in column {col} has no year label")
            value *= scale
            if value <= 0:
                raise NonPositiveGdp(value, line, col)
            pairs.append((year, value))
        if not pairs:
            continue
        if not label:
            raise MalformedRow(line, "values without a region label")
        if label in series:
            raise DuplicateRegion(label, line)
        series[label] = TimeSeries.from_pairs(label, *zip(*pairs))
    return RegionDataset(series, source)


def window(series: TimeSeries, start: float, end: float) -> TimeSeries:
    """Observations with ``start <= year <= end``; possibly empty."""
    if start > end:
        raise InvertedWindow(start, end)
    return TimeSeries(series.region, tuple(o for o in series if start <= o.year <= end))


def to_long_csv(dataset: RegionDataset) -> str:
    """Serialise to the long layout (LF line endings, shortest round-trip floats)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LONG_HEADER)
    for region, s in dataset.series.items():
        for o in s:
            writer.writerow((region, _format_number(o.year), repr(float(o.gdp))))
    return buf.getvalue()


def content_source(path: str | Path, data: bytes) -> str:
    """Provenance string: path plus a short content hash."""
    return f"{path}#sha256={hashlib.sha256(data).hexdigest()[:16]}"


def load_dataset(path: str | Path, fmt: str = "long", scale: float = 1.0) -> RegionDataset:
    data = Path(path).read_bytes()
    text = data.decode("utf-8")
    source = content_source(path, data)
    if fmt == "long":
        ds = parse_long_csv(text, source)
        if scale != 1.0:
            ds = RegionDataset(
                {r: s.map(gdp=lambda g: g * scale) for r, s in ds.series.items()}, source
            )
        return ds
    if fmt == "maddison":
        return parse_maddison_horizontal(text, source, scale=scale)
    raise ValueError(f"unknown format {fmt!r}; expected 'long' or 'maddison'")


def bundled_benchmarks() -> RegionDataset:
    """The small regional benchmark-year table shipped with the package."""
    path = Path(__file__).parent / "data" / "maddison_benchmarks.csv"
    data = path.read_bytes()
    return parse_long_csv(data.decode("utf-8"), content_source(path.name, data))
