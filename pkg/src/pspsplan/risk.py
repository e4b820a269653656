"""Per-line wildfire risk: raster integration, daily risk tables, planning profile
and PSPS trigger threshold."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .network import Line, Network, haversine_miles

WFPI_MAX = 150.0
DEFAULT_STEP_MILES = 0.5
SEASON_START = (6, 1)
SEASON_END = (10, 31)


class RiskDataError(ValueError):
    """Missing, duplicated or out-of-range risk input."""


class CoverageError(RiskDataError):
    """A line sample point falls outside the raster."""


@dataclass(frozen=True)
class RiskRaster:
    """One day of gridded fire-potential values on a regular lat/lon grid.

    ``values[i, j]`` belongs to the cell centred on ``(lats[i], lons[j])``.
    Lookup is nearest-cell; points farther than half a cell beyond the outer
    centres are outside coverage.
    """

    lats: np.ndarray
    lons: np.ndarray
    values: np.ndarray
    cell_size: tuple[float, float] | None = None

    def __post_init__(self):
        lats = np.asarray(self.lats, dtype=float)
        lons = np.asarray(self.lons, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(lats), len(lons)):
            raise RiskDataError(f"raster values shape {values.shape} does not match grid {len(lats)}x{len(lons)}")
        if np.any(values < 0) or np.any(values > WFPI_MAX):
            raise RiskDataError(f"raster values must lie in [0, {WFPI_MAX:g}]")
        order_lat, order_lon = np.argsort(lats), np.argsort(lons)
        lats, lons = lats[order_lat], lons[order_lon]
        values = values[np.ix_(order_lat, order_lon)]
        cell = self.cell_size
        if cell is None:
            dlat = float(np.min(np.diff(lats))) if len(lats) > 1 else None
            dlon = float(np.min(np.diff(lons))) if len(lons) > 1 else None
            if dlat is None and dlon is None:
                raise RiskDataError("single-cell raster needs an explicit cell_size")
            cell = (dlat if dlat is not None else dlon, dlon if dlon is not None else dlat)
        object.__setattr__(self, "lats", lats)
        object.__setattr__(self, "lons", lons)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cell_size", (float(cell[0]), float(cell[1])))

    @classmethod
    def uniform(cls, value: float, south: float, west: float, north: float, east: float, n: int = 4):
        lats = np.linspace(south, north, n)
        lons = np.linspace(west, east, n)
        return cls(lats, lons, np.full((n, n), float(value)))

    def scaled(self, factor: float) -> "RiskRaster":
        return RiskRaster(self.lats, self.lons, self.values * factor, self.cell_size)

    def covers(self, lat: float, lon: float) -> bool:
        hl, hn = self.cell_size[0] / 2, self.cell_size[1] / 2
        eps = 1e-12
        return (
            self.lats[0] - hl - eps <= lat <= self.lats[-1] + hl + eps
            and self.lons[0] - hn - eps <= lon <= self.lons[-1] + hn + eps
        )

    def value_at(self, lat: float, lon: float) -> float:
        i = int(np.argmin(np.abs(self.lats - lat)))
        j = int(np.argmin(np.abs(self.lons - lon)))
        return float(self.values[i, j])


def integrate_line_risk(
    raster: RiskRaster,
    line: Line,
    step: float = DEFAULT_STEP_MILES,
    path: Sequence[tuple[float, float]] | None = None,
) -> float:
    """Integrate raster values along a line with the midpoint rule.

    Each polyline segment is cut into ``ceil(len / step)`` equal pieces and the
    raster is sampled at piece midpoints.  Piece lengths are rescaled so they
    add up to ``line.length``, which is the authoritative route length.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    pts = path if path is not None else line.geometry
    if not pts or len(pts) < 2:
        raise RiskDataError(f"line {line.id!r} has no geometry to integrate along")
    seg_len = [haversine_miles(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    geo_total = sum(seg_len)
    scale = line.length / geo_total if geo_total > 0 else 0.0
    risk = 0.0
    for (a, b), seg in zip(zip(pts[:-1], pts[1:]), seg_len):
        if seg == 0:
            continue
        pieces = max(1, math.ceil(seg * scale / step - 1e-9))
        for k in range(pieces):
            f = (k + 0.5) / pieces
            lat = a[0] + f * (b[0] - a[0])
            lon = a[1] + f * (b[1] - a[1])
            if not raster.covers(lat, lon):
                raise CoverageError(f"line {line.id!r}: sample point ({lat:.5f}, {lon:.5f}) is outside the raster")
            risk += raster.value_at(lat, lon) * seg * scale / pieces
    return risk


@dataclass(frozen=True)
class RiskTable:
    """Risk per line and day; ``r[l, d]`` is unitless and non-negative."""

    line_ids: tuple[str, ...]
    dates: tuple[dt.date, ...]
    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if r.shape != (len(self.line_ids), len(self.dates)):
            raise RiskDataError(f"risk matrix shape {r.shape} does not match {len(self.line_ids)} lines x {len(self.dates)} days")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise RiskDataError("risk values must be finite and non-negative")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "line_ids", tuple(self.line_ids))
        object.__setattr__(self, "dates", tuple(self.dates))

    @property
    def daily_total(self) -> np.ndarray:
        return self.r.sum(axis=0)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def day(self, date: dt.date) -> np.ndarray:
        return self.r[:, self.dates.index(date)]

    def select(self, keep: Iterable[dt.date] | None = None, years: Iterable[int] | None = None) -> "RiskTable":
        if years is not None:
            ys = set(years)
            idx = [i for i, d in enumerate(self.dates) if d.year in ys]
        else:
            wanted = set(keep or ())
            idx = [i for i, d in enumerate(self.dates) if d in wanted]
        return RiskTable(self.line_ids, tuple(self.dates[i] for i in idx), self.r[:, idx])

    def season(self, start: tuple[int, int] = SEASON_START, end: tuple[int, int] = SEASON_END) -> "RiskTable":
        """Keep only days whose (month, day) lies in the inclusive window."""
        keep = [d for d in self.dates if start <= (d.month, d.day) <= end]
        return self.select(keep)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("line_id,date,risk\n")
            for i, lid in enumerate(self.line_ids):
                for j, d in enumerate(self.dates):
                    fh.write(f"{lid},{d.isoformat()},{self.r[i, j]:.9g}\n")


def table_from_records(records: Iterable[tuple[str, dt.date, float]], network: Network | None = None) -> RiskTable:
    """Assemble a table from ``(line_id, date, risk)`` triples, demanding a full matrix."""
    cells: dict[tuple[str, dt.date], float] = {}
    line_order: list[str] = []
    seen_lines: set[str] = set()
    dates: set[dt.date] = set()
    for lid, date, value in records:
        key = (lid, date)
        if key in cells:
            raise RiskDataError(f"duplicate risk entry for line {lid!r} on {date}")
        if value < 0 or not math.isfinite(value):
            raise RiskDataError(f"invalid risk {value!r} for line {lid!r} on {date}")
        cells[key] = value
        dates.add(date)
        if lid not in seen_lines:
            seen_lines.add(lid)
            line_order.append(lid)
    if network is not None:
        unknown = seen_lines - set(network.line_ids)
        if unknown:
            raise RiskDataError(f"risk data for unknown lines: {sorted(unknown)}")
        line_order = list(network.line_ids)
    days = sorted(dates)
    r = np.empty((len(line_order), len(days)))
    for i, lid in enumerate(line_order):
        for j, d in enumerate(days):
            try:
                r[i, j] = cells[(lid, d)]
            except KeyError:
                raise RiskDataError(f"missing risk entry for line {lid!r} on {d}") from None
    return RiskTable(tuple(line_order), tuple(days), r)


def _csv_rows(path: str | Path):
    with open(path, newline="") as fh:
        yield from enumerate(csv.DictReader(row for row in fh if not row.startswith("#")), start=2)


def load_risk_csv(path: str | Path, network: Network | None = None) -> RiskTable:
    """Read a per-line ``line_id,date,risk`` file."""

    def records():
        for k, row in _csv_rows(path):
            try:
                yield row["line_id"].strip(), dt.date.fromisoformat(row["date"].strip()), float(row["risk"])
            except (KeyError, ValueError, AttributeError):
                raise RiskDataError(f"{path}:{k}: expected columns line_id,date,risk") from None

    return table_from_records(records(), network)


def load_raster_csv(path: str | Path) -> dict[dt.date, RiskRaster]:
    """Read ``date,lat,lon,value`` points; each day must form a complete regular grid."""
    pts: dict[dt.date, dict[tuple[float, float], float]] = {}
    for k, row in _csv_rows(path):
        try:
            day = dt.date.fromisoformat(row["date"].strip())
            lat, lon, val = float(row["lat"]), float(row["lon"]), float(row["value"])
        except (KeyError, ValueError, AttributeError):
            raise RiskDataError(f"{path}:{k}: expected columns date,lat,lon,value") from None
        cell = pts.setdefault(day, {})
        if (lat, lon) in cell:
            raise RiskDataError(f"{path}:{k}: duplicate raster cell ({lat}, {lon}) on {day}")
        cell[(lat, lon)] = val
    out = {}
    for day in sorted(pts):
        cells = pts[day]
        lats = sorted({p[0] for p in cells})
        lons = sorted({p[1] for p in cells})
        if len(cells) != len(lats) * len(lons):
            raise RiskDataError(f"{path}: raster for {day} is not a complete regular grid")
        values = np.array([[cells[(a, o)] for o in lons] for a in lats])
        out[day] = RiskRaster(np.array(lats), np.array(lons), values)
    return out


def write_raster_csv(rasters: Mapping[dt.date, RiskRaster], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("date,lat,lon,value\n")
        for day in sorted(rasters):
            ras = rasters[day]
            for i, lat in enumerate(ras.lats):
                for j, lon in enumerate(ras.lons):
                    fh.write(f"{day.isoformat()},{lat:.9g},{lon:.9g},{ras.values[i, j]:.9g}\n")


def build_risk_table(
    source: Mapping[dt.date, RiskRaster] | str | Path,
    network: Network,
    step: float = DEFAULT_STEP_MILES,
) -> RiskTable:
    """Risk table from daily rasters (integrated along every line) or a per-line CSV path."""
    if isinstance(source, (str, Path)):
        return load_risk_csv(source, network)
    days = sorted(source)
    r = np.zeros((network.n_lines, len(days)))
    for line in network.lines:
        path = network.line_path(line)
        if path is None:
            raise RiskDataError(f"line {line.id!r} has no geometry and its buses have no coordinates")
        for j, day in enumerate(days):
            r[line.index, j] = integrate_line_risk(source[day], line, step, path)
    return RiskTable(network.line_ids, tuple(days), r)


@dataclass(frozen=True)
class RiskProfile:
    """Single-day per-line risk used for planning or for one operating day."""

    r: np.ndarray
    line_ids: tuple[str, ...] = ()
    fraction: float | None = None
    source_days: int = 0

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if np.any(r < 0):
            raise RiskDataError("risk values must be non-negative")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def total(self) -> float:
        return float(self.r.sum())


def representative_profile(table: RiskTable, fraction: float = 0.10) -> RiskProfile:
    """Per line, the mean of its ``k = max(1, ceil(fraction * days))`` largest daily risks."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    n = table.n_days
    if n == 0:
        raise RiskDataError("risk table has no days")
    k = max(1, math.ceil(fraction * n - 1e-12))
    top = -np.sort(-table.r, axis=1)[:, :k]
    return RiskProfile(top.mean(axis=1), table.line_ids, fraction, n)


def psps_threshold(daily_totals: Sequence[float], percentile: float = 0.75) -> float:
    """Nearest-rank percentile: the ``ceil(p * n)``-th smallest value (1-based)."""
    vals = np.sort(np.asarray(daily_totals, dtype=float))
    n = len(vals)
    if n == 0:
        raise ValueError("no daily totals to take a percentile of")
    if not 0 < percentile <= 1:
        raise ValueError("percentile must lie in (0, 1]")
    rank = max(1, math.ceil(percentile * n - 1e-12))
    return float(vals[rank - 1])


@dataclass(frozen=True)
class PspsDay:
    index: int  # column in the risk table
    date: dt.date
    total_risk: float
    follows_psps: bool  # the previous calendar day was also a PSPS day


def psps_days(table: RiskTable, threshold: float) -> list[PspsDay]:
    totals = table.daily_total
    out: list[PspsDay] = []
    for j, date in enumerate(table.dates):
        if totals[j] >= threshold:
            prev = out[-1].date if out else None
            follows = prev is not None and (date - prev).days == 1
            out.append(PspsDay(j, date, float(totals[j]), follows))
    return out
