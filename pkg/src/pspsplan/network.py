"""Transmission network data model, file loader and hourly demand profiles.

All electrical quantities are per unit on a fixed 100 MVA base.  Susceptance
follows the convention where DC flow from the ``from`` bus to the ``to`` bus is
``-b * (theta_from - theta_to)``, so an ordinary line has ``b < 0``.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

BASE_MVA = 100.0
HOURS_PER_DAY = 24
EARTH_RADIUS_MILES = 3958.8


class NetworkError(ValueError):
    """Schema or validation failure while loading network data."""


class NormalizationError(ValueError):
    """A normalising total (demand or risk) is zero, so fractions are undefined."""


@dataclass(frozen=True)
class Bus:
    id: str
    index: int
    nominal_demand: float
    latitude: float | None = None
    longitude: float | None = None

    @property
    def location(self) -> tuple[float, float] | None:
        if self.latitude is None or self.longitude is None:
            return None
        return (self.latitude, self.longitude)


@dataclass(frozen=True)
class Line:
    id: str
    index: int
    from_bus: int
    to_bus: int
    susceptance: float
    flow_limit: float
    angle_min: float
    angle_max: float
    length: float
    geometry: tuple[tuple[float, float], ...] | None = None
    switchable: bool = True
    hardenable: bool = True


@dataclass(frozen=True)
class Generator:
    id: str
    index: int
    bus: int
    p_max: float
    p_min: float = 0.0


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    name: str = "network"
    base_mva: float = BASE_MVA
    _bus_ids: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_bus_ids", {b.id: b.index for b in self.buses})

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    @property
    def nominal_demand(self) -> np.ndarray:
        return np.array([b.nominal_demand for b in self.buses], dtype=float)

    @property
    def line_ids(self) -> tuple[str, ...]:
        return tuple(l.id for l in self.lines)

    def bus_index(self, bus_id: str) -> int:
        return self._bus_ids[bus_id]

    def line_index(self, line_id: str) -> int:
        for line in self.lines:
            if line.id == line_id:
                return line.index
        raise KeyError(line_id)

    def line_path(self, line: Line) -> tuple[tuple[float, float], ...] | None:
        """Polyline of a line: its geometry, else a straight run between its terminals."""
        if line.geometry:
            return line.geometry
        a = self.buses[line.from_bus].location
        b = self.buses[line.to_bus].location
        if a is None or b is None:
            return None
        return (a, b)

    def neighbours(self, bus: int) -> set[int]:
        out = set()
        for line in self.lines:
            if line.from_bus == bus:
                out.add(line.to_bus)
            elif line.to_bus == bus:
                out.add(line.from_bus)
        return out


def haversine_miles(a: tuple[float, float], b: tuple[float, float]) -> float:
    lat1, lon1, lat2, lon2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_MILES * math.asin(min(1.0, math.sqrt(h)))


def polyline_miles(points: Sequence[tuple[float, float]]) -> float:
    return sum(haversine_miles(points[i], points[i + 1]) for i in range(len(points) - 1))


# -- parsing ------------------------------------------------------------------


def _require(obj: Mapping[str, Any], key: str, what: str) -> Any:
    if key not in obj:
        raise NetworkError(f"{what}: missing field {key!r}")
    return obj[key]


def _number(obj: Mapping[str, Any], key: str, what: str, default: Any = ...) -> float:
    if key not in obj:
        if default is ...:
            raise NetworkError(f"{what}: missing field {key!r}")
        return default
    try:
        value = float(obj[key])
    except (TypeError, ValueError):
        raise NetworkError(f"{what}: field {key!r} is not a number: {obj[key]!r}") from None
    if math.isnan(value):
        raise NetworkError(f"{what}: field {key!r} is NaN")
    return value


def network_from_dict(data: Mapping[str, Any]) -> Network:
    """Build and validate a :class:`Network` from the JSON document layout."""
    base = _number(data, "base_mva", "network", BASE_MVA)
    if base != BASE_MVA:
        raise NetworkError(f"network: base_mva must be {BASE_MVA:g}, got {base:g}")
    raw_buses = data.get("buses") or []
    if not raw_buses:
        raise NetworkError("network: bus list is empty")

    bus_ids: dict[str, int] = {}
    demands: list[float] = []
    coords: list[tuple[float | None, float | None]] = []
    for i, rb in enumerate(raw_buses):
        bid = str(_require(rb, "id", f"bus #{i}"))
        if bid in bus_ids:
            raise NetworkError(f"bus {bid!r}: duplicate id")
        bus_ids[bid] = i
        demands.append(_number(rb, "nominal_demand", f"bus {bid!r}", 0.0))
        lat = rb.get("latitude")
        lon = rb.get("longitude")
        coords.append((None if lat is None else float(lat), None if lon is None else float(lon)))

    def resolve_bus(ref: Any, what: str) -> int:
        if isinstance(ref, bool):
            raise NetworkError(f"{what}: invalid bus reference {ref!r}")
        if isinstance(ref, int):
            if not 0 <= ref < len(raw_buses):
                raise NetworkError(f"{what}: bus index {ref} out of range")
            return ref
        if str(ref) not in bus_ids:
            raise NetworkError(f"{what}: unknown bus {ref!r}")
        return bus_ids[str(ref)]

    # fixed injections (e.g. terminals of HVDC links); disabled ones are dropped
    seen_inj: set[str] = set()
    for k, inj in enumerate(data.get("injections") or []):
        iid = str(_require(inj, "id", f"injection #{k}"))
        if iid in seen_inj:
            raise NetworkError(f"injection {iid!r}: duplicate id")
        seen_inj.add(iid)
        if inj.get("disabled", False):
            continue
        bus = resolve_bus(_require(inj, "bus", f"injection {iid!r}"), f"injection {iid!r}")
        demands[bus] += _number(inj, "demand", f"injection {iid!r}")

    buses = tuple(
        Bus(bid, i, demands[i], coords[i][0], coords[i][1]) for bid, i in bus_ids.items()
    )

    lines = []
    line_ids: set[str] = set()
    for k, rl in enumerate(data.get("lines") or []):
        lid = str(_require(rl, "id", f"line #{k}"))
        what = f"line {lid!r}"
        if lid in line_ids:
            raise NetworkError(f"{what}: duplicate id")
        line_ids.add(lid)
        fb = resolve_bus(_require(rl, "from_bus", what), what)
        tb = resolve_bus(_require(rl, "to_bus", what), what)
        if fb == tb:
            raise NetworkError(f"{what}: from_bus and to_bus are the same bus")
        b = _number(rl, "susceptance", what)
        fmax = _number(rl, "flow_limit", what)
        if fmax <= 0:
            raise NetworkError(f"{what}: flow_limit must be > 0, got {fmax}")
        amin = _number(rl, "angle_min", what)
        amax = _number(rl, "angle_max", what)
        if not amin <= 0 <= amax:
            raise NetworkError(f"{what}: need angle_min <= 0 <= angle_max, got [{amin}, {amax}]")
        geometry = rl.get("geometry")
        if geometry is not None:
            try:
                geometry = tuple((float(p[0]), float(p[1])) for p in geometry)
            except (TypeError, ValueError, IndexError):
                raise NetworkError(f"{what}: geometry must be a list of [lat, lon] pairs") from None
            if len(geometry) < 2:
                raise NetworkError(f"{what}: geometry needs at least two points")
        if "length" in rl and rl["length"] is not None:
            length = _number(rl, "length", what)
        elif geometry is not None:
            length = polyline_miles(geometry)
        else:
            raise NetworkError(f"{what}: length is required when geometry is absent")
        if length <= 0:
            raise NetworkError(f"{what}: length must be > 0, got {length}")
        lines.append(
            Line(
                lid,
                len(lines),
                fb,
                tb,
                b,
                fmax,
                amin,
                amax,
                length,
                geometry,
                bool(rl.get("switchable", True)),
                bool(rl.get("hardenable", True)),
            )
        )

    gens = []
    gen_ids: set[str] = set()
    for k, rg in enumerate(data.get("generators") or []):
        gid = str(_require(rg, "id", f"generator #{k}"))
        what = f"generator {gid!r}"
        if gid in gen_ids:
            raise NetworkError(f"{what}: duplicate id")
        gen_ids.add(gid)
        bus = resolve_bus(_require(rg, "bus", what), what)
        pmax = _number(rg, "p_max", what)
        if pmax < 0:
            raise NetworkError(f"{what}: p_max must be >= 0, got {pmax}")
        # lower limits are clamped to zero so that every instance is feasible
        gens.append(Generator(gid, len(gens), bus, pmax, 0.0))

    return Network(buses, tuple(lines), tuple(gens), str(data.get("name", "network")), base)


def network_to_dict(net: Network) -> dict[str, Any]:
    buses = []
    for b in net.buses:
        rb: dict[str, Any] = {"id": b.id, "nominal_demand": b.nominal_demand}
        if b.latitude is not None:
            rb["latitude"] = b.latitude
        if b.longitude is not None:
            rb["longitude"] = b.longitude
        buses.append(rb)
    lines = []
    for l in net.lines:
        rl: dict[str, Any] = {
            "id": l.id,
            "from_bus": net.buses[l.from_bus].id,
            "to_bus": net.buses[l.to_bus].id,
            "susceptance": l.susceptance,
            "flow_limit": l.flow_limit,
            "angle_min": l.angle_min,
            "angle_max": l.angle_max,
            "length": l.length,
            "switchable": l.switchable,
            "hardenable": l.hardenable,
        }
        if l.geometry is not None:
            rl["geometry"] = [list(p) for p in l.geometry]
        lines.append(rl)
    gens = [
        {"id": g.id, "bus": net.buses[g.bus].id, "p_max": g.p_max, "p_min": g.p_min}
        for g in net.generators
    ]
    return {"name": net.name, "base_mva": net.base_mva, "buses": buses, "lines": lines, "generators": gens}


def load_network(path: str | Path) -> Network:
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"{path}: not valid JSON ({exc})") from None
    return network_from_dict(data)


def save_network(net: Network, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh, indent=1)
        fh.write("\n")


# -- demand -------------------------------------------------------------------


@dataclass(frozen=True)
class DemandSeries:
    """Hourly demand for one day, shape ``(n_buses, hours)`` in p.u."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def hours(self) -> int:
        return self.values.shape[1]

    @property
    def sheddable(self) -> np.ndarray:
        """Demand that may be shed: negative (injecting) demand is never shed."""
        return np.maximum(self.values, 0.0)


def apply_profile(
    network: Network, profile: Sequence[float], label: str = "", hours: int = HOURS_PER_DAY
) -> DemandSeries:
    profile = np.asarray(profile, dtype=float)
    if profile.ndim != 1 or len(profile) != hours:
        raise ValueError(f"profile must have {hours} hourly entries, got shape {profile.shape}")
    if np.any(profile < 0):
        raise ValueError("profile scaling values must be non-negative")
    return DemandSeries(np.outer(network.nominal_demand, profile), label)


def total_demand(series: DemandSeries) -> float:
    total = float(series.sheddable.sum())
    if total <= 0:
        raise NormalizationError("total demand is zero; the load-shed fraction is undefined")
    return total


def load_profile_csv(path: str | Path, hours: int = HOURS_PER_DAY) -> dict[dt.date, np.ndarray]:
    """Read ``day,hour,scale`` rows into one scaling vector per day."""
    rows: dict[dt.date, dict[int, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for k, row in enumerate(reader, start=2):
            try:
                day = dt.date.fromisoformat(row["day"].strip())
                hour = int(row["hour"])
                scale = float(row["scale"])
            except (KeyError, ValueError, AttributeError):
                raise ValueError(f"{path}:{k}: expected columns day,hour,scale") from None
            if not 0 <= hour < hours:
                raise ValueError(f"{path}:{k}: hour {hour} outside 0..{hours - 1}")
            if scale < 0:
                raise ValueError(f"{path}:{k}: negative scale")
            slot = rows.setdefault(day, {})
            if hour in slot:
                raise ValueError(f"{path}:{k}: duplicate entry for {day} hour {hour}")
            slot[hour] = scale
    out = {}
    for day in sorted(rows):
        if len(rows[day]) != hours:
            raise ValueError(f"{path}: day {day} has {len(rows[day])} hourly entries, expected {hours}")
        out[day] = np.array([rows[day][h] for h in range(hours)])
    return out


def write_profile_csv(profiles: Mapping[dt.date, Sequence[float]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("day,hour,scale\n")
        for day in sorted(profiles):
            for h, v in enumerate(profiles[day]):
                fh.write(f"{day.isoformat()},{h},{float(v):.9g}\n")


# -- solar --------------------------------------------------------------------


@dataclass(frozen=True)
class SolarProfile:
    """Available output per installed 1-kW unit, shape ``(n_buses, hours)`` in p.u."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("solar profile must be a bus x hour matrix")
        if np.any(values < 0):
            raise ValueError("solar output must be non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, network: Network, hours: int = HOURS_PER_DAY) -> "SolarProfile":
        return cls(np.zeros((network.n_buses, hours)))

    @classmethod
    def uniform(cls, network: Network, curve: Sequence[float]) -> "SolarProfile":
        return cls(np.tile(np.asarray(curve, dtype=float), (network.n_buses, 1)))


def load_solar_csv(path: str | Path, network: Network, hours: int = HOURS_PER_DAY) -> SolarProfile:
    """Read ``bus,hour,value`` rows; buses without rows get zero output."""
    values = np.zeros((network.n_buses, hours))
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for k, row in enumerate(reader, start=2):
            try:
                bus = network.bus_index(row["bus"].strip())
                hour = int(row["hour"])
                values[bus, hour] = float(row["value"])
            except (KeyError, ValueError, IndexError):
                raise ValueError(f"{path}:{k}: bad solar row {row}") from None
    return SolarProfile(values)
