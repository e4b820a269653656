"""Seeded synthetic inputs: networks, fire-potential seasons, load and solar shapes.

Nothing here is meant to resemble a particular real system beyond its element
counts; the generators exist so that every pipeline stage can be exercised
and tested without external data.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .network import Network, haversine_miles, network_from_dict, network_to_dict, write_profile_csv
from .risk import RiskRaster, write_raster_csv

# element counts (buses, lines, generators) of the two test systems
SIZES = {"rts": (73, 120, 99), "wecc": (240, 448, 143)}

# a generic summer-weekday load shape, peak 1.0 in late afternoon
DAILY_SHAPE = np.array(
    [0.62, 0.58, 0.56, 0.55, 0.56, 0.60, 0.67, 0.73, 0.78, 0.82, 0.86, 0.90,
     0.93, 0.96, 0.98, 1.00, 1.00, 0.98, 0.95, 0.90, 0.84, 0.77, 0.70, 0.65]
)

# p.u. output per 1-kW unit on a clear day (1 kW = 1e-5 p.u. on a 100 MVA base)
SOLAR_SHAPE = 1e-5 * np.array(
    [0, 0, 0, 0, 0, 0.02, 0.12, 0.30, 0.48, 0.63, 0.74, 0.80,
     0.82, 0.80, 0.74, 0.63, 0.48, 0.30, 0.12, 0.02, 0, 0, 0, 0]
)


def four_bus() -> Network:
    """The committed four-bus example network."""
    text = resources.files("pspsplan.data").joinpath("four_bus.json").read_text()
    return network_from_dict(json.loads(text))


def random_network(
    n_buses: int,
    n_lines: int,
    n_generators: int,
    seed: int | np.random.Generator = 0,
    box: tuple[float, float, float, float] = (38.0, -122.5, 40.0, -120.0),
    load_range: tuple[float, float] = (0.05, 0.6),
    capacity_margin: float = 1.3,
    switchable: bool = True,
) -> Network:
    """Connected random network with buses scattered in a lat/lon box.

    A random spanning tree guarantees connectivity; remaining lines join
    nearby bus pairs.  Total generation capacity is ``capacity_margin`` times
    total nominal demand.
    """
    if n_lines < n_buses - 1:
        raise ValueError("need at least n_buses - 1 lines for a connected network")
    if n_lines > n_buses * (n_buses - 1) // 2:
        raise ValueError("too many lines for a simple graph")
    rng = np.random.default_rng(seed)
    south, west, north, east = box
    lat = rng.uniform(south, north, n_buses)
    lon = rng.uniform(west, east, n_buses)
    demand = rng.uniform(*load_range, n_buses)

    pairs: set[tuple[int, int]] = set()
    order = rng.permutation(n_buses)
    for k in range(1, n_buses):
        a, b = int(order[k]), int(order[rng.integers(0, k)])
        pairs.add((min(a, b), max(a, b)))
    dist = np.hypot(lat[:, None] - lat[None, :], (lon[:, None] - lon[None, :]) * math.cos(math.radians(lat.mean())))
    candidates = sorted(
        ((dist[i, j], i, j) for i in range(n_buses) for j in range(i + 1, n_buses) if (i, j) not in pairs),
        key=lambda t: t[0],
    )
    # favour short links but keep some randomness
    pool = candidates[: max(4 * (n_lines - len(pairs)), 1)]
    picks = rng.permutation(len(pool))
    for p in picks:
        if len(pairs) >= n_lines:
            break
        pairs.add((pool[p][1], pool[p][2]))
    for _, i, j in candidates:
        if len(pairs) >= n_lines:
            break
        pairs.add((i, j))

    gen_buses = rng.choice(n_buses, size=n_generators, replace=n_generators > n_buses)
    weights = rng.uniform(0.5, 1.5, n_generators)
    capacity = capacity_margin * demand.sum() * weights / weights.sum()

    data = {
        "name": f"synthetic_{n_buses}",
        "base_mva": 100,
        "buses": [
            {"id": f"B{i + 1}", "nominal_demand": round(float(demand[i]), 4),
             "latitude": round(float(lat[i]), 5), "longitude": round(float(lon[i]), 5)}
            for i in range(n_buses)
        ],
        "lines": [
            {
                "id": f"L{k + 1}",
                "from_bus": f"B{i + 1}",
                "to_bus": f"B{j + 1}",
                "susceptance": round(float(-rng.uniform(5, 20)), 3),
                "flow_limit": round(float(rng.uniform(0.4, 1.5)), 3),
                "angle_min": -0.5,
                "angle_max": 0.5,
                # routes run a little longer than the straight line between terminals
                "length": round(1.1 * haversine_miles((lat[i], lon[i]), (lat[j], lon[j])) + 0.1, 3),
                "switchable": switchable,
                "hardenable": True,
            }
            for k, (i, j) in enumerate(sorted(pairs))
        ],
        "generators": [
            {"id": f"G{g + 1}", "bus": f"B{int(gen_buses[g]) + 1}", "p_max": round(float(capacity[g]), 4)}
            for g in range(n_generators)
        ],
    }
    return network_from_dict(data)


def size_analog(name: str, seed: int = 0) -> Network:
    """Synthetic network with the element counts of a named test system."""
    n, l, g = SIZES[name.lower()]
    return random_network(n, l, g, seed)


def season_dates(years: Iterable[int], start=(6, 1), end=(10, 31)) -> list[dt.date]:
    out = []
    for y in years:
        d = dt.date(y, *start)
        while d <= dt.date(y, *end):
            out.append(d)
            d += dt.timedelta(days=1)
    return out


def synthetic_rasters(
    network: Network,
    dates: Sequence[dt.date],
    seed: int | np.random.Generator = 0,
    cells: int = 12,
    hot_fraction: float = 0.25,
) -> dict[dt.date, RiskRaster]:
    """Daily fire-potential grids covering the network with drifting hotspots.

    About ``hot_fraction`` of days carry a strong hotspot; the rest stay near
    background levels, which gives a heavy upper tail in the daily totals.
    """
    rng = np.random.default_rng(seed)
    lats = [b.latitude for b in network.buses if b.latitude is not None]
    lons = [b.longitude for b in network.buses if b.longitude is not None]
    for l in network.lines:
        for p in l.geometry or ():
            lats.append(p[0])
            lons.append(p[1])
    if not lats:
        raise ValueError("network has no coordinates to lay a raster over")
    pad = 0.05
    glat = np.linspace(min(lats) - pad, max(lats) + pad, cells)
    glon = np.linspace(min(lons) - pad, max(lons) + pad, cells)
    LA, LO = np.meshgrid(glat, glon, indexing="ij")
    span = max(glat[-1] - glat[0], glon[-1] - glon[0])
    out = {}
    for d in dates:
        base = rng.uniform(5, 25) + rng.normal(0, 3, LA.shape)
        if rng.random() < hot_fraction:
            c_lat, c_lon = rng.uniform(glat[0], glat[-1]), rng.uniform(glon[0], glon[-1])
            width = span * rng.uniform(0.2, 0.6)
            peak = rng.uniform(60, 140)
            base = base + peak * np.exp(-((LA - c_lat) ** 2 + (LO - c_lon) ** 2) / (2 * width**2))
        out[d] = RiskRaster(glat, glon, np.clip(base, 0, 150))
    return out


def load_profiles(dates: Sequence[dt.date], seed: int | np.random.Generator = 0, noise: float = 0.02) -> dict[dt.date, np.ndarray]:
    """Hourly scaling per day: daily shape, weekend dip, seasonal swell, small noise."""
    rng = np.random.default_rng(seed)
    out = {}
    for d in dates:
        weekly = 0.9 if d.weekday() >= 5 else 1.0
        seasonal = 0.9 + 0.1 * math.sin(math.pi * (d.timetuple().tm_yday - 152) / 153)
        shape = DAILY_SHAPE * weekly * seasonal * (1 + rng.normal(0, noise, 24))
        out[d] = np.round(np.clip(shape, 0, None), 6)
    return out


def write_case(
    directory: str | Path,
    network: Network | None = None,
    planning_years: Sequence[int] = (2019, 2020),
    evaluation_year: int = 2021,
    seed: int = 0,
    window: tuple[tuple[int, int], tuple[int, int]] = ((6, 1), (10, 31)),
    solar: bool = True,
) -> Path:
    """Write a complete input set (network, raster risk, load profile, solar, config)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    network = network or four_bus()
    rng = np.random.default_rng(seed)
    dates = season_dates([*planning_years, evaluation_year], *window)
    with open(directory / "network.json", "w") as fh:
        json.dump(network_to_dict(network), fh, indent=1)
        fh.write("\n")
    write_raster_csv(synthetic_rasters(network, dates, rng), directory / "risk_raster.csv")
    write_profile_csv(load_profiles(dates, rng), directory / "load_profile.csv")
    config = {
        "network": "network.json",
        "risk": {"raster": "risk_raster.csv"},
        "load_profile": "load_profile.csv",
        "planning_years": list(planning_years),
        "evaluation_year": evaluation_year,
        "season": {"start": list(window[0]), "end": list(window[1])},
        "alpha": 0.5,
        "budget": 100,
        "scenario": 1,
        "seed": seed,
        "output_dir": "out",
    }
    if solar:
        with open(directory / "solar.csv", "w") as fh:
            fh.write("bus,hour,value\n")
            for b in network.buses:
                for h, v in enumerate(SOLAR_SHAPE):
                    fh.write(f"{b.id},{h},{v:.9g}\n")
        config["solar"] = "solar.csv"
    with open(directory / "config.json", "w") as fh:
        json.dump(config, fh, indent=1)
        fh.write("\n")
    return directory / "config.json"
