"""Investment options, unit costs and the eight investment scenarios."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .network import Network

SOLAR_PRICE = 940e-6  # $M per 1-kW-DC unit
BATTERY_PRICE = 20.0  # $M per 100 MWh battery


@dataclass(frozen=True)
class BatterySpec:
    """Per-battery parameters in p.u. (energy) and p.u./hour (rates)."""

    e_min: float = 0.0
    e_max: float = 1.0
    efficiency: float = 0.95
    charge_min: float = 0.0
    charge_max: float = 0.95
    discharge_min: float = 0.0
    discharge_max: float = 0.95
    price: float = BATTERY_PRICE
    initial_charge: float = 1.0  # batteries start full ahead of a PSPS event

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError("battery efficiency must lie in (0, 1]")
        if not 0 <= self.e_min <= self.initial_charge <= self.e_max:
            raise ValueError("need 0 <= e_min <= initial_charge <= e_max")
        if self.price < 0:
            raise ValueError("battery price must be >= 0")


class Hardening(str, enum.Enum):
    UNDERGROUND = "underground"
    COVERED = "covered"
    VEGETATION = "vegetation"

    @property
    def beta(self) -> float:
        return _HARDENING[self][0]

    @property
    def price_per_mile(self) -> float:
        return _HARDENING[self][1]


# risk reduction, $M per mile
_HARDENING = {
    Hardening.UNDERGROUND: (1.0, 3.0),
    Hardening.COVERED: (0.5, 0.5),
    Hardening.VEGETATION: (0.25, 0.01),
}


@dataclass(frozen=True)
class Scenario:
    id: int
    batteries: bool
    solar: bool
    hardening: Hardening | None

    @property
    def label(self) -> str:
        parts = []
        if self.batteries:
            parts.append("batteries")
        if self.solar:
            parts.append("solar PV")
        if self.hardening is not None:
            parts.append(self.hardening.value)
        return ", ".join(parts)


SCENARIOS = {
    1: Scenario(1, True, False, None),
    2: Scenario(2, False, True, None),
    3: Scenario(3, False, False, Hardening.UNDERGROUND),
    4: Scenario(4, False, False, Hardening.COVERED),
    5: Scenario(5, False, False, Hardening.VEGETATION),
    6: Scenario(6, True, True, Hardening.UNDERGROUND),
    7: Scenario(7, True, True, Hardening.COVERED),
    8: Scenario(8, True, True, Hardening.VEGETATION),
}


@dataclass(frozen=True)
class InvestmentCatalog:
    """Budget, prices and candidate locations for one planning run.

    Candidate sets hold bus or line indices.  At most one hardening kind is
    active per run.
    """

    budget: float
    battery: BatterySpec = field(default_factory=BatterySpec)
    solar_price: float = SOLAR_PRICE
    hardening: Hardening | None = None
    battery_buses: tuple[int, ...] = ()
    solar_buses: tuple[int, ...] = ()
    harden_lines: tuple[int, ...] = ()
    scenario: int | None = None

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.solar_price <= 0:
            raise ValueError("solar price must be > 0")
        if self.harden_lines and self.hardening is None:
            raise ValueError("hardening candidates given without a hardening kind")
        for name in ("battery_buses", "solar_buses", "harden_lines"):
            vals = tuple(sorted(set(int(v) for v in getattr(self, name))))
            object.__setattr__(self, name, vals)

    @property
    def beta(self) -> float:
        return self.hardening.beta if self.hardening is not None else 0.0

    @property
    def harden_price(self) -> float:
        return self.hardening.price_per_mile if self.hardening is not None else 0.0

    @property
    def max_batteries(self) -> int:
        """Most batteries the budget can buy; also the big-M of the rate limits."""
        if self.battery.price == 0:
            raise ValueError("free batteries make the battery count unbounded")
        return int(math.floor(self.budget / self.battery.price + 1e-9))

    @property
    def max_solar_units(self) -> float:
        return self.budget / self.solar_price

    def validate(self, network: Network) -> None:
        for b in self.battery_buses + self.solar_buses:
            if not 0 <= b < network.n_buses:
                raise ValueError(f"candidate bus index {b} not in network")
        for l in self.harden_lines:
            if not 0 <= l < network.n_lines:
                raise ValueError(f"candidate line index {l} not in network")

    def cost_breakdown(self, network: Network, x, a, y) -> dict[str, float]:
        """Spend in $M per category for battery counts ``x``, solar units ``a``
        (both per bus) and hardening flags ``y`` (per line)."""
        x = np.asarray(x, dtype=float)
        a = np.asarray(a, dtype=float)
        y = np.asarray(y, dtype=float)
        lengths = np.array([l.length for l in network.lines])
        return {
            "battery": float(self.battery.price * x.sum()),
            "solar": float(self.solar_price * a.sum()),
            "hardening": float(self.harden_price * (lengths * y).sum()),
        }


def catalog_for_scenario(
    network: Network,
    scenario: int | Scenario,
    budget: float,
    battery_buses: Iterable[int] | None = None,
    solar_buses: Iterable[int] | None = None,
    harden_lines: Iterable[int] | None = None,
    battery: BatterySpec | None = None,
) -> InvestmentCatalog:
    """Catalog for one of the eight scenarios; disabled types get empty sets.

    Candidate sets default to every bus and every line flagged hardenable.
    """
    sc = SCENARIOS[scenario] if isinstance(scenario, int) else scenario
    all_buses = tuple(range(network.n_buses))
    cat = InvestmentCatalog(
        budget=budget,
        battery=battery or BatterySpec(),
        hardening=sc.hardening,
        battery_buses=tuple(battery_buses if battery_buses is not None else all_buses) if sc.batteries else (),
        solar_buses=tuple(solar_buses if solar_buses is not None else all_buses) if sc.solar else (),
        harden_lines=(
            tuple(harden_lines if harden_lines is not None else (l.index for l in network.lines if l.hardenable))
            if sc.hardening is not None
            else ()
        ),
        scenario=sc.id,
    )
    cat.validate(network)
    return cat


def top_risk_lines(risk: Sequence[float], k: int) -> tuple[int, ...]:
    """Indices of the ``k`` riskiest lines (ties broken by lower index)."""
    order = sorted(range(len(risk)), key=lambda i: (-risk[i], i))
    return tuple(sorted(order[:k]))


def one_hop_buses(network: Network, lines: Iterable[int]) -> tuple[int, ...]:
    """Terminals of ``lines`` plus every bus one line away from a terminal."""
    terminals = set()
    for l in lines:
        line = network.lines[l]
        terminals.update((line.from_bus, line.to_bus))
    out = set(terminals)
    for b in terminals:
        out |= network.neighbours(b)
    return tuple(sorted(out))
