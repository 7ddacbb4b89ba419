"""Closed-form risk-based commitment and market clearing for a single bus.

Generators are dispatched in strictly increasing ask-price order against a
demand equal to the CVaR of the aggregate net load.  The solution has three
regimes: the marginal unit sits inside its box (clearing price = its ask),
the residual falls below the marginal unit's minimum so the previous unit
backs down (price = previous unit's ask), or the demand is smaller than the
cheapest unit's minimum and a single unit carries it alone.

Multipliers are assigned so the stationarity and complementarity system of
the underlying linear program is satisfied exactly on the committed set; a
unit that is off while its minimum is positive is a commitment decision and
its bound is taken at zero.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FleetParseError, InfeasibleDispatchError

_BALANCE_TOL = 1e-9


@dataclass(frozen=True)
class GeneratorSpec:
    """Cost and physical parameters of one non-renewable unit."""

    name: str
    ask_price: float          # $/MWh
    p_min: float = 0.0        # MW
    p_max: float = 0.0        # MW
    rp_max: float = 0.0       # MW, contingency reserve cap
    ramp_max: float = 0.0     # MW/h
    start_cost_hot: float = 0.0
    start_cost_cold: float = 0.0
    no_load_cost: float = 0.0  # $/h
    production_cost_rate: float | None = None  # $/MWh, defaults to ask_price

    def __post_init__(self):
        if self.production_cost_rate is None:
            object.__setattr__(self, "production_cost_rate", float(self.ask_price))
        if not 0.0 <= self.p_min <= self.p_max:
            raise ValueError(f"{self.name}: need 0 <= p_min <= p_max, "
                             f"got [{self.p_min}, {self.p_max}]")
        if self.rp_max < 0.0 or self.ramp_max < 0.0:
            raise ValueError(f"{self.name}: reserve and ramp caps must be non-negative")
        if min(self.ask_price, self.start_cost_hot, self.start_cost_cold,
               self.no_load_cost, self.production_cost_rate) < 0.0:
            raise ValueError(f"{self.name}: costs and prices must be non-negative")


@dataclass(frozen=True)
class Fleet:
    """Ordered generator list; the order is the dispatch merit order.

    Ask prices must be strictly increasing and the renewable ask must sit
    strictly below the cheapest unit (ties are rejected rather than broken,
    the closed-form solution needs a unique marginal unit).
    """

    generators: tuple[GeneratorSpec, ...]
    renewable_ask: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if not self.generators:
            raise ValueError("a fleet needs at least one generator")
        if self.renewable_ask < 0.0:
            raise ValueError("renewable ask price must be non-negative")
        asks = [g.ask_price for g in self.generators]
        if self.renewable_ask >= asks[0]:
            raise ValueError(f"renewable ask {self.renewable_ask} must be strictly "
                             f"below the cheapest generator ask {asks[0]}")
        for lo, hi in zip(asks, asks[1:]):
            if hi <= lo:
                raise ValueError(f"ask prices must be strictly increasing, got {lo} then {hi}")

    def __len__(self) -> int:
        return len(self.generators)

    @property
    def ask_prices(self) -> np.ndarray:
        return np.array([g.ask_price for g in self.generators])

    @property
    def p_mins(self) -> np.ndarray:
        return np.array([g.p_min for g in self.generators])

    @property
    def p_maxs(self) -> np.ndarray:
        return np.array([g.p_max for g in self.generators])

    @property
    def production_cost_rates(self) -> np.ndarray:
        return np.array([g.production_cost_rate for g in self.generators])

    @property
    def total_capacity(self) -> float:
        return float(self.p_maxs.sum())

    def head(self, n: int) -> "Fleet":
        """First n units (used to place one generator per feeder bus)."""
        if n > len(self.generators):
            raise ValueError(f"fleet has {len(self.generators)} units, need {n}")
        return Fleet(self.generators[:n], self.renewable_ask)


class Regime(enum.Enum):
    """Which branch of the closed-form solution produced a dispatch."""

    INTERIOR = "interior"           # marginal unit inside its box
    BELOW_PMIN = "below_pmin"       # previous unit backs down to admit the marginal one
    SMALL_DEMAND = "small_demand"   # one unit alone carries a sub-minimum demand


@dataclass(frozen=True)
class DispatchResult:
    power: np.ndarray          # MW per generator, merit order
    clearing_price: float      # $/MWh
    mu: np.ndarray             # upper-bound multipliers, >= 0
    mu_bar: np.ndarray         # lower-bound multipliers, >= 0
    regime: Regime
    marginal_index: int        # 0-based index of the price-setting unit

    @property
    def total_power(self) -> float:
        return float(self.power.sum())


def validate_assumptions(fleet: Fleet, demand: float) -> list[str]:
    """Feasibility diagnostics for the closed-form commitment.

    Empty iff (a) min p_min <= demand <= total capacity and (b) every unit's
    minimum is exceeded by every unit's adjustable range (max - min).
    """
    violations = []
    p_min = fleet.p_mins
    p_max = fleet.p_maxs
    lo, hi = float(p_min.min()), float(p_max.sum())
    if demand < lo:
        violations.append(f"demand {demand:.6g} MW below the smallest generator minimum {lo:.6g}")
    if demand > hi:
        violations.append(f"demand {demand:.6g} MW exceeds total capacity {hi:.6g}")
    widest_min = float(p_min.max())
    i_min = int(p_min.argmax())
    narrowest_range = float((p_max - p_min).min())
    i_rng = int((p_max - p_min).argmin())
    if widest_min >= narrowest_range:
        violations.append(
            f"unit {fleet.generators[i_min].name}: p_min {widest_min:.6g} is not below the "
            f"narrowest adjustable range {narrowest_range:.6g} (unit {fleet.generators[i_rng].name})")
    return violations


def _off_tail_mu_bar(asks: np.ndarray, price: float) -> np.ndarray:
    return np.maximum(asks - price, 0.0)


def commit(fleet: Fleet, demand_cvar: float) -> DispatchResult:
    """Dispatch the fleet against a demand (the CVaR of the aggregate net load).

    Cheapest units saturate first; the clearing price is the ask of the
    price-setting unit in the active regime.  Raises InfeasibleDispatchError
    when no unit pattern can balance the demand.
    """
    demand = float(demand_cvar)
    asks = fleet.ask_prices
    p_min = fleet.p_mins
    p_max = fleet.p_maxs
    n = len(fleet)
    bounds = (float(p_min.min()), float(p_max.sum()))

    if demand < 0.0 or demand > bounds[1] + _BALANCE_TOL:
        raise InfeasibleDispatchError(
            f"demand {demand:.6g} MW outside the servable range [0, {bounds[1]:.6g}]",
            demand=demand, fleet_bounds=bounds)

    power = np.zeros(n)
    if demand == 0.0:
        # degenerate balance; the cheapest unit is marginal at zero output
        price = float(asks[0])
        mu_bar = _off_tail_mu_bar(asks, price)
        return DispatchResult(power, price, np.zeros(n), mu_bar, Regime.INTERIOR, 0)

    if demand < p_min[0]:
        # too small for the cheapest unit: smallest unit able to run at the
        # demand carries it alone
        for i in range(n):
            if p_min[i] <= demand < p_max[i]:
                power[i] = demand
                price = float(asks[i])
                mu_bar = _off_tail_mu_bar(asks, price)
                mu_bar[:i] = 0.0  # cheaper units are off by commitment, not at a bound
                mu_bar[i] = 0.0
                return DispatchResult(power, price, np.zeros(n), mu_bar,
                                      Regime.SMALL_DEMAND, i)
        raise InfeasibleDispatchError(
            f"no single unit can carry the sub-minimum demand {demand:.6g} MW",
            demand=demand, fleet_bounds=bounds)

    prefix = np.concatenate(([0.0], np.cumsum(p_max)))
    k = int(np.searchsorted(prefix[1:], demand, side="left"))
    k = min(k, n - 1)
    residual = demand - prefix[k]

    if residual >= p_min[k]:
        power[:k] = p_max[:k]
        power[k] = residual
        price = float(asks[k])
        mu = np.zeros(n)
        mu[:k] = price - asks[:k]
        mu_bar = np.zeros(n)
        mu_bar[k + 1:] = _off_tail_mu_bar(asks[k + 1:], price)
        return DispatchResult(power, price, mu, mu_bar, Regime.INTERIOR, k)

    # 0 < residual < p_min[k]: unit k runs at its minimum and unit k-1 backs down
    if k == 0:
        raise InfeasibleDispatchError(
            f"demand {demand:.6g} MW below the first unit's minimum after saturation",
            demand=demand, fleet_bounds=bounds)
    backdown = demand - prefix[k - 1] - p_min[k]
    if not p_min[k - 1] < backdown < p_max[k - 1]:
        raise InfeasibleDispatchError(
            f"back-down target {backdown:.6g} MW outside unit {k - 1}'s box "
            f"[{p_min[k - 1]:.6g}, {p_max[k - 1]:.6g}]; adjustable-range assumption violated",
            demand=demand, fleet_bounds=bounds)
    power[:k - 1] = p_max[:k - 1]
    power[k - 1] = backdown
    power[k] = p_min[k]
    price = float(asks[k - 1])
    mu = np.zeros(n)
    mu[:k - 1] = price - asks[:k - 1]
    mu_bar = np.zeros(n)
    mu_bar[k] = asks[k] - price
    mu_bar[k + 1:] = _off_tail_mu_bar(asks[k + 1:], price)
    return DispatchResult(power, price, mu, mu_bar, Regime.BELOW_PMIN, k - 1)


def backdown_feasibility(fleet: Fleet, demand: float, k: int) -> bool:
    """Whether unit k-1 can absorb the back-down when unit k must run at its minimum.

    ``k`` is the 0-based index of the unit forced to its minimum; requires the
    back-down precondition 0 < demand - sum(p_max[:k]) < p_min[k] and k >= 1.
    """
    p_min = fleet.p_mins
    p_max = fleet.p_maxs
    if k < 1 or k >= len(fleet):
        raise ValueError(f"k must index a unit with a predecessor, got {k}")
    gap = demand - p_max[:k].sum()
    if not 0.0 < gap < p_min[k]:
        raise ValueError(
            f"demand {demand!r} does not put unit {k} in the back-down regime")
    target = demand - p_max[:k - 1].sum() - p_min[k]
    return bool(p_min[k - 1] < target < p_max[k - 1])


@dataclass(frozen=True)
class KktReport:
    """Maximum absolute residuals of the optimality system for one dispatch."""

    stationarity: float
    balance: float
    complementary_upper: float
    complementary_lower: float
    negativity: float

    @property
    def max_residual(self) -> float:
        return max(self.stationarity, self.balance, self.complementary_upper,
                   self.complementary_lower, self.negativity)


def kkt_residuals(fleet: Fleet, result: DispatchResult, demand: float) -> KktReport:
    """Residuals of stationarity, balance, complementarity and non-negativity.

    Units that are off while their minimum is positive were decommitted; for
    them the relevant lower bound is zero, so they enter the system with
    bound 0 (their stationarity holds with the off-tail multiplier).  A valid
    dispatch yields a max residual at float precision.
    """
    asks = fleet.ask_prices
    p_min = fleet.p_mins
    p_max = fleet.p_maxs
    p = result.power
    lam = result.clearing_price
    committed = (p > 0.0) | (p_min == 0.0)
    lower = np.where(p > 0.0, p_min, 0.0)

    stationarity = np.abs(asks - lam + result.mu - result.mu_bar)
    cs_upper = np.abs(result.mu * (p - p_max))
    cs_lower = np.abs(result.mu_bar * (lower - p))
    negativity = max(0.0, float(-min(result.mu.min(), result.mu_bar.min())))
    return KktReport(
        stationarity=float(stationarity[committed].max(initial=0.0)),
        balance=abs(result.total_power - demand),
        complementary_upper=float(cs_upper[committed].max(initial=0.0)),
        complementary_lower=float(cs_lower[committed].max(initial=0.0)),
        negativity=negativity,
    )


# Production cost, maximum output, hot/cold start cost and ramp rate of the
# seven-unit reference fleet; reserve caps default to the unit maximum and
# the no-load cost to zero.
_TABLE1 = (
    ("gen1", 7.37, 400.0, 0.0, 0.0, 400.0),
    ("gen2", 22.23, 155.0, 2258.6, 616.2, 155.0),
    ("gen3", 31.55, 76.0, 1412.5, 1412.5, 76.0),
    ("gen4", 176.05, 197.0, 14182.5, 8106.9, 197.0),
    ("gen5", 180.75, 100.0, 10357.8, 4575.0, 100.0),
    ("gen6", 241.91, 12.0, 1244.4, 695.4, 12.0),
    ("gen7", 315.81, 20.0, 109.5, 109.5, 20.0),
)


def builtin_fleet(renewable_ask: float = 0.0) -> Fleet:
    """The built-in seven-generator reference fleet."""
    gens = tuple(
        GeneratorSpec(name=name, ask_price=price, p_min=0.0, p_max=cap,
                      rp_max=cap, ramp_max=ramp, start_cost_hot=hot,
                      start_cost_cold=cold, no_load_cost=0.0)
        for name, price, cap, hot, cold, ramp in _TABLE1
    )
    return Fleet(gens, renewable_ask=renewable_ask)


_FLEET_HEADER = ["name", "ask_price", "p_min", "p_max", "rp_max", "ramp_max",
                 "hot_start", "cold_start", "no_load_cost"]


def fleet_from_csv(path, renewable_ask: float = 0.0) -> Fleet:
    """Load a fleet file and validate it; rows are sorted by ask price."""
    path = Path(path)
    gens = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FleetParseError(f"{path}: empty fleet file", line_number=1)
        if [h.strip() for h in header] != _FLEET_HEADER:
            raise FleetParseError(
                f"{path}: expected header {','.join(_FLEET_HEADER)}", line_number=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(_FLEET_HEADER):
                raise FleetParseError(f"{path}:{lineno}: expected "
                                      f"{len(_FLEET_HEADER)} fields, got {len(row)}",
                                      line_number=lineno)
            try:
                gens.append(GeneratorSpec(
                    name=row[0].strip(),
                    ask_price=float(row[1]), p_min=float(row[2]), p_max=float(row[3]),
                    rp_max=float(row[4]), ramp_max=float(row[5]),
                    start_cost_hot=float(row[6]), start_cost_cold=float(row[7]),
                    no_load_cost=float(row[8])))
            except ValueError as exc:
                raise FleetParseError(f"{path}:{lineno}: {exc}", line_number=lineno) from exc
    if not gens:
        raise FleetParseError(f"{path}: no generator rows", line_number=2)
    gens.sort(key=lambda g: g.ask_price)
    return Fleet(tuple(gens), renewable_ask=renewable_ask)
