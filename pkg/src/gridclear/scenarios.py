"""Monte Carlo scenario sets for loads and renewable output.

Loads are truncated-at-zero Gaussians per bus; renewable output is Beta on
[0, capacity] with mean chosen so the aggregate expected renewable output is
``penetration`` times the aggregate expected load, and standard deviation
``uncertainty_growth * capacity`` (clamped to Beta feasibility).  A single
weather uniform per (time, scenario) drives every bus's renewable draw, so
renewables are comonotone across buses while loads stay independent.

Everything is a pure, deterministic function of the config (seed included);
scenario sets are immutable and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigurationError
from .risk import EmpiricalSample

# keep the target std strictly inside the Beta feasibility bound sqrt(mu*(1-mu))
_FEASIBILITY_MARGIN = 0.95
_DEGENERATE_STD = 1e-9


@dataclass(frozen=True)
class ScenarioConfig:
    """Joint load/renewable process parameters.

    load_mean, load_std: arrays of shape (n_buses, horizon) in MW.
    renewable_capacity: per-bus installed capacity in MW.
    penetration: mean renewable output as a fraction of mean aggregate load.
    uncertainty_growth: renewable standard deviation per MW of capacity.
    """

    n_buses: int
    horizon: int
    n_scenarios: int
    seed: int
    load_mean: np.ndarray
    load_std: np.ndarray
    renewable_capacity: np.ndarray
    penetration: float
    uncertainty_growth: float

    def __post_init__(self):
        if self.n_buses < 1 or self.horizon < 1 or self.n_scenarios < 1:
            raise ConfigurationError("n_buses, horizon and n_scenarios must all be >= 1")
        mean = np.broadcast_to(np.asarray(self.load_mean, dtype=float),
                               (self.n_buses, self.horizon)).copy()
        std = np.broadcast_to(np.asarray(self.load_std, dtype=float),
                              (self.n_buses, self.horizon)).copy()
        cap = np.broadcast_to(np.asarray(self.renewable_capacity, dtype=float),
                              (self.n_buses,)).copy()
        object.__setattr__(self, "load_mean", mean)
        object.__setattr__(self, "load_std", std)
        object.__setattr__(self, "renewable_capacity", cap)
        if np.any(mean < 0.0) or np.any(std < 0.0):
            raise ConfigurationError("load means and stds must be non-negative")
        if np.any(cap < 0.0):
            raise ConfigurationError("renewable capacities must be non-negative")
        if self.penetration < 0.0:
            raise ConfigurationError("penetration must be non-negative")
        if self.uncertainty_growth < 0.0:
            raise ConfigurationError("uncertainty_growth must be non-negative")


@dataclass(frozen=True)
class ScenarioSet:
    """K equiprobable joint trajectories of load and renewable output.

    load and renewable have shape (n_buses, horizon, n_scenarios).
    """

    probabilities: np.ndarray
    load: np.ndarray
    renewable: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        if np.any(probs <= 0.0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ConfigurationError("scenario probabilities must be positive and sum to 1")
        if self.load.shape != self.renewable.shape or self.load.ndim != 3:
            raise ConfigurationError("load and renewable must share shape (buses, horizon, K)")
        if probs.size != self.load.shape[2]:
            raise ConfigurationError("one probability per scenario required")

    @property
    def n_buses(self) -> int:
        return self.load.shape[0]

    @property
    def horizon(self) -> int:
        return self.load.shape[1]

    @property
    def n_scenarios(self) -> int:
        return self.load.shape[2]


def _beta_shape(mu: float, sigma_hat: float) -> tuple[float, float]:
    # moment matching on [0, 1]: feasible iff sigma_hat^2 < mu * (1 - mu)
    ratio = mu * (1.0 - mu) / (sigma_hat * sigma_hat) - 1.0
    return mu * ratio, (1.0 - mu) * ratio


def generate_scenarios(config: ScenarioConfig) -> ScenarioSet:
    """Draw the scenario set for ``config``; bit-identical for equal configs.

    Raises ConfigurationError when the requested penetration asks for more
    mean renewable output than the installed capacity can carry, naming the
    first bus whose share is infeasible.
    """
    n, t_len, k = config.n_buses, config.horizon, config.n_scenarios
    rng = np.random.default_rng(config.seed)
    # draw order is fixed so penetration sweeps share common random numbers
    u_load = rng.random((k, n, t_len))
    u_weather = rng.random((k, t_len))

    load = np.empty((n, t_len, k))
    for i in range(n):
        for t in range(t_len):
            m = config.load_mean[i, t]
            s = config.load_std[i, t]
            if s <= _DEGENERATE_STD * max(m, 1.0):
                load[i, t, :] = m
            else:
                a = (0.0 - m) / s
                load[i, t, :] = stats.truncnorm.ppf(u_load[:, i, t], a, np.inf,
                                                    loc=m, scale=s)

    cap = config.renewable_capacity
    cap_total = cap.sum()
    renewable = np.zeros((n, t_len, k))
    for t in range(t_len):
        target = config.penetration * config.load_mean[:, t].sum()
        if target <= 0.0:
            continue
        if cap_total <= 0.0:
            raise ConfigurationError(
                f"bus 0: penetration {config.penetration} needs mean renewable "
                f"output {target:.3f} MW but no capacity is installed")
        share = target / cap_total
        if share > 1.0 + 1e-9:
            raise ConfigurationError(
                f"bus 0: required mean share {share:.4f} of capacity exceeds 1; "
                f"infeasible Beta mean on [0, w]")
        share = min(share, 1.0)
        for i in range(n):
            w = cap[i]
            if w <= 0.0:
                continue
            mu = share
            if mu >= 1.0 - 1e-12:
                renewable[i, t, :] = w
                continue
            sigma_hat = min(config.uncertainty_growth,
                            _FEASIBILITY_MARGIN * np.sqrt(mu * (1.0 - mu)))
            if sigma_hat <= _DEGENERATE_STD:
                renewable[i, t, :] = mu * w
                continue
            a, b = _beta_shape(mu, sigma_hat)
            renewable[i, t, :] = w * stats.beta.ppf(u_weather[:, t], a, b)

    np.clip(renewable, 0.0, cap[:, None, None], out=renewable)
    probs = np.full(k, 1.0 / k)
    return ScenarioSet(probs, load, renewable)


def _check_index(value: int, bound: int, what: str) -> int:
    value = int(value)
    if not 0 <= value < bound:
        raise IndexError(f"{what} {value} out of range [0, {bound})")
    return value


def net_load(scenarios: ScenarioSet, bus: int, time: int) -> EmpiricalSample:
    """Per-bus net load sample (load minus renewable; may be negative)."""
    bus = _check_index(bus, scenarios.n_buses, "bus")
    time = _check_index(time, scenarios.horizon, "time")
    values = scenarios.load[bus, time, :] - scenarios.renewable[bus, time, :]
    return EmpiricalSample.from_arrays(values, scenarios.probabilities)


def aggregate_net_load(scenarios: ScenarioSet, time: int) -> EmpiricalSample:
    """Sample of the bus-summed net load; scenario-consistent with net_load."""
    time = _check_index(time, scenarios.horizon, "time")
    values = np.sum(scenarios.load[:, time, :] - scenarios.renewable[:, time, :], axis=0)
    return EmpiricalSample.from_arrays(values, scenarios.probabilities)


def suffix_net_load(scenarios: ScenarioSet, start_bus: int, time: int) -> EmpiricalSample:
    """Sample of the net load summed over buses start_bus..N-1 (feeder tail)."""
    start_bus = _check_index(start_bus, scenarios.n_buses, "bus")
    time = _check_index(time, scenarios.horizon, "time")
    values = np.sum(scenarios.load[start_bus:, time, :]
                    - scenarios.renewable[start_bus:, time, :], axis=0)
    return EmpiricalSample.from_arrays(values, scenarios.probabilities)


def write_scenario_csv(scenarios: ScenarioSet, path) -> None:
    """Dump the scenario set as CSV: scenario,bus,time,load_mw,renewable_mw,probability."""
    with open(path, "w", newline="") as fh:
        fh.write("scenario,bus,time,load_mw,renewable_mw,probability\n")
        for sc in range(scenarios.n_scenarios):
            for bus in range(scenarios.n_buses):
                for t in range(scenarios.horizon):
                    fh.write(f"{sc},{bus},{t},"
                             f"{scenarios.load[bus, t, sc]:.6f},"
                             f"{scenarios.renewable[bus, t, sc]:.6f},"
                             f"{scenarios.probabilities[sc]:.6f}\n")
