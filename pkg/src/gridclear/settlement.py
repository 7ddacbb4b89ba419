"""Post-dispatch economics: reserves, cost recovery, profits and curtailment.

Commitment happens day-ahead at the clearing prices; scenarios realize a
different net load, so generators actually sell the re-dispatched quantity
at the committed price.  The gap between the profit they planned on and the
scenario-expected profit they get is the deviation cost.

Cost recovery: the no-load, start-up, reserve and ramp outlays of committed
units sum to H; with recovery enabled the per-MWh uplift is H over the total
committed energy, without it the uplift is zero.  The profit formulas are
evaluated literally; an optional payout mode additionally credits the
recovered cost back to generators pro-rata to energy (off by default).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .merit_order import Fleet

# units entering the horizon are treated as having been offline for exactly
# one hour, so a start in hour 0 is hot under the default threshold
_PRE_HORIZON_OFFLINE_H = 1


@dataclass(frozen=True)
class CostFunctions:
    """Linear cost curves with zero intercept.

    energy_rates: optional per-generator $/MWh production cost slopes; when
    omitted each unit's own production_cost_rate is used.
    reserve_rate: $/MW per hour of reserve held.
    ramp_rate: $ per MW/h of ramp envelope.
    """

    reserve_rate: float = 0.0
    ramp_rate: float = 0.0
    energy_rates: np.ndarray | None = None

    def __post_init__(self):
        if self.reserve_rate < 0.0 or self.ramp_rate < 0.0:
            raise ValueError("cost slopes must be non-negative")
        if self.energy_rates is not None:
            rates = np.asarray(self.energy_rates, dtype=float)
            if np.any(rates < 0.0):
                raise ValueError("energy rates must be non-negative")
            object.__setattr__(self, "energy_rates", rates)

    def production_slopes(self, fleet: Fleet) -> np.ndarray:
        if self.energy_rates is not None:
            return self.energy_rates
        return fleet.production_cost_rates


@dataclass(frozen=True)
class SettlementReport:
    h_total: float                 # $, recoverable costs of committed units
    lambda_w: float                # $/MWh uplift
    expected_profit: float         # $, profit at commitment
    realized_profit: float         # $, scenario-expected profit actually made
    deviation_cost: float          # $, expected_profit - realized_profit (signed)
    renewable_revenue: float       # $, scenario-expected renewable payment
    curtailed_mwh: float           # MWh, scenario-expected curtailed energy
    indicators: np.ndarray         # commitment indicators, shape (T, n_units)
    per_gen_expected: np.ndarray
    per_gen_realized: np.ndarray
    violations: list[str] = field(default_factory=list)


def commitment_indicators(committed: np.ndarray) -> np.ndarray:
    """Online indicator per (hour, unit): committed output strictly positive."""
    return (np.asarray(committed, dtype=float) > 0.0).astype(int)


def deviation_envelopes(committed: np.ndarray,
                        realized: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tight reserve and ramp envelopes over scenarios.

    committed: (T, n_units); realized: (K, T, n_units).
    Reserve envelope per (t, i): largest downward deviation from commitment.
    Ramp envelope per (t, i): largest |output step| between consecutive hours
    over all scenario pairs (the last hour has no successor, envelope 0).
    """
    committed = np.asarray(committed, dtype=float)
    realized = np.asarray(realized, dtype=float)
    delta = committed[None, :, :] - realized
    rp = np.maximum(delta, 0.0).max(axis=0)

    t_len = committed.shape[0]
    dp = np.zeros_like(committed)
    for t in range(t_len - 1):
        lo_now, hi_now = realized[:, t, :].min(axis=0), realized[:, t, :].max(axis=0)
        lo_nxt, hi_nxt = realized[:, t + 1, :].min(axis=0), realized[:, t + 1, :].max(axis=0)
        # worst swing over scenario pairs (k, k') is between the envelope edges
        dp[t] = np.maximum(hi_now - lo_nxt, hi_nxt - lo_now)
        dp[t] = np.maximum(dp[t], 0.0)
    return rp, dp


def reserve_and_ramp_check(committed: np.ndarray, realized: np.ndarray,
                           fleet: Fleet) -> list[str]:
    """Diagnostics for the reserve and ramp feasibility of a commitment.

    Deviations must be non-negative (no scenario sells above commitment), the
    tight reserve envelope must fit under each unit's reserve cap, and the
    worst cross-scenario hourly swing under its ramp cap.
    """
    committed = np.asarray(committed, dtype=float)
    realized = np.asarray(realized, dtype=float)
    violations = []
    delta = committed[None, :, :] - realized
    if delta.min() < -1e-9:
        k, t, i = np.unravel_index(int(delta.argmin()), delta.shape)
        violations.append(
            f"scenario {k}, hour {t}: unit {fleet.generators[i].name} sells "
            f"{realized[k, t, i]:.6g} MW above its commitment {committed[t, i]:.6g}")
    rp, dp = deviation_envelopes(committed, realized)
    for i, g in enumerate(fleet.generators):
        worst_rp = rp[:, i].max(initial=0.0)
        if worst_rp > g.rp_max + 1e-9:
            violations.append(f"unit {g.name}: needed reserve {worst_rp:.6g} MW "
                              f"exceeds cap {g.rp_max:.6g}")
        worst_dp = dp[:, i].max(initial=0.0)
        if worst_dp > g.ramp_max + 1e-9:
            t = int(dp[:, i].argmax())
            violations.append(f"unit {g.name}: hour {t} worst scenario-pair swing "
                              f"{worst_dp:.6g} MW/h exceeds ramp cap {g.ramp_max:.6g}")
    return violations


def recovery_rate(committed: np.ndarray, rp: np.ndarray, dp: np.ndarray,
                  fleet: Fleet, cost_fns: CostFunctions, cost_recovery: int,
                  hot_start_threshold_h: int = 1) -> tuple[float, float]:
    """Recoverable cost H and the per-MWh uplift.

    H sums, over hours and committed units, the no-load cost, the start-up
    cost on transitions from offline to online (hot when the unit was offline
    at most ``hot_start_threshold_h`` hours, cold otherwise), and the linear
    reserve and ramp costs on the supplied envelopes.

    With cost_recovery=1 the uplift is H over total committed energy; with 0
    it is zero.  Raises ValueError when recovery is requested but there is a
    positive H and no energy to spread it over.
    """
    if cost_recovery not in (0, 1):
        raise ValueError("cost_recovery must be 0 or 1")
    committed = np.asarray(committed, dtype=float)
    t_len, n = committed.shape
    online = commitment_indicators(committed)

    h_total = 0.0
    offline_run = np.full(n, _PRE_HORIZON_OFFLINE_H)
    for t in range(t_len):
        for i, g in enumerate(fleet.generators):
            if online[t, i]:
                h_total += g.no_load_cost
                was_off = offline_run[i] > 0
                if was_off:
                    hot = offline_run[i] <= hot_start_threshold_h
                    h_total += g.start_cost_hot if hot else g.start_cost_cold
                offline_run[i] = 0
            else:
                offline_run[i] += 1
        h_total += cost_fns.reserve_rate * rp[t].sum()
        h_total += cost_fns.ramp_rate * dp[t].sum()

    if cost_recovery == 0:
        return h_total, 0.0
    energy = committed.sum()
    if energy <= 0.0:
        if h_total > 0.0:
            raise ValueError("cost recovery requested but no committed energy to carry "
                             f"H = {h_total:.6g}")
        return h_total, 0.0
    return h_total, h_total / energy


def _effective_prices(lmps: np.ndarray, lambda_w: float, cost_recovery: int,
                      recovery_payout: bool) -> np.ndarray:
    prices = lmps - lambda_w * (1 - cost_recovery)
    if recovery_payout and cost_recovery == 1:
        prices = prices + lambda_w
    return prices


def expected_profit(committed: np.ndarray, lmps: np.ndarray, lambda_w: float,
                    cost_recovery: int, fleet: Fleet, cost_fns: CostFunctions,
                    recovery_payout: bool = False) -> tuple[float, np.ndarray]:
    """Profit the fleet would make if the committed power were sold as planned.

    Returns the total and the per-generator breakdown.
    """
    committed = np.asarray(committed, dtype=float)
    lmps = np.asarray(lmps, dtype=float)
    prices = _effective_prices(lmps, lambda_w, cost_recovery, recovery_payout)
    slopes = cost_fns.production_slopes(fleet)
    per_gen = (committed * prices - committed * slopes[None, :]).sum(axis=0)
    return float(per_gen.sum()), per_gen


def realized_profit(realized: np.ndarray, probabilities, lmps: np.ndarray,
                    lambda_w: float, cost_recovery: int, fleet: Fleet,
                    cost_fns: CostFunctions,
                    recovery_payout: bool = False) -> tuple[float, np.ndarray]:
    """Scenario-expected profit on the power actually sold at committed prices."""
    realized = np.asarray(realized, dtype=float)
    psi = np.asarray(probabilities, dtype=float)
    if abs(psi.sum() - 1.0) > 1e-9 or np.any(psi < 0.0):
        raise ValueError("scenario probabilities must be non-negative and sum to 1")
    prices = _effective_prices(np.asarray(lmps, dtype=float), lambda_w,
                               cost_recovery, recovery_payout)
    slopes = cost_fns.production_slopes(fleet)
    margin = prices[None, :, :] - slopes[None, None, :]
    per_gen = np.einsum("k,kti->i", psi, realized * margin)
    return float(per_gen.sum()), per_gen


def deviation_cost(expected: float, realized: float) -> float:
    """Planned profit minus scenario-expected profit; negative values are kept."""
    return expected - realized


def curtail_and_pay_renewables(loads: np.ndarray, renewables: np.ndarray,
                               lmps: np.ndarray) -> tuple[float, float]:
    """Renewable payment and curtailed energy for one scenario trajectory.

    Per hour: when total renewable output exceeds the total load, only the
    load is paid for, shared across units in proportion to their output, and
    the excess is curtailed; otherwise all output earns its bus price.
    """
    loads = np.asarray(loads, dtype=float)
    renewables = np.asarray(renewables, dtype=float)
    lmps = np.asarray(lmps, dtype=float)
    revenue = 0.0
    curtailed = 0.0
    for t in range(loads.shape[0]):
        total_out = renewables[t].sum()
        total_load = loads[t].sum()
        if total_out > total_load:
            scale = total_load / total_out if total_out > 0.0 else 0.0
            revenue += float(lmps[t] @ (renewables[t] * scale))
            curtailed += float(total_out - total_load)
        else:
            revenue += float(lmps[t] @ renewables[t])
    return revenue, curtailed
