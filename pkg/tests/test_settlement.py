"""Settlement arithmetic: recovery, profits, deviation, curtailment."""

import numpy as np
import pytest

from gridclear import (CostFunctions, Fleet, GeneratorSpec,
                       curtail_and_pay_renewables, deviation_cost,
                       deviation_envelopes, expected_profit, realized_profit,
                       recovery_rate, reserve_and_ramp_check)


def one_unit_fleet(**kw):
    spec = dict(name="g", ask_price=10.0, p_min=0.0, p_max=500.0, rp_max=500.0,
                ramp_max=500.0)
    spec.update(kw)
    return Fleet((GeneratorSpec(**spec),))


# ---------------------------------------------------------------------------
# reserve and ramp diagnostics


def test_no_violations_when_realized_equals_committed():
    fleet = one_unit_fleet(ramp_max=60.0)
    committed = np.array([[100.0], [50.0]])
    realized = np.repeat(committed[None, :, :], 3, axis=0)
    rp, dp = deviation_envelopes(committed, realized)
    assert np.all(rp == 0.0)
    assert dp[0, 0] == pytest.approx(50.0)  # |p_t - p_{t+1}| across hours
    assert reserve_and_ramp_check(committed, realized, fleet) == []


def test_reserve_cap_violation():
    fleet = one_unit_fleet(rp_max=5.0)
    committed = np.array([[100.0]])
    realized = np.array([[[90.0]], [[100.0]]])
    violations = reserve_and_ramp_check(committed, realized, fleet)
    assert any("needed reserve 10" in v for v in violations)


def test_cross_scenario_ramp_violation():
    fleet = one_unit_fleet(ramp_max=20.0)
    committed = np.array([[100.0], [100.0]])
    realized = np.array([[[100.0], [70.0]],    # scenario swings down next hour
                         [[100.0], [100.0]]])
    violations = reserve_and_ramp_check(committed, realized, fleet)
    assert any("swing 30" in v for v in violations)
    rp, dp = deviation_envelopes(committed, realized)
    assert dp[0, 0] == pytest.approx(30.0)  # worst pair over (k, k')


def test_selling_above_commitment_flagged():
    fleet = one_unit_fleet()
    committed = np.array([[100.0]])
    realized = np.array([[[110.0]]])
    violations = reserve_and_ramp_check(committed, realized, fleet)
    assert any("above its commitment" in v for v in violations)


# ---------------------------------------------------------------------------
# cost recovery


def test_recovery_worked_example():
    # one unit online two hours: no-load 10/h, hot start 100, 200 MWh committed
    fleet = one_unit_fleet(no_load_cost=10.0, start_cost_hot=100.0,
                           start_cost_cold=999.0)
    committed = np.array([[120.0], [80.0]])
    rp = np.zeros((2, 1))
    dp = np.zeros((2, 1))
    cost_fns = CostFunctions()
    h, lam = recovery_rate(committed, rp, dp, fleet, cost_fns, cost_recovery=1)
    assert h == pytest.approx(120.0)
    assert lam == pytest.approx(0.6)


def test_recovery_disabled_gives_zero_rate():
    fleet = one_unit_fleet(no_load_cost=10.0, start_cost_hot=100.0)
    committed = np.array([[120.0], [80.0]])
    h, lam = recovery_rate(committed, np.zeros((2, 1)), np.zeros((2, 1)), fleet,
                           CostFunctions(), cost_recovery=0)
    assert h == pytest.approx(120.0) and lam == 0.0


def test_never_started_unit_contributes_nothing():
    fleet = Fleet((GeneratorSpec("a", 10, 0, 100, no_load_cost=7.0, start_cost_hot=50.0),
                   GeneratorSpec("b", 20, 0, 100, no_load_cost=9.0, start_cost_hot=80.0)))
    committed = np.array([[40.0, 0.0], [40.0, 0.0]])
    h, lam = recovery_rate(committed, np.zeros((2, 2)), np.zeros((2, 2)), fleet,
                           CostFunctions(), cost_recovery=1)
    assert h == pytest.approx(2 * 7.0 + 50.0)
    assert lam == pytest.approx(64.0 / 80.0)


def test_cold_start_after_long_outage():
    fleet = one_unit_fleet(no_load_cost=0.0, start_cost_hot=100.0,
                           start_cost_cold=400.0)
    committed = np.array([[50.0], [0.0], [0.0], [50.0]])
    h, _ = recovery_rate(committed, np.zeros((4, 1)), np.zeros((4, 1)), fleet,
                         CostFunctions(), cost_recovery=1, hot_start_threshold_h=1)
    # hour 0 start is hot (one hour offline before the horizon); the restart
    # at hour 3 follows two offline hours, so it is cold
    assert h == pytest.approx(100.0 + 400.0)


def test_recovery_without_energy_errors():
    fleet = one_unit_fleet(no_load_cost=10.0)
    committed = np.zeros((1, 1))
    rp = np.array([[5.0]])
    with pytest.raises(ValueError):
        recovery_rate(committed, rp, np.zeros((1, 1)), fleet,
                      CostFunctions(reserve_rate=2.0), cost_recovery=1)


def test_recovery_monotone_in_cost_drivers():
    base_fleet = one_unit_fleet(no_load_cost=5.0, start_cost_hot=50.0)
    committed = np.array([[100.0]])
    rp = np.array([[10.0]])
    dp = np.array([[4.0]])
    fns = CostFunctions(reserve_rate=3.0, ramp_rate=2.0)
    h0, _ = recovery_rate(committed, rp, dp, base_fleet, fns, 1)
    bigger = one_unit_fleet(no_load_cost=6.0, start_cost_hot=70.0)
    h1, _ = recovery_rate(committed, rp, dp, bigger, fns, 1)
    h2, _ = recovery_rate(committed, rp * 2, dp, base_fleet, fns, 1)
    h3, _ = recovery_rate(committed, rp, dp * 3, base_fleet, fns, 1)
    assert h1 > h0 and h2 > h0 and h3 > h0


# ---------------------------------------------------------------------------
# profits and deviation


def test_expected_profit_worked_example():
    fleet = one_unit_fleet(ask_price=7.37)  # production cost follows the ask
    committed = np.array([[100.0]])
    lmps = np.array([[20.0]])
    r, per = expected_profit(committed, lmps, lambda_w=3.0, cost_recovery=1,
                             fleet=fleet, cost_fns=CostFunctions())
    assert r == pytest.approx(100 * 20 - 737.0)
    assert per[0] == pytest.approx(1263.0)


def test_expected_profit_zero_commitment():
    fleet = one_unit_fleet()
    r, _ = expected_profit(np.zeros((1, 1)), np.array([[20.0]]), 0.0, 1, fleet,
                           CostFunctions())
    assert r == 0.0


def test_expected_profit_without_recovery_same_formula():
    # the uplift is zero without recovery, so the deduction vanishes as written
    fleet = one_unit_fleet(ask_price=7.37)
    committed = np.array([[100.0]])
    lmps = np.array([[20.0]])
    r0, _ = expected_profit(committed, lmps, 0.0, 0, fleet, CostFunctions())
    assert r0 == pytest.approx(1263.0)


def test_realized_profit_two_scenarios():
    fleet = one_unit_fleet(ask_price=10.0)
    realized = np.array([[[100.0]], [[80.0]]])
    lmps = np.array([[20.0]])
    r, _ = realized_profit(realized, [0.5, 0.5], lmps, 0.0, 1, fleet,
                           CostFunctions())
    assert r == pytest.approx(0.5 * (2000 - 1000) + 0.5 * (1600 - 800))


def test_realized_profit_requires_normalized_probabilities():
    fleet = one_unit_fleet()
    with pytest.raises(ValueError):
        realized_profit(np.zeros((2, 1, 1)), [0.5, 0.4], np.array([[20.0]]),
                        0.0, 1, fleet, CostFunctions())


def test_realized_profit_degenerate_distribution():
    fleet = one_unit_fleet(ask_price=10.0)
    realized = np.array([[[100.0]], [[9999.0]]])
    r, _ = realized_profit(realized, [1.0, 0.0], np.array([[20.0]]), 0.0, 1,
                           fleet, CostFunctions())
    assert r == pytest.approx(1000.0)


def test_realized_equals_committed_gives_equal_profit():
    fleet = one_unit_fleet(ask_price=10.0)
    committed = np.array([[100.0]])
    realized = np.repeat(committed[None, :, :], 4, axis=0)
    lmps = np.array([[25.0]])
    r, _ = expected_profit(committed, lmps, 0.0, 1, fleet, CostFunctions())
    rt, _ = realized_profit(realized, np.full(4, 0.25), lmps, 0.0, 1, fleet,
                            CostFunctions())
    assert deviation_cost(r, rt) == pytest.approx(0.0, abs=1e-9)


def test_deviation_cost_is_plain_difference():
    assert deviation_cost(1263.0, 1263.0) == 0.0
    assert deviation_cost(1000.0, 900.0) == 100.0
    assert deviation_cost(900.0, 1000.0) == -100.0  # sign preserved


def test_recovery_payout_mode_credits_uplift():
    fleet = one_unit_fleet(ask_price=10.0)
    committed = np.array([[100.0]])
    lmps = np.array([[20.0]])
    literal, _ = expected_profit(committed, lmps, 2.0, 1, fleet, CostFunctions())
    paid, _ = expected_profit(committed, lmps, 2.0, 1, fleet, CostFunctions(),
                              recovery_payout=True)
    assert paid == pytest.approx(literal + 100.0 * 2.0)


# ---------------------------------------------------------------------------
# renewable curtailment and payment


def test_curtailment_excess_renewables():
    revenue, curtailed = curtail_and_pay_renewables(
        np.array([[100.0]]), np.array([[120.0]]), np.array([[20.0]]))
    assert revenue == pytest.approx(2000.0)
    assert curtailed == pytest.approx(20.0)


def test_no_curtailment_below_load():
    revenue, curtailed = curtail_and_pay_renewables(
        np.array([[100.0]]), np.array([[80.0]]), np.array([[20.0]]))
    assert revenue == pytest.approx(1600.0)
    assert curtailed == 0.0


def test_payment_shared_proportional_to_output():
    loads = np.array([[60.0, 40.0]])
    renewables = np.array([[30.0, 90.0]])
    lmps = np.array([[20.0, 20.0]])
    revenue, curtailed = curtail_and_pay_renewables(loads, renewables, lmps)
    # shares 30/120 and 90/120 of the 100 MW load at a uniform price
    assert revenue == pytest.approx(20.0 * (25.0 + 75.0))
    assert curtailed == pytest.approx(20.0)


def test_revenue_capped_by_priced_load():
    rng = np.random.default_rng(61)
    for _ in range(200):
        n = int(rng.integers(1, 4))
        loads = rng.uniform(0.0, 100.0, (1, n))
        ren = rng.uniform(0.0, 150.0, (1, n))
        price = float(rng.uniform(5.0, 50.0))
        lmps = np.full((1, n), price)
        revenue, _ = curtail_and_pay_renewables(loads, ren, lmps)
        assert revenue <= price * loads.sum() + 1e-9 or ren.sum() <= loads.sum()
        assert revenue <= price * max(loads.sum(), ren.sum()) + 1e-9
