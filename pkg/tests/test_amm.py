import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from batchswap.amm import (
    CONSTANT_PRODUCT,
    InvariantViolation,
    PoolDrainError,
    PoolState,
    apply_trade,
    make_potential,
    max_buy_for_rate_cap,
    max_sell_for_rate_floor,
    rate,
    trade_cost,
)
from batchswap.numerics import DEFAULT_EPS, DomainError, Q

reserves = st.fractions(min_value=1, max_value=10**4, max_denominator=100)


def test_pool_must_be_positive():
    with pytest.raises(DomainError):
        PoolState(0, 5)
    with pytest.raises(DomainError):
        PoolState(5, Q(-1))


@pytest.mark.parametrize("x, y, r", [(100, 100, 1), (100, 400, 4), (50, 200, 4)])
def test_rate(x, y, r):
    assert rate(PoolState(x, y)) == r


class TestTradeCost:
    def test_examples(self):
        pool = PoolState(100, 100)
        assert trade_cost(pool, 50) == 100
        assert trade_cost(pool, 0) == 0
        assert trade_cost(pool, 6) == Q(300, 47)

    def test_sell_is_negative(self):
        assert trade_cost(PoolState(100, 100), -100) == -50

    def test_drain(self):
        with pytest.raises(PoolDrainError):
            trade_cost(PoolState(100, 100), 100)

    def test_marginal_cost_nondecreasing(self):
        pool = PoolState(100, 100)
        costs = [trade_cost(pool, k) for k in range(0, 60)]
        steps = [b - a for a, b in zip(costs, costs[1:])]
        assert all(s2 >= s1 for s1, s2 in zip(steps, steps[1:]))


class TestRateBounds:
    def test_cap_examples(self):
        pool = PoolState(100, 100)
        assert max_buy_for_rate_cap(pool, 4) == 50
        assert max_buy_for_rate_cap(pool, 1) == 0
        assert max_buy_for_rate_cap(pool, Q(1, 2)) == 0
        dx = max_buy_for_rate_cap(pool, 2)
        after = PoolState(100 - dx, 10000 / (100 - dx))
        assert rate(after) <= 2
        # within eps of the real root 100 - sqrt(5000)
        lo = Fraction(100) - Fraction(70710678118654752441, 10**18)
        assert abs(Fraction(int(dx.numerator), int(dx.denominator)) - lo) < Fraction(1, 10**15)

    def test_floor_examples(self):
        assert max_sell_for_rate_floor(PoolState(100, 100), Q(1, 4)) == 100
        assert max_sell_for_rate_floor(PoolState(100, 100), 1) == 0
        assert max_sell_for_rate_floor(PoolState(50, 200), 1) == 50
        assert max_sell_for_rate_floor(PoolState(100, 100), 2) == 0

    @given(reserves, reserves, st.fractions(min_value=Fraction(1, 100), max_value=100, max_denominator=100))
    def test_post_rate_respects_limit(self, x, y, limit):
        pool = PoolState(Q(x.numerator, x.denominator), Q(y.numerator, y.denominator))
        limit = Q(limit.numerator, limit.denominator)
        r0 = rate(pool)
        dx = max_buy_for_rate_cap(pool, limit)
        after = CONSTANT_PRODUCT.buy_x(pool, cap=limit)
        assert dx >= 0 and rate(after) <= max(limit, r0)
        assert after.x * after.y == pool.x * pool.y
        sold = max_sell_for_rate_floor(pool, limit)
        after = CONSTANT_PRODUCT.sell_x(pool, floor=limit)
        assert sold >= 0 and rate(after) >= min(limit, r0)
        assert after.x * after.y == pool.x * pool.y


class TestApplyTrade:
    def test_examples(self):
        assert apply_trade(PoolState(100, 100), 50, 100) == PoolState(50, 200)
        assert apply_trade(PoolState(100, 100), 0, 0) == PoolState(100, 100)
        assert apply_trade(PoolState(100, 100), 6, Q(300, 47)) == PoolState(94, Q(5000, 47))

    def test_mismatch(self):
        with pytest.raises(InvariantViolation):
            apply_trade(PoolState(100, 100), 50, 99)


def test_level_set_round_trip():
    cp = CONSTANT_PRODUCT
    level = cp.phi(Q(37), Q(91))
    for x in (Q(1), Q(7, 3), Q(500)):
        assert cp.phi(x, cp.y_of_x(x, level)) == level
        assert cp.phi(cp.x_of_y(x, level), x) == level


def test_make_potential():
    assert make_potential("constant_product", Q(1, 2**10)).bits == 10
    assert make_potential().eps == DEFAULT_EPS
    with pytest.raises(ValueError):
        make_potential("weighted")


def test_increasing_marginal_cost_on_level_sets():
    rng = random.Random(11)
    for _ in range(500):
        x, y = Q(rng.randint(1, 10**4), rng.randint(1, 50)), Q(rng.randint(1, 10**4), rng.randint(1, 50))
        level = x * y
        x2 = x * Q(rng.randint(1, 999), 1000)
        assert rate(PoolState(x, y)) <= rate(PoolState(x2, level / x2))
