import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batchswap.amm import PoolState
from batchswap.mechanism import run_batch
from batchswap.model import ARRIVAL_STABLE, Order, Phase, Side, TieBreak
from batchswap.noshort import (
    Ledger,
    Position,
    honest_strategy_noshort,
    run_batch_noshort,
    safe_execute_phase1,
    safe_execute_phase2,
    trial_betas,
)
from batchswap.numerics import Q
from batchswap.ordering import base_dominates, total_value
from batchswap.model import UserType

POOL = PoolState(100, 100)


def order(oid, side, amount, rate, arrival=0, submit=0, user="u"):
    return Order(oid, user, side, Q(amount), Q(rate), Q(arrival), submit)


def test_position_rejects_negative():
    with pytest.raises(ValueError):
        Position(-1, 0)


class TestSafePhase1:
    @pytest.mark.parametrize(
        "side, amount, r0, pos, filled",
        [
            (Side.SELL_X, 5, 1, (3, 0), 3),
            (Side.BUY_X, 10, 2, (0, 10), 5),
            (Side.BUY_X, 4, 1, (0, 100), 4),
            (Side.BUY_Y, 10, 2, (2, 0), 4),
            (Side.SELL_Y, 10, 1, (0, 7), 7),
        ],
    )
    def test_caps(self, side, amount, r0, pos, filled):
        ledger = Ledger({"u": Position(*pos)})
        fill = safe_execute_phase1(order("o", side, amount, r0), Q(r0), ledger)
        assert fill.fulfilled == filled
        assert ledger["u"].x >= 0 and ledger["u"].y >= 0

    def test_unknown_user(self):
        fill = safe_execute_phase1(order("o", Side.SELL_X, 5, 1, user="ghost"), Q(1), Ledger({}))
        assert fill.phase is Phase.SKIPPED and fill.fulfilled == 0


class TestSafePhase2:
    def test_budget_binds(self):
        ledger = Ledger({"u": Position(0, 60)})
        fill, after = safe_execute_phase2(order("o", Side.BUY_X, 80, 4), POOL, ledger)
        assert fill.dx == Q(75, 2) and fill.dy == -60
        assert ledger["u"] == Position(Q(75, 2), 0)
        assert after.x * after.y == 10000

    def test_rate_binds(self):
        fill, _ = safe_execute_phase2(order("o", Side.BUY_X, 80, 4), POOL, Ledger({"u": Position(0, 10**6)}))
        assert fill.dx == 50

    def test_cap_at_current_rate(self):
        fill, after = safe_execute_phase2(order("o", Side.BUY_X, 5, 1), POOL, Ledger({"u": Position(9, 9)}))
        assert fill.dx == 0 and after == POOL


class TestRunBatchNoShort:
    A = order("A", Side.SELL_X, 4, Q(1, 2), 1, 0, "seller")
    B = order("B", Side.BUY_X, 10, 2, 2, 1, "buyer")

    def test_ample_balances_match_run_batch(self):
        ledger = Ledger({"seller": Position(100, 100), "buyer": Position(100, 100)})
        out, new = run_batch_noshort(POOL, ledger, [self.A, self.B])
        ref = run_batch(POOL, [self.A, self.B])
        assert [(f.dx, f.dy) for f in out.fills] == [(f.dx, f.dy) for f in ref.fills]
        assert out.end_pool == ref.end_pool
        assert new["seller"] == Position(96, 104)
        assert ledger["seller"] == Position(100, 100)

    def test_capped_seller_changes_split(self):
        ledger = Ledger({"seller": Position(2, 0), "buyer": Position(0, 100)})
        assert trial_betas([self.A, self.B], Q(1), ledger) == [-2, 10]
        out, new = run_batch_noshort(POOL, ledger, [self.A, self.B])
        assert (out.split.first, out.split.second) == (2, 8)
        assert out.outcome_of("seller").dx == -2
        assert new["seller"] == Position(0, 2)

    def test_empty_ledger(self):
        out, new = run_batch_noshort(POOL, Ledger({}), [self.A, self.B])
        assert all(f.dx == 0 and f.dy == 0 for f in out.fills)
        assert out.end_pool == POOL

    def test_sell_only_batch_is_buy_y_dominant(self):
        ledger = Ledger({"s": Position(10, 0)})
        out, new = run_batch_noshort(POOL, ledger, [order("s1", Side.SELL_X, 6, Q(1, 2), user="s")])
        assert out.outcome_of("s").dx == -6
        assert out.end_pool.x == 106


class TestHonestNoShort:
    def test_directions(self):
        pos = Position(10, 40)
        o = honest_strategy_noshort(2, pos, 1, 3)
        assert (o.side, o.amount, o.limit_rate, o.arrival) == (Side.SELL_Y, 40, 2, 3)
        o = honest_strategy_noshort(Q(1, 2), pos, 1)
        assert (o.side, o.amount) == (Side.SELL_X, 10)
        o = honest_strategy_noshort(1, pos, 1)
        assert (o.side, o.amount) == (Side.SELL_X, 0)


def test_total_ordering_refines_partial():
    rng = random.Random(6)
    for _ in range(3000):
        t = UserType(rng.choice([Side.BUY_X, Side.SELL_X]), rng.randint(0, 8), rng.randint(1, 6))
        a = (Q(rng.randint(-10, 10)), Q(rng.randint(-60, 60)))
        b = (Q(rng.randint(-10, 10)), Q(rng.randint(-60, 60)))
        if base_dominates(t, a, b):
            assert total_value(t.rate, a) >= total_value(t.rate, b)


sides = st.sampled_from(list(Side))


@settings(max_examples=150)
@given(
    st.integers(1, 10**4),
    st.integers(1, 10**4),
    st.lists(st.tuples(sides, st.integers(0, 40), st.integers(1, 16), st.integers(0, 3), st.integers(0, 3)), max_size=8),
    st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=4, max_size=4),
    st.none() | st.integers(0, 2**64 - 1),
)
def test_positions_never_negative(x, y, raw, balances, seed):
    pool = PoolState(x, y)
    r0 = pool.y / pool.x
    orders = [Order(f"o{i}", f"u{u}", s, Q(v), r0 * Q(k, 8), Q(a), i) for i, (s, v, k, a, u) in enumerate(raw)]
    ledger = Ledger({f"u{i}": Position(*b) for i, b in enumerate(balances)})
    out, new = run_batch_noshort(pool, ledger, orders, ARRIVAL_STABLE if seed is None else TieBreak.random(seed))
    assert all(p.x >= 0 and p.y >= 0 for p in out.ledger_trace)
    assert out.end_pool.x * out.end_pool.y == pool.x * pool.y
    assert sum(f.dx for f in out.fills) == pool.x - out.end_pool.x
    for user, pos in new.positions.items():
        gained = out.outcome_of(user)
        assert pos == ledger[user].moved(gained.dx, gained.dy)
