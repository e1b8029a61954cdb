"""The compiled kernels, the pure-Python kernels and the full engines must agree exactly."""

import importlib
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from batchswap import _kernels_py, kernels
from batchswap.amm import CONSTANT_PRODUCT, PoolState
from batchswap.mechanism import run_batch
from batchswap.model import ARRIVAL_STABLE, Order, Side, TieBreak
from batchswap.noshort import Ledger, run_batch_noshort
from batchswap.numerics import Q

try:
    compiled = importlib.import_module("batchswap._kernels")
except ImportError:  # pragma: no cover - extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")
K = CONSTANT_PRODUCT.bits
SIDES = [Side.BUY_X, Side.SELL_X, Side.BUY_Y, Side.SELL_Y]
pos = st.fractions(min_value=1, max_value=10**4, max_denominator=64).map(lambda f: Q(f.numerator, f.denominator))
opt = st.none() | st.fractions(min_value=0, max_value=500, max_denominator=8).map(lambda f: Q(f.numerator, f.denominator))
limits = st.none() | st.fractions(min_value=1, max_value=1000, max_denominator=100).map(lambda f: Q(f.numerator, f.denominator))


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")


@needs_ext
@given(pos, pos, limits, opt, opt)
def test_buy_parity(x, y, cap, dx_max, dy_max):
    if dx_max is not None and dx_max >= x:
        dx_max = x / 2
    results = []
    for mod in (_kernels_py, compiled):
        try:
            results.append(mod.buy_x(x, y, cap, dx_max, dy_max, K))
        except ValueError:
            results.append("drain")
    assert results[0] == results[1]


@needs_ext
@given(pos, pos, limits, opt, opt)
def test_sell_parity(x, y, floor, dx_max, dy_max):
    results = []
    for mod in (_kernels_py, compiled):
        try:
            results.append(mod.sell_x(x, y, floor, dx_max, dy_max, K))
        except ValueError:
            results.append("drain")
    assert results[0] == results[1]


def _random_batch(rng):
    x, y = Q(rng.randint(1, 10**4)), Q(rng.randint(1, 10**4))
    orders = []
    for i in range(rng.randint(0, 8)):
        s = rng.randrange(4)
        orders.append(
            Order(f"o{i}", f"u{rng.randrange(4)}", SIDES[s], Q(rng.randint(0, 50), rng.randint(1, 4)),
                  (y / x) * Q(rng.randint(1, 8), 4), Q(rng.randint(0, 3)), i)
        )
    return PoolState(x, y), orders


def _tuples(orders):
    return [(SIDES.index(o.side), o.amount, o.limit_rate, o.arrival, o.submit_index) for o in orders]


@pytest.mark.parametrize("impl", [_kernels_py, pytest.param(compiled, marks=needs_ext)], ids=["python", "compiled"])
def test_clear_batch_matches_run_batch(impl):
    rng = random.Random(3)
    for t in range(400):
        pool, orders = _random_batch(rng)
        seed = None if t % 2 else rng.randrange(1000)
        out = run_batch(pool, orders, ARRIVAL_STABLE if seed is None else TieBreak.random(seed))
        dxs, dys, x, y = impl.clear_batch(pool.x, pool.y, _tuples(orders), seed, K)
        assert list(dxs) == [f.dx for f in out.fills]
        assert list(dys) == [f.dy for f in out.fills]
        assert (x, y) == (out.end_pool.x, out.end_pool.y)


@pytest.mark.parametrize("impl", [_kernels_py, pytest.param(compiled, marks=needs_ext)], ids=["python", "compiled"])
def test_clear_noshort_matches_engine(impl):
    rng = random.Random(4)
    for t in range(400):
        pool, orders = _random_batch(rng)
        bal = {f"u{i}": (Q(rng.randint(0, 30)), Q(rng.randint(0, 30))) for i in range(4) if rng.random() < 0.85}
        seed = None if t % 2 else rng.randrange(1000)
        out, ledger = run_batch_noshort(pool, Ledger(bal), orders, ARRIVAL_STABLE if seed is None else TieBreak.random(seed))
        dxs, dys, x, y, new_bal = impl.clear_noshort(pool.x, pool.y, _tuples(orders), [o.user for o in orders], bal, seed, K)
        assert list(dxs) == [f.dx for f in out.fills]
        assert (x, y) == (out.end_pool.x, out.end_pool.y)
        assert new_bal == {u: (p.x, p.y) for u, p in ledger.positions.items()}


def test_clear_sequential_order():
    tuples = [(1, Q(4), Q(1, 2), Q(2), 0), (0, Q(10), Q(2), Q(1), 1)]
    dxs, dys, x, y = _kernels_py.clear_sequential(Q(100), Q(100), tuples, K)
    # the buy arrives first and fills against (100, 100)
    assert dxs[1] == 10 and dys[1] == Q(-100, 9)
    assert x * y == 10000
