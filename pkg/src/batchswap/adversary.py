"""Adversary oracles, the legacy sequential baseline and strategy searches.

Searches are exhaustive over a declared finite :class:`StrategyGrid`. Each
grid point is cleared through the engine's lean kernel; every hit is then
replayed through the full engine so reported witnesses carry real fills.
"""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Sequence

from . import kernels
from .amm import CONSTANT_PRODUCT, ConstantProduct, InvariantViolation, PoolState, PotentialFunction
from .mechanism import aggregate_fills, check_unique_ids, execute_sequential, honest_strategy, run_batch
from .model import ARRIVAL_STABLE, BatchOutcome, Order, OrderFill, Outcome, Phase, Side, TieBreak, UserType
from .noshort import Ledger, honest_strategy_noshort, run_batch_noshort
from .numerics import Q, format_rational, to_q
from .ordering import Comparison, compare, frame_of, total_value

ADVERSARY = "adversary"
STRATEGIC = "strategic"
MAX_ARB_FILLS = 12

_ZERO = Q(0)
_SIDE_CODE = {Side.BUY_X: kernels.BUY_X, Side.SELL_X: kernels.SELL_X, Side.BUY_Y: kernels.BUY_Y, Side.SELL_Y: kernels.SELL_Y}
_CODE_SIDE = {v: k for k, v in _SIDE_CODE.items()}


class Model(enum.Enum):
    PLAIN = "Plain"
    WFS = "WeakFairSequencing"

    @classmethod
    def parse(cls, text: str) -> "Model":
        key = text.replace("_", "").replace("-", "").lower()
        for m in cls:
            if key in (m.value.lower(), m.name.lower()):
                return m
        raise ValueError(f"unknown model {text!r}")


# ---------------------------------------------------------------- engines


def as_tuple(order: Order) -> tuple:
    return (_SIDE_CODE[order.side], order.amount, order.limit_rate, order.arrival, order.submit_index)


def legacy_sequential_run(
    pool: PoolState, ordered_orders: Sequence[Order], potential: PotentialFunction = CONSTANT_PRODUCT
) -> BatchOutcome:
    """Fill orders one after another in the given sequence (block order)."""
    check_unique_ids(ordered_orders)
    trace, end = execute_sequential(pool, ordered_orders, potential, Phase.SEQUENTIAL)
    if potential.phi(pool.x, pool.y) != potential.phi(end.x, end.y):
        raise InvariantViolation("sequential run changed the pool potential")
    return BatchOutcome(
        fills=aggregate_fills(ordered_orders, trace),
        start_pool=pool,
        end_pool=end,
        trace=trace,
        engine="legacy_sequential",
    )


class Engine:
    """Clearing rule under test.

    ``run`` produces a full :class:`BatchOutcome`; ``clear`` returns only
    the per-order gains and is what the searches call in their inner loop.
    """

    id = "engine"
    # orders that cannot trade at the opening rate are dropped up front
    filters_at_open = True

    def arrival_matters(self, tiebreak: TieBreak) -> bool:
        return tiebreak.mode == "arrival"

    def run(self, pool, orders, tiebreak=ARRIVAL_STABLE, potential=CONSTANT_PRODUCT) -> BatchOutcome:
        raise NotImplementedError

    def clear(self, pool, tuples, users, seed, potential=CONSTANT_PRODUCT):
        orders = [
            Order(f"o{i}", users[i], _CODE_SIDE[t[0]], t[1], t[2], t[3], t[4]) for i, t in enumerate(tuples)
        ]
        tiebreak = ARRIVAL_STABLE if seed is None else TieBreak.random(seed)
        out = self.run(pool, orders, tiebreak, potential)
        return [f.dx for f in out.fills], [f.dy for f in out.fills]


class BatchEngine(Engine):
    id = "batch"

    def run(self, pool, orders, tiebreak=ARRIVAL_STABLE, potential=CONSTANT_PRODUCT):
        return run_batch(pool, orders, tiebreak, potential)

    def clear(self, pool, tuples, users, seed, potential=CONSTANT_PRODUCT):
        if not isinstance(potential, ConstantProduct):
            return super().clear(pool, tuples, users, seed, potential)
        dxs, dys, _, _ = kernels.clear_batch(pool.x, pool.y, tuples, seed, potential.bits)
        return dxs, dys


class LegacyEngine(Engine):
    """First-come-first-served AMM: sorted by (arrival, submit_index), no batching."""

    id = "legacy_sequential"
    filters_at_open = False

    def arrival_matters(self, tiebreak):
        return True

    def run(self, pool, orders, tiebreak=ARRIVAL_STABLE, potential=CONSTANT_PRODUCT):
        ordered = sorted(orders, key=lambda o: (o.arrival, o.submit_index))
        out = legacy_sequential_run(pool, ordered, potential)
        by_id = {f.order_id: f for f in out.fills}
        out.fills = [by_id[o.id] for o in orders]
        return out

    def clear(self, pool, tuples, users, seed, potential=CONSTANT_PRODUCT):
        if not isinstance(potential, ConstantProduct):
            return super().clear(pool, tuples, users, seed, potential)
        dxs, dys, _, _ = kernels.clear_sequential(pool.x, pool.y, tuples, potential.bits)
        return dxs, dys


class NoShortEngine(Engine):
    """The no-short-sell batch variant over a fixed starting ledger."""

    id = "noshort"

    def __init__(self, ledger: Ledger):
        self.ledger = ledger
        self._balances = {u: (p.x, p.y) for u, p in ledger.positions.items()}

    def run(self, pool, orders, tiebreak=ARRIVAL_STABLE, potential=CONSTANT_PRODUCT):
        return run_batch_noshort(pool, self.ledger, orders, tiebreak, potential)[0]

    def clear(self, pool, tuples, users, seed, potential=CONSTANT_PRODUCT):
        if not isinstance(potential, ConstantProduct):
            return super().clear(pool, tuples, users, seed, potential)
        out = kernels.clear_noshort(pool.x, pool.y, tuples, users, self._balances, seed, potential.bits)
        return out[0], out[1]


BATCH = BatchEngine()
LEGACY = LegacyEngine()


# ---------------------------------------------------------------- scenario and grid


@dataclass(frozen=True)
class Scenario:
    """A pool, the honest orders around the adversary, and the rules it plays by.

    ``extra_deviations`` are explicit order sets the IC search tries on top
    of the grid; their arrivals and submit indices are used verbatim.
    """

    pool: PoolState
    honest_orders: tuple = ()
    adversary_type: Optional[UserType] = None
    model: Model = Model.WFS
    tiebreak: TieBreak = ARRIVAL_STABLE
    potential: PotentialFunction = CONSTANT_PRODUCT
    ledger: Optional[Ledger] = None
    extra_deviations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "honest_orders", tuple(self.honest_orders))
        object.__setattr__(self, "extra_deviations", tuple(tuple(d) for d in self.extra_deviations))
        check_unique_ids(self.honest_orders)

    def engine(self) -> Engine:
        return NoShortEngine(self.ledger) if self.ledger is not None else BATCH


@dataclass(frozen=True)
class StrategyGrid:
    amounts: tuple
    rates: tuple
    sides: tuple = tuple(Side)
    max_orders: int = 3
    arrival_offsets: tuple = (Q(0), Q(1), Q(2))
    # give every adversary order its own arrival instead of one per strategy
    per_order_arrivals: bool = False
    censor_bound: int = 6

    def __post_init__(self):
        amounts = tuple(sorted({to_q(a) for a in self.amounts}))
        rates = tuple(sorted({to_q(r) for r in self.rates}))
        offsets = tuple(sorted({to_q(a) for a in self.arrival_offsets}))
        if any(a < 0 for a in amounts) or any(r <= 0 for r in rates):
            raise ValueError("grid amounts must be >= 0 and rates > 0")
        if any(a < 0 for a in offsets):
            raise ValueError("arrival offsets must be >= 0")
        if self.max_orders < 0:
            raise ValueError("max_orders must be >= 0")
        sides = tuple(s if isinstance(s, Side) else Side.parse(s) for s in self.sides)
        object.__setattr__(self, "amounts", amounts)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "arrival_offsets", offsets)
        object.__setattr__(self, "sides", tuple(sorted(set(sides), key=list(Side).index)))

    def templates(self) -> list[tuple]:
        """Every ``(side_code, amount, rate)`` the grid allows."""
        return [(_SIDE_CODE[s], a, r) for s in self.sides for a in self.amounts for r in self.rates]

    def size(self) -> int:
        """Number of order multisets of size 1..max_orders."""
        n = len(self.templates())
        return sum(_multichoose(n, k) for k in range(1, self.max_orders + 1))

    def widened(self, amounts=(), rates=()) -> "StrategyGrid":
        amounts = tuple(to_q(a) for a in amounts)
        rates = tuple(to_q(r) for r in rates)
        return replace(self, amounts=self.amounts + amounts, rates=self.rates + rates)

    def describe(self) -> dict:
        return {
            "amounts": [format_rational(a) for a in self.amounts],
            "rates": [format_rational(r) for r in self.rates],
            "sides": [s.value for s in self.sides],
            "max_orders": self.max_orders,
            "arrival_offsets": [format_rational(a) for a in self.arrival_offsets],
            "per_order_arrivals": self.per_order_arrivals,
            "censor_bound": self.censor_bound,
            "multisets": self.size(),
        }


def _multichoose(n: int, k: int) -> int:
    from math import comb

    return comb(n + k - 1, k)


# ---------------------------------------------------------------- arbitrage


@dataclass
class ArbWitness:
    """A profitable subset of the adversary's fills.

    ``orders`` is every order that went into the run (honest ones after
    censorship plus the adversary's), ``subset`` the ids of the fills whose
    sum is the nonnegative, nonzero ``gain``.
    """

    engine: str
    pool: PoolState
    tiebreak: TieBreak
    orders: list
    strategic_user: str
    subset: list
    gain: Outcome
    censored: list = field(default_factory=list)

    def __post_init__(self):
        if self.gain.dx < 0 or self.gain.dy < 0 or (self.gain.dx == 0 and self.gain.dy == 0):
            raise ValueError("a witness needs a nonnegative, nonzero gain")

    def to_json(self) -> dict:
        return {
            "engine": self.engine,
            "pool": {"x": format_rational(self.pool.x), "y": format_rational(self.pool.y)},
            "tiebreak": self.tiebreak.to_json(),
            "strategic_user": self.strategic_user,
            "orders": [order_to_json(o) for o in self.orders],
            "censored": list(self.censored),
            "subset": list(self.subset),
            "gain": self.gain.to_json(),
        }


def order_to_json(order: Order) -> dict:
    return {
        "id": order.id,
        "user": order.user,
        "side": order.side.value,
        "amount": format_rational(order.amount),
        "rate": format_rational(order.limit_rate),
        "arrival": format_rational(order.arrival),
        "submit_index": order.submit_index,
    }


def _profitable_subset(gains: Sequence[tuple]) -> Optional[tuple]:
    """First subset mask (smallest size, then lexicographic) that is an arbitrage."""
    n = len(gains)
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            dx = sum((gains[i][0] for i in combo), _ZERO)
            dy = sum((gains[i][1] for i in combo), _ZERO)
            if dx >= 0 and dy >= 0 and (dx > 0 or dy > 0):
                return combo
    return None


def find_arbitrage(outcome: BatchOutcome, strategic_user: str, limit: int = MAX_ARB_FILLS) -> Optional[ArbWitness]:
    """Check every subset of ``strategic_user``'s fills for a free gain."""
    fills = outcome.fills_of(strategic_user)
    if len(fills) > limit:
        raise ValueError(f"{len(fills)} fills means {2 ** len(fills) - 1} subsets; refusing above {limit} fills")
    combo = _profitable_subset([(f.dx, f.dy) for f in fills])
    if combo is None:
        return None
    chosen = [fills[i] for i in combo]
    gain = Outcome(sum((f.dx for f in chosen), _ZERO), sum((f.dy for f in chosen), _ZERO))
    return ArbWitness(
        engine=outcome.engine,
        pool=outcome.start_pool,
        tiebreak=ARRIVAL_STABLE,
        orders=[],
        strategic_user=strategic_user,
        subset=[f.order_id for f in chosen],
        gain=gain,
    )


def _arrival_anchors(honest: Sequence[Order]) -> list:
    """Arrivals that place an order before everyone or right after each honest arrival."""
    if not honest:
        return [_ZERO]
    arrivals = sorted({o.arrival for o in honest})
    return [arrivals[0] - 1] + arrivals


def _censor_sets(honest: Sequence[Order], model: Model, bound: int) -> list[tuple]:
    if model is Model.WFS or len(honest) > bound:
        return [tuple(honest)]
    out = []
    for size in range(len(honest), -1, -1):
        out.extend(itertools.combinations(honest, size))
    return out


def _adversary_templates(grid: StrategyGrid, engine: Engine, r0) -> list[tuple]:
    """Grid templates, minus those a filtering engine would drop at ``r0``.

    A dropped order is the same as no order, which the smaller multisets
    already cover.
    """
    out = []
    for side, amount, rate in grid.templates():
        if engine.filters_at_open:
            buys_x = side in (kernels.BUY_X, kernels.SELL_Y)
            if (buys_x and rate < r0) or (not buys_x and rate > r0):
                continue
        out.append((side, amount, rate))
    return out


def _arrival_choices(k: int, anchors: Sequence, per_order: bool) -> Iterator[tuple]:
    if per_order:
        yield from itertools.product(anchors, repeat=k)
    else:
        for a in anchors:
            yield (a,) * k


def search_arbitrage(
    scenario: Scenario,
    grid: StrategyGrid,
    engine: Optional[Engine] = None,
    stats: Optional[dict] = None,
) -> list[ArbWitness]:
    """Every adversary multiset on the grid that yields an arbitrage.

    Plain: arrivals range over anchors around the honest arrivals and the
    honest orders may be censored. WeakFairSequencing: arrivals are the
    adversary's true arrival plus the grid offsets, nothing censored.
    """
    engine = engine or scenario.engine()
    pool, potential, tiebreak = scenario.pool, scenario.potential, scenario.tiebreak
    seed = tiebreak.seed if tiebreak.mode == "random" else None
    r0 = potential.rate(pool.x, pool.y)
    honest_all = list(scenario.honest_orders)
    if any(o.user == ADVERSARY for o in honest_all):
        raise ValueError(f"honest orders may not belong to {ADVERSARY!r}")
    templates = _adversary_templates(grid, engine, r0)
    base_index = max((o.submit_index for o in honest_all), default=-1) + 1
    alpha_star = scenario.adversary_type.arrival if scenario.adversary_type is not None else None
    if alpha_star is None:
        alpha_star = max((o.arrival for o in honest_all), default=_ZERO)

    runs = 0
    witnesses: list[ArbWitness] = []
    for kept in _censor_sets(honest_all, scenario.model, grid.censor_bound):
        kept = list(kept)
        censored = [o.id for o in honest_all if o not in kept]
        h_tuples = [as_tuple(o) for o in kept]
        h_users = [o.user for o in kept]
        if not engine.arrival_matters(tiebreak):
            anchors = [alpha_star]
        elif scenario.model is Model.PLAIN:
            anchors = _arrival_anchors(kept)
        else:
            anchors = [alpha_star + off for off in grid.arrival_offsets]
        for k in range(1, grid.max_orders + 1):
            users = h_users + [ADVERSARY] * k
            for combo in itertools.combinations_with_replacement(templates, k):
                for arrivals in _arrival_choices(k, anchors, grid.per_order_arrivals):
                    adv = [
                        (side, amount, rate, arrivals[i], base_index + i)
                        for i, (side, amount, rate) in enumerate(combo)
                    ]
                    dxs, dys = engine.clear(pool, h_tuples + adv, users, seed, potential)
                    runs += 1
                    gains = list(zip(dxs[-k:], dys[-k:]))
                    if _profitable_subset(gains) is None:
                        continue
                    witnesses.append(
                        _confirm_witness(scenario, engine, kept, censored, adv, base_index)
                    )
    if stats is not None:
        stats["runs"] = stats.get("runs", 0) + runs
        stats["templates"] = len(templates)
    return witnesses


def _confirm_witness(scenario, engine, kept, censored, adv, base_index) -> ArbWitness:
    orders = list(kept) + [
        Order(f"adv-{t[4] - base_index}", ADVERSARY, _CODE_SIDE[t[0]], t[1], t[2], t[3], t[4]) for t in adv
    ]
    out = engine.run(scenario.pool, orders, scenario.tiebreak, scenario.potential)
    found = find_arbitrage(out, ADVERSARY)
    if found is None:
        raise InvariantViolation("lean kernel and full engine disagree on an arbitrage")
    found.tiebreak = scenario.tiebreak
    found.orders = orders
    found.censored = censored
    return found


# ---------------------------------------------------------------- legacy sandwich


@dataclass(frozen=True)
class SandwichResult:
    front_amount: Q
    profit: Q
    outcome: Optional[BatchOutcome] = None


FRONT_LIMIT = Q(10) ** 30


def sandwich_orders(victim: Order, amount, submit_base: int = 0) -> list[Order]:
    amount = to_q(amount)
    front = Order("sandwich-front", ADVERSARY, Side.BUY_X, amount, FRONT_LIMIT, victim.arrival, submit_base)
    back = Order("sandwich-back", ADVERSARY, Side.SELL_X, amount, 1 / FRONT_LIMIT, victim.arrival, submit_base + 2)
    return [front, replace(victim, submit_index=submit_base + 1), back]


def sandwich_attack(
    pool: PoolState, victim_order: Order, amounts: Iterable, potential: PotentialFunction = CONSTANT_PRODUCT
) -> SandwichResult:
    """Best front-run size on the grid for a buy-sell wrap of ``victim_order``.

    Profit is the attacker's net Y; the back-run sells exactly what the
    front-run bought, so the attacker's net X is zero whenever both fill.
    """
    if victim_order.side is not Side.BUY_X:
        raise ValueError("the sandwich baseline wraps a BuyX victim")
    best = SandwichResult(_ZERO, _ZERO, None)
    for a in sorted({to_q(a) for a in amounts}):
        if a <= 0 or a >= pool.x:
            continue
        seq = sandwich_orders(victim_order, a)
        out = legacy_sequential_run(pool, seq, potential)
        front, _, back = out.fills
        if front.dx + back.dx != 0:
            continue
        profit = front.dy + back.dy
        if profit > best.profit:
            best = SandwichResult(a, profit, out)
    return best


# ---------------------------------------------------------------- incentive compatibility


@dataclass
class ICCounterexample:
    user_type: UserType
    deviation: list
    honest: Outcome
    deviant: Outcome
    comparison: str

    def to_json(self) -> dict:
        t = self.user_type
        return {
            "user_type": {
                "side": t.side.value,
                "amount": format_rational(t.amount),
                "rate": format_rational(t.rate),
                "arrival": format_rational(t.arrival),
            },
            "deviation": [order_to_json(o) for o in self.deviation],
            "honest": self.honest.to_json(),
            "deviant": self.deviant.to_json(),
            "comparison": self.comparison,
        }


def _deviations(
    templates: Sequence[tuple], grid: StrategyGrid, alpha_star, base_index: int, max_orders: int
) -> Iterator[list]:
    anchors = [alpha_star + off for off in grid.arrival_offsets]
    yield []
    for k in range(1, max_orders + 1):
        for combo in itertools.combinations_with_replacement(templates, k):
            for arrivals in _arrival_choices(k, anchors, grid.per_order_arrivals):
                yield [(s, a, r, arrivals[i], base_index + i) for i, (s, a, r) in enumerate(combo)]


def _outcome_of(dxs, dys, k) -> Outcome:
    if k == 0:
        return Outcome()
    return Outcome(sum(dxs[-k:], _ZERO), sum(dys[-k:], _ZERO))


def _check_ic_scenario(scenario: Scenario):
    if scenario.model is not Model.WFS:
        raise ValueError("incentive compatibility is only claimed under weak fair sequencing")
    if scenario.tiebreak.mode != "arrival":
        raise ValueError("the IC search runs under arrival-stable tie-breaking")
    if any(o.user == STRATEGIC for o in scenario.honest_orders):
        raise ValueError(f"honest orders may not belong to {STRATEGIC!r}")


def search_ic_deviations(
    scenario: Scenario,
    user_type: UserType,
    grid: StrategyGrid,
    engine: Optional[Engine] = None,
    stats: Optional[dict] = None,
) -> list[ICCounterexample]:
    """Deviations of a ``user_type`` user that it strictly prefers to honesty.

    The strategic user's orders come after every honest submit index in
    both the honest and the deviant runs. The grid is widened with the
    type's own amount and rate.
    """
    _check_ic_scenario(scenario)
    engine = engine or BATCH
    pool, potential = scenario.pool, scenario.potential
    r0 = potential.rate(pool.x, pool.y)
    honest_orders = list(scenario.honest_orders)
    h_tuples = [as_tuple(o) for o in honest_orders]
    h_users = [o.user for o in honest_orders]
    base_index = max((o.submit_index for o in honest_orders), default=-1) + 1
    for dev in scenario.extra_deviations:
        base_index = max([base_index] + [o.submit_index + 1 for o in dev])

    truthful = honest_strategy(user_type, STRATEGIC, submit_index=base_index)
    truthful = replace(truthful, arrival=user_type.arrival)
    dxs, dys = engine.clear(pool, h_tuples + [as_tuple(truthful)], h_users + [STRATEGIC], None, potential)
    honest_out = _outcome_of(dxs, dys, 1)
    frame = frame_of(user_type)
    hp, hq = frame.project(honest_out)
    honest_value = frame.rho * hp + hq

    wide = grid.widened([user_type.amount], [user_type.rate])
    templates = _adversary_templates(wide, engine, r0)
    max_orders = min(grid.max_orders, 2) if grid.max_orders else 0
    runs = 0
    found: list[ICCounterexample] = []

    def judge(tuples, users, k, make_orders):
        nonlocal runs
        dxs, dys = engine.clear(pool, tuples, users, None, potential)
        runs += 1
        dev_out = _outcome_of(dxs, dys, k)
        p, q = frame.project(dev_out)
        # every rule keeps rho*p + q from falling, so a lower value cannot dominate
        if frame.rho * p + q < honest_value or tuple(dev_out) == tuple(honest_out):
            return
        verdict = compare(user_type, dev_out, honest_out)
        if verdict is Comparison.BETTER:
            found.append(ICCounterexample(user_type, make_orders(), honest_out, dev_out, verdict.value))

    for dev in _deviations(templates, wide, user_type.arrival, base_index, max_orders):
        k = len(dev)
        judge(
            h_tuples + dev,
            h_users + [STRATEGIC] * k,
            k,
            lambda dev=dev: [
                Order(f"{STRATEGIC}-{i}", STRATEGIC, _CODE_SIDE[t[0]], t[1], t[2], t[3], t[4])
                for i, t in enumerate(dev)
            ],
        )
    for dev in scenario.extra_deviations:
        if any(o.arrival < user_type.arrival for o in dev):
            raise ValueError("an extra deviation arrives before the user's true arrival")
        k = len(dev)
        judge(h_tuples + [as_tuple(o) for o in dev], h_users + [STRATEGIC] * k, k, lambda dev=dev: list(dev))
    if stats is not None:
        stats["runs"] = stats.get("runs", 0) + runs
    return found


@dataclass
class TotalOrderCounterexample:
    belief_rate: Q
    deviation: list
    honest_value: Q
    deviant_value: Q

    def to_json(self) -> dict:
        return {
            "belief_rate": format_rational(self.belief_rate),
            "deviation": [order_to_json(o) for o in self.deviation],
            "honest_value": format_rational(self.honest_value),
            "deviant_value": format_rational(self.deviant_value),
        }


def search_ic_noshort(
    scenario: Scenario,
    belief_rate,
    arrival,
    grid: StrategyGrid,
    stats: Optional[dict] = None,
) -> list[TotalOrderCounterexample]:
    """Deviations that raise the strategic user's position value ``belief*x + y``.

    ``scenario.ledger`` must hold the strategic user's balance.
    """
    _check_ic_scenario(scenario)
    if scenario.ledger is None or STRATEGIC not in scenario.ledger:
        raise ValueError(f"the ledger needs a position for {STRATEGIC!r}")
    belief_rate, arrival = to_q(belief_rate), to_q(arrival)
    engine = NoShortEngine(scenario.ledger)
    pool, potential = scenario.pool, scenario.potential
    r0 = potential.rate(pool.x, pool.y)
    honest_orders = list(scenario.honest_orders)
    h_tuples = [as_tuple(o) for o in honest_orders]
    h_users = [o.user for o in honest_orders]
    base_index = max((o.submit_index for o in honest_orders), default=-1) + 1

    position = scenario.ledger[STRATEGIC]
    truthful = honest_strategy_noshort(belief_rate, position, r0, arrival, STRATEGIC, submit_index=base_index)
    dxs, dys = engine.clear(pool, h_tuples + [as_tuple(truthful)], h_users + [STRATEGIC], None, potential)
    honest_value = total_value(belief_rate, _outcome_of(dxs, dys, 1))

    wide = grid.widened([a for a in (position.x, position.y) if a > 0], [belief_rate])
    templates = _adversary_templates(wide, engine, r0)
    max_orders = min(grid.max_orders, 2)
    runs = 0
    found = []
    for dev in _deviations(templates, wide, arrival, base_index, max_orders):
        k = len(dev)
        dxs, dys = engine.clear(pool, h_tuples + dev, h_users + [STRATEGIC] * k, None, potential)
        runs += 1
        value = total_value(belief_rate, _outcome_of(dxs, dys, k))
        if value > honest_value:
            orders = [
                Order(f"{STRATEGIC}-{i}", STRATEGIC, _CODE_SIDE[t[0]], t[1], t[2], t[3], t[4])
                for i, t in enumerate(dev)
            ]
            found.append(TotalOrderCounterexample(belief_rate, orders, honest_value, value))
    if stats is not None:
        stats["runs"] = stats.get("runs", 0) + runs
    return found


# ---------------------------------------------------------------- IC implies AR


def arbitrage_to_ic_violation(witness: Optional[ArbWitness], scenario: Scenario) -> Optional[Scenario]:
    """Recast an arbitrage as a zero-demand user's profitable deviation.

    The witness's profitable orders S' become the strategic user's extra
    deviation; every other order of the run stays as an honest order.
    """
    if witness is None:
        return None
    if witness.pool != scenario.pool:
        raise ValueError("witness was found on a different pool")
    if scenario.ledger is not None:
        raise ValueError("conversion is defined for ledger-free scenarios")
    if witness.tiebreak.mode != "arrival" and witness.engine != LEGACY.id:
        raise ValueError("the IC harness replays runs under arrival-stable tie-breaking only")
    ids = {o.id for o in witness.orders}
    if not set(witness.subset) <= ids:
        raise ValueError("witness subset names orders that were not in the run")
    honest_ids = {o.id for o in scenario.honest_orders}
    for o in witness.orders:
        if o.user != witness.strategic_user and o.id not in honest_ids:
            raise ValueError(f"order {o.id!r} is neither the adversary's nor in the scenario")
    chosen = [o for o in witness.orders if o.id in set(witness.subset)]
    rest = tuple(o for o in witness.orders if o.id not in set(witness.subset))
    injected = tuple(replace(o, user=STRATEGIC) for o in chosen)
    r0 = scenario.potential.rate(scenario.pool.x, scenario.pool.y)
    zero_type = UserType(Side.BUY_X, _ZERO, r0, min(o.arrival for o in injected))
    return Scenario(
        pool=scenario.pool,
        honest_orders=rest,
        adversary_type=zero_type,
        model=Model.WFS,
        tiebreak=ARRIVAL_STABLE,
        potential=scenario.potential,
        extra_deviations=(injected,),
    )


def timed(fn, *args, **kwargs):
    """``(result, seconds)`` for one call."""
    start = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - start
