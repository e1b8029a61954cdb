"""Two-phase batch swap mechanism.

A batch is cleared against the pool's initial rate ``r0``:

1. orders that cannot trade at ``r0`` are dropped;
2. the net demand ``sigma`` (in X units at ``r0``) picks the dominant side;
3. minority-side orders go first, and the sorted list is cut (splitting one
   order if needed) where the running net demand reaches exactly zero;
4. that balanced prefix trades at ``r0`` without touching the pool;
5. the remaining dominant-side orders trade against the pool one at a time,
   each as far as its limit rate allows.
"""

from __future__ import annotations

import random
from typing import Iterable, Optional, Sequence

from . import kernels
from .amm import CONSTANT_PRODUCT, ConstantProduct, InvariantViolation, PoolState, PotentialFunction
from .model import (
    ARRIVAL_STABLE,
    BatchOutcome,
    Dominance,
    Order,
    OrderFill,
    Phase,
    Side,
    SplitInfo,
    TieBreak,
    TraceStep,
    UserType,
)
from .numerics import Q

_ZERO = Q(0)


def is_eligible(order: Order, r0) -> bool:
    if order.side.wants_x:
        return order.limit_rate >= r0
    return order.limit_rate <= r0


def filter_eligible(orders: Iterable[Order], r0) -> tuple[list[Order], list[Order]]:
    """Split into (kept, skipped); a limit exactly at ``r0`` is kept."""
    kept, skipped = [], []
    for order in orders:
        (kept if is_eligible(order, r0) else skipped).append(order)
    return kept, skipped


def beta(order: Order, r0):
    """Signed X demand of an order when valued at ``r0``."""
    side = order.side
    if side is Side.BUY_X:
        return order.amount
    if side is Side.SELL_X:
        return -order.amount
    if side is Side.BUY_Y:
        return -order.amount / r0
    return order.amount / r0


def classify_dominance(orders: Iterable[Order], r0) -> Dominance:
    sigma = sum((beta(o, r0) for o in orders), _ZERO)
    return Dominance.BUY_X if sigma >= 0 else Dominance.BUY_Y


def order_groups(orders: Sequence[Order], tiebreak: TieBreak) -> tuple[list[Order], list[Order]]:
    """Return ``(wants_x, wants_y)`` groups, each ordered by the tie-break."""
    wants_x = [o for o in orders if o.side.wants_x]
    wants_y = [o for o in orders if not o.side.wants_x]
    if tiebreak.mode == "arrival":
        key = lambda o: (o.arrival, o.submit_index)
        wants_x.sort(key=key)
        wants_y.sort(key=key)
    else:
        # Shuffle from submission order so the result ignores list order.
        key = lambda o: o.submit_index
        wants_x.sort(key=key)
        wants_y.sort(key=key)
        rng = random.Random(tiebreak.seed)
        rng.shuffle(wants_x)
        rng.shuffle(wants_y)
    return wants_x, wants_y


def split_order(order: Order, first) -> tuple[Order, Order]:
    """Cut ``order`` into halves carrying ``first`` and the rest."""
    base = dict(
        user=order.user,
        side=order.side,
        limit_rate=order.limit_rate,
        arrival=order.arrival,
        submit_index=order.submit_index,
        parent=order.root_id,
    )
    return (
        Order(id=f"{order.id}#0", amount=first, **base),
        Order(id=f"{order.id}#1", amount=order.amount - first, **base),
    )


def find_cut(
    ordered: Sequence[Order], weights: Sequence, dominance: Dominance, r0
) -> tuple[list[Order], int, Optional[SplitInfo]]:
    """Locate the zero-sum prefix, splitting the boundary order if needed.

    ``weights`` are the signed X contributions of ``ordered``. Returns the
    (possibly one longer) list, the prefix length and the split record.
    """
    sign = 1 if dominance is Dominance.BUY_X else -1
    running = _ZERO
    for i, w in enumerate(weights):
        after = running + sign * w
        if after > 0:
            if running == 0:
                return list(ordered), i, None
            order = ordered[i]
            # -running is the part of this order's contribution that balances the prefix
            share = -running
            first = share * r0 if order.side.y_denominated else share
            head, tail = split_order(order, first)
            out = list(ordered[:i]) + [head, tail] + list(ordered[i + 1 :])
            return out, i + 1, SplitInfo(order.id, head.amount, tail.amount)
        running = after
    return list(ordered), len(ordered), None


def sort_and_split(
    orders: Sequence[Order], dominance: Dominance, tiebreak: TieBreak, r0
) -> tuple[list[Order], int, Optional[SplitInfo]]:
    """Minority side first, then the dominant side; cut at the zero-sum prefix."""
    wants_x, wants_y = order_groups(orders, tiebreak)
    ordered = wants_y + wants_x if dominance is Dominance.BUY_X else wants_x + wants_y
    return find_cut(ordered, [beta(o, r0) for o in ordered], dominance, r0)


def fixed_rate_trade(order: Order, amount, r0) -> tuple:
    """User gains ``(dx, dy)`` when ``amount`` of ``order`` trades at ``r0``."""
    side = order.side
    if side is Side.BUY_X:
        return amount, -amount * r0
    if side is Side.SELL_X:
        return -amount, amount * r0
    if side is Side.BUY_Y:
        return -amount / r0, amount
    return amount / r0, -amount


def primary_amount(order: Order, dx, dy):
    """Fulfilled amount in the order's own units."""
    return abs(dy) if order.side.y_denominated else abs(dx)


def execute_phase1(pool: PoolState, prefix: Sequence[Order], r0) -> list[TraceStep]:
    steps = []
    net_x = net_y = _ZERO
    for order in prefix:
        dx, dy = fixed_rate_trade(order, order.amount, r0)
        net_x += dx
        net_y += dy
        steps.append(TraceStep(order.id, order.root_id, order.user, Phase.ONE, pool, pool, dx, dy))
    if net_x != 0 or net_y != 0:
        raise InvariantViolation(f"phase 1 is not balanced: net ({net_x}, {net_y})")
    return steps


def phase2_step(order: Order) -> tuple:
    """Kernel step ``(direction, limit, dx_max, dy_max)`` for a sequential fill."""
    side = order.side
    if side is Side.BUY_X:
        return kernels.BUY, order.limit_rate, order.amount, None
    if side is Side.SELL_Y:
        return kernels.BUY, order.limit_rate, None, order.amount
    if side is Side.SELL_X:
        return kernels.SELL, order.limit_rate, order.amount, None
    return kernels.SELL, order.limit_rate, None, order.amount


def execute_sequential(
    pool: PoolState,
    orders: Sequence[Order],
    potential: PotentialFunction = CONSTANT_PRODUCT,
    phase: Phase = Phase.TWO,
) -> tuple[list[TraceStep], PoolState]:
    """Fill each order in turn as far as its limit rate and amount allow."""
    steps_in = [phase2_step(o) for o in orders]
    if isinstance(potential, ConstantProduct):
        reserves = kernels.run_sequence(pool.x, pool.y, steps_in, potential.bits)
        afters = [pool if x is pool.x else PoolState._unchecked(x, y) for x, y in reserves]
    else:
        afters, cur = [], pool
        for direction, limit, dx_max, dy_max in steps_in:
            if direction == kernels.BUY:
                cur = potential.buy_x(cur, limit, dx_max, dy_max)
            else:
                cur = potential.sell_x(cur, limit, dx_max, dy_max)
            afters.append(cur)
    trace = []
    before = pool
    for order, after in zip(orders, afters):
        dx, dy = before.x - after.x, before.y - after.y
        trace.append(TraceStep(order.id, order.root_id, order.user, phase, before, after, dx, dy))
        before = after
    return trace, before


def execute_phase2(
    pool: PoolState, suffix: Sequence[Order], potential: PotentialFunction = CONSTANT_PRODUCT
) -> tuple[list[TraceStep], PoolState]:
    if suffix:
        wants_x = suffix[0].side.wants_x
        if any(o.side.wants_x != wants_x for o in suffix):
            raise ValueError("phase 2 takes orders from one side only")
    return execute_sequential(pool, suffix, potential)


def aggregate_fills(orders: Sequence[Order], trace: Sequence[TraceStep], skipped_ids=()) -> list[OrderFill]:
    """One fill per submitted order, merging split halves under the parent id."""
    by_parent: dict[str, list[TraceStep]] = {}
    for step in trace:
        by_parent.setdefault(step.parent_id, []).append(step)
    skipped_ids = set(skipped_ids)
    fills = []
    for order in orders:
        steps = by_parent.get(order.id, [])
        dx = sum((s.dx for s in steps), _ZERO)
        dy = sum((s.dy for s in steps), _ZERO)
        if order.id in skipped_ids or not steps:
            phase = Phase.SKIPPED
        else:
            # a split order reports the phase of its pool-facing half
            phases = {s.phase for s in steps}
            phase = Phase.ONE if phases == {Phase.ONE} else (phases - {Phase.ONE}).pop()
        fills.append(
            OrderFill(
                order_id=order.id,
                user=order.user,
                side=order.side,
                fulfilled=primary_amount(order, dx, dy),
                avg_rate=abs(dy) / abs(dx) if dx != 0 else None,
                phase=phase,
                dx=dx,
                dy=dy,
            )
        )
    return fills


def check_unique_ids(orders: Sequence[Order]):
    seen = set()
    for o in orders:
        if o.id in seen:
            raise ValueError(f"duplicate order id {o.id!r}")
        seen.add(o.id)


def run_batch(
    start_pool: PoolState,
    orders: Sequence[Order],
    tiebreak: TieBreak = ARRIVAL_STABLE,
    potential: PotentialFunction = CONSTANT_PRODUCT,
) -> BatchOutcome:
    check_unique_ids(orders)
    r0 = potential.rate(start_pool.x, start_pool.y)
    kept, skipped = filter_eligible(orders, r0)
    dominance = classify_dominance(kept, r0)
    ordered, j, split = sort_and_split(kept, dominance, tiebreak, r0)
    trace = execute_phase1(start_pool, ordered[:j], r0)
    phase2, end_pool = execute_phase2(start_pool, ordered[j:], potential)
    trace.extend(phase2)
    if potential.phi(start_pool.x, start_pool.y) != potential.phi(end_pool.x, end_pool.y):
        raise InvariantViolation("batch changed the pool potential")
    return BatchOutcome(
        fills=aggregate_fills(orders, trace, [o.id for o in skipped]),
        start_pool=start_pool,
        end_pool=end_pool,
        trace=trace,
        dominance=dominance,
        split=split,
        engine="batch",
    )


def honest_strategy(user_type: UserType, user: str = "u", order_id: Optional[str] = None, submit_index: int = 0) -> Order:
    """Truthful single order for ``user_type``."""
    return Order(
        id=order_id or f"{user}-honest",
        user=user,
        side=user_type.side,
        amount=user_type.amount,
        limit_rate=user_type.rate,
        arrival=user_type.arrival,
        submit_index=submit_index,
    )
