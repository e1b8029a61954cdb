"""Batch mechanism variant that never lets a user's balance go negative.

Every execution is "safe": capped by what the user actually holds. The
dominant side is decided by trial-executing the sorted batch at ``r0``
against a scratch copy of the ledger, and the zero-sum prefix is located
from the per-order net X gains of that trial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .amm import CONSTANT_PRODUCT, InvariantViolation, PoolState, PotentialFunction
from .mechanism import (
    aggregate_fills,
    check_unique_ids,
    filter_eligible,
    find_cut,
    fixed_rate_trade,
    order_groups,
    primary_amount,
)
from .model import (
    ARRIVAL_STABLE,
    BatchOutcome,
    Dominance,
    Order,
    OrderFill,
    Phase,
    Side,
    TieBreak,
    TraceStep,
)
from .numerics import Q, format_rational, to_q

_ZERO = Q(0)


@dataclass(frozen=True)
class Position:
    x: Q
    y: Q

    def __post_init__(self):
        x, y = to_q(self.x), to_q(self.y)
        if x < 0 or y < 0:
            raise ValueError(f"negative position ({x}, {y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def moved(self, dx, dy) -> "Position":
        return Position(self.x + dx, self.y + dy)

    def to_json(self) -> dict:
        return {"x": format_rational(self.x), "y": format_rational(self.y)}


class Ledger:
    """Balances keyed by user id; unknown users cannot trade."""

    def __init__(self, positions: Optional[Mapping[str, Position]] = None):
        self.positions: dict[str, Position] = {}
        for user, pos in (positions or {}).items():
            self.positions[user] = pos if isinstance(pos, Position) else Position(*pos)

    def __contains__(self, user):
        return user in self.positions

    def __getitem__(self, user) -> Position:
        return self.positions[user]

    def __eq__(self, other):
        return isinstance(other, Ledger) and self.positions == other.positions

    def __repr__(self):
        return f"Ledger({self.positions!r})"

    def copy(self) -> "Ledger":
        return Ledger(dict(self.positions))

    def apply(self, user, dx, dy):
        self.positions[user] = self.positions[user].moved(dx, dy)

    def to_json(self) -> dict:
        return {u: p.to_json() for u, p in sorted(self.positions.items())}


def phase1_cap(order: Order, r0, pos: Position):
    """Largest amount of ``order`` the holder can settle at ``r0``."""
    side = order.side
    if side is Side.BUY_X:
        cap = pos.y / r0
    elif side is Side.SELL_X:
        cap = pos.x
    elif side is Side.BUY_Y:
        cap = pos.x * r0
    else:
        cap = pos.y
    return min(order.amount, cap)


def safe_execute_phase1(order: Order, r0, ledger: Ledger) -> OrderFill:
    """Settle as much of ``order`` at ``r0`` as the user's balance allows."""
    if order.user not in ledger:
        return OrderFill(order.id, order.user, order.side, _ZERO, None, Phase.SKIPPED)
    amount = phase1_cap(order, r0, ledger[order.user])
    dx, dy = fixed_rate_trade(order, amount, r0)
    ledger.apply(order.user, dx, dy)
    return OrderFill(order.id, order.user, order.side, amount, r0 if amount else None, Phase.ONE, dx, dy)


def safe_execute_phase2(
    order: Order, pool: PoolState, ledger: Ledger, potential: PotentialFunction = CONSTANT_PRODUCT
) -> tuple[OrderFill, PoolState]:
    """Trade ``order`` against the pool within its limit rate and the user's balance."""
    if order.user not in ledger:
        return OrderFill(order.id, order.user, order.side, _ZERO, None, Phase.SKIPPED), pool
    pos = ledger[order.user]
    side, limit, v = order.side, order.limit_rate, order.amount
    if side is Side.BUY_X:
        after = potential.buy_x(pool, limit, v, pos.y)
    elif side is Side.SELL_Y:
        after = potential.buy_x(pool, limit, None, min(v, pos.y))
    elif side is Side.SELL_X:
        after = potential.sell_x(pool, limit, min(v, pos.x), None)
    else:
        after = potential.sell_x(pool, limit, pos.x, v)
    dx, dy = pool.x - after.x, pool.y - after.y
    ledger.apply(order.user, dx, dy)
    amount = primary_amount(order, dx, dy)
    avg = abs(dy) / abs(dx) if dx != 0 else None
    return OrderFill(order.id, order.user, side, amount, avg, Phase.TWO, dx, dy), after


def trial_betas(ordered: Sequence[Order], r0, ledger: Ledger) -> list:
    """Net X gain of each order when the list is safe-executed at ``r0``."""
    scratch = ledger.copy()
    return [safe_execute_phase1(o, r0, scratch).dx for o in ordered]


def run_batch_noshort(
    pool: PoolState,
    ledger: Ledger,
    orders: Sequence[Order],
    tiebreak: TieBreak = ARRIVAL_STABLE,
    potential: PotentialFunction = CONSTANT_PRODUCT,
) -> tuple[BatchOutcome, Ledger]:
    """Clear a batch without short-selling; returns the outcome and new ledger.

    The input ledger is not modified. ``outcome.ledger_trace`` holds the
    position of the acting user after every trace step.
    """
    check_unique_ids(orders)
    r0 = potential.rate(pool.x, pool.y)
    kept, skipped = filter_eligible(orders, r0)
    skipped = skipped + [o for o in kept if o.user not in ledger]
    kept = [o for o in kept if o.user in ledger]

    wants_x, wants_y = order_groups(kept, tiebreak)
    ordered = wants_y + wants_x
    betas = trial_betas(ordered, r0, ledger)
    # Sells first maximises the net X gain, so a negative total here is
    # negative under every other arrangement as well.
    if sum(betas, _ZERO) >= 0:
        dominance = Dominance.BUY_X
    else:
        dominance = Dominance.BUY_Y
        ordered = wants_x + wants_y
        betas = trial_betas(ordered, r0, ledger)
    ordered, j, split = find_cut(ordered, betas, dominance, r0)

    live = ledger.copy()
    trace: list[TraceStep] = []
    positions: list[Position] = []
    net_x = net_y = _ZERO
    for order in ordered[:j]:
        fill = safe_execute_phase1(order, r0, live)
        net_x += fill.dx
        net_y += fill.dy
        trace.append(TraceStep(order.id, order.root_id, order.user, Phase.ONE, pool, pool, fill.dx, fill.dy))
        positions.append(live[order.user])
    if net_x != 0 or net_y != 0:
        raise InvariantViolation(f"phase 1 is not balanced: net ({net_x}, {net_y})")

    current = pool
    for order in ordered[j:]:
        fill, after = safe_execute_phase2(order, current, live, potential)
        trace.append(TraceStep(order.id, order.root_id, order.user, Phase.TWO, current, after, fill.dx, fill.dy))
        positions.append(live[order.user])
        current = after
    if potential.phi(pool.x, pool.y) != potential.phi(current.x, current.y):
        raise InvariantViolation("batch changed the pool potential")

    outcome = BatchOutcome(
        fills=aggregate_fills(orders, trace, [o.id for o in skipped]),
        start_pool=pool,
        end_pool=current,
        trace=trace,
        dominance=dominance,
        split=split,
        engine="noshort",
    )
    outcome.ledger_trace = positions
    return outcome, live


def honest_strategy_noshort(belief_rate, position: Position, r0, arrival=_ZERO, user: str = "u", order_id=None, submit_index: int = 0) -> Order:
    """Sell everything of the asset the user values below the market.

    Belief above ``r0``: X is cheap, so sell all Y for X. Belief below:
    sell all X. Belief equal: a zero-amount SellX order.
    """
    belief_rate, r0 = to_q(belief_rate), to_q(r0)
    if belief_rate > r0:
        side, amount = Side.SELL_Y, position.y
    elif belief_rate < r0:
        side, amount = Side.SELL_X, position.x
    else:
        side, amount = Side.SELL_X, _ZERO
    return Order(
        id=order_id or f"{user}-honest",
        user=user,
        side=side,
        amount=amount,
        limit_rate=belief_rate,
        arrival=arrival,
        submit_index=submit_index,
    )
