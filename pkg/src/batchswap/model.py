"""Value types shared by the engines, orderings and searches."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .amm import PoolState
from .numerics import Q, format_rational, to_q


class Side(enum.Enum):
    BUY_X = "BuyX"
    SELL_X = "SellX"
    BUY_Y = "BuyY"
    SELL_Y = "SellY"

    @property
    def wants_x(self) -> bool:
        """True for the sides that take X out of the pool (BuyX, SellY)."""
        return self is Side.BUY_X or self is Side.SELL_Y

    @property
    def y_denominated(self) -> bool:
        return self is Side.BUY_Y or self is Side.SELL_Y

    @classmethod
    def parse(cls, text: str) -> "Side":
        key = text.replace("_", "").replace("(", "").replace(")", "").lower()
        for side in cls:
            if side.value.lower() == key:
                return side
        raise ValueError(f"unknown order side {text!r}")

    def __str__(self):
        return self.value


class Phase(enum.Enum):
    ONE = "one"
    TWO = "two"
    SKIPPED = "skipped"
    SEQUENTIAL = "sequential"


class Dominance(enum.Enum):
    BUY_X = "BuyXDominant"
    BUY_Y = "BuyYDominant"


@dataclass(frozen=True)
class Order:
    """A limit order ``(side, amount, limit_rate, arrival)``.

    ``amount`` is in units of the order's primary asset (Y for BuyY/SellY).
    ``limit_rate`` is always Y per X.
    """

    id: str
    user: str
    side: Side
    amount: Q
    limit_rate: Q
    arrival: Q = Q(0)
    submit_index: int = 0
    parent: Optional[str] = None

    def __post_init__(self):
        amount, limit, arrival = to_q(self.amount), to_q(self.limit_rate), to_q(self.arrival)
        if amount < 0:
            raise ValueError(f"order {self.id}: amount must be >= 0, got {amount}")
        if limit <= 0:
            raise ValueError(f"order {self.id}: limit_rate must be > 0, got {limit}")
        if not isinstance(self.side, Side):
            object.__setattr__(self, "side", Side.parse(str(self.side)))
        object.__setattr__(self, "amount", amount)
        object.__setattr__(self, "limit_rate", limit)
        object.__setattr__(self, "arrival", arrival)

    @property
    def root_id(self) -> str:
        return self.parent if self.parent is not None else self.id


@dataclass(frozen=True)
class Outcome:
    """Net gain ``(dx, dy)``; losses are negative gains."""

    dx: Q = Q(0)
    dy: Q = Q(0)

    def __add__(self, other: "Outcome") -> "Outcome":
        return Outcome(self.dx + other.dx, self.dy + other.dy)

    def __iter__(self):
        yield self.dx
        yield self.dy

    def to_json(self) -> dict:
        return {"dx": format_rational(self.dx), "dy": format_rational(self.dy)}


@dataclass(frozen=True)
class UserType:
    """Intrinsic demand ``(side, v*, r*, alpha*)`` of a user."""

    side: Side
    amount: Q
    rate: Q
    arrival: Q = Q(0)

    def __post_init__(self):
        if not isinstance(self.side, Side):
            object.__setattr__(self, "side", Side.parse(str(self.side)))
        object.__setattr__(self, "amount", to_q(self.amount))
        object.__setattr__(self, "rate", to_q(self.rate))
        object.__setattr__(self, "arrival", to_q(self.arrival))
        if self.amount < 0 or self.rate <= 0:
            raise ValueError("user type needs amount >= 0 and rate > 0")


@dataclass
class OrderFill:
    order_id: str
    user: str
    side: Side
    fulfilled: Q
    avg_rate: Optional[Q]
    phase: Phase
    dx: Q = Q(0)
    dy: Q = Q(0)

    @property
    def outcome(self) -> Outcome:
        return Outcome(self.dx, self.dy)

    def to_json(self) -> dict:
        return {
            "order_id": self.order_id,
            "user": self.user,
            "side": self.side.value,
            "fulfilled": format_rational(self.fulfilled),
            "avg_rate": None if self.avg_rate is None else format_rational(self.avg_rate),
            "phase": self.phase.value,
            "dx": format_rational(self.dx),
            "dy": format_rational(self.dy),
        }


@dataclass(frozen=True)
class TraceStep:
    order_id: str
    parent_id: str
    user: str
    phase: Phase
    before: PoolState
    after: PoolState
    dx: Q
    dy: Q


@dataclass(frozen=True)
class SplitInfo:
    order_id: str
    first: Q
    second: Q


@dataclass
class BatchOutcome:
    fills: list[OrderFill]
    start_pool: PoolState
    end_pool: PoolState
    trace: list[TraceStep] = field(default_factory=list)
    dominance: Optional[Dominance] = None
    split: Optional[SplitInfo] = None
    engine: str = "batch"
    ledger_trace: list = field(default_factory=list)

    @property
    def per_user(self) -> dict[str, Outcome]:
        totals: dict[str, Outcome] = {}
        for fill in self.fills:
            totals[fill.user] = totals.get(fill.user, Outcome()) + fill.outcome
        return totals

    def fills_of(self, user: str) -> list[OrderFill]:
        return [f for f in self.fills if f.user == user]

    def outcome_of(self, user: str) -> Outcome:
        return self.per_user.get(user, Outcome())


@dataclass(frozen=True)
class TieBreak:
    """``random`` (seeded uniform shuffle within each side group) or ``arrival``."""

    mode: str = "arrival"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("random", "arrival"):
            raise ValueError(f"unknown tie-break mode {self.mode!r}")
        if self.mode == "random":
            if self.seed is None:
                raise ValueError("random tie-breaking needs a seed")
            if not 0 <= int(self.seed) < 2**64:
                raise ValueError("seed must fit in 64 unsigned bits")
        elif self.seed is not None:
            raise ValueError("arrival tie-breaking takes no seed")

    @classmethod
    def random(cls, seed: int) -> "TieBreak":
        return cls("random", seed)

    @classmethod
    def arrival(cls) -> "TieBreak":
        return cls("arrival")

    def to_json(self) -> dict:
        return {"mode": self.mode} if self.seed is None else {"mode": self.mode, "seed": self.seed}


ARRIVAL_STABLE = TieBreak.arrival()
