"""Pool state, potential functions and constant-product trade math.

Sign convention: ``dx`` is the X the trader takes out of the pool (negative
when the trader sells X in) and ``dy`` is the Y the trader pays in (negative
when the trader receives Y). A trade maps ``Pool(x, y)`` to
``Pool(x - dx, y + dy)``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

from . import kernels
from .numerics import DEFAULT_EPS, DomainError, Q, precision_bits, sqrt_lower, sqrt_upper, to_q


class PoolDrainError(DomainError):
    """A trade would leave a reserve at or below zero."""


class InvariantViolation(AssertionError):
    """The pool potential changed. Always an engine bug."""


@dataclass(frozen=True)
class PoolState:
    x: Q
    y: Q

    def __post_init__(self):
        x, y = to_q(self.x), to_q(self.y)
        if x <= 0 or y <= 0:
            raise DomainError(f"pool reserves must be strictly positive, got ({x}, {y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def _unchecked(cls, x, y) -> "PoolState":
        obj = object.__new__(cls)
        object.__setattr__(obj, "x", x)
        object.__setattr__(obj, "y", y)
        return obj


class PotentialFunction(ABC):
    """An increasing, differentiable, concave potential conserved by trades.

    Implementations describe the level curve ``phi(x, y) = C`` through
    ``y_of_x``/``x_of_y`` and locate points of a given marginal rate through
    ``x_of_rate``. The generic trade routines are built on those three.
    """

    name = "abstract"

    def __init__(self, eps=DEFAULT_EPS):
        self.eps = to_q(eps)
        self.bits = precision_bits(self.eps)

    def __eq__(self, other):
        return type(self) is type(other) and self.eps == other.eps

    def __hash__(self):
        return hash((type(self).__name__, self.eps))

    def __repr__(self):
        return f"{type(self).__name__}(eps={self.eps})"

    @abstractmethod
    def phi(self, x, y): ...

    @abstractmethod
    def rate(self, x, y):
        """Marginal price of X in Y: (dphi/dx) / (dphi/dy)."""

    @abstractmethod
    def y_of_x(self, x, level): ...

    @abstractmethod
    def x_of_y(self, y, level): ...

    @abstractmethod
    def x_of_rate(self, level, rate, round_up: bool):
        """X reserve where the level curve has the given rate.

        Rounded up or down within ``eps``.
        """

    def buy_x(self, pool: PoolState, cap=None, dx_max=None, dy_max=None) -> PoolState:
        level = self.phi(pool.x, pool.y)
        new_x = None
        if cap is not None:
            new_x = self.x_of_rate(level, cap, True)
        if dx_max is not None:
            cand = pool.x - dx_max
            new_x = cand if new_x is None else max(new_x, cand)
        if dy_max is not None:
            cand = self.x_of_y(pool.y + dy_max, level)
            new_x = cand if new_x is None else max(new_x, cand)
        if new_x is None or new_x <= 0:
            raise PoolDrainError("trade would drain the pool's X reserve")
        if new_x >= pool.x:
            return pool
        return PoolState._unchecked(new_x, self.y_of_x(new_x, level))

    def sell_x(self, pool: PoolState, floor=None, dx_max=None, dy_max=None) -> PoolState:
        level = self.phi(pool.x, pool.y)
        new_x = None
        if floor is not None:
            new_x = self.x_of_rate(level, floor, False)
        if dx_max is not None:
            cand = pool.x + dx_max
            new_x = cand if new_x is None else min(new_x, cand)
        if dy_max is not None and dy_max < pool.y:
            cand = self.x_of_y(pool.y - dy_max, level)
            new_x = cand if new_x is None else min(new_x, cand)
        if new_x is None:
            raise PoolDrainError("trade would drain the pool's Y reserve")
        if new_x <= pool.x:
            return pool
        return PoolState._unchecked(new_x, self.y_of_x(new_x, level))


class ConstantProduct(PotentialFunction):
    """``phi(x, y) = x * y``; backed by the selected kernels."""

    name = "constant_product"

    def phi(self, x, y):
        return x * y

    def rate(self, x, y):
        return y / x

    def y_of_x(self, x, level):
        if x <= 0:
            raise DomainError("x must be positive on the constant-product curve")
        return level / x

    def x_of_y(self, y, level):
        if y <= 0:
            raise DomainError("y must be positive on the constant-product curve")
        return level / y

    def x_of_rate(self, level, rate, round_up):
        # y/x = rate and x*y = level  =>  x = sqrt(level / rate)
        bound = sqrt_upper if round_up else sqrt_lower
        return bound(level / rate, self.eps)

    def buy_x(self, pool, cap=None, dx_max=None, dy_max=None):
        try:
            x, y = kernels.buy_x(pool.x, pool.y, cap, dx_max, dy_max, self.bits)
        except ValueError as exc:
            raise PoolDrainError(str(exc)) from None
        return pool if x is pool.x else PoolState._unchecked(x, y)

    def sell_x(self, pool, floor=None, dx_max=None, dy_max=None):
        try:
            x, y = kernels.sell_x(pool.x, pool.y, floor, dx_max, dy_max, self.bits)
        except ValueError as exc:
            raise PoolDrainError(str(exc)) from None
        return pool if x is pool.x else PoolState._unchecked(x, y)


CONSTANT_PRODUCT = ConstantProduct()

POTENTIALS = {"constant_product": ConstantProduct}


def make_potential(name: str = "constant_product", eps=DEFAULT_EPS) -> PotentialFunction:
    try:
        cls = POTENTIALS[name]
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; known: {sorted(POTENTIALS)}") from None
    return cls(eps)


def rate(pool: PoolState, potential: PotentialFunction = CONSTANT_PRODUCT):
    return potential.rate(pool.x, pool.y)


def trade_cost(pool: PoolState, dx, potential: PotentialFunction = CONSTANT_PRODUCT):
    """Y the trader pays to take ``dx`` X out of the pool (negative: receives)."""
    dx = to_q(dx)
    if dx >= pool.x:
        raise PoolDrainError(f"cannot take {dx} X from a pool holding {pool.x}")
    level = potential.phi(pool.x, pool.y)
    new_y = potential.y_of_x(pool.x - dx, level)
    if new_y <= 0:
        raise DomainError("resulting Y reserve is not positive")
    return new_y - pool.y


def max_buy_for_rate_cap(pool: PoolState, cap, potential: PotentialFunction = CONSTANT_PRODUCT):
    """Largest X purchase (rounded down) leaving the rate at or below ``cap``."""
    after = potential.buy_x(pool, cap=to_q(cap))
    return pool.x - after.x


def max_sell_for_rate_floor(pool: PoolState, floor, potential: PotentialFunction = CONSTANT_PRODUCT):
    """Largest X sale (rounded down) leaving the rate at or above ``floor``."""
    after = potential.sell_x(pool, floor=to_q(floor))
    return after.x - pool.x


def apply_trade(pool: PoolState, dx, dy, potential: PotentialFunction = CONSTANT_PRODUCT) -> PoolState:
    after = PoolState(pool.x - to_q(dx), pool.y + to_q(dy))
    if potential.phi(after.x, after.y) != potential.phi(pool.x, pool.y):
        raise InvariantViolation(
            f"trade ({dx}, {dy}) moves the potential from "
            f"{potential.phi(pool.x, pool.y)} to {potential.phi(after.x, after.y)}"
        )
    return after
