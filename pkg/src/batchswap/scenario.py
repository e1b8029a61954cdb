"""Scenario files: JSON in, :class:`~batchswap.adversary.Scenario` out.

Rationals may be written as integers, decimal literals or ``"p/q"``
strings. JSON numbers are read from their literal text, so ``0.1`` means
exactly one tenth.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from .adversary import Model, Scenario
from .amm import PoolState, make_potential
from .model import ARRIVAL_STABLE, Order, Side, TieBreak, UserType
from .noshort import Ledger, Position
from .numerics import DEFAULT_EPS, DomainError, format_rational, to_q


class ScenarioError(ValueError):
    """A scenario document is malformed; the message names the field."""

    def __init__(self, path: str, problem: str):
        super().__init__(f"{path}: {problem}")
        self.path = path


def _rational(doc: dict, key: str, path: str, default=None):
    if key not in doc:
        if default is None:
            raise ScenarioError(f"{path}.{key}", "missing")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ScenarioError(f"{path}.{key}", f"expected a rational, got {value!r}")
    try:
        return to_q(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ScenarioError(f"{path}.{key}", str(exc)) from None


def _object(doc: Any, path: str) -> dict:
    if not isinstance(doc, dict):
        raise ScenarioError(path, f"expected an object, got {type(doc).__name__}")
    return doc


def _side(doc: dict, path: str) -> Side:
    try:
        return Side.parse(str(doc["side"]))
    except KeyError:
        raise ScenarioError(f"{path}.side", "missing") from None
    except ValueError as exc:
        raise ScenarioError(f"{path}.side", str(exc)) from None


def parse_pool(doc: Any) -> PoolState:
    doc = _object(doc, "pool")
    x, y = _rational(doc, "x", "pool"), _rational(doc, "y", "pool")
    try:
        return PoolState(x, y)
    except (ValueError, DomainError) as exc:
        raise ScenarioError("pool", str(exc)) from None


def parse_order(doc: Any, index: int) -> Order:
    path = f"orders[{index}]"
    doc = _object(doc, path)
    user = doc.get("user")
    if not isinstance(user, str) or not user:
        raise ScenarioError(f"{path}.user", "expected a non-empty string")
    order_id = doc.get("id", f"o{index}")
    if not isinstance(order_id, str) or not order_id:
        raise ScenarioError(f"{path}.id", "expected a non-empty string")
    submit = doc.get("submit_index", index)
    if isinstance(submit, bool) or not isinstance(submit, int) or submit < 0:
        raise ScenarioError(f"{path}.submit_index", "expected a natural number")
    side = _side(doc, path)
    amount = _rational(doc, "amount", path)
    rate = _rational(doc, "rate", path)
    arrival = _rational(doc, "arrival", path, default=to_q(0))
    if amount < 0:
        raise ScenarioError(f"{path}.amount", "must be >= 0")
    if rate <= 0:
        raise ScenarioError(f"{path}.rate", "must be > 0")
    return Order(order_id, user, side, amount, rate, arrival, submit)


def parse_tiebreak(doc: Any, seed_override: Optional[int] = None) -> TieBreak:
    if doc is None:
        doc = {"mode": "arrival"}
    doc = _object(doc, "tiebreak")
    mode = doc.get("mode", "arrival")
    mode = {"arrivalstable": "arrival", "arrival_stable": "arrival"}.get(str(mode).lower(), str(mode).lower())
    seed = doc.get("seed")
    if seed_override is not None:
        seed = seed_override
    if mode == "arrival":
        seed = None
    elif seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ScenarioError("tiebreak.seed", "expected an unsigned 64-bit integer")
    try:
        return TieBreak(mode, seed)
    except ValueError as exc:
        field = "tiebreak.mode" if "mode" in str(exc) else "tiebreak.seed"
        raise ScenarioError(field, str(exc)) from None


def parse_ledger(doc: Any) -> Ledger:
    doc = _object(doc, "ledger")
    positions = {}
    for user in sorted(doc):
        entry = _object(doc[user], f"ledger.{user}")
        x = _rational(entry, "x", f"ledger.{user}")
        y = _rational(entry, "y", f"ledger.{user}")
        if x < 0 or y < 0:
            raise ScenarioError(f"ledger.{user}", "balances must be >= 0")
        positions[user] = Position(x, y)
    return Ledger(positions)


def parse_user_type(doc: Any, path: str = "adversary") -> UserType:
    doc = _object(doc, path)
    side = _side(doc, path)
    amount = _rational(doc, "amount", path)
    rate = _rational(doc, "rate", path)
    arrival = _rational(doc, "arrival", path, default=to_q(0))
    if amount < 0:
        raise ScenarioError(f"{path}.amount", "must be >= 0")
    if rate <= 0:
        raise ScenarioError(f"{path}.rate", "must be > 0")
    return UserType(side, amount, rate, arrival)


def scenario_from_dict(doc: Any, seed: Optional[int] = None, eps=None) -> Scenario:
    doc = _object(doc, "scenario")
    if "pool" not in doc:
        raise ScenarioError("pool", "missing")
    pool = parse_pool(doc["pool"])
    name = doc.get("potential", "constant_product")
    if eps is None:
        eps = _rational(doc, "eps", "scenario", default=DEFAULT_EPS)
    try:
        potential = make_potential(name, eps)
    except (ValueError, DomainError) as exc:
        raise ScenarioError("potential", str(exc)) from None
    raw_orders = doc.get("orders", [])
    if not isinstance(raw_orders, list):
        raise ScenarioError("orders", "expected a list")
    orders = [parse_order(o, i) for i, o in enumerate(raw_orders)]
    seen = set()
    for i, o in enumerate(orders):
        if o.id in seen:
            raise ScenarioError(f"orders[{i}].id", f"duplicate id {o.id!r}")
        seen.add(o.id)
    tiebreak = parse_tiebreak(doc.get("tiebreak"), seed)
    ledger = parse_ledger(doc["ledger"]) if "ledger" in doc else None
    adversary = parse_user_type(doc["adversary"]) if "adversary" in doc else None
    try:
        model = Model.parse(str(doc.get("model", "WeakFairSequencing")))
    except ValueError as exc:
        raise ScenarioError("model", str(exc)) from None
    return Scenario(
        pool=pool,
        honest_orders=orders,
        adversary_type=adversary,
        model=model,
        tiebreak=tiebreak,
        potential=potential,
        ledger=ledger,
    )


def load_scenario(path, seed: Optional[int] = None, eps=None) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh, parse_float=str, parse_int=int)
    except json.JSONDecodeError as exc:
        raise ScenarioError("scenario", f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc, seed, eps)


def scenario_to_dict(scenario: Scenario) -> dict:
    doc: dict = {
        "pool": {"x": format_rational(scenario.pool.x), "y": format_rational(scenario.pool.y)},
        "potential": scenario.potential.name,
        "orders": [
            {
                "id": o.id,
                "user": o.user,
                "side": o.side.value,
                "amount": format_rational(o.amount),
                "rate": format_rational(o.limit_rate),
                "arrival": format_rational(o.arrival),
                "submit_index": o.submit_index,
            }
            for o in scenario.honest_orders
        ],
        "tiebreak": scenario.tiebreak.to_json(),
        "model": scenario.model.value,
    }
    if scenario.potential.eps != DEFAULT_EPS:
        doc["eps"] = format_rational(scenario.potential.eps)
    if scenario.ledger is not None:
        doc["ledger"] = scenario.ledger.to_json()
    if scenario.adversary_type is not None:
        t = scenario.adversary_type
        doc["adversary"] = {
            "side": t.side.value,
            "amount": format_rational(t.amount),
            "rate": format_rational(t.rate),
            "arrival": format_rational(t.arrival),
        }
    return doc


__all__ = ["ARRIVAL_STABLE", "ScenarioError", "load_scenario", "scenario_from_dict", "scenario_to_dict"]
