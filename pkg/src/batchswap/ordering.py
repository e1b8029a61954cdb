"""Preference orderings over outcomes ``(dx, dy)``.

For a user of type ``(side, v, r)`` outcomes are compared in the user's
*frame*: ``p`` is the net gain in the primary asset, ``q`` the net gain in
the other asset, ``g`` the signed goal for ``p`` and ``rho`` the user's
valuation of one primary unit in units of the other asset. For X-sided types
``(p, q) = (dx, dy)`` and ``rho = r``; Y-sided types swap the axes and use
``1 / r``.

Three rules generate ``o0 >= o1``:

1. componentwise: ``p0 >= p1`` and ``q0 >= q1``;
2. both ``p`` lie between 0 and the goal, and ``rho*p0 + q0 >= rho*p1 + q1``;
3. same side of the goal, ``p0`` at least as close, and the extra progress
   cost at most ``rho`` per unit: ``q1 - q0 <= rho * (p0 - p1)``.

The relation is their transitive closure. Every rule keeps the linear value
``rho*p + q`` from decreasing, so the value ordering refines the partial one.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

from .model import Outcome, Side, UserType
from .numerics import Q


class Comparison(enum.Enum):
    BETTER = "better"
    WORSE = "worse"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"

    def flipped(self) -> "Comparison":
        return {Comparison.BETTER: Comparison.WORSE, Comparison.WORSE: Comparison.BETTER}.get(self, self)


class Frame(NamedTuple):
    goal: Q
    rho: Q
    swap: bool

    def project(self, o) -> tuple:
        dx, dy = o
        return (dy, dx) if self.swap else (dx, dy)


def frame_of(user_type: UserType) -> Frame:
    side = user_type.side
    goal = user_type.amount if side in (Side.BUY_X, Side.BUY_Y) else -user_type.amount
    if side.y_denominated:
        return Frame(goal, 1 / user_type.rate, True)
    return Frame(goal, user_type.rate, False)


def _value(rho, p, q):
    return rho * p + q


def rule1(f: Frame, a, b) -> bool:
    return a[0] >= b[0] and a[1] >= b[1]


def rule2(f: Frame, a, b) -> bool:
    g = f.goal
    return a[0] * (a[0] - g) <= 0 and b[0] * (b[0] - g) <= 0 and _value(f.rho, *a) >= _value(f.rho, *b)


def rule3(f: Frame, a, b) -> bool:
    g = f.goal
    return (
        (a[0] - g) * (b[0] - g) >= 0
        and abs(a[0] - g) <= abs(b[0] - g)
        and b[1] - a[1] <= f.rho * (a[0] - b[0])
    )


def direct(f: Frame, a, b) -> bool:
    """``a >= b`` by a single application of rule 1, 2 or 3 (frame coordinates)."""
    return rule1(f, a, b) or rule2(f, a, b) or rule3(f, a, b)


def canonical_intermediates(f: Frame, b) -> list[tuple]:
    """Points on ``b``'s value line at the goal, at zero and at the reach limit.

    Any chain of rules from ``b`` can be shortened to pass through these
    points only: rule 3 slides ``b`` toward the goal along its value line,
    rule 2 slides it across the partial-fill band, and rule 1 then moves
    right or up.
    """
    p, q = b
    value = _value(f.rho, p, q)
    reach = max(p, f.goal, Q(0))
    return [(m, value - f.rho * m) for m in {f.goal, Q(0), reach}]


def base_dominates(user_type: UserType, o0, o1) -> bool:
    """``o0`` is at least as good as ``o1`` for ``user_type``.

    Searches chains of single-rule steps from ``o1`` to ``o0`` whose
    intermediate points are the canonical points of ``o1``.
    """
    f = frame_of(user_type)
    a, b = f.project(o0), f.project(o1)
    if direct(f, a, b):
        return True
    frontier = [b]
    pending = canonical_intermediates(f, b)
    while frontier:
        node = frontier.pop()
        for m in list(pending):
            if direct(f, m, node):
                if direct(f, a, m):
                    return True
                pending.remove(m)
                frontier.append(m)
    return False


def dominates_closed_form(user_type: UserType, o0, o1) -> bool:
    """Same relation as :func:`base_dominates`, as an explicit region test."""
    f = frame_of(user_type)
    (p0, q0), (p1, q1) = f.project(o0), f.project(o1)
    lo = min(p1, f.goal, Q(0))
    hi = max(p1, f.goal, Q(0))
    if p0 < lo:
        return False
    v1 = _value(f.rho, p1, q1)
    if p0 <= hi:
        return _value(f.rho, p0, q0) >= v1
    return q0 >= v1 - f.rho * hi


def compare(user_type: UserType, o0, o1) -> Comparison:
    """How ``o0`` ranks against ``o1``.

    EQUAL covers identical outcomes and mutually dominating ones.
    """
    if tuple(o0) == tuple(o1):
        return Comparison.EQUAL
    ge = base_dominates(user_type, o0, o1)
    le = base_dominates(user_type, o1, o0)
    if ge and le:
        return Comparison.EQUAL
    if ge:
        return Comparison.BETTER
    if le:
        return Comparison.WORSE
    return Comparison.INCOMPARABLE


def refutation(user_type: UserType, honest, strategic) -> str | None:
    """Name of the rule certifying that ``strategic`` is not at least as good
    as ``honest``, or None.

    R1: same side of the goal, honest at least as close, the two outcomes
        move in opposite directions, and the strategic one is worth strictly
        less or lies below everything reachable from the honest one.
    R2: same side, strategic strictly closer, but its extra progress cost
        more than ``rho`` per unit.
    R3: opposite sides of the goal and the strategic outcome is worth no
        more (strictly less when the honest outcome overshoots the goal).
    """
    f = frame_of(user_type)
    (ph, qh), (ps, qs) = f.project(honest), f.project(strategic)
    g, rho = f.goal, f.rho
    vh, vs = _value(rho, ph, qh), _value(rho, ps, qs)
    same_side = (ph - g) * (ps - g) >= 0
    if same_side:
        if (
            abs(ph - g) <= abs(ps - g)
            and (ph - ps) * (qh - qs) < 0
            and (vs < vh or ps < min(ph, g, Q(0)))
        ):
            return "R1"
        if abs(ps - g) < abs(ph - g) and qh - qs > rho * (ps - ph):
            return "R2"
        return None
    honest_overshoots = g != 0 and (ph - g) * g > 0
    if vh > vs or (vh == vs and not honest_overshoots):
        return "R3"
    return None


def refutes_dominance(user_type: UserType, honest, strategic) -> bool:
    return refutation(user_type, honest, strategic) is not None


def total_value(belief_rate, outcome) -> Q:
    """Position value ``belief * dx + dy`` used by the no-short-sell variant."""
    dx, dy = outcome
    return belief_rate * dx + dy


__all__ = [
    "Comparison",
    "Outcome",
    "base_dominates",
    "compare",
    "dominates_closed_form",
    "refutes_dominance",
    "refutation",
    "total_value",
]
