"""Independent reference implementations used to freeze expected values.

Nothing here imports the package's engine code. Arithmetic is
``fractions.Fraction``; square roots are bisected.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction as F

SIDES = ("BuyX", "SellX", "BuyY", "SellY")


def sqrt_bisect(q: F, bits: int = 90) -> tuple[F, F]:
    """Bracket ``[lo, hi]`` around sqrt(q) of width 2**-bits."""
    lo, hi = F(0), max(F(1), q)
    step = F(1, 2**bits)
    while hi - lo > step:
        mid = (lo + hi) / 2
        if mid * mid <= q:
            lo = mid
        else:
            hi = mid
    return lo, hi


def cp_buy_cost(x: F, y: F, dx: F) -> F:
    """Y paid for ``dx`` X on x*y = const."""
    return x * y / (x - dx) - y


def _eligible(side, rate, r0):
    return rate >= r0 if side in ("BuyX", "SellY") else rate <= r0


def _beta(side, v, r0):
    return {"BuyX": v, "SellX": -v, "BuyY": -v / r0, "SellY": v / r0}[side]


def _fixed(side, v, r0):
    return {
        "BuyX": (v, -v * r0),
        "SellX": (-v, v * r0),
        "BuyY": (-v / r0, v),
        "SellY": (v / r0, -v),
    }[side]


def _pool_step(x, y, side, v, rate):
    """Exact-as-possible sequential fill; returns (new_x, new_y, tight) where
    tight marks a rate-capped fill whose true end point is irrational."""
    c = x * y
    if side in ("BuyX", "SellY"):
        # new x candidates: amount bound and sqrt(c / rate) from the cap
        if side == "BuyX":
            by_amount = x - v
        else:
            by_amount = c / (y + v)
        lo, hi = sqrt_bisect(c / rate)
        if lo * lo == c / rate:
            hi = lo
        target = max(by_amount, hi)
        tight = target == hi and hi != lo
        if target >= x:
            return x, y, False
        return target, c / target, tight
    if side == "SellX":
        by_amount = x + v
    else:
        by_amount = c / (y - v) if v < y else None
    lo, hi = sqrt_bisect(c / rate)
    if lo * lo == c / rate:
        hi = lo
    target = lo if by_amount is None else min(by_amount, lo)
    tight = target == lo and hi != lo
    if target <= x:
        return x, y, False
    return target, c / target, tight


def reference_batch(x, y, orders, arrival_stable=True):
    """Two-phase clearing of ``orders`` = [(side, v, rate, arrival)], arrival-stable.

    Returns per-order (dx, dy), the end pool and a flag telling whether any
    rate cap bound (so results are only correct up to the sqrt precision).
    """
    r0 = y / x
    gains = [(F(0), F(0)) for _ in orders]
    live = [i for i, o in enumerate(orders) if _eligible(o[0], o[2], r0)]
    sigma = sum((_beta(orders[i][0], orders[i][1], r0) for i in live), F(0))
    key = lambda i: (orders[i][3], i)
    wants_x = sorted((i for i in live if orders[i][0] in ("BuyX", "SellY")), key=key)
    wants_y = sorted((i for i in live if orders[i][0] not in ("BuyX", "SellY")), key=key)
    seq = wants_y + wants_x if sigma >= 0 else wants_x + wants_y
    sign = 1 if sigma >= 0 else -1
    pieces = []  # (index, amount, phase)
    running = F(0)
    cut = None
    for pos, i in enumerate(seq):
        side, v = orders[i][0], orders[i][1]
        nxt = running + sign * _beta(side, v, r0)
        if cut is None and nxt > 0:
            cut = pos
            if running != 0:
                first = -running * (r0 if side in ("BuyY", "SellY") else 1)
                pieces.append((i, first, 1))
                pieces.append((i, v - first, 2))
            else:
                pieces.append((i, v, 2))
            continue
        pieces.append((i, v, 1 if cut is None else 2))
        running = nxt
    tight = False
    cx, cy = x, y
    for i, v, phase in pieces:
        side, _, rate, _ = orders[i]
        if phase == 1:
            dx, dy = _fixed(side, v, r0)
        else:
            nx, ny, t = _pool_step(cx, cy, side, v, rate)
            tight = tight or t
            dx, dy = cx - nx, cy - ny
            cx, cy = nx, ny
        gains[i] = (gains[i][0] + dx, gains[i][1] + dy)
    return gains, (cx, cy), tight


# ---------------------------------------------------------------- ordering


def frame(side, v, r):
    goal = v if side in ("BuyX", "BuyY") else -v
    if side in ("BuyY", "SellY"):
        return goal, 1 / F(r), True
    return goal, F(r), False


def project(fr, o):
    return (o[1], o[0]) if fr[2] else (o[0], o[1])


def _rules(fr, a, b):
    g, rho, _ = fr
    one = a[0] >= b[0] and a[1] >= b[1]
    band = lambda p: min(0, g) <= p <= max(0, g)
    two = band(a[0]) and band(b[0]) and rho * a[0] + a[1] >= rho * b[0] + b[1]
    three = (
        (a[0] - g) * (b[0] - g) >= 0
        and abs(a[0] - g) <= abs(b[0] - g)
        and b[1] - a[1] <= rho * (a[0] - b[0])
    )
    return one or two or three


def closure(user_type, outcomes):
    """Floyd-Warshall transitive closure of rules 1-3 over ``outcomes``.

    Returns ``reach[i][j]`` = outcome i is at least as good as outcome j
    via a chain whose points all lie in ``outcomes``.
    """
    fr = frame(*user_type)
    pts = [project(fr, o) for o in outcomes]
    n = len(pts)
    reach = [[i == j or _rules(fr, pts[i], pts[j]) for j in range(n)] for i in range(n)]
    for k in range(n):
        rk = reach[k]
        for i in range(n):
            if reach[i][k]:
                ri = reach[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    return reach


def canonical_points(user_type, o):
    """Points on o's value line at the goal, at zero and at max(p, g, 0), in outcome coordinates."""
    fr = frame(*user_type)
    g, rho, swap = fr
    p, q = project(fr, o)
    value = rho * p + q
    out = []
    for m in (g, F(0), max(p, g, F(0))):
        pt = (m, value - rho * m)
        out.append((pt[1], pt[0]) if swap else pt)
    return out


def random_outcomes(rng: random.Random, n: int, span: int = 12):
    return [(F(rng.randint(-span, span), rng.choice((1, 2))), F(rng.randint(-8 * span, 8 * span), rng.choice((1, 2)))) for _ in range(n)]


def subsets(items):
    for k in range(1, len(items) + 1):
        yield from itertools.combinations(items, k)
