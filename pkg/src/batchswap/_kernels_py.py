"""Pure-Python constant-product kernels.

Reference implementation of the hot loop; ``_kernels.pyx`` is a compiled
copy that must stay line-for-line equivalent. Reserves move along the curve
``x * y = C``. A buy lowers x, a sell raises it. Bounds given as ``None``
are absent. Every bound is enforced by rounding toward less execution.
"""

import random

from .numerics import Q, _isqrt

BUY = 1
SELL = -1


def _sqrt_bound(q, k, upper):
    num = int(q.numerator)
    den = int(q.denominator)
    rn = int(_isqrt(num))
    rd = int(_isqrt(den))
    if rn * rn == num and rd * rd == den:
        return Q(rn, rd)
    root = int(_isqrt((num << (2 * k)) // den))
    if upper:
        root += 1
    return Q(root, 1 << k)


def buy_x(x, y, cap, dx_max, dy_max, k):
    """Reserves after the largest buy of X allowed by every bound.

    cap: ceiling on the post-trade rate y/x; dx_max: X the buyer may take;
    dy_max: Y the buyer may pay.
    """
    c = x * y
    new_x = None
    if cap is not None:
        new_x = _sqrt_bound(c / cap, k, True)
    if dx_max is not None:
        cand = x - dx_max
        if new_x is None or cand > new_x:
            new_x = cand
    if dy_max is not None:
        cand = c / (y + dy_max)
        if new_x is None or cand > new_x:
            new_x = cand
    if new_x is None or new_x <= 0:
        raise ValueError("trade would drain the pool's X reserve")
    if new_x >= x:
        return x, y
    return new_x, c / new_x


def sell_x(x, y, floor, dx_max, dy_max, k):
    """Reserves after the largest sale of X allowed by every bound.

    floor: lower bound on the post-trade rate; dx_max: X the seller may give;
    dy_max: Y the seller may take out of the pool.
    """
    c = x * y
    new_x = None
    if floor is not None:
        new_x = _sqrt_bound(c / floor, k, False)
    if dx_max is not None:
        cand = x + dx_max
        if new_x is None or cand < new_x:
            new_x = cand
    if dy_max is not None and dy_max < y:
        cand = c / (y - dy_max)
        if new_x is None or cand < new_x:
            new_x = cand
    if new_x is None:
        raise ValueError("trade would drain the pool's Y reserve")
    if new_x <= x:
        return x, y
    return new_x, c / new_x


def run_sequence(x, y, steps, k):
    """Execute ``(direction, limit, dx_max, dy_max)`` steps in order.

    Returns the list of reserves after each step.
    """
    out = []
    for direction, limit, dx_max, dy_max in steps:
        if direction == BUY:
            x, y = buy_x(x, y, limit, dx_max, dy_max, k)
        else:
            x, y = sell_x(x, y, limit, dx_max, dy_max, k)
        out.append((x, y))
    return out


# Order tuples for the lean batch paths: (side, amount, limit, arrival, submit_index)
# with side 0=BuyX 1=SellX 2=BuyY 3=SellY.
BUY_X, SELL_X, BUY_Y, SELL_Y = 0, 1, 2, 3


def _step(side, amount, limit):
    if side == BUY_X:
        return BUY, limit, amount, None
    if side == SELL_Y:
        return BUY, limit, None, amount
    if side == SELL_X:
        return SELL, limit, amount, None
    return SELL, limit, None, amount


def _beta(side, amount, r0):
    if side == BUY_X:
        return amount
    if side == SELL_X:
        return -amount
    if side == BUY_Y:
        return -amount / r0
    return amount / r0


def _fixed(side, amount, r0):
    if side == BUY_X:
        return amount, -amount * r0
    if side == SELL_X:
        return -amount, amount * r0
    if side == BUY_Y:
        return -amount / r0, amount
    return amount / r0, -amount


def group_order(orders, seed):
    """Indices of the X-wanting and Y-wanting eligible orders, tie-broken.

    ``seed`` None means arrival-stable; otherwise a seeded shuffle of each
    group taken in submission order.
    """
    wx = []
    wy = []
    for i, o in enumerate(orders):
        if o[0] == BUY_X or o[0] == SELL_Y:
            wx.append(i)
        else:
            wy.append(i)
    if seed is None:
        key = lambda i: (orders[i][3], orders[i][4])
        wx.sort(key=key)
        wy.sort(key=key)
    else:
        key = lambda i: orders[i][4]
        wx.sort(key=key)
        wy.sort(key=key)
        rng = random.Random(seed)
        rng.shuffle(wx)
        rng.shuffle(wy)
    return wx, wy


def clear_batch(x, y, orders, seed, k):
    """Net ``(dx, dy)`` per order and the end reserves for one batch.

    Lean twin of ``mechanism.run_batch``; no trace, no validation.
    """
    r0 = y / x
    n = len(orders)
    zero = Q(0)
    dxs = [zero] * n
    dys = [zero] * n
    eligible = []
    sigma = zero
    for i, (side, amount, limit, _, _) in enumerate(orders):
        if side == BUY_X or side == SELL_Y:
            ok = limit >= r0
        else:
            ok = limit <= r0
        if ok:
            eligible.append(orders[i])
            sigma += _beta(side, amount, r0)
        else:
            eligible.append(None)
    live = [o for o in eligible if o is not None]
    index = [i for i, o in enumerate(eligible) if o is not None]
    wx, wy = group_order(live, seed)
    if sigma >= 0:
        seq = [index[i] for i in wy + wx]
        sign = 1
    else:
        seq = [index[i] for i in wx + wy]
        sign = -1
    running = zero
    cut = len(seq)
    head = None
    for pos, i in enumerate(seq):
        side, amount = orders[i][0], orders[i][1]
        after = running + sign * _beta(side, amount, r0)
        if after > 0:
            cut = pos
            if running != 0:
                share = -running
                head = share * r0 if side == BUY_Y or side == SELL_Y else share
            break
        running = after
    for i in seq[:cut]:
        dx, dy = _fixed(orders[i][0], orders[i][1], r0)
        dxs[i] += dx
        dys[i] += dy
    steps = []
    owners = []
    for pos in range(cut, len(seq)):
        i = seq[pos]
        side, amount, limit = orders[i][0], orders[i][1], orders[i][2]
        if pos == cut and head is not None:
            dx, dy = _fixed(side, head, r0)
            dxs[i] += dx
            dys[i] += dy
            amount = amount - head
        steps.append(_step(side, amount, limit))
        owners.append(i)
    cx, cy = x, y
    for i, (nx, ny) in zip(owners, run_sequence(x, y, steps, k)):
        dxs[i] += cx - nx
        dys[i] += cy - ny
        cx, cy = nx, ny
    return dxs, dys, cx, cy


def clear_sequential(x, y, orders, k):
    """First-come-first-served execution sorted by (arrival, submit_index)."""
    n = len(orders)
    zero = Q(0)
    dxs = [zero] * n
    dys = [zero] * n
    seq = sorted(range(n), key=lambda i: (orders[i][3], orders[i][4]))
    steps = [_step(orders[i][0], orders[i][1], orders[i][2]) for i in seq]
    cx, cy = x, y
    for i, (nx, ny) in zip(seq, run_sequence(x, y, steps, k)):
        dxs[i] = cx - nx
        dys[i] = cy - ny
        cx, cy = nx, ny
    return dxs, dys, cx, cy


def _cap1(side, amount, r0, bx, by):
    if side == BUY_X:
        cap = by / r0
    elif side == SELL_X:
        cap = bx
    elif side == BUY_Y:
        cap = bx * r0
    else:
        cap = by
    return amount if amount <= cap else cap


def clear_noshort(x, y, orders, users, balances, seed, k):
    """Lean twin of ``noshort.run_batch_noshort``.

    ``users[i]`` owns ``orders[i]``; ``balances`` maps user to ``(x, y)``
    and is not modified. Returns per-order gains, end reserves and the new
    balances.
    """
    r0 = y / x
    n = len(orders)
    zero = Q(0)
    dxs = [zero] * n
    dys = [zero] * n
    index = []
    for i, (side, amount, limit, _, _) in enumerate(orders):
        if side == BUY_X or side == SELL_Y:
            ok = limit >= r0
        else:
            ok = limit <= r0
        if ok and users[i] in balances:
            index.append(i)
    live = [orders[i] for i in index]
    wx, wy = group_order(live, seed)
    seq = [index[i] for i in wy + wx]
    sign = 1
    for attempt in range(2):
        scratch = dict(balances)
        betas = []
        total = zero
        for i in seq:
            side, amount = orders[i][0], orders[i][1]
            bx, by = scratch[users[i]]
            dx, dy = _fixed(side, _cap1(side, amount, r0, bx, by), r0)
            scratch[users[i]] = (bx + dx, by + dy)
            betas.append(dx)
            total += dx
        if attempt == 0 and total < 0:
            seq = [index[i] for i in wx + wy]
            sign = -1
            continue
        break
    running = zero
    cut = len(seq)
    head = None
    for pos, i in enumerate(seq):
        after = running + sign * betas[pos]
        if after > 0:
            cut = pos
            if running != 0:
                side = orders[i][0]
                head = -running * r0 if side == BUY_Y or side == SELL_Y else -running
            break
        running = after
    bal = dict(balances)
    net_x = net_y = zero
    stop = cut + 1 if head is not None else cut
    for pos in range(stop):
        i = seq[pos]
        side = orders[i][0]
        amount = head if pos == cut else orders[i][1]
        bx, by = bal[users[i]]
        dx, dy = _fixed(side, _cap1(side, amount, r0, bx, by), r0)
        bal[users[i]] = (bx + dx, by + dy)
        dxs[i] += dx
        dys[i] += dy
        net_x += dx
        net_y += dy
    if net_x != 0 or net_y != 0:
        raise ArithmeticError("phase 1 is not balanced")
    cx, cy = x, y
    for pos in range(cut, len(seq)):
        i = seq[pos]
        side, amount, limit = orders[i][0], orders[i][1], orders[i][2]
        if pos == cut and head is not None:
            amount = amount - head
        bx, by = bal[users[i]]
        if side == BUY_X:
            nx, ny = buy_x(cx, cy, limit, amount, by, k)
        elif side == SELL_Y:
            nx, ny = buy_x(cx, cy, limit, None, amount if amount <= by else by, k)
        elif side == SELL_X:
            nx, ny = sell_x(cx, cy, limit, amount if amount <= bx else bx, None, k)
        else:
            nx, ny = sell_x(cx, cy, limit, bx, amount, k)
        dx, dy = cx - nx, cy - ny
        bal[users[i]] = (bx + dx, by + dy)
        dxs[i] += dx
        dys[i] += dy
        cx, cy = nx, ny
    return dxs, dys, cx, cy, bal
