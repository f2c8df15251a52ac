"""Brute-force reference implementations the solver tests check against.

These deliberately share no code with the engine: the sensing side sweeps the
time axis with bandwidth pinned by the yield equality, the consumption side
sweeps a 2-D time grid with a prefix-min over the third sub-process.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def _geom_axis(lo, hi, grid):
    """Geometric grid including both endpoints; returns (points, rel_step)."""
    lo = max(lo, hi * 1e-9, 1e-12)
    if lo >= hi:
        return np.array([hi]), 0.0
    pts = np.geomspace(lo, hi, grid)
    return pts, float(pts[1] / pts[0] - 1.0)


def gen_grid_min(n, a, b, t_max, b_max, price_t, price_b, grid=400):
    """Grid minimum of t*price_t + w*price_b over a*t + b*t*w = n, boxes.

    Geometric spacing in t keeps the relative cost error bounded by the
    relative step.  Returns (cost, rel_step) or (None, 0.0) when no feasible
    grid point exists.
    """
    if n <= 0:
        return 0.0, 0.0
    x_hi = min(t_max, n / a if a > 0 else math.inf)
    x_lo = n / (a + b * b_max) if b > 0 and b_max > 0 else x_hi
    if b <= 0 or b_max <= 0:
        # pure visual: only x = n/a qualifies
        if a <= 0 or n / a > t_max * (1 + 1e-12):
            return None, 0.0
        return (n / a) * price_t, 0.0
    if x_lo > x_hi * (1 + 1e-12):
        return None, 0.0
    xs, rel = _geom_axis(x_lo, x_hi, grid)
    if a > 0 and n / a <= t_max * (1 + 1e-12):  # visual-only corner
        xs = np.append(xs, n / a)
    ys = (n - a * xs) / (b * xs)
    ok = (ys >= -1e-9) & (ys <= b_max * (1 + 1e-9))
    if not ok.any():
        return None, rel
    cost = xs * price_t + np.clip(ys, 0, None) * price_b
    cost = np.where(ok, cost, np.inf)
    return float(cost.min()), rel


def consumption_grid_min(vols, w_maxes, price_t, w_prices, t_budget, grid=200):
    """Grid minimum of the serial three-process split.

    vols[i] = time*width product each process must reach; widths are capped.
    Returns (cost, max_rel_step) or (None, 0.0).
    """
    live = [i for i in range(3) if vols[i] > 0]
    if not live:
        return 0.0, 0.0
    floors = [vols[i] / w_maxes[i] for i in live]
    if sum(floors) > t_budget * (1 + 1e-12):
        return None, 0.0
    built = [_geom_axis(f, t_budget, grid) for f in floors]
    axes = [np.append(b[0], f) for b, f in zip(built, floors)]  # exact floors
    axes = [np.unique(ax) for ax in axes]
    steps = [b[1] for b in built]

    def proc_cost(k, x):
        i = live[k]
        return price_t * x + w_prices[i] * vols[i] / x

    if len(live) == 1:
        c = proc_cost(0, axes[0])
        return float(c.min()), max(steps)
    if len(live) == 2:
        x1, x2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        c = proc_cost(0, x1) + proc_cost(1, x2)
        c = np.where(x1 + x2 <= t_budget * (1 + 1e-12), c, np.inf)
        return float(c.min()), max(steps)
    x1, x2 = np.meshgrid(axes[0], axes[1], indexing="ij")
    rem = t_budget - x1 - x2
    third = proc_cost(2, axes[2])
    prefix = np.minimum.accumulate(third)
    pos = np.searchsorted(axes[2], rem * (1 + 1e-12), side="right") - 1
    best3 = np.where(pos >= 0, prefix[np.clip(pos, 0, None)], np.inf)
    c = proc_cost(0, x1) + proc_cost(1, x2) + best3
    return float(c.min()), max(steps)


def consumption_by_multiplier(vols, w_maxes, price_t, w_prices, t_budget, iters=200):
    """Independent cross-check of the shared-time coupling: each process's
    time is a monotone function of one effective time price, bisected until
    the chain fits the budget."""
    live = [i for i in range(3) if vols[i] > 0]
    if not live:
        return 0.0
    floors = sum(vols[i] / w_maxes[i] for i in live)
    if floors > t_budget * (1 + 1e-12):
        return None

    def times(tau):
        return [max(math.sqrt(vols[i] * w_prices[i] / tau), vols[i] / w_maxes[i]) for i in live]

    if sum(times(price_t)) <= t_budget:
        ts = times(price_t)
    else:
        lo, hi = price_t, price_t
        while sum(times(hi)) > t_budget:
            hi *= 2
            if hi > 1e30:
                break
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if sum(times(mid)) > t_budget:
                lo = mid
            else:
                hi = mid
        ts = times(hi)
    cost = price_t * sum(ts)
    for k, i in enumerate(live):
        cost += w_prices[i] * vols[i] / ts[k]
    return cost


def allocation_exhaustive(quotes, price_sample, price_gain, gain_floor, gain_ceiling,
                          max_active, alpha, beta):
    """Exact welfare maximum over every admissible workload vector (tiny
    instances only).  quotes: list of (gain_rate, mtv, cost_list)."""
    best = None
    ranges = [range(0, q[1] + 1) for q in quotes]
    for combo in itertools.product(*ranges):
        if sum(1 for n in combo if n > 0) > max_active:
            continue
        gain = sum(q[0] * n for q, n in zip(quotes, combo))
        if not (gain_floor <= gain < gain_ceiling):
            continue
        payments = [price_sample * n for n in combo]
        costs = [q[2][n] for q, n in zip(quotes, combo)]
        profits = [p - c for p, c in zip(payments, costs)]
        if any(p < -1e-9 for p, n in zip(profits, combo) if n > 0):
            continue
        server = price_gain * gain - sum(payments)
        if server < -1e-9:
            continue
        welfare = alpha * server + beta * sum(profits)
        if best is None or welfare > best[0]:
            best = (welfare, combo)
    return best
