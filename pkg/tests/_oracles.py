"""Independent brute-force reference implementations used only by tests.

Everything here is deliberately written with plain Python loops and floats,
no numpy vectorization and no reuse of the package's query code, so the
implementations under test are checked against a second, slower route.
"""

from __future__ import annotations

import math


def oracle_mindist_sq(box_min, box_max, q) -> float:
    total = 0.0
    for k in range(len(q)):
        if q[k] < box_min[k]:
            diff = box_min[k] - q[k]
        elif q[k] > box_max[k]:
            diff = q[k] - box_max[k]
        else:
            continue
        total += diff * diff
    return total


def oracle_grid_mindist_sq(box_min, box_max, q, steps: int = 200) -> float:
    """Minimize squared distance to the box over a dense grid of box points."""
    d = len(q)
    axes = []
    for k in range(d):
        lo, hi = box_min[k], box_max[k]
        if lo == hi:
            axes.append([lo])
        else:
            axes.append([lo + (hi - lo) * i / steps for i in range(steps + 1)])

    best = math.inf

    def rec(k, acc):
        nonlocal best
        if acc >= best:
            return
        if k == d:
            best = acc
            return
        for v in axes[k]:
            diff = q[k] - v
            rec(k + 1, acc + diff * diff)

    rec(0, 0.0)
    return best


def oracle_covers(box_min, box_max, q, ignore_dims=frozenset()) -> bool:
    for k in range(len(q)):
        if k in ignore_dims:
            continue
        if q[k] < box_min[k] or q[k] > box_max[k]:
            return False
    return True


def oracle_predict(granules, q):
    """Linear-scan reimplementation of the granule query rule.

    granules: list of (granule_id, box_min, box_max, mean_target) sorted or
    not; q: plain sequence. Returns a list of floats. Accumulation happens in
    ascending granule_id order, matching the documented summation order.
    """
    items = sorted(granules, key=lambda g: g[0])
    covering = [g for g in items if oracle_covers(g[1], g[2], q)]
    if not covering:
        best = None
        best_d = None
        for g in items:
            d = oracle_mindist_sq(g[1], g[2], q)
            if best is None or d < best_d:
                best, best_d = g, d
        covering = [best]
    d_y = len(covering[0][3])
    acc = [0.0] * d_y
    for g in covering:
        for c in range(d_y):
            acc[c] += g[3][c]
    return [v / len(covering) for v in acc]


def oracle_recent_ids(granules, temporal_dim) -> set:
    """Member-witnessed visibility: granule ids whose own member picks them newest.

    granules: list of (granule_id, box_min, box_max, member_feature_rows).
    A member's newest cover is the covering granule (temporal dimension
    ignored) with the greatest temporal upper bound, ties to the smaller id.
    """
    items = sorted(granules, key=lambda g: g[0])
    d = len(items[0][1])
    ignore = {temporal_dim}
    recent = set()
    for gid, _, _, members in items:
        for feat in members:
            best = None
            best_key = None
            for ogid, omin, omax, _ in items:
                if not oracle_covers(omin, omax, feat, ignore):
                    continue
                key = (omax[temporal_dim], -ogid)
                if best is None or key > best_key:
                    best, best_key = ogid, key
            if best == gid:
                recent.add(gid)
                break
    return recent


def oracle_allan_variance(seq) -> float:
    k = len(seq)
    total = 0.0
    for i in range(k - 1):
        diff = seq[i + 1] - seq[i]
        total += diff * diff
    return total / (2.0 * (k - 1))
