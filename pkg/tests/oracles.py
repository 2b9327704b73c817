"""Slow, obviously-correct reference computations used by the tests.

Nothing here imports the package's estimators.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter


def brute_force_te(source, target, alphabet_x, alphabet_y, k=1, l=1):
    """Transfer entropy by enumerating every (x_t, x_hist, y_hist) tuple.

    Returns ``(global_bits, local_bits)`` where local values start at slot
    ``max(k, l)``.
    """
    m = max(k, l)
    samples = []
    for t in range(m, len(target)):
        xh = tuple(target[t - i] for i in range(1, k + 1))
        yh = tuple(source[t - j] for j in range(1, l + 1))
        samples.append((target[t], xh, yh))
    n = len(samples)
    joint = Counter(samples)

    p_xxy, p_xy, p_xx, p_x = {}, {}, {}, {}
    for xt in range(alphabet_x):
        for xh in itertools.product(range(alphabet_x), repeat=k):
            for yh in itertools.product(range(alphabet_y), repeat=l):
                c = joint.get((xt, xh, yh), 0) / n
                p_xxy[(xt, xh, yh)] = c
                p_xy[(xh, yh)] = p_xy.get((xh, yh), 0.0) + c
                p_xx[(xt, xh)] = p_xx.get((xt, xh), 0.0) + c
                p_x[xh] = p_x.get(xh, 0.0) + c

    total = 0.0
    for (xt, xh, yh), p in p_xxy.items():
        if p == 0:
            continue
        total += p * math.log2((p / p_xy[(xh, yh)]) / (p_xx[(xt, xh)] / p_x[xh]))

    local = [
        math.log2((p_xxy[s] / p_xy[(s[1], s[2])]) / (p_xx[(s[0], s[1])] / p_x[s[1]]))
        for s in samples
    ]
    return total, local


def conditional_entropy_te(source, target, k=1, l=1):
    """H(X_t | X_hist) - H(X_t | X_hist, Y_hist) from tuple counts."""
    m = max(k, l)
    rows = []
    for t in range(m, len(target)):
        xh = tuple(target[t - i] for i in range(1, k + 1))
        yh = tuple(source[t - j] for j in range(1, l + 1))
        rows.append((target[t], xh, yh))
    n = len(rows)

    def h(counter):
        return -sum(c / n * math.log2(c / n) for c in counter.values())

    h_xx = h(Counter((r[0], r[1]) for r in rows))
    h_x = h(Counter(r[1] for r in rows))
    h_xxy = h(Counter(rows))
    h_xy = h(Counter((r[1], r[2]) for r in rows))
    return (h_xx - h_x) - (h_xxy - h_xy)


def direct_mi(x, y):
    """Double sum over the joint table: sum p(x,y) log2 p(x,y)/(p(x)p(y))."""
    n = len(x)
    joint = Counter(zip(x, y))
    px = Counter(x)
    py = Counter(y)
    return sum(
        c / n * math.log2((c / n) / ((px[a] / n) * (py[b] / n))) for (a, b), c in joint.items()
    )


def hand_gamma(n):
    """Elias-gamma by the textbook rule: floor(log2 n) zeros, then n in binary."""
    zeros = int(math.floor(math.log2(n)))
    return "0" * zeros + bin(n)[2:]
