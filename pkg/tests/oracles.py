"""Independent brute-force oracles used by the tests."""

from itertools import combinations

import numpy as np


def all_set_partitions(d):
    """Every set partition of 1..d as a list of sorted blocks, by inserting each
    element into an existing block or a new one."""
    parts = [[]]
    for e in range(1, d + 1):
        nxt = []
        for p in parts:
            for i in range(len(p)):
                nxt.append([b + [e] if j == i else list(b) for j, b in enumerate(p)])
            nxt.append([list(b) for b in p] + [[e]])
        parts = nxt
    return parts


def crossing(blocks):
    for b1, b2 in combinations(blocks, 2):
        for i, j in combinations(b1, 2):
            for p, q in combinations(b2, 2):
                if i < p < j < q or p < i < q < j:
                    return True
    return False


def nesting_arcs(blocks):
    """Nesting on the arc diagram: arcs join consecutive block elements."""
    arcs = [(b[i], b[i + 1]) for b in blocks for i in range(len(b) - 1)]
    for (a, b), (c, e) in combinations(arcs, 2):
        if a < c < e < b or c < a < b < e:
            return True
    return False


def is_interval(blocks):
    return all(b == list(range(b[0], b[-1] + 1)) for b in blocks)


def in_class(blocks, name):
    return {
        "all": True,
        "noncrossing": not crossing(blocks),
        "nonnesting": not nesting_arcs(blocks),
        "interval": is_interval(blocks),
    }[name]


def bell_triangle(n):
    row, bells = [1], [1]
    for _ in range(n):
        new = [row[-1]]
        for v in row:
            new.append(new[-1] + v)
        row = new
        bells.append(row[0])
    return bells  # bells[d] = B_d


def lstsq_residual(Z, y):
    coef = np.linalg.lstsq(Z, y, rcond=None)[0]
    r = y - Z @ coef
    return float(r @ r)


def block_matrix(blocks, d):
    S = np.zeros((d, len(blocks)))
    for j, b in enumerate(blocks):
        S[np.asarray(b) - 1, j] = 1.0
    return S
