"""Shared fixtures and independent oracles.

The oracles deliberately avoid the library's vectorized joint-table
path: they enumerate configurations one by one with the plain product
formula and python dict arithmetic, so agreement with the library is a
genuine cross-check rather than the same code run twice.
"""

from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np
import pytest

from treemix import Kernel, MarkovTreeModel, build_tree


# --------------------------------------------------------------- builders


def make_model(n, edges, alphabet_size, root_dist, kernel_map):
    """Build a model from plain lists; kernel_map maps edge -> rows.

    Kernel rows are parent-major (row per parent state), as in the file
    format; they are transposed into column-stochastic matrices here.
    """
    topo, relabel = build_tree(n, edges)
    kernels = {}
    for (u, v), rows in kernel_map.items():
        edge = (relabel[u], relabel[v])
        kernels[edge] = Kernel(edge, np.array(rows, dtype=float).T)
    return MarkovTreeModel(topo, alphabet_size, np.array(root_dist, float), kernels)


def chain_model(kernel_rows_list, root_dist=None):
    """Chain 1 -> 2 -> ... with one parent-major kernel per edge."""
    n = len(kernel_rows_list) + 1
    s = len(kernel_rows_list[0])
    if root_dist is None:
        root_dist = [1.0 / s] * s
    edges = [(k, k + 1) for k in range(1, n)]
    kernel_map = {(k, k + 1): rows for k, rows in enumerate(kernel_rows_list, 1)}
    return make_model(n, edges, s, root_dist, kernel_map)


# A 2-state kernel with contraction coefficient exactly 0.7.
ROWS_07 = [[0.9, 0.1], [0.2, 0.8]]
# Contraction coefficient exactly 0.5.
ROWS_05 = [[0.75, 0.25], [0.25, 0.75]]


@pytest.fixture
def chain3_07():
    """Chain of 3 binary nodes, both kernels with theta = 0.7."""
    return chain_model([ROWS_07, ROWS_07])


@pytest.fixture
def binary7_05():
    """Full binary tree on 7 nodes, every kernel with theta = 0.5."""
    edges = [(1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7)]
    kernel_map = {e: ROWS_05 for e in edges}
    return make_model(7, edges, 2, [0.5, 0.5], kernel_map)


# ---------------------------------------------------------------- oracles


def oracle_joint(m) -> dict[tuple[int, ...], float]:
    """Configuration -> probability by the plain product formula."""
    s, n = m.alphabet_size, m.n
    out = {}
    for cfg in itertools.product(range(s), repeat=n):
        p = float(m.root_dist[cfg[0]])
        for (u, v), k in m.kernels.items():
            p *= float(k.matrix[cfg[v - 1], cfg[u - 1]])
        out[cfg] = p
    return out


def oracle_conditional(m, prefix, targets) -> dict[tuple[int, ...], float]:
    """Bayes-rule conditional law of the target nodes given a prefix."""
    prefix = tuple(prefix)
    targets = tuple(sorted(targets))
    num: dict[tuple[int, ...], float] = defaultdict(float)
    den = 0.0
    for cfg, p in oracle_joint(m).items():
        if cfg[: len(prefix)] != prefix:
            continue
        den += p
        num[tuple(cfg[t - 1] for t in targets)] += p
    if den <= 0:
        raise ZeroDivisionError("zero-probability prefix")
    return {key: val / den for key, val in num.items()}


def oracle_eta(m, i, j, prefix, w, w_prime) -> float:
    """TV distance between the two conditional tail laws."""
    targets = range(j, m.n + 1)
    law_w = oracle_conditional(m, tuple(prefix) + (w,), targets)
    law_wp = oracle_conditional(m, tuple(prefix) + (w_prime,), targets)
    keys = set(law_w) | set(law_wp)
    return 0.5 * sum(abs(law_w.get(k, 0.0) - law_wp.get(k, 0.0)) for k in keys)


def oracle_prefix_mass(m) -> dict[tuple[int, ...], float]:
    """Prefix (length i) -> probability, for every i in 1..n."""
    masses: dict[tuple[int, ...], float] = defaultdict(float)
    for cfg, p in oracle_joint(m).items():
        for i in range(1, m.n + 1):
            masses[cfg[:i]] += p
    return masses


def oracle_eta_bar(m, i, j) -> float:
    """Sup of oracle_eta over positive-probability prefixes and pairs."""
    s = m.alphabet_size
    masses = oracle_prefix_mass(m)
    best = 0.0
    for prefix in itertools.product(range(s), repeat=i - 1):
        for w in range(s):
            if masses[prefix + (w,)] <= 0:
                continue
            for wp in range(w + 1, s):
                if masses[prefix + (wp,)] <= 0:
                    continue
                best = max(best, oracle_eta(m, i, j, prefix, w, wp))
    return best
