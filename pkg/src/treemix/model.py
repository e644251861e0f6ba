"""Markov processes indexed by a rooted tree over a finite alphabet.

A model is a root distribution plus one column-stochastic transition
kernel per tree edge; the joint law of the node variables is

    P(x) = root_dist[x_1] * prod over edges (u, v) of K_uv[x_v, x_u].

Everything downstream (conditional laws, exact mixing coefficients,
verification suites) enumerates this joint table, so table-building is
guarded by a cell cap: ``alphabet_size ** n`` must not exceed
``enumeration_cap()`` (default 1e7, overridable through the
``TREEMIX_MAX_ENUM`` environment variable or a ``max_cells`` argument).

Sampling uses one counter-based RNG stream per path, keyed by
``(seed, path_index)``, so batches are reproducible, order-independent,
and disjoint batches can be drawn from one seed via ``stream_offset``.
"""

from __future__ import annotations

import os
from bisect import bisect_right
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .treegraph import TreeTopology, subtree
from .tvalgebra import STOCHASTIC_ATOL, IndexedTensor

DEFAULT_ENUM_CAP = 10_000_000
ENUM_CAP_ENV = "TREEMIX_MAX_ENUM"


class EnumerationLimitError(RuntimeError):
    """Joint-table enumeration would exceed the configured cell cap."""


def enumeration_cap(override: int | None = None) -> int:
    """Effective cap on joint-table cells.

    ``override`` wins when given; otherwise the ``TREEMIX_MAX_ENUM``
    environment variable; otherwise 1e7.
    """
    if override is not None:
        cap = int(override)
    else:
        raw = os.environ.get(ENUM_CAP_ENV)
        if raw is None:
            return DEFAULT_ENUM_CAP
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(
                f"{ENUM_CAP_ENV} must be an integer, got {raw!r}"
            ) from None
    if cap < 1:
        raise ValueError(f"enumeration cap must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class Kernel:
    """Transition kernel attached to one edge (parent, child).

    ``matrix[x_child, x_parent]`` is the transition probability; columns
    are probability vectors (one per parent state).
    """

    edge: tuple[int, int]
    matrix: np.ndarray

    def __post_init__(self):
        u, v = self.edge
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise ValueError(f"kernel for edge ({u}, {v}) must be square, got {mat.shape}")
        if mat.min() < -1e-12:
            raise ValueError(
                f"kernel for edge ({u}, {v}) has negative entry {mat.min()}"
            )
        colsums = mat.sum(axis=0)
        worst = float(np.abs(colsums - 1.0).max())
        if worst > STOCHASTIC_ATOL:
            raise ValueError(
                f"kernel for edge ({u}, {v}): columns must sum to 1 within "
                f"{STOCHASTIC_ATOL}, worst deviation {worst:.3e}"
            )
        mat.flags.writeable = False
        object.__setattr__(self, "edge", (int(u), int(v)))
        object.__setattr__(self, "matrix", mat)

    @property
    def alphabet_size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MarkovTreeModel:
    """A tree topology with a root distribution and per-edge kernels."""

    tree: TreeTopology
    alphabet_size: int
    root_dist: np.ndarray
    kernels: Mapping[tuple[int, int], Kernel]

    def __post_init__(self):
        s = int(self.alphabet_size)
        if s < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.alphabet_size}")
        dist = np.array(self.root_dist, dtype=float).reshape(-1)
        if dist.size != s:
            raise ValueError(
                f"root distribution has {dist.size} entries, expected {s}"
            )
        if dist.min() < -1e-12 or abs(dist.sum() - 1.0) > STOCHASTIC_ATOL:
            raise ValueError("root distribution is not a probability vector")
        dist.flags.writeable = False
        kernels = dict(self.kernels)
        want = set(self.tree.edges())
        have = set(kernels)
        if want != have:
            raise ValueError(
                f"kernels must cover exactly the tree edges; missing "
                f"{sorted(want - have)}, extra {sorted(have - want)}"
            )
        for edge, k in kernels.items():
            if k.edge != edge:
                raise ValueError(f"kernel keyed {edge} carries edge {k.edge}")
            if k.alphabet_size != s:
                raise ValueError(
                    f"kernel for edge {edge} has alphabet {k.alphabet_size}, "
                    f"expected {s}"
                )
        object.__setattr__(self, "alphabet_size", s)
        object.__setattr__(self, "root_dist", dist)
        object.__setattr__(self, "kernels", kernels)

    @property
    def n(self) -> int:
        return self.tree.n

    def kernel(self, edge: tuple[int, int]) -> Kernel:
        key = (int(edge[0]), int(edge[1]))
        try:
            return self.kernels[key]
        except KeyError:
            raise ValueError(f"no kernel for edge {key}; edges are {self.tree.edges()}") from None

    def table_cells(self) -> int:
        return self.alphabet_size ** self.n

    def joint_table(self, max_cells: int | None = None) -> np.ndarray:
        """Full joint law as an ndarray with one axis per node.

        Cached after the first call.  Raises
        :class:`EnumerationLimitError` above the cell cap.
        """
        cached = self.__dict__.get("_joint_table")
        if cached is not None:
            return cached
        cap = enumeration_cap(max_cells)
        cells = self.table_cells()
        if cells > cap:
            raise EnumerationLimitError(
                f"joint table needs {cells} cells, cap is {cap} "
                f"(raise {ENUM_CAP_ENV} or pass max_cells to override)"
            )
        s, n = self.alphabet_size, self.n
        table = np.ones((s,) * n)
        shape = [1] * n
        shape[0] = s
        table *= self.root_dist.reshape(shape)
        for (u, v), k in sorted(self.kernels.items()):
            shape = [1] * n
            shape[u - 1] = s
            shape[v - 1] = s
            # matrix is [child, parent]; axis u-1 (parent) must index columns
            table *= k.matrix.T.reshape(shape)
        self.__dict__["_joint_table"] = table
        return table


def joint_probability(m: MarkovTreeModel, x: Sequence[int]) -> float:
    """Probability of one full configuration (product formula, no table)."""
    x = [int(xv) for xv in x]
    if len(x) != m.n:
        raise ValueError(f"configuration has {len(x)} entries, expected {m.n}")
    s = m.alphabet_size
    for v, xv in enumerate(x, start=1):
        if not 0 <= xv < s:
            raise ValueError(f"state {xv} at node {v} outside 0..{s - 1}")
    p = float(m.root_dist[x[0]])
    for (u, v), k in m.kernels.items():
        p *= float(k.matrix[x[v - 1], x[u - 1]])
    return p


def contraction_coefficient(m: MarkovTreeModel, edge: tuple[int, int]) -> float:
    """Largest TV distance between two columns of the edge's kernel."""
    mat = m.kernel(edge).matrix
    s = mat.shape[1]
    worst = 0.0
    for x in range(s - 1):
        d = 0.5 * np.abs(mat[:, x + 1 :] - mat[:, x : x + 1]).sum(axis=0)
        worst = max(worst, float(d.max()))
    return worst


def max_contraction(m: MarkovTreeModel) -> float:
    """Largest contraction coefficient over all edges (0 for n = 1)."""
    return max(
        (contraction_coefficient(m, e) for e in m.tree.edges()), default=0.0
    )


def conditional_future_law(
    m: MarkovTreeModel,
    prefix: Sequence[int],
    targets: Sequence[int],
    max_cells: int | None = None,
) -> IndexedTensor:
    """Law of the target nodes given ``x_1..x_i = prefix``, by enumeration.

    ``prefix`` fixes the first ``len(prefix)`` nodes in canonical order;
    ``targets`` must be a nonempty subset of the remaining nodes.
    Conditioning on a zero-probability prefix is an error.
    """
    s, n = m.alphabet_size, m.n
    i = len(prefix)
    if not 1 <= i < n:
        raise ValueError(f"prefix length must be in 1..{n - 1}, got {i}")
    px = [int(x) for x in prefix]
    if any(not 0 <= x < s for x in px):
        raise ValueError(f"prefix states must lie in 0..{s - 1}, got {px}")
    tg = sorted(int(v) for v in targets)
    if not tg:
        raise ValueError("target node set is empty")
    if len(set(tg)) != len(tg) or tg[0] <= i or tg[-1] > n:
        raise ValueError(
            f"targets must be distinct nodes in {i + 1}..{n}, got {tg}"
        )
    table = m.joint_table(max_cells)
    block = table[tuple(px)]
    total = float(block.sum())
    if total <= 0.0:
        raise ValueError(
            f"conditioning event x[1..{i}] = {px} has zero probability"
        )
    drop = tuple(
        k for k, v in enumerate(range(i + 1, n + 1)) if v not in set(tg)
    )
    marg = block.sum(axis=drop) if drop else block
    return IndexedTensor(tuple(tg), s, marg.reshape(-1) / total)


def sample_paths(
    m: MarkovTreeModel, seed: int, count: int, stream_offset: int = 0
) -> np.ndarray:
    """Draw ``count`` configurations, shape ``(count, n)``, dtype int64.

    Path ``p`` is generated from its own Philox stream keyed by
    ``(seed, stream_offset + p)``: results do not depend on batch
    splitting, and distinct offsets give non-overlapping randomness.
    """
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    if count < 1:
        raise ValueError(f"sample count must be >= 1, got {count}")
    if stream_offset < 0 or stream_offset + count > 2**64:
        raise ValueError("stream offset out of range")
    seed = int(seed)
    s, n = m.alphabet_size, m.n
    root_cdf = np.cumsum(m.root_dist).tolist()
    # Per node v >= 2: parent position and one cdf per parent state.
    parent_pos = [0] * (n + 1)
    cdfs: list[list[list[float]]] = [[] for _ in range(n + 1)]
    for v in range(2, n + 1):
        u = m.tree.parent[v]
        parent_pos[v] = u - 1
        mat = m.kernels[(u, v)].matrix
        cdfs[v] = [np.cumsum(mat[:, x]).tolist() for x in range(s)]
    top = s - 1
    out = np.empty((count, n), dtype=np.int64)
    row = [0] * n
    for p in range(count):
        gen = np.random.Generator(
            np.random.Philox(key=seed + ((stream_offset + p) << 64))
        )
        u = gen.random(n)
        row[0] = min(bisect_right(root_cdf, u[0]), top)
        for v in range(2, n + 1):
            cdf = cdfs[v][row[parent_pos[v]]]
            row[v - 1] = min(bisect_right(cdf, u[v - 1]), top)
        out[p] = row
    return out


def _independence_violation(
    table: np.ndarray, tree: TreeTopology, u: int
) -> float:
    """Worst deviation from conditional independence of child subtrees.

    For every pair of distinct children of ``u`` and every positive-
    probability state ``y`` of ``u``, compares the conditional joint law
    of the two child subtrees with the product of their conditional
    marginals, in sup norm.  Operates on a raw joint table so that
    degenerate (non-tree-factored) tables can be checked too.
    """
    n = tree.n
    kids = tree.children[u]
    worst = 0.0
    u_marginal = table.sum(axis=tuple(k for k in range(n) if k != u - 1))
    for a_pos, v1 in enumerate(kids):
        for v2 in kids[a_pos + 1 :]:
            t1 = sorted(subtree(tree, v1))
            t2 = sorted(subtree(tree, v2))
            keep = sorted([u] + t1 + t2)
            drop = tuple(k for k in range(n) if k + 1 not in set(keep))
            marg = table.sum(axis=drop) if drop else table
            # Reorder axes to (u, subtree of v1, subtree of v2).
            order = [keep.index(u)] + [keep.index(v) for v in t1]
            order += [keep.index(v) for v in t2]
            marg = np.transpose(marg, order)
            s = table.shape[0]
            marg = marg.reshape(s, s ** len(t1), s ** len(t2))
            for y in range(s):
                py = float(u_marginal[y])
                if py <= 0.0:
                    continue
                joint = marg[y] / py
                prod = np.outer(joint.sum(axis=1), joint.sum(axis=0))
                worst = max(worst, float(np.abs(joint - prod).max()))
    return worst


def verify_markov_property(
    m: MarkovTreeModel,
    u: int,
    atol: float = 1e-12,
    max_cells: int | None = None,
) -> tuple[bool, float]:
    """Check that child subtrees of ``u`` are independent given ``x_u``.

    Returns ``(ok, max_violation)``.  ``u`` must have at least two
    children; the check enumerates the joint table.
    """
    u = m.tree.check_node(u)
    if len(m.tree.children[u]) < 2:
        raise ValueError(f"node {u} has fewer than two children")
    violation = _independence_violation(m.joint_table(max_cells), m.tree, u)
    return violation <= atol, violation
