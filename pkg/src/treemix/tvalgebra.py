"""Total-variation algebra on tensors indexed by node sets.

A tensor here is a real-valued function of the states of a finite node
set, stored flat in lexicographic order with the smallest node most
significant.  The total-variation norm is half the entrywise l1 norm;
for two probability tensors p, q the distance ``tv_distance(p, q)``
equals ``max_A |p(A) - q(A)|`` over events A.

Stochastic operators map tensors on their input node set to tensors on
their output node set; columns (one per input configuration) are
probability vectors.  Their TV operator norm

    ``|||A||| = max_{x, x'} tv(A[:, x], A[:, x'])``

is the contraction coefficient: ``tv(Au, Av) <= |||A||| tv(u, v)`` for
probability inputs, ``|||A||| <= 1`` always, and the norm is
submultiplicative under composition.

``alpha`` is the k-argument combination rule governing how contraction
coefficients of independent factors combine under tensor products:
``alpha([x]) = x`` and ``alpha(xs + [y]) = y + (1 - y) * alpha(xs)``.
It is symmetric, monotone, maps [0,1]^k into [0,1], and never exceeds
the plain sum of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Tolerance for "columns sum to one" checks on stochastic data.
STOCHASTIC_ATOL = 1e-9
# Tolerance for range checks on alpha arguments (absorbs float dust from
# upstream TV computations).
_RANGE_ATOL = 1e-12


def _check_index(index_set: Sequence[int], what: str) -> tuple[int, ...]:
    nodes = tuple(int(v) for v in index_set)
    if len(nodes) == 0:
        raise ValueError(f"{what} must be nonempty")
    if any(v < 1 for v in nodes):
        raise ValueError(f"{what} contains a non-positive node id: {nodes}")
    if nodes != tuple(sorted(set(nodes))):
        raise ValueError(f"{what} must be strictly increasing, got {nodes}")
    return nodes


@dataclass(frozen=True)
class IndexedTensor:
    """A real tensor over the configurations of a fixed node set.

    ``values`` has length ``alphabet_size ** len(index_set)`` and is laid
    out in C order: the first (smallest) node of ``index_set`` is the
    most significant digit of the flat position.
    """

    index_set: tuple[int, ...]
    alphabet_size: int
    values: np.ndarray

    def __post_init__(self):
        nodes = _check_index(self.index_set, "index set")
        s = int(self.alphabet_size)
        if s < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.alphabet_size}")
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size != s ** len(nodes):
            raise ValueError(
                f"expected {s ** len(nodes)} values for {len(nodes)} nodes over "
                f"an alphabet of {s}, got {vals.size}"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "index_set", nodes)
        object.__setattr__(self, "alphabet_size", s)
        object.__setattr__(self, "values", vals)

    @property
    def tv_norm(self) -> float:
        return 0.5 * float(np.abs(self.values).sum())

    def total(self) -> float:
        return float(self.values.sum())

    def is_balanced(self, atol: float = 1e-12) -> bool:
        """True when the entries sum to zero (a difference of distributions)."""
        return abs(self.total()) <= atol

    def is_distribution(self, atol: float = STOCHASTIC_ATOL) -> bool:
        return bool(self.values.min() >= -atol) and abs(self.total() - 1.0) <= atol

    def as_nd(self) -> np.ndarray:
        """View shaped with one axis per node, in index_set order."""
        k = len(self.index_set)
        return self.values.reshape((self.alphabet_size,) * k)


def tv_distance(p: IndexedTensor, q: IndexedTensor) -> float:
    """Total-variation distance ``0.5 * sum |p - q|`` on a common index set."""
    if p.index_set != q.index_set:
        raise ValueError(
            f"index sets differ: {p.index_set} vs {q.index_set}"
        )
    if p.alphabet_size != q.alphabet_size:
        raise ValueError(
            f"alphabet sizes differ: {p.alphabet_size} vs {q.alphabet_size}"
        )
    return 0.5 * float(np.abs(p.values - q.values).sum())


def tensor_product(factors: Sequence[IndexedTensor]) -> IndexedTensor:
    """Outer product of tensors on pairwise disjoint node sets.

    The result is indexed by the sorted union of the factors' nodes; a
    product of probability tensors is again a probability tensor.
    """
    factors = list(factors)
    if not factors:
        raise ValueError("tensor product of an empty factor list")
    s = factors[0].alphabet_size
    if any(f.alphabet_size != s for f in factors):
        raise ValueError("factors must share one alphabet size")
    seen: set[int] = set()
    for f in factors:
        overlap = seen & set(f.index_set)
        if overlap:
            raise ValueError(f"factors overlap on nodes {sorted(overlap)}")
        seen |= set(f.index_set)
    nodes = tuple(sorted(seen))
    axis = {v: k for k, v in enumerate(nodes)}
    operands: list = []
    for f in factors:
        operands.append(f.as_nd())
        operands.append([axis[v] for v in f.index_set])
    out = np.einsum(*operands, list(range(len(nodes))))
    return IndexedTensor(nodes, s, out.reshape(-1))


@dataclass(frozen=True)
class StochasticOperator:
    """A column-stochastic linear map between node-set tensor spaces.

    ``entries`` has shape ``(s**len(out_index), s**len(in_index))``;
    column ``x`` is the probability tensor produced from the input
    configuration ``x`` (flat, same lexicographic layout as
    :class:`IndexedTensor`).  ``in_index`` and ``out_index`` may share
    nodes (e.g. an identity block); each must be strictly increasing.
    """

    in_index: tuple[int, ...]
    out_index: tuple[int, ...]
    alphabet_size: int
    entries: np.ndarray

    def __post_init__(self):
        in_nodes = _check_index(self.in_index, "input index set")
        out_nodes = _check_index(self.out_index, "output index set")
        s = int(self.alphabet_size)
        if s < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.alphabet_size}")
        mat = np.array(self.entries, dtype=float)
        want = (s ** len(out_nodes), s ** len(in_nodes))
        if mat.shape != want:
            raise ValueError(f"expected entries of shape {want}, got {mat.shape}")
        if mat.min() < -_RANGE_ATOL:
            raise ValueError(f"negative entry {mat.min()} in stochastic operator")
        colsums = mat.sum(axis=0)
        worst = float(np.abs(colsums - 1.0).max())
        if worst > STOCHASTIC_ATOL:
            raise ValueError(
                f"columns must sum to 1 within {STOCHASTIC_ATOL}, worst "
                f"deviation {worst:.3e}"
            )
        mat.flags.writeable = False
        object.__setattr__(self, "in_index", in_nodes)
        object.__setattr__(self, "out_index", out_nodes)
        object.__setattr__(self, "alphabet_size", s)
        object.__setattr__(self, "entries", mat)

    @classmethod
    def identity(cls, nodes: Sequence[int], alphabet_size: int) -> "StochasticOperator":
        nodes = tuple(nodes)
        dim = alphabet_size ** len(nodes)
        return cls(nodes, nodes, alphabet_size, np.eye(dim))


def operator_tv_norm(a: StochasticOperator) -> float:
    """Largest TV distance between two columns (contraction coefficient).

    Zero for a single-column operator; always in [0, 1].
    """
    mat = a.entries
    ncols = mat.shape[1]
    worst = 0.0
    for x in range(ncols - 1):
        d = 0.5 * np.abs(mat[:, x + 1 :] - mat[:, x : x + 1]).sum(axis=0)
        m = float(d.max())
        if m > worst:
            worst = m
    return worst


def apply_operator(a: StochasticOperator, u: IndexedTensor) -> IndexedTensor:
    """Matrix-vector product; the input must live on ``a.in_index``."""
    if u.index_set != a.in_index:
        raise ValueError(
            f"operator expects input on {a.in_index}, got {u.index_set}"
        )
    if u.alphabet_size != a.alphabet_size:
        raise ValueError(
            f"alphabet sizes differ: {a.alphabet_size} vs {u.alphabet_size}"
        )
    return IndexedTensor(a.out_index, a.alphabet_size, a.entries @ u.values)


def stochastic_tensor_product(
    factors: Sequence[StochasticOperator],
) -> StochasticOperator:
    """Combine operators acting on disjoint outputs into one operator.

    Entry at (y, x) is the product of the factors' entries; output node
    sets must be pairwise disjoint, while input node sets may share
    nodes (a shared input is read by every factor that lists it).  The
    result's input index is the sorted union of the factors' inputs.
    """
    factors = list(factors)
    if not factors:
        raise ValueError("tensor product of an empty factor list")
    s = factors[0].alphabet_size
    if any(f.alphabet_size != s for f in factors):
        raise ValueError("factors must share one alphabet size")
    out_seen: set[int] = set()
    in_seen: set[int] = set()
    for f in factors:
        overlap = out_seen & set(f.out_index)
        if overlap:
            raise ValueError(f"output node sets overlap on {sorted(overlap)}")
        out_seen |= set(f.out_index)
        in_seen |= set(f.in_index)
    out_nodes = tuple(sorted(out_seen))
    in_nodes = tuple(sorted(in_seen))
    # einsum with integer axis labels: outputs first, inputs after.
    label = {("out", v): k for k, v in enumerate(out_nodes)}
    label.update({("in", v): len(out_nodes) + k for k, v in enumerate(in_nodes)})
    operands: list = []
    for f in factors:
        nd = f.entries.reshape((s,) * (len(f.out_index) + len(f.in_index)))
        subs = [label[("out", v)] for v in f.out_index]
        subs += [label[("in", v)] for v in f.in_index]
        operands.append(nd)
        operands.append(subs)
    out_subs = list(range(len(out_nodes) + len(in_nodes)))
    nd = np.einsum(*operands, out_subs)
    mat = nd.reshape(s ** len(out_nodes), s ** len(in_nodes))
    return StochasticOperator(in_nodes, out_nodes, s, mat)


def expand_operator_inputs(
    a: StochasticOperator, in_index: Sequence[int]
) -> StochasticOperator:
    """Re-index ``a`` over a larger input node set, ignoring the new nodes.

    Columns are replicated across the states of nodes in ``in_index``
    that ``a`` does not read; the operator computes the same map.
    """
    new_in = _check_index(in_index, "input index set")
    if not set(a.in_index) <= set(new_in):
        missing = sorted(set(a.in_index) - set(new_in))
        raise ValueError(f"new input index drops nodes {missing}")
    if new_in == a.in_index:
        return a
    s = a.alphabet_size
    nrows = a.entries.shape[0]
    nd = a.entries.reshape((nrows,) + (s,) * len(a.in_index))
    # Both node lists are sorted, so inserting broadcast axes left to
    # right keeps surviving axes aligned with their nodes.
    for k, v in enumerate(new_in):
        if v not in a.in_index:
            nd = np.expand_dims(nd, axis=1 + k)
    nd = np.broadcast_to(nd, (nrows,) + (s,) * len(new_in))
    mat = np.ascontiguousarray(nd).reshape(nrows, s ** len(new_in))
    return StochasticOperator(new_in, a.out_index, s, mat)


def alpha(values: Iterable[float]) -> float:
    """Combination rule for contraction coefficients of product factors.

    Folds ``acc <- x + (1 - x) * acc`` over the arguments in ascending
    order (the rule is symmetric; the fixed order makes the float result
    permutation-invariant too).  Arguments must lie in [0, 1] up to a
    1e-12 tolerance; an empty collection is rejected.

    Equals ``1 - prod(1 - x)``; in particular ``alpha([x] * k)`` is
    ``1 - (1 - x) ** k``, and the result never exceeds ``sum(values)``.
    """
    xs = sorted(float(x) for x in values)
    if not xs:
        raise ValueError("alpha of an empty collection is undefined")
    acc = 0.0
    for x in xs:
        if x < -_RANGE_ATOL or x > 1.0 + _RANGE_ATOL:
            raise ValueError(f"alpha argument {x} outside [0, 1]")
        x = min(max(x, 0.0), 1.0)
        acc = x + (1.0 - x) * acc
    return acc
