"""Mixing coefficients of Markov tree processes and bounds on them.

For ``1 <= i < j <= n`` the coefficient

    eta(i, j; y, w, w') = tv( law of x_{j..n} | x_{1..i-1} = y, x_i = w,
                              law of x_{j..n} | x_{1..i-1} = y, x_i = w' )

measures how much the tail of the numbering can still feel a swap at
node ``i``; ``eta_bar(i, j)`` is its supremum over positive-probability
prefixes and state pairs.  These suprema assemble into the mixing
matrices that drive the concentration bounds in
:mod:`treemix.concentration`.

Three computations are provided, cheapest last:

* exact values by joint-table enumeration (``eta_exact``,
  ``eta_bar_exact``), feasible below the cell cap;
* the level product bound (``eta_bar_bound_levels``): only the subtree
  of ``i`` matters, only down to the depth of the first subtree node
  ``j0`` numbered at or after ``j``, and each level contributes the
  ``alpha``-combination of its edge contraction coefficients;
* closed forms from a uniform contraction bound theta and a width cap L
  (``eta_bar_bound_uniform``, ``geometric_rate``) or from linear level
  growth (``eta_bar_bound_linear_growth``).

``eta_factorization`` rebuilds eta(i, j; y, w, w') explicitly as
``tv(B A^(d_k) ... A^(d_2) h)``: the column-difference tensor ``h`` at
the first level below ``i``, one stochastic operator per level of the
subtree, and a frontier operator ``B`` that keeps the nodes the tail
actually depends on.  The value equals the enumerated coefficient and
does not depend on the feasible prefix ``y``; each intermediate norm
certifies one inequality in the chain down to the level product bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    MarkovTreeModel,
    conditional_future_law,
    contraction_coefficient,
    enumeration_cap,
    max_contraction,
)
from .treegraph import cut_sets, first_descendant_at_or_after, subtree
from .tvalgebra import (
    IndexedTensor,
    StochasticOperator,
    alpha,
    apply_operator,
    expand_operator_inputs,
    operator_tv_norm,
    stochastic_tensor_product,
    tv_distance,
)


def _check_pair(m: MarkovTreeModel, i: int, j: int) -> tuple[int, int]:
    i = m.tree.check_node(i)
    j = m.tree.check_node(j)
    if not i < j:
        raise ValueError(f"need i < j, got i={i}, j={j}")
    return i, j


def eta_exact(
    m: MarkovTreeModel,
    i: int,
    j: int,
    prefix: tuple[int, ...] = (),
    w: int = 0,
    w_prime: int = 0,
    max_cells: int | None = None,
) -> float:
    """eta(i, j; prefix, w, w') by enumeration.

    ``prefix`` fixes nodes ``1..i-1`` (empty when ``i == 1``); both
    extended prefixes must have positive probability.
    """
    i, j = _check_pair(m, i, j)
    if len(prefix) != i - 1:
        raise ValueError(
            f"prefix must fix nodes 1..{i - 1} ({i - 1} states), got {len(prefix)}"
        )
    targets = tuple(range(j, m.n + 1))
    law_w = conditional_future_law(m, (*prefix, w), targets, max_cells)
    law_wp = conditional_future_law(m, (*prefix, w_prime), targets, max_cells)
    return tv_distance(law_w, law_wp)


def _eta_tables(
    m: MarkovTreeModel, i: int, j: int, max_cells: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """All eta(i, j; y, w, w') at once.

    Returns ``(tv, feasible)`` where ``tv[y, w, w']`` is the coefficient
    for prefix ``y`` (flat over nodes ``1..i-1``) and ``feasible[y, w]``
    marks prefixes with positive probability.  Infeasible entries of
    ``tv`` are zero.
    """
    i, j = _check_pair(m, i, j)
    s, n = m.alphabet_size, m.n
    table = m.joint_table(max_cells)
    flat = table.reshape(s ** (i - 1), s, s ** (j - 1 - i), s ** (n - j + 1))
    tail = flat.sum(axis=2)  # (prefix, w, tail configurations)
    mass = tail.sum(axis=2)  # (prefix, w)
    feasible = mass > 0.0
    laws = np.zeros_like(tail)
    np.divide(tail, mass[:, :, None], out=laws, where=feasible[:, :, None])
    tv = np.zeros((s ** (i - 1), s, s))
    for w in range(s):
        for wp in range(w + 1, s):
            d = 0.5 * np.abs(laws[:, w, :] - laws[:, wp, :]).sum(axis=1)
            both = feasible[:, w] & feasible[:, wp]
            d = np.where(both, d, 0.0)
            tv[:, w, wp] = d
            tv[:, wp, w] = d
    return tv, feasible


def eta_bar_exact(
    m: MarkovTreeModel, i: int, j: int, max_cells: int | None = None
) -> float:
    """Supremum of eta(i, j; y, w, w') over feasible prefixes and states.

    Exactly zero when the subtree of ``i`` ends before ``j`` (the tail
    is then conditionally independent of the state at ``i``; enumeration
    would only report rounding dust), and zero when no positive-
    probability prefix admits two feasible states at node ``i``.
    """
    i, j = _check_pair(m, i, j)
    if first_descendant_at_or_after(m.tree, i, j) is None:
        return 0.0
    tv, _ = _eta_tables(m, i, j, max_cells)
    return float(tv.max())


@dataclass(frozen=True)
class J0Reduction:
    """Outcome of restricting the pair (i, j) to the subtree of ``i``."""

    i: int
    j: int
    j0: int | None

    @property
    def eta_is_zero(self) -> bool:
        """True when the subtree of ``i`` ends before ``j``."""
        return self.j0 is None


def reduce_via_j0(m: MarkovTreeModel, i: int, j: int) -> J0Reduction:
    """Find the pivot ``j0``; eta(i, j; . ) equals eta(i, j0; . ).

    When ``j0`` is None the tail ``j..n`` is conditionally independent
    of the state at ``i`` and every coefficient is zero.
    """
    i, j = _check_pair(m, i, j)
    return J0Reduction(i=i, j=j, j0=first_descendant_at_or_after(m.tree, i, j))


def _level_edges(
    m: MarkovTreeModel, i: int, depth_lo: int, depth_hi: int
) -> list[list[tuple[int, int]]]:
    """Subtree edges of ``i`` grouped by child depth ``depth_lo..depth_hi``."""
    tree = m.tree
    ti = subtree(tree, i)
    groups: list[list[tuple[int, int]]] = []
    for d in range(depth_lo, depth_hi + 1):
        level = sorted(ti & tree.levels[d])
        groups.append([(tree.parent[v], v) for v in level])
    return groups


def eta_bar_bound_levels(m: MarkovTreeModel, i: int, j: int) -> float:
    """Level product bound on eta_bar(i, j).

    Product over depths ``depth(i)+1 .. depth(j0)`` of the alpha
    combination of the contraction coefficients of the subtree edges
    ending at that depth; zero when ``j0`` is absent.
    """
    i, j = _check_pair(m, i, j)
    j0 = first_descendant_at_or_after(m.tree, i, j)
    if j0 is None:
        return 0.0
    d_i, d_j0 = m.tree.depth_of[i], m.tree.depth_of[j0]
    bound = 1.0
    for edges in _level_edges(m, i, d_i + 1, d_j0):
        bound *= alpha(contraction_coefficient(m, e) for e in edges)
    return bound


def eta_bar_bound_uniform(theta: float, width_cap: int, i: int, j: int) -> float:
    """Closed-form bound from a uniform contraction coefficient.

    ``(1 - (1 - theta)**L) ** floor((j - i) / L)`` with ``L`` a width
    cap for the tree (``L >= wid``); requires ``0 <= theta < 1``.
    The ``L == 1`` chain case is computed as ``theta ** (j - i)``.
    """
    theta = float(theta)
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0, 1), got {theta}")
    L = int(width_cap)
    if L < 1:
        raise ValueError(f"width cap must be >= 1, got {width_cap}")
    i, j = int(i), int(j)
    if not i < j:
        raise ValueError(f"need i < j, got i={i}, j={j}")
    if L == 1:
        return theta ** (j - i)
    return (1.0 - (1.0 - theta) ** L) ** ((j - i) // L)


def geometric_rate(theta: float, width_cap: int) -> float:
    """Geometric decay rate implied by the uniform bound.

    ``(1 - (1 - theta)**L) ** (1 / (2L - 1))``: for ``j - i >= L`` the
    uniform bound is at most this rate to the power ``j - i`` (via
    ``floor(k / L) >= k / (2L - 1)`` for ``k >= L``).  Requires
    ``0 < theta < 1``.
    """
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    L = int(width_cap)
    if L < 1:
        raise ValueError(f"width cap must be >= 1, got {width_cap}")
    return (1.0 - (1.0 - theta) ** L) ** (1.0 / (2 * L - 1))


class LevelGrowthError(ValueError):
    """The tree violates the assumed linear bound on level sizes."""


@dataclass(frozen=True)
class LinearGrowthBound:
    """Bound on eta_bar(i, j) for trees whose levels grow linearly.

    ``product_bound`` multiplies, over the levels separating ``i`` from
    the pivot ``j0``, the plain sums of edge contraction coefficients
    (clamped to 1); it is always valid under the growth premise.
    ``closed_form`` is ``beta ** (sqrt(2 (j - i) / c) - depth(i) - 1)``
    (clamped to 1), where ``beta = max_k c * k * theta_k`` over the
    separating levels; it is only emitted when ``beta < 1``
    (``beta_premise_holds``), and ``vacuous`` marks a non-positive
    exponent, where the closed form degenerates to 1.
    """

    i: int
    j: int
    j0: int | None
    c: float
    product_bound: float
    beta: float | None
    exponent: float | None
    closed_form: float | None
    beta_premise_holds: bool
    vacuous: bool


def eta_bar_bound_linear_growth(
    m: MarkovTreeModel, i: int, j: int, c: float
) -> LinearGrowthBound:
    """Bounds on eta_bar(i, j) assuming level ``d`` has at most ``c*d`` nodes.

    Raises :class:`LevelGrowthError` when the tree itself violates the
    premise.
    """
    i, j = _check_pair(m, i, j)
    c = float(c)
    if c <= 0.0:
        raise ValueError(f"growth constant must be positive, got {c}")
    tree = m.tree
    for d in range(1, tree.depth + 1):
        if len(tree.levels[d]) > c * d:
            raise LevelGrowthError(
                f"level {d} has {len(tree.levels[d])} nodes, exceeding c*d = {c * d}"
            )
    j0 = first_descendant_at_or_after(tree, i, j)
    if j0 is None:
        return LinearGrowthBound(
            i=i, j=j, j0=None, c=c, product_bound=0.0, beta=None,
            exponent=None, closed_form=None, beta_premise_holds=True,
            vacuous=False,
        )
    d_i, d_j0 = tree.depth_of[i], tree.depth_of[j0]
    product = 1.0
    beta = 0.0
    for k, edges in enumerate(_level_edges(m, i, d_i + 1, d_j0), start=1):
        thetas = [contraction_coefficient(m, e) for e in edges]
        product *= sum(thetas)
        beta = max(beta, c * k * max(thetas, default=0.0))
    product = min(product, 1.0)
    exponent = math.sqrt(2.0 * (j - i) / c) - d_i - 1.0
    if beta >= 1.0:
        return LinearGrowthBound(
            i=i, j=j, j0=j0, c=c, product_bound=product, beta=beta,
            exponent=exponent, closed_form=None, beta_premise_holds=False,
            vacuous=False,
        )
    vacuous = exponent <= 0.0
    closed = 1.0 if vacuous else min(beta**exponent, 1.0)
    return LinearGrowthBound(
        i=i, j=j, j0=j0, c=c, product_bound=product, beta=beta,
        exponent=exponent, closed_form=closed, beta_premise_holds=True,
        vacuous=vacuous,
    )


@dataclass(frozen=True)
class FactorizationTrace:
    """eta(i, j; ., w, w') rebuilt as one explicit operator pipeline.

    ``value = tv(B f)`` with ``f = A^(d_k) ... A^(d_2) h``; the fields
    record every intermediate quantity so the inequality chain

        value <= tv(h) * prod(operator_norms) <= prod(alpha_bounds)

    can be checked term by term.  ``operator_norms[k]`` and
    ``alpha_bounds[k]`` describe the operator one level below
    ``depth(i) + 1 + k``; ``alpha_bounds`` additionally covers the first
    level (bounding ``tv(h)``), so it has one more entry.
    """

    i: int
    j: int
    j0: int
    w: int
    w_prime: int
    value: float
    h_norm: float
    operator_norms: tuple[float, ...]
    alpha_bounds: tuple[float, ...]
    b_norm: float

    @property
    def norm_chain_bound(self) -> float:
        return self.h_norm * math.prod(self.operator_norms)

    @property
    def alpha_product(self) -> float:
        return math.prod(self.alpha_bounds)


def _edge_operator(m: MarkovTreeModel, u: int, v: int) -> StochasticOperator:
    return StochasticOperator((u,), (v,), m.alphabet_size, m.kernel((u, v)).matrix)


def eta_factorization(
    m: MarkovTreeModel, i: int, j: int, w: int, w_prime: int
) -> FactorizationTrace:
    """Compute eta(i, j; y, w, w') without enumerating the joint law.

    Builds the per-level stochastic operators of the subtree of ``i``
    down to the pivot depth, the column-difference tensor between the
    conditionings ``x_i = w`` and ``x_i = w'``, and the frontier
    operator that marginalizes pre-pivot nodes while carrying the rest;
    the TV norm of the final tensor is the coefficient (for every
    feasible prefix ``y``).  Raises when the pivot is absent, since the
    coefficient is then identically zero and there is no pipeline.
    """
    i, j = _check_pair(m, i, j)
    s = m.alphabet_size
    if not (0 <= w < s and 0 <= w_prime < s):
        raise ValueError(f"states ({w}, {w_prime}) outside 0..{s - 1}")
    cs = cut_sets(m.tree, i, j)
    if cs.j0 is None:
        raise ValueError(
            f"subtree of {i} ends before {j}; the coefficient is identically zero"
        )
    tree = m.tree
    d_i, d_j0 = tree.depth_of[i], tree.depth_of[cs.j0]
    ti = subtree(tree, i)
    level_nodes = {
        d: tuple(sorted(ti & tree.levels[d])) for d in range(d_i, d_j0 + 1)
    }

    operators: list[StochasticOperator] = []
    alpha_bounds: list[float] = []
    for d in range(d_i + 1, d_j0 + 1):
        edges = [(tree.parent[v], v) for v in level_nodes[d]]
        op = stochastic_tensor_product([_edge_operator(m, u, v) for u, v in edges])
        op = expand_operator_inputs(op, level_nodes[d - 1])
        operators.append(op)
        alpha_bounds.append(alpha(contraction_coefficient(m, e) for e in edges))

    first = operators[0]  # input index is (i,)
    h = IndexedTensor(
        first.out_index, s, first.entries[:, w] - first.entries[:, w_prime]
    )
    f = h
    for op in operators[1:]:
        f = apply_operator(op, f)

    frontier = [
        StochasticOperator.identity((v,), s) for v in sorted(cs.c0)
    ]
    frontier += [_edge_operator(m, tree.parent[v], v) for v in sorted(cs.c1)]
    b = stochastic_tensor_product(frontier)
    b = expand_operator_inputs(b, level_nodes[d_j0])
    bf = apply_operator(b, f)

    return FactorizationTrace(
        i=i,
        j=j,
        j0=cs.j0,
        w=w,
        w_prime=w_prime,
        value=bf.tv_norm,
        h_norm=h.tv_norm,
        operator_norms=tuple(operator_tv_norm(op) for op in operators[1:]),
        alpha_bounds=tuple(alpha_bounds),
        b_norm=operator_tv_norm(b),
    )


@dataclass(frozen=True)
class EtaReport:
    """All available values and bounds for one pair (i, j)."""

    i: int
    j: int
    j0: int | None
    exact: float | None
    level_bound: float
    uniform_bound: float
    geometric_bound: float | None


def eta_report(
    m: MarkovTreeModel,
    i: int,
    j: int,
    include_exact: bool | str = "auto",
    max_cells: int | None = None,
) -> EtaReport:
    """Assemble exact value (cap permitting) and the bound ladder.

    ``include_exact`` may be True (error above the cell cap), False, or
    "auto" (exact filled only when enumeration fits the cap).  For a
    model whose largest contraction coefficient reaches 1, the uniform
    closed form does not apply and the trivial bound 1.0 is reported;
    the geometric bound is present only when the largest coefficient is
    in (0, 1) and ``j - i >= wid``.
    """
    i, j = _check_pair(m, i, j)
    if include_exact not in (True, False, "auto"):
        raise ValueError(
            f"include_exact must be True, False, or 'auto', got {include_exact!r}"
        )
    exact: float | None = None
    if include_exact == "auto":
        if m.table_cells() <= enumeration_cap(max_cells):
            exact = eta_bar_exact(m, i, j, max_cells)
    elif include_exact:
        exact = eta_bar_exact(m, i, j, max_cells)

    level = eta_bar_bound_levels(m, i, j)
    theta = max_contraction(m)
    wid = m.tree.width
    if theta < 1.0:
        uniform = eta_bar_bound_uniform(theta, wid, i, j)
    else:
        uniform = 1.0
    geometric: float | None = None
    if 0.0 < theta < 1.0 and j - i >= wid:
        geometric = geometric_rate(theta, wid) ** (j - i)
    j0 = first_descendant_at_or_after(m.tree, i, j)
    return EtaReport(
        i=i, j=j, j0=j0, exact=exact, level_bound=level,
        uniform_bound=uniform, geometric_bound=geometric,
    )
