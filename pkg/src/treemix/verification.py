"""Self-check suites run by the ``verify`` CLI command.

Each suite exercises one identity or inequality the implementation is
supposed to satisfy on the given model, reports its worst violation,
and passes or fails against a fixed tolerance.  Suites that need the
joint table are skipped (not failed) when the model exceeds the
enumeration cap.  Everything is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mixing
from .concentration import (
    build_mixing_matrices,
    delta_inf_norm,
    linf_operator_norm,
)
from .model import (
    MarkovTreeModel,
    enumeration_cap,
    sample_paths,
    verify_markov_property,
)
from .tvalgebra import alpha

_TOL = 1e-12


@dataclass(frozen=True)
class SuiteResult:
    name: str
    status: str  # "pass" | "fail" | "skip"
    max_violation: float | None
    trials: int
    note: str = ""


def _result(name: str, violation: float, trials: int, tol: float = _TOL,
            note: str = "") -> SuiteResult:
    status = "pass" if violation <= tol else "fail"
    return SuiteResult(name, status, violation, trials, note)


def _skip(name: str, note: str) -> SuiteResult:
    return SuiteResult(name, "skip", None, 0, note)


def _suite_measure_normalization(m, trials, rng) -> SuiteResult:
    total = float(m.joint_table().sum())
    return _result("measure-normalization", abs(total - 1.0), 1, tol=1e-10)


def _suite_markov_property(m, trials, rng) -> SuiteResult:
    branchers = [u for u in range(1, m.n + 1) if len(m.tree.children[u]) >= 2]
    if not branchers:
        return _skip("markov-property", "no node with two or more children")
    worst = 0.0
    for u in branchers:
        _, violation = verify_markov_property(m, u)
        worst = max(worst, violation)
    return _result("markov-property", worst, len(branchers))


def _suite_j0_reduction(m, trials, rng) -> SuiteResult:
    worst = 0.0
    checked = 0
    for i in range(1, m.n):
        for j in range(i + 1, m.n + 1):
            red = mixing.reduce_via_j0(m, i, j)
            if red.eta_is_zero:
                worst = max(worst, mixing.eta_bar_exact(m, i, j))
                checked += 1
                continue
            tv_j, feas = mixing._eta_tables(m, i, j)
            tv_j0, _ = mixing._eta_tables(m, i, red.j0)
            mask = feas[:, :, None] & feas[:, None, :]
            diff = np.abs(tv_j - tv_j0)[mask]
            worst = max(worst, float(diff.max()) if diff.size else 0.0)
            checked += 1
    return _result("j0-reduction", worst, checked)


def _suite_factorization(m, trials, rng) -> SuiteResult:
    s = m.alphabet_size
    worst = 0.0
    checked = 0
    for i in range(1, m.n):
        for j in range(i + 1, m.n + 1):
            red = mixing.reduce_via_j0(m, i, j)
            if red.eta_is_zero:
                continue
            tv, feas = mixing._eta_tables(m, i, j)
            for w in range(s):
                for wp in range(w + 1, s):
                    trace = mixing.eta_factorization(m, i, j, w, wp)
                    both = feas[:, w] & feas[:, wp]
                    if both.any():
                        enum_vals = tv[both, w, wp]
                        worst = max(
                            worst, float(np.abs(enum_vals - trace.value).max())
                        )
                    # inequality chain, one-sided
                    worst = max(worst, trace.value - trace.norm_chain_bound)
                    worst = max(worst, trace.norm_chain_bound - trace.alpha_product)
                    checked += 1
    if checked == 0:
        return _skip("factorization", "no pair (i, j) with a pivot")
    return _result("factorization", worst, checked)


def _suite_bound_dominance(m, trials, rng) -> SuiteResult:
    worst = 0.0
    checked = 0
    for i in range(1, m.n):
        for j in range(i + 1, m.n + 1):
            report = mixing.eta_report(m, i, j, include_exact=True)
            worst = max(worst, report.exact - report.level_bound)
            worst = max(worst, report.level_bound - report.uniform_bound)
            checked += 1
    if checked == 0:
        return _skip("bound-dominance", "single-node model has no pairs")
    return _result("bound-dominance", worst, checked)


def _suite_tv_contraction(m, trials, rng) -> SuiteResult:
    worst = 0.0
    for _ in range(trials):
        rows = int(rng.integers(1, 6))
        cols = int(rng.integers(2, 6))
        mat = rng.random((rows, cols)) + 1e-9
        mat /= mat.sum(axis=0)
        p = rng.random(cols)
        p /= p.sum()
        q = rng.random(cols)
        q /= q.sum()
        norm = 0.0
        for x in range(cols - 1):
            d = 0.5 * np.abs(mat[:, x + 1 :] - mat[:, x : x + 1]).sum(axis=0)
            norm = max(norm, float(d.max()))
        lhs = 0.5 * float(np.abs(mat @ p - mat @ q).sum())
        rhs = norm * 0.5 * float(np.abs(p - q).sum())
        worst = max(worst, lhs - rhs)
    return _result("tv-contraction", worst, trials)


def _suite_tensor_two_factor(m, trials, rng) -> SuiteResult:
    worst = 0.0
    for _ in range(trials):
        sp = int(rng.integers(1, 6))
        sq = int(rng.integers(1, 6))
        p, pp = rng.random(sp), rng.random(sp)
        q, qq = rng.random(sq), rng.random(sq)
        for vec in (p, pp):
            vec /= vec.sum()
        for vec in (q, qq):
            vec /= vec.sum()
        lhs = 0.5 * float(np.abs(np.outer(p, q) - np.outer(pp, qq)).sum())
        dp = 0.5 * float(np.abs(p - pp).sum())
        dq = 0.5 * float(np.abs(q - qq).sum())
        rhs = dp + dq - dp * dq
        worst = max(worst, lhs - rhs)
    return _result("tensor-two-factor", worst, trials)


def _suite_alpha_rules(m, trials, rng) -> SuiteResult:
    grid = [k / 10.0 for k in range(11)]
    worst = 0.0
    count = 0
    for x in grid:
        worst = max(worst, abs(alpha([x]) - x))
        count += 1
        for y in grid:
            a_xy = alpha([x, y])
            worst = max(worst, abs(a_xy - alpha([y, x])))
            worst = max(worst, abs(a_xy - (x + y - x * y)))
            worst = max(worst, a_xy - min(1.0, x + y))
            worst = max(worst, -a_xy)
            if y <= 0.9:
                worst = max(worst, a_xy - alpha([x, y + 0.1]))
            count += 1
    for k in (2, 3, 4):
        for x in grid:
            worst = max(worst, abs(alpha([x] * k) - (1.0 - (1.0 - x) ** k)))
            count += 1
        worst = max(worst, abs(alpha([1.0] + [0.3] * (k - 1)) - 1.0))
        count += 1
    return _result("alpha-rules", worst, count)


def _suite_norm_identity(m, trials, rng) -> SuiteResult:
    delta, _ = build_mixing_matrices(m, "level-bound")
    row_formula = delta_inf_norm(delta)
    generic = linf_operator_norm(delta.entries)
    return _result("norm-identity", abs(row_formula - generic), 1, tol=0.0)


def _suite_provenance_dominance(m, trials, rng) -> SuiteResult:
    # Only delta is compared: gamma entries are sqrt(delta) and IEEE
    # sqrt is monotone, so gamma dominance follows entrywise.
    d_exact, _ = build_mixing_matrices(m, "exact")
    d_level, _ = build_mixing_matrices(m, "level-bound")
    d_uni, _ = build_mixing_matrices(m, "uniform-bound")
    worst = float((d_exact.entries - d_level.entries).max())
    worst = max(worst, float((d_level.entries - d_uni.entries).max()))
    return _result("provenance-dominance", worst, 3)


def _suite_sampling_determinism(m, trials, rng) -> SuiteResult:
    seed = int(rng.integers(0, 2**63))
    count = min(max(trials, 2), 1000)
    a = sample_paths(m, seed, count)
    b = sample_paths(m, seed, count)
    half = count // 2
    split = np.vstack(
        [
            sample_paths(m, seed, half),
            sample_paths(m, seed, count - half, stream_offset=half),
        ]
    )
    equal = np.array_equal(a, b) and np.array_equal(a, split)
    return _result("sampling-determinism", 0.0 if equal else 1.0, count)


def _suite_sampling_frequency(m, trials, rng) -> SuiteResult:
    seed = int(rng.integers(0, 2**63))
    count = 20_000
    batch = sample_paths(m, seed, count)
    axis_rest = tuple(range(1, m.n))
    exact_root = (
        m.joint_table().sum(axis=axis_rest) if m.n > 1 else m.joint_table()
    )
    worst = 0.0
    for state in range(m.alphabet_size):
        p = float(exact_root[state])
        emp = float((batch[:, 0] == state).mean())
        slack = 6.0 * np.sqrt(max(p * (1 - p), 1e-12) / count) + 1.0 / count
        worst = max(worst, abs(emp - p) - slack)
    return _result("sampling-frequency", max(worst, 0.0), count, tol=0.0)


_NEEDS_TABLE = {
    "measure-normalization",
    "markov-property",
    "j0-reduction",
    "factorization",
    "bound-dominance",
    "provenance-dominance",
    "sampling-frequency",
}

_SUITES = [
    ("measure-normalization", _suite_measure_normalization),
    ("markov-property", _suite_markov_property),
    ("j0-reduction", _suite_j0_reduction),
    ("factorization", _suite_factorization),
    ("bound-dominance", _suite_bound_dominance),
    ("tv-contraction", _suite_tv_contraction),
    ("tensor-two-factor", _suite_tensor_two_factor),
    ("alpha-rules", _suite_alpha_rules),
    ("norm-identity", _suite_norm_identity),
    ("provenance-dominance", _suite_provenance_dominance),
    ("sampling-determinism", _suite_sampling_determinism),
    ("sampling-frequency", _suite_sampling_frequency),
]


def run_verification(
    m: MarkovTreeModel, trials: int = 500, seed: int = 42
) -> list[SuiteResult]:
    """Run every suite; table-bound suites are skipped above the cap."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    enumerable = m.table_cells() <= enumeration_cap()
    results = []
    rng = np.random.default_rng(seed)
    for name, fn in _SUITES:
        if name in _NEEDS_TABLE and not enumerable:
            results.append(_skip(name, "joint table exceeds the enumeration cap"))
            continue
        results.append(fn(m, trials, rng))
    return results
