"""JSON model files and random model generation.

Schema (format_version 1)::

    {
      "format_version": 1,
      "alphabet_size": 2,
      "nodes": 3,
      "root_dist": [0.5, 0.5],
      "edges": [
        {"parent": 1, "child": 2, "kernel": [[0.9, 0.1], [0.2, 0.8]]},
        ...
      ]
    }

Kernel rows are parent-major: ``kernel[x_parent][x_child]`` is the
transition probability, i.e. each row is the child distribution for one
parent state.  Rows (and ``root_dist``) must sum to 1 within 1e-9 and
are renormalized at load; renormalization is skipped when the sum is
already within 1e-13 of 1, which makes save/parse round trips bit-exact
while keeping downstream identities tight.  Node labels may be any
permutation of ``1..n``; the loaded model is always relabeled to the
canonical breadth-first numbering, and the relabeling map is returned
alongside it.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .model import Kernel, MarkovTreeModel
from .treegraph import TreeStructureError, build_tree

FORMAT_VERSION = 1

_RENORM_SKIP = 1e-13
_RENORM_MAX = 1e-9


class ModelFileError(ValueError):
    """A model file is malformed or inconsistent."""


def _normalize(vec: np.ndarray, what: str) -> np.ndarray:
    total = math.fsum(vec.tolist())
    if abs(total - 1.0) > _RENORM_MAX:
        raise ModelFileError(
            f"{what} sums to {total!r}, expected 1 within {_RENORM_MAX}"
        )
    if abs(total - 1.0) <= _RENORM_SKIP:
        return vec
    return vec / total


def _probability_row(raw: Any, length: int, what: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != length:
        raise ModelFileError(f"{what} must be a list of {length} probabilities")
    try:
        vec = np.array([float(x) for x in raw])
    except (TypeError, ValueError):
        raise ModelFileError(f"{what} contains non-numeric entries") from None
    if vec.min() < 0.0 or vec.max() > 1.0 + _RENORM_MAX:
        raise ModelFileError(f"{what} has entries outside [0, 1]")
    return _normalize(vec, what)


def _require(doc: dict, key: str, kind: type, what: str = "model file") -> Any:
    if key not in doc:
        raise ModelFileError(f"{what} is missing required field {key!r}")
    val = doc[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise ModelFileError(f"field {key!r} must be an integer, got {val!r}")
    if kind is not int and not isinstance(val, kind):
        raise ModelFileError(
            f"field {key!r} must be of type {kind.__name__}, got {type(val).__name__}"
        )
    return val


def parse_model_file(path: str) -> tuple[MarkovTreeModel, dict[int, int]]:
    """Load, validate, renormalize, and canonicalize a model file.

    Returns ``(model, relabel)`` where ``relabel`` maps the file's node
    labels to the canonical breadth-first numbers used by the model.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFileError(f"{path}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(
            f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ModelFileError(f"{path}: top level must be an object")

    version = _require(doc, "format_version", int)
    if version != FORMAT_VERSION:
        raise ModelFileError(
            f"{path}: unsupported format_version {version}, expected {FORMAT_VERSION}"
        )
    s = _require(doc, "alphabet_size", int)
    if s < 2:
        raise ModelFileError(f"{path}: alphabet_size must be >= 2, got {s}")
    n = _require(doc, "nodes", int)
    if n < 1:
        raise ModelFileError(f"{path}: nodes must be >= 1, got {n}")
    raw_edges = _require(doc, "edges", list)
    root_dist = _probability_row(_require(doc, "root_dist", list), s, "root_dist")

    edge_list: list[tuple[int, int]] = []
    raw_kernels: list[np.ndarray] = []
    for pos, rec in enumerate(raw_edges):
        if not isinstance(rec, dict):
            raise ModelFileError(f"{path}: edges[{pos}] must be an object")
        u = _require(rec, "parent", int, f"edges[{pos}]")
        v = _require(rec, "child", int, f"edges[{pos}]")
        rows = _require(rec, "kernel", list, f"edges[{pos}]")
        if len(rows) != s:
            raise ModelFileError(
                f"{path}: kernel for edge ({u}, {v}) must have {s} rows "
                f"(one per parent state), got {len(rows)}"
            )
        mat = np.empty((s, s))
        for r, row in enumerate(rows):
            try:
                mat[r] = _probability_row(
                    row, s, f"kernel for edge ({u}, {v}), row {r}"
                )
            except ModelFileError as exc:
                raise ModelFileError(f"{path}: {exc}") from None
        edge_list.append((u, v))
        raw_kernels.append(mat)

    try:
        topo, relabel = build_tree(n, edge_list)
    except TreeStructureError as exc:
        raise ModelFileError(f"{path}: {exc}") from None

    kernels: dict[tuple[int, int], Kernel] = {}
    for (u, v), rows in zip(edge_list, raw_kernels):
        edge = (relabel[u], relabel[v])
        # parent-major rows transpose into a column-stochastic matrix
        kernels[edge] = Kernel(edge, rows.T)
    try:
        model = MarkovTreeModel(topo, s, root_dist, kernels)
    except ValueError as exc:
        raise ModelFileError(f"{path}: {exc}") from None
    return model, relabel


def serialize_model(model: MarkovTreeModel) -> dict:
    """Canonical JSON-ready dict (nodes in canonical numbering)."""
    edges = []
    for u, v in model.tree.edges():
        mat = model.kernels[(u, v)].matrix
        edges.append(
            {
                "parent": u,
                "child": v,
                "kernel": [[float(x) for x in row] for row in mat.T],
            }
        )
    return {
        "format_version": FORMAT_VERSION,
        "alphabet_size": model.alphabet_size,
        "nodes": model.n,
        "root_dist": [float(x) for x in model.root_dist],
        "edges": edges,
    }


def save_model(model: MarkovTreeModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(serialize_model(model), fh, indent=2)
        fh.write("\n")


def _random_tree(
    rng: np.random.Generator, n: int, width: int, depth: int
) -> list[tuple[int, int]]:
    """Random edge list on 1..n respecting width and depth caps."""
    if n > 1 + width * depth:
        raise ValueError(
            f"cannot place {n} nodes with width {width} and depth {depth} "
            f"(capacity {1 + width * depth})"
        )
    depth_of = {1: 0}
    level_count = {0: 1}
    edges: list[tuple[int, int]] = []
    for v in range(2, n + 1):
        allowed = [
            u
            for u in range(1, v)
            if depth_of[u] < depth and level_count.get(depth_of[u] + 1, 0) < width
        ]
        u = int(allowed[rng.integers(len(allowed))])
        edges.append((u, v))
        depth_of[v] = depth_of[u] + 1
        level_count[depth_of[v]] = level_count.get(depth_of[v], 0) + 1
    return edges


def _random_kernel(rng: np.random.Generator, s: int, theta_max: float) -> np.ndarray:
    """Column-stochastic kernel with contraction coefficient <= theta_max.

    Blending a raw random kernel toward its column average scales the
    contraction coefficient exactly linearly, so a uniform target in
    (0, theta_max] can be hit (or undershot when the raw kernel is
    already tamer).
    """
    raw = rng.random((s, s)) + 1e-3
    raw /= raw.sum(axis=0)
    worst = 0.0
    for x in range(s - 1):
        d = 0.5 * np.abs(raw[:, x + 1 :] - raw[:, x : x + 1]).sum(axis=0)
        worst = max(worst, float(d.max()))
    target = float(rng.uniform(0.0, theta_max))
    lam = 1.0 if worst <= target else target / worst
    mean_col = raw.mean(axis=1, keepdims=True)
    mat = lam * raw + (1.0 - lam) * mean_col
    return mat / mat.sum(axis=0)


def random_model(
    seed: int,
    n: int,
    alphabet_size: int = 2,
    width: int | None = None,
    depth: int | None = None,
    theta_max: float = 0.9,
) -> MarkovTreeModel:
    """Generate a random model with full-support kernels.

    Every kernel's contraction coefficient is at most ``theta_max``
    (which must lie in (0, 1)); ``width`` and ``depth`` cap the tree
    shape and default to ``n - 1`` (unconstrained).  Deterministic in
    ``seed``.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    s = int(alphabet_size)
    if s < 2:
        raise ValueError(f"alphabet size must be >= 2, got {s}")
    if not 0.0 < theta_max < 1.0:
        raise ValueError(f"theta_max must lie in (0, 1), got {theta_max}")
    width = n - 1 if width is None else int(width)
    depth = n - 1 if depth is None else int(depth)
    if n > 1 and (width < 1 or depth < 1):
        raise ValueError(f"width and depth must be >= 1, got {width}, {depth}")
    rng = np.random.default_rng(seed)
    topo, _ = build_tree(n, _random_tree(rng, n, width, depth))
    root = rng.random(s) + 1e-3
    root /= root.sum()
    kernels = {
        (u, v): Kernel((u, v), _random_kernel(rng, s, theta_max))
        for u, v in topo.edges()
    }
    return MarkovTreeModel(topo, s, root, kernels)
