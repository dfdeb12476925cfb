"""Regression forests: CART trees with variance-reduction splits, bootstrap
aggregation, and accumulated impurity-decrease (Gini) importances.

Splitting rule. At a node holding rows R, the gain of splitting feature j at
threshold t is

    gain = Var(y_R) * |R| - (Var(y_L) * |L| + Var(y_R') * |R'|)

with population variances, thresholds at midpoints between consecutive
distinct sorted feature values, and both children at least
``min_samples_leaf`` rows. Ties break toward the lower feature index, then
the lower threshold. A node becomes a leaf (value = mean of its training
targets) at ``max_depth``, when too few rows remain, or when no split has
positive gain.

Determinism contract. Tree t draws everything it needs from its own
generator ``default_rng(SeedSequence((seed, t)))``: first the bootstrap row
indices, then the candidate-feature subset of each node in depth-first build
order (left subtree before right). Trees are therefore independent of
scheduling and a forest built with any worker count is bit-identical to the
serial build. Prediction is the plain arithmetic mean of per-tree leaf
values, accumulated in tree order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InvariantViolation,
    NonFiniteInput,
    SchemaError,
    TooFewSamples,
)

THREADS_ENV_VAR = "MILLSENSE_THREADS"

_FORMAT_HEADER = "millsense-forest 1"


@dataclass(frozen=True)
class HyperParams:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 2
    max_features: int | None = None  # None = ceil(p / 3), resolved at fit time
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvariantViolation(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth < 1:
            raise InvariantViolation(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise InvariantViolation(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.max_features is not None and self.max_features < 1:
            raise InvariantViolation(f"max_features must be >= 1, got {self.max_features}")
        if self.seed < 0:
            raise InvariantViolation(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class Leaf:
    value: float
    n_samples: int


@dataclass(frozen=True)
class Internal:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Internal]


@dataclass(eq=False)
class Forest:
    trees: tuple[TreeNode, ...]
    hyper: HyperParams
    feature_names: tuple[str, ...]
    impurity_decrease: np.ndarray
    target: str | None = None
    _flat: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.trees:
            raise InvariantViolation("a forest must contain at least one tree")
        imp = np.asarray(self.impurity_decrease, dtype=float)
        imp.setflags(write=False)
        self.impurity_decrease = imp
        if imp.size != len(self.feature_names):
            raise DimensionMismatch("impurity_decrease length must match feature count")
        if np.any(imp < 0):
            raise InvariantViolation("impurity decreases must be non-negative")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    rows: Sequence[int] | np.ndarray,
    candidate_features: Sequence[int] | np.ndarray,
    min_samples_leaf: int = 1,
) -> tuple[int, float, float] | None:
    """Best (feature_index, threshold, gain) over the candidates, or None if
    no positive-gain split exists."""
    rows = np.asarray(rows, dtype=np.intp)
    m = rows.size
    if m < 2 * min_samples_leaf:
        return None
    yr = y[rows]
    if np.all(yr == yr[0]):
        return None
    # centered targets keep the sum-of-squares arithmetic well conditioned
    yc = yr - yr.mean()
    total_sse = float(yc @ yc)

    def sse(v: np.ndarray) -> float:
        s = float(v.sum())
        return float(v @ v) - s * s / v.size

    best: tuple[float, int, float] | None = None  # (gain, feature, threshold)
    for j in sorted(int(c) for c in candidate_features):
        x = X[rows, j]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        ys = yc[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        left_sizes = np.arange(min_samples_leaf, m - min_samples_leaf + 1)
        distinct = xs[left_sizes - 1] < xs[left_sizes]
        if not distinct.any():
            continue
        i = left_sizes[distinct]
        sl = csum[i - 1]
        ql = csq[i - 1]
        sr = csum[-1] - sl
        qr = csq[-1] - ql
        scan_gains = total_sse - ((ql - sl * sl / i) + (qr - sr * sr / (m - i)))
        k = int(np.argmax(scan_gains))  # first max = lowest threshold
        thr = float(0.5 * (xs[i[k] - 1] + xs[i[k]]))
        # recompute the winner's gain from the row-ordered partition: features
        # that induce the same partition then get bitwise-equal gains, so the
        # lower-feature-index tie rule is decided by the split itself, not by
        # per-feature summation order
        mask = x <= thr
        g = total_sse - sse(yc[mask]) - sse(yc[~mask])
        if g > 0.0 and (best is None or g > best[0]):
            best = (g, j, thr)
    if best is None:
        return None
    return best[1], best[2], best[0]


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    depth: int,
    rng: np.random.Generator,
    hp: HyperParams,
    max_features: int,
    imp: np.ndarray,
) -> TreeNode:
    p = X.shape[1]
    if depth >= hp.max_depth or rows.size < 2 * hp.min_samples_leaf:
        return Leaf(value=float(np.mean(y[rows])), n_samples=int(rows.size))
    if max_features < p:
        candidates = rng.choice(p, size=max_features, replace=False)
    else:
        candidates = np.arange(p)
    split = best_split(X, y, rows, candidates, hp.min_samples_leaf)
    if split is None:
        return Leaf(value=float(np.mean(y[rows])), n_samples=int(rows.size))
    feature, threshold, gain = split
    imp[feature] += gain
    mask = X[rows, feature] <= threshold
    left = _grow(X, y, rows[mask], depth + 1, rng, hp, max_features, imp)
    right = _grow(X, y, rows[~mask], depth + 1, rng, hp, max_features, imp)
    return Internal(feature_index=feature, threshold=threshold, left=left, right=right)


def _worker_count(n_trees: int, workers: int | None) -> int:
    if workers is None:
        env = os.environ.get(THREADS_ENV_VAR)
        if env is not None:
            try:
                workers = int(env)
            except ValueError:
                raise InvariantViolation(
                    f"{THREADS_ENV_VAR} must be an integer, got {env!r}"
                ) from None
        else:
            workers = os.cpu_count() or 1
    return max(1, min(workers, n_trees))


def fit(
    X: np.ndarray,
    y: np.ndarray,
    hp: HyperParams | None = None,
    feature_names: Sequence[str] | None = None,
    *,
    bootstrap: bool = True,
    workers: int | None = None,
    target: str | None = None,
) -> Forest:
    """Train a forest on (X, y).

    ``bootstrap=False`` is a test hook that trains every tree on the full
    sample. ``workers`` caps the thread pool (default: the MILLSENSE_THREADS
    environment variable, else the machine's CPU count); any value produces
    a bit-identical forest.
    """
    hp = hp or HyperParams()
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if y.size != n:
        raise DimensionMismatch(f"X has {n} rows but y has {y.size} entries")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("training data must be finite")
    if n < 2 * hp.min_samples_leaf:
        raise TooFewSamples(
            f"need at least {2 * hp.min_samples_leaf} samples, got {n}"
        )
    max_features = hp.max_features if hp.max_features is not None else math.ceil(p / 3)
    if not 1 <= max_features <= p:
        raise InvariantViolation(f"max_features must lie in [1, {p}], got {max_features}")
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(p))
    feature_names = tuple(feature_names)
    if len(feature_names) != p:
        raise DimensionMismatch("feature_names length must match X columns")

    def build(t: int) -> tuple[TreeNode, np.ndarray]:
        rng = np.random.default_rng(np.random.SeedSequence((hp.seed, t)))
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        imp = np.zeros(p, dtype=float)
        tree = _grow(X, y, np.asarray(rows, dtype=np.intp), 0, rng, hp, max_features, imp)
        return tree, imp

    n_workers = _worker_count(hp.n_trees, workers)
    if n_workers == 1:
        built = [build(t) for t in range(hp.n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            built = list(pool.map(build, range(hp.n_trees)))

    total_imp = np.zeros(p, dtype=float)
    for _, imp in built:  # summed in tree order for reproducibility
        total_imp += imp
    total_imp /= n * hp.n_trees

    return Forest(
        trees=tuple(tree for tree, _ in built),
        hyper=replace(hp, max_features=max_features),
        feature_names=feature_names,
        impurity_decrease=total_imp,
        target=target,
    )


def _leaf_value(tree: TreeNode, x: np.ndarray) -> float:
    node = tree
    while isinstance(node, Internal):
        node = node.left if x[node.feature_index] <= node.threshold else node.right
    return node.value


def predict_per_tree(forest: Forest, x: Sequence[float] | np.ndarray) -> list[float]:
    """Leaf value reached in each tree, in tree order."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != forest.n_features:
        raise DimensionMismatch(f"expected {forest.n_features} features, got {x.size}")
    return [_leaf_value(tree, x) for tree in forest.trees]


def predict(forest: Forest, x: Sequence[float] | np.ndarray) -> float:
    """Arithmetic mean of the per-tree leaf values for one input."""
    total = 0.0
    for v in predict_per_tree(forest, x):
        total += v
    return total / len(forest.trees)


def _flatten(tree: TreeNode) -> tuple[np.ndarray, ...]:
    feats: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    values: list[float] = []

    def visit(node: TreeNode) -> int:
        idx = len(feats)
        feats.append(-1)
        thresholds.append(0.0)
        lefts.append(-1)
        rights.append(-1)
        values.append(0.0)
        if isinstance(node, Leaf):
            values[idx] = node.value
        else:
            feats[idx] = node.feature_index
            thresholds[idx] = node.threshold
            lefts[idx] = visit(node.left)
            rights[idx] = visit(node.right)
        return idx

    visit(tree)
    return (
        np.array(feats, dtype=np.intp),
        np.array(thresholds, dtype=float),
        np.array(lefts, dtype=np.intp),
        np.array(rights, dtype=np.intp),
        np.array(values, dtype=float),
    )


def _tree_predict_batch(forest: Forest, t: int, X: np.ndarray) -> np.ndarray:
    if t not in forest._flat:
        forest._flat[t] = _flatten(forest.trees[t])
    feats, thresholds, lefts, rights, values = forest._flat[t]
    pos = np.zeros(X.shape[0], dtype=np.intp)
    active = np.flatnonzero(feats[pos] >= 0)
    while active.size:
        cur = pos[active]
        go_left = X[active, feats[cur]] <= thresholds[cur]
        pos[active] = np.where(go_left, lefts[cur], rights[cur])
        active = active[feats[pos[active]] >= 0]
    return values[pos]


def predict_matrix(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Row-wise predictions; bit-identical to calling :func:`predict` on each
    row (same per-tree accumulation order)."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise DimensionMismatch(
            f"expected an (n, {forest.n_features}) matrix, got shape {X.shape}"
        )
    out = np.zeros(X.shape[0], dtype=float)
    for t in range(len(forest.trees)):
        out += _tree_predict_batch(forest, t, X)
    return out / len(forest.trees)


def gini_importance(forest: Forest) -> np.ndarray:
    """Accumulated impurity decreases normalized to sum to 1 (all zeros when
    the forest never split)."""
    total = float(forest.impurity_decrease.sum())
    if total <= 0.0:
        return np.zeros(forest.n_features, dtype=float)
    return forest.impurity_decrease / total


_F = lambda v: format(float(v), ".17g")  # noqa: E731 - terse float round-trip formatting


def _write_node(node: TreeNode, out: list[str]) -> None:
    if isinstance(node, Leaf):
        out.append(f"L {_F(node.value)} {node.n_samples}")
    else:
        out.append(f"I {node.feature_index} {_F(node.threshold)}")
        _write_node(node.left, out)
        _write_node(node.right, out)


def save_forest(forest: Forest, path: str | Path) -> None:
    """Persist ``forest`` as versioned structured text; loading reproduces
    predictions bit-exactly."""
    hp = forest.hyper
    lines = [_FORMAT_HEADER]
    if forest.target is not None:
        lines.append(f"target {forest.target}")
    lines.append(f"n_features {forest.n_features}")
    for nm in forest.feature_names:
        lines.append(f"feature {nm}")
    lines.append(
        "hyper "
        f"{hp.n_trees} {hp.max_depth} {hp.min_samples_leaf} {hp.max_features} {hp.seed}"
    )
    lines.append("impurity " + " ".join(_F(v) for v in forest.impurity_decrease))
    for t, tree in enumerate(forest.trees):
        lines.append(f"tree {t}")
        _write_node(tree, lines)
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_node(it: Iterator[str], path: Path) -> TreeNode:
    try:
        line = next(it)
    except StopIteration:
        raise SchemaError(f"{path}: truncated tree encoding") from None
    parts = line.split()
    if parts[0] == "L" and len(parts) == 3:
        return Leaf(value=float(parts[1]), n_samples=int(parts[2]))
    if parts[0] == "I" and len(parts) == 3:
        feature, threshold = int(parts[1]), float(parts[2])
        left = _read_node(it, path)
        right = _read_node(it, path)
        return Internal(feature_index=feature, threshold=threshold, left=left, right=right)
    raise SchemaError(f"{path}: malformed node line {line!r}")


def load_forest(path: str | Path) -> Forest:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != _FORMAT_HEADER:
        raise SchemaError(f"{path}: not a {_FORMAT_HEADER!r} file")
    it = iter(lines[1:])
    target: str | None = None
    line = next(it)
    if line.startswith("target "):
        target = line[len("target "):]
        line = next(it)
    if not line.startswith("n_features "):
        raise SchemaError(f"{path}: expected n_features, got {line!r}")
    p = int(line.split()[1])
    names = []
    for _ in range(p):
        line = next(it)
        if not line.startswith("feature "):
            raise SchemaError(f"{path}: expected feature line, got {line!r}")
        names.append(line[len("feature "):])
    line = next(it)
    if not line.startswith("hyper "):
        raise SchemaError(f"{path}: expected hyper line, got {line!r}")
    h = line.split()[1:]
    if len(h) != 5:
        raise SchemaError(f"{path}: hyper line must carry 5 values")
    hp = HyperParams(
        n_trees=int(h[0]),
        max_depth=int(h[1]),
        min_samples_leaf=int(h[2]),
        max_features=int(h[3]),
        seed=int(h[4]),
    )
    line = next(it)
    if not line.startswith("impurity "):
        raise SchemaError(f"{path}: expected impurity line, got {line!r}")
    imp = np.array([float(v) for v in line.split()[1:]], dtype=float)

    trees: list[TreeNode] = []
    for line in it:
        if line == "end":
            break
        if not line.startswith("tree "):
            raise SchemaError(f"{path}: expected tree separator, got {line!r}")
        trees.append(_read_node(it, path))
    else:
        raise SchemaError(f"{path}: missing end marker")
    if len(trees) != hp.n_trees:
        raise SchemaError(f"{path}: expected {hp.n_trees} trees, found {len(trees)}")

    return Forest(
        trees=tuple(trees),
        hyper=hp,
        feature_names=tuple(names),
        impurity_decrease=imp,
        target=target,
    )
