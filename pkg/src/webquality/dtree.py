"""C4.5-style binary decision tree for numeric features.

Growth picks the split with the highest gain ratio among candidates whose
information gain is at least the mean candidate gain. Subtrees that do not
reduce training error are collapsed, then pessimistic subtree replacement
prunes bottom-up using the normal-approximation upper confidence bound on the
leaf error rate. No subtree raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional, Sequence, Union

import numpy as np

from .core import Category, DataError, HostId, Prediction, Source

# gain below this is treated as zero; gain-ratio ties are resolved within it
_EPS = 1e-12


@dataclass(frozen=True)
class TreeConfig:
    confidence_factor: float = 0.25
    min_instances: int = 2
    seed: int = 1

    def __post_init__(self):
        if not 0.0 < self.confidence_factor < 1.0:
            raise ValueError("confidence_factor must lie in (0, 1)")
        if self.min_instances < 1:
            raise ValueError("min_instances must be >= 1")

    @property
    def z(self) -> float:
        return confidence_z(self.confidence_factor)


@dataclass(frozen=True)
class Leaf:
    counts: tuple[int, int]  # (negative, positive)

    @property
    def total(self) -> int:
        return self.counts[0] + self.counts[1]


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    counts: tuple[int, int]

    @property
    def total(self) -> int:
        return self.counts[0] + self.counts[1]


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode
    n_features: int

    def dumps(self) -> str:
        lines = ["dtree/1", f"features\t{self.n_features}"]

        def walk(node: TreeNode):
            neg, pos = node.counts
            if isinstance(node, Leaf):
                lines.append(f"leaf\t{neg}\t{pos}")
            else:
                lines.append(f"split\t{node.feature}\t{node.threshold!r}\t{neg}\t{pos}")
                walk(node.left)
                walk(node.right)

        walk(self.root)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "DecisionTree":
        lines = text.splitlines()
        if not lines or lines[0] != "dtree/1":
            raise DataError("not a dtree/1 document")
        n_features = int(lines[1].split("\t")[1])
        records = iter(lines[2:])

        def read() -> TreeNode:
            try:
                parts = next(records).split("\t")
            except StopIteration:
                raise DataError("truncated dtree/1 document") from None
            if parts[0] == "leaf":
                return Leaf((int(parts[1]), int(parts[2])))
            if parts[0] == "split":
                feature, threshold = int(parts[1]), float(parts[2])
                counts = (int(parts[3]), int(parts[4]))
                left = read()
                right = read()
                return Split(feature, threshold, left, right, counts)
            raise DataError(f"unknown dtree record {parts[0]!r}")

        root = read()
        if next(records, None) is not None:
            raise DataError("trailing records in dtree/1 document")
        return cls(root, n_features)


def confidence_z(confidence_factor: float) -> float:
    """One-sided normal quantile for the pruning confidence; 0 (no pessimism) from CF=0.5 up."""
    return max(0.0, NormalDist().inv_cdf(1.0 - confidence_factor))


def error_upper_bound(errors: float, n: float, z: float) -> float:
    """Upper confidence limit on a leaf's error rate, normal approximation."""
    if n <= 0:
        return 0.0
    f = errors / n
    z2 = z * z
    radicand = max(f / n - f * f / n + z2 / (4 * n * n), 0.0)
    return (f + z2 / (2 * n) + z * math.sqrt(radicand)) / (1 + z2 / n)


def leaf_errors(counts: tuple[int, int]) -> int:
    neg, pos = counts
    # ties predict positive, so the negatives are the errors
    return neg if pos >= neg else pos


def _estimated_errors(counts: tuple[int, int], z: float) -> float:
    n = counts[0] + counts[1]
    return n * error_upper_bound(leaf_errors(counts), n, z)


def error_bound(node: TreeNode, z: float) -> float:
    """Sum of pessimistic leaf error estimates (instances, not rate)."""
    if isinstance(node, Leaf):
        return _estimated_errors(node.counts, z)
    return error_bound(node.left, z) + error_bound(node.right, z)


def training_errors(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return leaf_errors(node.counts)
    return training_errors(node.left) + training_errors(node.right)


def _entropy(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    p = np.divide(pos, n, out=np.zeros_like(pos, dtype=float), where=n > 0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    return h


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    gain: float
    gain_ratio: float
    n_left: int


def _split_table(X: np.ndarray, y: np.ndarray, min_instances: int):
    """Vectorized candidate table: (feature, threshold, gain, gain_ratio, n_left) arrays."""
    n = X.shape[0]
    empty = (np.empty(0, dtype=np.int64), np.empty(0), np.empty(0), np.empty(0), np.empty(0, dtype=np.int64))
    total_pos = float(y.sum())
    parent_h = float(_entropy(np.array([total_pos]), np.array([float(n)]))[0])
    if n < 2 * min_instances or parent_h <= 0:
        return empty
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    pos_left = np.cumsum(ys, axis=0)[:-1].astype(float)
    pos_right = total_pos - pos_left
    valid = (n_left >= min_instances) & (n_right >= min_instances) & (xs[:-1] < xs[1:])
    child_h = (n_left * _entropy(pos_left, np.broadcast_to(n_left, pos_left.shape))
               + n_right * _entropy(pos_right, np.broadcast_to(n_right, pos_right.shape))) / n
    gain = parent_h - child_h
    keep = valid & (gain > _EPS)
    rows, feats = np.nonzero(keep)
    if rows.size == 0:
        return empty
    split_info = _entropy(n_left[:, 0], np.full(n - 1, float(n)))
    g = gain[rows, feats]
    lo, hi = xs[rows, feats], xs[rows + 1, feats]
    thr = (lo + hi) / 2.0
    thr = np.where((lo <= thr) & (thr < hi), thr, lo)
    return feats.astype(np.int64), thr, g, g / split_info[rows], (rows + 1).astype(np.int64)


def candidate_splits(X: np.ndarray, y: np.ndarray, min_instances: int) -> list[SplitCandidate]:
    """All midpoint splits leaving >= min_instances on both sides with positive gain."""
    feats, thr, gain, ratio, n_left = _split_table(np.asarray(X, dtype=float), np.asarray(y), min_instances)
    return [
        SplitCandidate(int(f), float(t), float(g), float(r), int(nl))
        for f, t, g, r, nl in zip(feats, thr, gain, ratio, n_left)
    ]


def _choose_index(feats: np.ndarray, thr: np.ndarray, gain: np.ndarray, ratio: np.ndarray) -> Optional[int]:
    if gain.size == 0:
        return None
    eligible = gain >= gain.mean() - _EPS
    best = ratio[eligible].max()
    tied = np.flatnonzero(eligible & (ratio >= best - _EPS))
    # lexsort: last key is primary
    return int(tied[np.lexsort((thr[tied], feats[tied]))[0]])


def choose_split(candidates: Sequence[SplitCandidate]) -> Optional[SplitCandidate]:
    """Highest gain ratio among at-least-mean-gain candidates; ties go to (feature, threshold)."""
    if not candidates:
        return None
    i = _choose_index(
        np.array([c.feature for c in candidates]),
        np.array([c.threshold for c in candidates]),
        np.array([c.gain for c in candidates]),
        np.array([c.gain_ratio for c in candidates]),
    )
    return candidates[i]


def find_split(X: np.ndarray, y: np.ndarray, min_instances: int) -> Optional[SplitCandidate]:
    feats, thr, gain, ratio, n_left = _split_table(X, y, min_instances)
    i = _choose_index(feats, thr, gain, ratio)
    if i is None:
        return None
    return SplitCandidate(int(feats[i]), float(thr[i]), float(gain[i]), float(ratio[i]), int(n_left[i]))


def _check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("training data must be a non-empty 2-D array")
    if y.shape != (X.shape[0],):
        raise DataError("labels and rows differ in count")
    if np.isnan(X).any():
        raise DataError("NaN feature value in training data")
    return X, (y.astype(bool)).astype(np.int64)


def grow_tree(X, y, cfg: TreeConfig = TreeConfig()) -> DecisionTree:
    """Unpruned, uncollapsed tree."""
    X, y = _check_xy(X, y)

    def build(idx: np.ndarray) -> TreeNode:
        pos = int(y[idx].sum())
        counts = (len(idx) - pos, pos)
        if pos == 0 or pos == len(idx):
            return Leaf(counts)
        split = find_split(X[idx], y[idx], cfg.min_instances)
        if split is None:
            return Leaf(counts)
        go_left = X[idx, split.feature] <= split.threshold
        return Split(split.feature, split.threshold, build(idx[go_left]), build(idx[~go_left]), counts)

    return DecisionTree(build(np.arange(X.shape[0])), X.shape[1])


def collapse_tree(tree: DecisionTree) -> DecisionTree:
    """Replace subtrees that do not lower training errors by a leaf."""

    def walk(node: TreeNode) -> TreeNode:
        if isinstance(node, Leaf):
            return node
        if training_errors(node) >= leaf_errors(node.counts):
            return Leaf(node.counts)
        return Split(node.feature, node.threshold, walk(node.left), walk(node.right), node.counts)

    return DecisionTree(walk(tree.root), tree.n_features)


def prune_tree(tree: DecisionTree, cfg: TreeConfig = TreeConfig()) -> DecisionTree:
    """Collapse, then bottom-up subtree replacement on the pessimistic error bound."""
    z = cfg.z

    def walk(node: TreeNode) -> TreeNode:
        if isinstance(node, Leaf):
            return node
        node = Split(node.feature, node.threshold, walk(node.left), walk(node.right), node.counts)
        if _estimated_errors(node.counts, z) <= error_bound(node, z) + _EPS:
            return Leaf(node.counts)
        return node

    return DecisionTree(walk(collapse_tree(tree).root), tree.n_features)


def train_tree(X, y, cfg: TreeConfig = TreeConfig()) -> DecisionTree:
    return prune_tree(grow_tree(X, y, cfg), cfg)


def route(tree: DecisionTree, v) -> Leaf:
    v = np.asarray(v, dtype=float)
    if v.shape != (tree.n_features,):
        raise DataError(f"expected {tree.n_features} features, got shape {v.shape}")
    node = tree.root
    while isinstance(node, Split):
        node = node.left if v[node.feature] <= node.threshold else node.right
    return node


def predict_tree(
    tree: DecisionTree,
    v,
    host: Optional[HostId] = None,
    category: Optional[Category] = None,
) -> Prediction:
    leaf = route(tree, v)
    neg, pos = leaf.counts
    positive = pos >= neg
    confidence = (max(neg, pos) + 1) / (leaf.total + 2)
    return Prediction(host, category, positive, confidence, Source.TREE)


def n_leaves(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 1
    return n_leaves(node.left) + n_leaves(node.right)
