"""
Classification trees and a bagged random forest grown from scratch.

Splits minimise the weighted Gini impurity of the two children over
midpoints between consecutive distinct values. Each tree draws its
bootstrap sample and its per-node feature subsets from its own random
stream, derived from (seed, tree index), so the forest does not depend on
how many worker threads built it.
"""
import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.errors import DegenerateInput, DimensionMismatch, EmptyNode
from models.schemas import FeatureVector, ForestParams, ImportanceEntry

logger = logging.getLogger(__name__)

# ΔImp values closer than this are ties; distinct Gini combinations of
# realistic node sizes are many orders of magnitude further apart.
TIE_TOLERANCE = 1e-12

FORMAT_VERSION = 1


def gini(class_counts: Sequence[float]) -> float:
    """
    Gini impurity 1 - sum(p_c^2).

    Raises:
        EmptyNode: If the counts sum to zero
    """
    counts = np.asarray(class_counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise EmptyNode("Gini impurity of an empty node")
    proportions = counts / total
    return float(1.0 - np.sum(proportions ** 2))


@dataclass(eq=False)
class TreeNode:
    """
    Internal node (feature_index set) or leaf (class_counts set).

    Rows go left iff x[feature_index] <= threshold.
    """
    feature_index: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional['TreeNode'] = None
    right: Optional['TreeNode'] = None
    impurity_decrease: float = 0.0
    node_size: int = 0
    class_counts: Optional[List[int]] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None

    def to_dict(self) -> Dict[str, Any]:
        """Flat pre-order node list; internal nodes point at their children by position."""
        nodes = list(self.iter_nodes())
        position = {id(node): i for i, node in enumerate(nodes)}
        flat = []
        for node in nodes:
            if node.is_leaf:
                flat.append({'class_counts': list(node.class_counts)})
            else:
                flat.append({
                    'feature_index': node.feature_index,
                    'threshold': node.threshold,
                    'impurity_decrease': node.impurity_decrease,
                    'node_size': node.node_size,
                    'left': position[id(node.left)],
                    'right': position[id(node.right)],
                })
        return {'nodes': flat}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TreeNode':
        entries = data['nodes']
        nodes = []
        for entry in entries:
            if 'class_counts' in entry:
                counts = [int(c) for c in entry['class_counts']]
                nodes.append(cls(class_counts=counts, node_size=sum(counts)))
            else:
                nodes.append(cls(
                    feature_index=int(entry['feature_index']),
                    threshold=float(entry['threshold']),
                    impurity_decrease=float(entry['impurity_decrease']),
                    node_size=int(entry['node_size']),
                ))
        for node, entry in zip(nodes, entries):
            if not node.is_leaf:
                node.left = nodes[int(entry['left'])]
                node.right = nodes[int(entry['right'])]
        return nodes[0]

    def route(self, x: np.ndarray) -> 'TreeNode':
        """Follow the decision rules down to a leaf."""
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature_index] <= node.threshold else node.right
        return node

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    feature_subset: Sequence[int],
    n_classes: int,
    min_leaf_size: int = 1,
) -> Optional[Tuple[int, float, float]]:
    """
    Best threshold split of the rows over the candidate features.

    Maximises ΔImp = Imp_O - (n1/n Imp_1 + n2/n Imp_2) over midpoints of
    consecutive distinct sorted values. Ties go to the lowest feature index,
    then to the smaller threshold.

    Args:
        X: Row matrix (n x p)
        y: Class indices 0..n_classes-1
        feature_subset: Candidate feature indices
        n_classes: Number of classes
        min_leaf_size: Minimum rows on each side

    Returns:
        (feature_index, threshold, ΔImp), or None if no split has ΔImp > 0
        while respecting min_leaf_size
    """
    n = len(y)
    if n < 2 * min_leaf_size or n < 2:
        return None

    totals = np.bincount(y, minlength=n_classes).astype(float)
    parent = 1.0 - np.sum((totals / n) ** 2)
    if parent <= TIE_TOLERANCE:
        return None

    best: Optional[Tuple[int, float, float]] = None
    for feature in sorted(int(f) for f in feature_subset):
        values = X[:, feature]
        order = np.argsort(values, kind='stable')
        sorted_values = values[order]

        # position i splits rows [0..i] | [i+1..n-1]
        positions = np.arange(min_leaf_size - 1, n - min_leaf_size)
        if positions.size == 0:
            continue
        positions = positions[sorted_values[positions] < sorted_values[positions + 1]]
        if positions.size == 0:
            continue

        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y[order]] = 1.0
        left_counts = np.cumsum(onehot, axis=0)[positions]
        right_counts = totals - left_counts

        n_left = (positions + 1).astype(float)
        n_right = n - n_left
        gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
        decrease = parent - (n_left / n * gini_left + n_right / n * gini_right)

        top = decrease.max()
        # earliest (smallest threshold) among values tied with the maximum
        choice = int(np.flatnonzero(decrease >= top - TIE_TOLERANCE)[0])
        gain = float(decrease[choice])
        if gain <= TIE_TOLERANCE:
            continue
        if best is None or gain > best[2] + TIE_TOLERANCE:
            i = positions[choice]
            threshold = float((sorted_values[i] + sorted_values[i + 1]) / 2.0)
            best = (feature, threshold, gain)

    return best


def draw_features(rng: np.random.Generator, p: int, m: int) -> List[int]:
    """m distinct feature indices out of p, drawn from the tree's stream."""
    return sorted(int(f) for f in rng.choice(p, size=m, replace=False))


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    m: int,
    rng: np.random.Generator,
    n_classes: int,
    min_leaf_size: int = 1,
) -> TreeNode:
    """
    Grow one unpruned tree by partitioning, depth first with an explicit stack.

    At every node m features are drawn without replacement from rng. A node
    becomes a leaf when it is pure, has fewer than 2 * min_leaf_size rows,
    or no candidate split decreases the impurity.

    Args:
        X: Row matrix of the (bootstrap) sample
        y: Class indices
        m: Features drawn per node
        rng: The tree's random stream
        n_classes: Number of classes
        min_leaf_size: Minimum rows per leaf

    Returns:
        Root TreeNode
    """
    if len(y) == 0:
        raise EmptyNode("Cannot grow a tree on an empty sample")

    p = X.shape[1]
    m = min(max(1, m), p)

    root = TreeNode()
    # LIFO with the right child pushed first: the whole left subtree is grown,
    # and draws from rng, before the right one
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, rows = stack.pop()
        y_node = y[rows]
        counts = np.bincount(y_node, minlength=n_classes)
        node.node_size = len(rows)

        if np.count_nonzero(counts) <= 1 or len(rows) < 2 * min_leaf_size:
            node.class_counts = counts.tolist()
            continue

        subset = draw_features(rng, p, m)
        split = best_split(X[rows], y_node, subset, n_classes, min_leaf_size)
        if split is None:
            node.class_counts = counts.tolist()
            continue

        node.feature_index, node.threshold, node.impurity_decrease = split
        goes_left = X[rows, node.feature_index] <= node.threshold
        node.left, node.right = TreeNode(), TreeNode()
        stack.append((node.right, rows[~goes_left]))
        stack.append((node.left, rows[goes_left]))

    return root


def default_mtry(p: int) -> int:
    """floor(sqrt(p)), at least 1."""
    return max(1, int(math.isqrt(p)))


class Forest:
    """A trained random forest plus everything needed to reuse it."""

    def __init__(
        self,
        trees: List[TreeNode],
        classes: List[str],
        feature_names: List[str],
        m: int,
        seed: int,
        min_leaf_size: int = 1,
        bootstrap: bool = True,
        oob_indices: Optional[List[List[int]]] = None,
        imputation_medians: Optional[Dict[str, float]] = None,
        n_train: int = 0,
        trivially_pure: bool = False,
    ):
        if not trees:
            raise ValueError("A forest needs at least one tree")
        if not 1 <= m <= len(feature_names):
            raise ValueError(f"m={m} outside 1..{len(feature_names)}")

        self.trees = trees
        self.classes = list(classes)
        self.feature_names = list(feature_names)
        self.m = m
        self.seed = seed
        self.min_leaf_size = min_leaf_size
        self.bootstrap = bootstrap
        self.oob_indices = oob_indices or []
        self.imputation_medians = dict(imputation_medians or {})
        self.n_train = n_train
        self.trivially_pure = trivially_pure

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def oob_available(self) -> bool:
        return self.bootstrap and len(self.oob_indices) == len(self.trees)

    def _as_row(self, x: Union[FeatureVector, Sequence[float], np.ndarray]) -> np.ndarray:
        if isinstance(x, FeatureVector):
            x = [getattr(x, name) for name in self.feature_names]
            x = [self.imputation_medians.get(name, np.nan) if value is None else value
                 for name, value in zip(self.feature_names, x)]
        row = np.asarray(x, dtype=float)
        if row.ndim != 1 or row.shape[0] != self.n_features:
            raise DimensionMismatch(f"Expected {self.n_features} features, got shape {row.shape}")
        return row

    def tree_votes(self, x) -> np.ndarray:
        """Index of the plurality class of each tree's leaf for one row."""
        row = self._as_row(x)
        return np.array([int(np.argmax(tree.route(row).class_counts)) for tree in self.trees])

    def predict(self, x) -> str:
        """
        Majority vote of the trees; vote ties go to the alphabetically first genre.

        Raises:
            DimensionMismatch: If x does not carry the forest's features
        """
        votes = np.bincount(self.tree_votes(x), minlength=len(self.classes))
        return self.classes[int(np.argmax(votes))]

    def predict_many(self, X: np.ndarray) -> List[str]:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"Expected {self.n_features} columns, got shape {X.shape}")
        return [self.predict(row) for row in X]

    def importance(self) -> List[ImportanceEntry]:
        """
        Mean decrease in Gini impurity per feature, sorted descending.

        Per tree, each split contributes (node_size / root size) * ΔImp to its
        feature; contributions are averaged over the trees.
        """
        totals = np.zeros(self.n_features)
        for tree in self.trees:
            root_size = tree.node_size
            for node in tree.iter_nodes():
                if not node.is_leaf:
                    totals[node.feature_index] += node.node_size / root_size * node.impurity_decrease
        totals /= len(self.trees)

        order = sorted(range(self.n_features), key=lambda j: (-totals[j], j))
        return [ImportanceEntry(feature=self.feature_names[j], importance=float(totals[j])) for j in order]

    def oob_accuracy(self, X: np.ndarray, y: Sequence[str]) -> Optional[float]:
        """
        Accuracy of out-of-bag votes on the training rows the forest was fit on.

        Returns:
            None when no row was ever out of bag (or bootstrap was disabled)
        """
        if not self.oob_available:
            return None
        X = np.asarray(X, dtype=float)
        votes = np.zeros((len(X), len(self.classes)), dtype=np.int64)
        for tree, oob in zip(self.trees, self.oob_indices):
            for i in oob:
                leaf = tree.route(X[i])
                votes[i, int(np.argmax(leaf.class_counts))] += 1

        covered = votes.sum(axis=1) > 0
        if not covered.any():
            return None
        predicted = np.argmax(votes[covered], axis=1)
        truth = np.array([self.classes.index(label) for label in np.asarray(y)[covered]])
        return float(np.mean(predicted == truth))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'format_version': FORMAT_VERSION,
            'hyperparameters': {
                'n_trees': len(self.trees),
                'm': self.m,
                'min_leaf_size': self.min_leaf_size,
                'bootstrap': self.bootstrap,
            },
            'seed': self.seed,
            'classes': self.classes,
            'feature_names': self.feature_names,
            'imputation_medians': self.imputation_medians,
            'n_train': self.n_train,
            'trivially_pure': self.trivially_pure,
            'oob_indices': self.oob_indices,
            'trees': [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Forest':
        if data.get('format_version') != FORMAT_VERSION:
            raise ValueError(f"Unsupported model format version: {data.get('format_version')}")
        hyper = data['hyperparameters']
        return cls(
            trees=[TreeNode.from_dict(tree) for tree in data['trees']],
            classes=data['classes'],
            feature_names=data['feature_names'],
            m=int(hyper['m']),
            seed=int(data['seed']),
            min_leaf_size=int(hyper['min_leaf_size']),
            bootstrap=bool(hyper['bootstrap']),
            oob_indices=[list(map(int, oob)) for oob in data.get('oob_indices', [])],
            imputation_medians={k: float(v) for k, v in data.get('imputation_medians', {}).items()},
            n_train=int(data.get('n_train', 0)),
            trivially_pure=bool(data.get('trivially_pure', False)),
        )


def _tree_stream(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tree_index]))


def _fit_one_tree(
    tree_index: int,
    X: np.ndarray,
    y: np.ndarray,
    m: int,
    seed: int,
    n_classes: int,
    min_leaf_size: int,
    bootstrap: bool,
) -> Tuple[TreeNode, List[int]]:
    rng = _tree_stream(seed, tree_index)
    n = len(y)
    if bootstrap:
        sample = rng.integers(0, n, size=n)
        in_bag = np.zeros(n, dtype=bool)
        in_bag[sample] = True
        oob = np.flatnonzero(~in_bag).tolist()
    else:
        sample = np.arange(n)
        oob = []
    tree = grow_tree(X[sample], y[sample], m, rng, n_classes, min_leaf_size)
    return tree, oob


def train_forest(
    X: np.ndarray,
    labels: Sequence[str],
    feature_names: Sequence[str],
    n_trees: int = 500,
    m: Optional[int] = None,
    min_leaf_size: int = 1,
    seed: int = 42,
    bootstrap: bool = True,
    n_jobs: int = 1,
    classes: Optional[Sequence[str]] = None,
    imputation_medians: Optional[Dict[str, float]] = None,
) -> Forest:
    """
    Fit a random forest.

    Args:
        X: Train matrix (n x p), no missing values
        labels: Genre of each row
        feature_names: Column names, in X order
        n_trees: Number of trees B
        m: Features drawn per node (default floor(sqrt(p)))
        min_leaf_size: Minimum rows per leaf
        seed: Forest seed; tree k uses the stream (seed, k)
        bootstrap: Sample rows with replacement per tree (False grows plain CART trees)
        n_jobs: Worker threads; does not change the result
        classes: Class order (default: sorted labels)
        imputation_medians: Medians to store with the model

    Returns:
        Forest

    Warns:
        DegenerateInput: Single row or single class
    """
    X = np.asarray(X, dtype=float)
    labels = [str(label) for label in labels]
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyNode("Cannot train a forest on an empty table")
    if X.shape[0] != len(labels):
        raise DimensionMismatch(f"{X.shape[0]} rows but {len(labels)} labels")
    if X.shape[1] != len(feature_names) or X.shape[1] < 1:
        raise DimensionMismatch(f"{X.shape[1]} columns but {len(feature_names)} feature names")
    if np.isnan(X).any():
        raise ValueError("Missing values must be imputed before training")

    p = X.shape[1]
    m = default_mtry(p) if m is None else m
    if not 1 <= m <= p:
        raise ValueError(f"m={m} outside 1..{p}")

    class_list = sorted(set(labels)) if classes is None else list(classes)
    class_index = {label: i for i, label in enumerate(class_list)}
    y = np.array([class_index[label] for label in labels], dtype=np.int64)

    trivially_pure = X.shape[0] == 1 or len(set(labels)) == 1
    if trivially_pure:
        warnings.warn(
            f"Degenerate training data ({X.shape[0]} rows, {len(set(labels))} class); every tree is a single leaf",
            DegenerateInput,
        )

    logger.info(f"🌲 Growing {n_trees} trees (n={X.shape[0]}, p={p}, m={m}, min_leaf={min_leaf_size}, jobs={n_jobs})")

    def fit(k: int):
        return _fit_one_tree(k, X, y, m, seed, len(class_list), min_leaf_size, bootstrap)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            fitted = list(pool.map(fit, range(n_trees)))
    else:
        fitted = [fit(k) for k in range(n_trees)]

    forest = Forest(
        trees=[tree for tree, _ in fitted],
        classes=class_list,
        feature_names=list(feature_names),
        m=m,
        seed=seed,
        min_leaf_size=min_leaf_size,
        bootstrap=bootstrap,
        oob_indices=[oob for _, oob in fitted] if bootstrap else [],
        imputation_medians=imputation_medians,
        n_train=X.shape[0],
        trivially_pure=trivially_pure,
    )
    logger.info(f"✅ Forest trained: {n_trees} trees")
    return forest


def train_forest_with_params(
    X: np.ndarray,
    labels: Sequence[str],
    feature_names: Sequence[str],
    params: ForestParams,
    **kwargs,
) -> Forest:
    """train_forest driven by a ForestParams record."""
    return train_forest(
        X,
        labels,
        feature_names,
        n_trees=params.n_trees,
        m=params.mtry,
        min_leaf_size=params.min_leaf_size,
        seed=params.seed,
        bootstrap=params.bootstrap,
        n_jobs=params.n_jobs,
        **kwargs,
    )


def predict(forest: Forest, x) -> str:
    """Majority-vote genre of one feature row."""
    return forest.predict(x)


def importance(forest: Forest) -> List[ImportanceEntry]:
    """Gini importance ranking of a trained forest."""
    return forest.importance()


def save_forest(forest: Forest, path: str) -> None:
    """Persist a forest as a self-describing JSON document."""
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(forest.to_dict(), handle, indent=1, sort_keys=True, ensure_ascii=False)
        handle.write('\n')


def load_forest(path: str) -> Forest:
    """Load a forest written by save_forest."""
    with open(path, 'r', encoding='utf-8') as handle:
        return Forest.from_dict(json.load(handle))
