"""Stochastic recursive growth and evaluation of a single regression tree.

A tree is grown from the root by repeatedly sampling a cutpoint from the
softmax over marginal-likelihood scores (or stopping on the no-split
option), sifting the node's presorted index into children, and recursing —
left subtree fully before the right, so a fixed generator seed fixes the
tree exactly.  Leaves draw their mean from the conjugate normal posterior.

Nodes are stored struct-of-arrays in pre-order; ``var < 0`` marks a leaf.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PredictorMatrix, build_cutpoint_grid, sift
from .errors import DataError, ModelFormatError
from .splitting import sample_cutpoint, scan_candidates

_LEAF = -1


@dataclass(frozen=True)
class GrowParams:
    """Knobs consumed by a single tree grow."""

    alpha: float = 0.95
    beta: float = 1.25
    budget: int = 100
    min_node_size: int = 1
    max_depth: int = 30
    mtry: int | None = None


class Tree:
    """One regression tree in pre-order struct-of-arrays form."""

    def __init__(self, var, cut, left, right, leaf_value):
        self.var = np.asarray(var, dtype=np.int32)
        self.cut = np.asarray(cut, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.leaf_value = np.asarray(leaf_value, dtype=np.float64)

    @classmethod
    def single_leaf(cls, value: float = 0.0) -> "Tree":
        return cls([_LEAF], [0.0], [_LEAF], [_LEAF], [float(value)])

    @property
    def n_nodes(self) -> int:
        return self.var.size

    @property
    def n_leaves(self) -> int:
        return int((self.var == _LEAF).sum())

    def is_leaf(self, node: int) -> bool:
        return self.var[node] == _LEAF

    def leaf_values(self) -> np.ndarray:
        """Leaf means in pre-order."""
        return self.leaf_value[self.var == _LEAF]

    def split_counts(self, p: int) -> np.ndarray:
        """Number of internal nodes splitting on each of ``p`` variables."""
        return np.bincount(self.var[self.var >= 0], minlength=p)

    def depth(self) -> int:
        """Longest root-to-node edge count."""
        out = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            out = max(out, d)
            if self.var[node] >= 0:
                stack.append((int(self.left[node]), d + 1))
                stack.append((int(self.right[node]), d + 1))
        return out

    def predict(self, X: PredictorMatrix) -> np.ndarray:
        """Evaluate the tree's step function on every row of ``X``.

        Routing matches the training partition: ``x[var] <= cut`` goes left.
        """
        out = np.empty(X.n, dtype=np.float64)
        stack = [(0, np.arange(X.n))]
        while stack:
            node, rows = stack.pop()
            while self.var[node] >= 0:
                go_left = X.columns[self.var[node], rows] <= self.cut[node]
                left_rows = rows[go_left]
                # follow the larger side iteratively, push the other
                stack.append((int(self.right[node]), rows[~go_left]))
                node, rows = int(self.left[node]), left_rows
            if rows.size:
                out[rows] = self.leaf_value[node]
        return out

    def to_records(self) -> list[list]:
        """Pre-order node records: ``["split", var, cut]`` / ``["leaf", value]``."""
        recs: list[list] = []
        for i in range(self.n_nodes):
            if self.var[i] == _LEAF:
                recs.append(["leaf", float(self.leaf_value[i])])
            else:
                recs.append(["split", int(self.var[i]), float(self.cut[i])])
        return recs

    @classmethod
    def from_records(cls, records: list, n_features: int | None = None) -> "Tree":
        """Rebuild a tree from its pre-order records, validating as it goes."""
        if not isinstance(records, list) or not records:
            raise ModelFormatError("tree record list is empty or not a list")
        var, cut, left, right, leaf_value = [], [], [], [], []

        def parse(pos: int) -> tuple[int, int]:
            if pos >= len(records):
                raise ModelFormatError("tree records truncated mid-subtree")
            rec = records[pos]
            if not isinstance(rec, (list, tuple)) or not rec:
                raise ModelFormatError(f"malformed tree record at {pos}: {rec!r}")
            tag = rec[0]
            node = len(var)
            if tag == "leaf":
                if len(rec) != 2:
                    raise ModelFormatError(f"leaf record needs 1 value: {rec!r}")
                var.append(_LEAF)
                cut.append(0.0)
                left.append(_LEAF)
                right.append(_LEAF)
                leaf_value.append(float(rec[1]))
                return node, pos + 1
            if tag == "split":
                if len(rec) != 3:
                    raise ModelFormatError(f"split record needs var and cut: {rec!r}")
                v = int(rec[1])
                if v < 0 or (n_features is not None and v >= n_features):
                    raise ModelFormatError(f"split variable {v} out of range")
                var.append(v)
                cut.append(float(rec[2]))
                left.append(0)
                right.append(0)
                leaf_value.append(0.0)
                left_id, nxt = parse(pos + 1)
                right_id, nxt = parse(nxt)
                left[node] = left_id
                right[node] = right_id
                return node, nxt
            raise ModelFormatError(f"unknown tree record tag {tag!r}")

        root, end = parse(0)
        if end != len(records):
            raise ModelFormatError(
                f"{len(records) - end} trailing tree records after the root subtree"
            )
        return cls(var, cut, left, right, leaf_value)


def sample_leaf_value(
    s: float, n: int, sigma2: float, tau: float, rng: np.random.Generator
) -> float:
    """Draw a leaf mean from its conjugate normal posterior.

    Precision is ``1/tau + n/sigma2``; the mean is ``s / (sigma2 * precision)``.
    A zero prior variance collapses the draw to exactly 0 and consumes no
    variate; an empty leaf draws from the prior.
    """
    if tau == 0.0:
        return 0.0
    precision = 1.0 / tau + n / sigma2
    mean = s / (sigma2 * precision)
    return mean + np.sqrt(1.0 / precision) * rng.standard_normal()


def grow_tree(
    X: PredictorMatrix,
    index: np.ndarray,
    residuals: np.ndarray,
    sigma2: float,
    tau: float,
    params: GrowParams,
    rng: np.random.Generator,
    var_weights: np.ndarray | None = None,
    fitted_out: np.ndarray | None = None,
    split_count_out: np.ndarray | None = None,
    tie_free: np.ndarray | None = None,
    workspace: np.ndarray | None = None,
) -> Tree:
    """Grow one tree from the root over the rows listed in ``index``.

    Parameters
    ----------
    residuals : ndarray over all n rows
        Partial residuals this tree should fit, indexed by row id.
    var_weights : optional probability vector over all p columns
        Activates per-node variable subsampling when ``params.mtry`` is
        smaller than p; ``None`` scores every column.
    fitted_out : optional length-n array
        Filled in place with the grown tree's fitted value for every row of
        the node (cheaper than re-evaluating the tree afterwards).
    split_count_out : optional length-p int array
        Incremented in place with this tree's split counts per variable.

    Returns the grown tree with all leaf means sampled.
    """
    if sigma2 <= 0.0:
        raise DataError(f"noise variance must be positive, got {sigma2}")
    if tau < 0.0:
        raise DataError(f"leaf prior variance must be non-negative, got {tau}")
    if workspace is None:
        workspace = np.zeros(X.n, dtype=bool)
    p = X.p
    mtry_active = (
        var_weights is not None and params.mtry is not None and params.mtry < p
    )
    var_l: list[int] = []
    cut_l: list[float] = []
    left_l: list[int] = []
    right_l: list[int] = []
    mu_l: list[float] = []

    def add_leaf(node_index: np.ndarray, total: float, m: int) -> int:
        mu = sample_leaf_value(total, m, sigma2, tau, rng)
        node = len(var_l)
        var_l.append(_LEAF)
        cut_l.append(0.0)
        left_l.append(_LEAF)
        right_l.append(_LEAF)
        mu_l.append(mu)
        if fitted_out is not None:
            fitted_out[node_index[0]] = mu
        return node

    def recurse(node_index: np.ndarray, depth: int) -> int:
        m = node_index.shape[1]
        total = float(residuals[node_index[0]].sum())
        if depth >= params.max_depth - 1 or m < max(2, 2 * params.min_node_size):
            return add_leaf(node_index, total, m)
        if mtry_active:
            chosen = np.sort(
                rng.choice(p, size=params.mtry, replace=False, p=var_weights)
            )
        else:
            chosen = None
        grid = build_cutpoint_grid(
            X,
            node_index,
            params.budget,
            params.min_node_size,
            variables=chosen,
            tie_free=tie_free,
        )
        if len(grid) == 0:
            return add_leaf(node_index, total, m)
        scores = scan_candidates(
            X,
            node_index,
            residuals,
            grid,
            sigma2,
            tau,
            depth,
            params.alpha,
            params.beta,
            total=total,
        )
        choice = sample_cutpoint(scores, rng)
        if choice is None:
            return add_leaf(node_index, total, m)
        node = len(var_l)
        var_l.append(choice.var)
        cut_l.append(choice.value)
        left_l.append(0)
        right_l.append(0)
        mu_l.append(0.0)
        if split_count_out is not None:
            split_count_out[choice.var] += 1
        left_index, right_index = sift(X, node_index, choice.var, choice.value, workspace)
        left_l[node] = recurse(left_index, depth + 1)
        right_l[node] = recurse(right_index, depth + 1)
        return node

    recurse(index, 0)
    return Tree(var_l, cut_l, left_l, right_l, mu_l)
