"""From-scratch random forest over fingerprint bits, plus ranking metrics.

Trees split on single bits by Gini impurity reduction.  Every random choice
(bootstrap rows, candidate bits per node) comes from a splitmix64 stream
seeded per tree by counter, so a forest is a pure function of
(X, y, params) and identical across platforms and thread counts.  The
training and prediction inner loops are numba-compiled and release the GIL,
which is what makes threaded grid scans effective.

Determinism details, frozen:
    - per-tree seed: hash_tuple(TAG, params.seed, tree_index)
    - bootstrap row i = next_u64() % n_rows
    - candidate bits per node: partial Fisher-Yates over the bits that vary
      across the forest's training matrix; candidates constant inside the
      node are discarded (they cannot split it)
    - ties in Gini reduction go to the lowest bit index
    - a node becomes a leaf when pure, smaller than 2*min_leaf, at max
      depth, or when no candidate improves Gini by more than 1e-12
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from .fingerprint import Fingerprint, ParamMismatch
from .rng import hash_tuple

_TAG_TREE = 0x54524545  # "TREE"

_U_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_U_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_U_MIX2 = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)


class LengthMismatch(ValueError):
    pass


class EmptyTrainingSet(ValueError):
    pass


class DegenerateLabels(ValueError):
    """ROC AUC needs at least one positive and one negative label."""


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_leaf: int = 1
    features_per_split: Union[str, int] = "sqrt"  # "sqrt" | "all" | fixed k
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if isinstance(self.features_per_split, str):
            if self.features_per_split not in ("sqrt", "all"):
                raise ValueError("features_per_split must be 'sqrt', 'all' or an int")
        elif self.features_per_split < 1:
            raise ValueError("fixed features_per_split must be >= 1")

    def resolve_k(self, n_features: int) -> int:
        if self.features_per_split == "sqrt":
            return max(1, int(math.sqrt(n_features)))
        if self.features_per_split == "all":
            return n_features
        return int(self.features_per_split)


@dataclass(frozen=True)
class TreeView:
    """Read-only view of one tree.  ``feature[i] < 0`` marks a leaf whose
    class-1 probability is ``leaf_p1[i]``; internal nodes route bit==0 to
    ``left`` and bit==1 to ``right``."""

    feature: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_p1: np.ndarray


@dataclass(frozen=True)
class TrainedForest:
    params: ForestParams
    n_bits: int
    radius: Optional[int]
    _feats: np.ndarray = field(repr=False)
    _lefts: np.ndarray = field(repr=False)
    _rights: np.ndarray = field(repr=False)
    _p1s: np.ndarray = field(repr=False)
    _n_nodes: np.ndarray = field(repr=False)

    @property
    def trees(self) -> list[TreeView]:
        return [
            TreeView(self._feats[t, :n], self._lefts[t, :n],
                     self._rights[t, :n], self._p1s[t, :n])
            for t, n in enumerate(self._n_nodes)
        ]


@njit(cache=True, nogil=True, inline="always")
def _sm_next(state):
    state = state + _U_GAMMA
    z = state
    z = (z ^ (z >> _U30)) * _U_MIX1
    z = (z ^ (z >> _U27)) * _U_MIX2
    z = z ^ (z >> _U31)
    return state, z


@njit(cache=True, nogil=True)
def _train_kernel(Xt, y, tree_seeds, max_depth, min_leaf, k_feat, pool,
                  feats, lefts, rights, p1s, n_nodes_out):
    n_rows = Xt.shape[1]
    pool_n = pool.shape[0]
    cap = feats.shape[1]
    idx = np.empty(n_rows, np.int32)
    ones_buf = np.empty(n_rows, np.int32)
    pool_buf = np.empty(max(pool_n, 1), np.int32)
    stack = np.empty((cap + 1, 4), np.int64)
    u_rows = np.uint64(n_rows)

    for t in range(tree_seeds.shape[0]):
        state = tree_seeds[t]
        for i in range(n_rows):
            state, v = _sm_next(state)
            idx[i] = np.int32(v % u_rows)
        n_nodes = 0
        stack[0, 0] = 0
        stack[0, 1] = n_rows
        stack[0, 2] = 0
        stack[0, 3] = -1
        top = 1
        while top > 0:
            top -= 1
            start = stack[top, 0]
            end = stack[top, 1]
            depth = stack[top, 2]
            pcode = stack[top, 3]
            node = n_nodes
            n_nodes += 1
            if pcode >= 0:
                parent = pcode >> 1
                if pcode & 1:
                    lefts[t, parent] = node
                else:
                    rights[t, parent] = node

            size = end - start
            pos = 0
            for i in range(start, end):
                pos += np.int64(y[idx[i]])
            neg = size - pos

            make_leaf = (pos == 0 or neg == 0 or size < 2 * min_leaf
                         or depth >= max_depth or pool_n == 0)
            best_bit = -1
            if not make_leaf:
                parent_cost = size - (pos * pos + neg * neg) / size
                best_cost = 1e300
                k = k_feat if k_feat < pool_n else pool_n
                for i in range(pool_n):
                    pool_buf[i] = pool[i]
                for c in range(k):
                    state, v = _sm_next(state)
                    j = c + np.int64(v % np.uint64(pool_n - c))
                    tmp = pool_buf[c]
                    pool_buf[c] = pool_buf[j]
                    pool_buf[j] = tmp
                    b = pool_buf[c]
                    n1 = 0
                    pos1 = 0
                    for i in range(start, end):
                        row = idx[i]
                        if Xt[b, row]:
                            n1 += 1
                            pos1 += np.int64(y[row])
                    n0 = size - n1
                    if n1 < min_leaf or n0 < min_leaf:
                        continue
                    pos0 = pos - pos1
                    neg1 = n1 - pos1
                    neg0 = n0 - pos0
                    cost = ((n1 - (pos1 * pos1 + neg1 * neg1) / n1)
                            + (n0 - (pos0 * pos0 + neg0 * neg0) / n0))
                    if cost < best_cost or (cost == best_cost and b < best_bit):
                        best_cost = cost
                        best_bit = b
                if best_bit < 0 or parent_cost - best_cost <= 1e-12:
                    make_leaf = True

            if make_leaf:
                feats[t, node] = -1
                p1s[t, node] = pos / size
                continue

            feats[t, node] = best_bit
            z = start
            o = 0
            for i in range(start, end):
                row = idx[i]
                if Xt[best_bit, row]:
                    ones_buf[o] = row
                    o += 1
                else:
                    idx[z] = row
                    z += 1
            for i in range(o):
                idx[z + i] = ones_buf[i]
            mid = z
            # push right child first so the left child is processed first
            stack[top, 0] = mid
            stack[top, 1] = end
            stack[top, 2] = depth + 1
            stack[top, 3] = node * 2
            top += 1
            stack[top, 0] = start
            stack[top, 1] = mid
            stack[top, 2] = depth + 1
            stack[top, 3] = node * 2 + 1
            top += 1
        n_nodes_out[t] = n_nodes


@njit(cache=True, nogil=True)
def _predict_kernel(X, feats, lefts, rights, p1s, out):
    n_test = X.shape[0]
    n_trees = feats.shape[0]
    for i in range(n_test):
        acc = 0.0
        for t in range(n_trees):
            node = 0
            while feats[t, node] >= 0:
                if X[i, feats[t, node]]:
                    node = rights[t, node]
                else:
                    node = lefts[t, node]
            acc += p1s[t, node]
        out[i] = acc / n_trees


def fingerprints_to_matrix(fps: Sequence[Fingerprint]) -> np.ndarray:
    """Stack fingerprints into an (n, n_bits) uint8 matrix."""
    if not fps:
        raise EmptyTrainingSet("no fingerprints")
    n_bits = fps[0].n_bits
    mat = np.zeros((len(fps), n_bits), dtype=np.uint8)
    for i, fp in enumerate(fps):
        if fp.n_bits != n_bits or fp.radius != fps[0].radius:
            raise ParamMismatch("fingerprints in one matrix must share params")
        for b in fp.set_bits():
            mat[i, b] = 1
    return mat


def train_matrix(X: np.ndarray, y: Sequence[int], p: ForestParams,
                 n_bits: Optional[int] = None,
                 radius: Optional[int] = None) -> TrainedForest:
    """Train on a prebuilt uint8 bit matrix (rows = samples)."""
    X = np.ascontiguousarray(X, dtype=np.uint8)
    y_arr = np.asarray(y, dtype=np.uint8)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if X.shape[0] != y_arr.shape[0]:
        raise LengthMismatch(f"|X|={X.shape[0]} but |y|={y_arr.shape[0]}")
    if X.shape[0] < 2:
        raise EmptyTrainingSet("need at least 2 training rows")
    width = n_bits if n_bits is not None else X.shape[1]

    col_sums = X.sum(axis=0, dtype=np.int64)
    pool = np.flatnonzero((col_sums > 0) & (col_sums < X.shape[0]))
    pool = pool.astype(np.int32)

    n_trees = p.n_trees
    cap = 2 * X.shape[0]
    feats = np.full((n_trees, cap), -2, dtype=np.int32)
    lefts = np.full((n_trees, cap), -1, dtype=np.int32)
    rights = np.full((n_trees, cap), -1, dtype=np.int32)
    p1s = np.zeros((n_trees, cap), dtype=np.float64)
    n_nodes = np.zeros(n_trees, dtype=np.int64)
    seeds = np.array([hash_tuple(_TAG_TREE, p.seed, t) for t in range(n_trees)],
                     dtype=np.uint64)
    max_depth = p.max_depth if p.max_depth is not None else 2**31
    _train_kernel(np.ascontiguousarray(X.T), y_arr, seeds, max_depth,
                  p.min_leaf, p.resolve_k(width), pool,
                  feats, lefts, rights, p1s, n_nodes)
    return TrainedForest(params=p, n_bits=width, radius=radius,
                         _feats=feats, _lefts=lefts, _rights=rights,
                         _p1s=p1s, _n_nodes=n_nodes)


def train(X: Sequence[Fingerprint], y: Sequence[int],
          p: ForestParams) -> TrainedForest:
    """Train a forest on fingerprints with labels in {0, 1}."""
    if len(X) != len(y):
        raise LengthMismatch(f"|X|={len(X)} but |y|={len(y)}")
    if len(X) < 2:
        raise EmptyTrainingSet("need at least 2 training examples")
    mat = fingerprints_to_matrix(X)
    return train_matrix(mat, y, p, n_bits=X[0].n_bits, radius=X[0].radius)


def predict_proba_matrix(f: TrainedForest, X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.uint8)
    if X.shape[1] != f.n_bits:
        raise ParamMismatch(f"matrix width {X.shape[1]} != forest n_bits {f.n_bits}")
    out = np.empty(X.shape[0], dtype=np.float64)
    _predict_kernel(X, f._feats, f._lefts, f._rights, f._p1s, out)
    return out


def predict_proba(f: TrainedForest, x: Fingerprint) -> float:
    """Mean over trees of the class-1 leaf probability."""
    if x.n_bits != f.n_bits or (f.radius is not None and x.radius != f.radius):
        raise ParamMismatch("fingerprint params do not match the training data")
    return float(predict_proba_matrix(f, fingerprints_to_matrix([x]))[0])


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC: fraction of (positive, negative) pairs where the
    positive outscores the negative, ties counted 0.5.

    Computed from tied ranks with integer arithmetic, so the result is
    bit-identical to brute-force pair enumeration.
    """
    s = np.asarray(scores, dtype=np.float64)
    lab = np.asarray(labels, dtype=np.int64)
    if s.shape != lab.shape or s.ndim != 1:
        raise LengthMismatch("scores and labels must be 1-D and equal length")
    n = s.shape[0]
    n_pos = int((lab == 1).sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("need at least one positive and one negative")
    order = np.argsort(s, kind="stable")
    double_rank = np.empty(n, dtype=np.int64)
    i = 0
    while i < n:
        j = i
        while j < n and s[order[j]] == s[order[i]]:
            j += 1
        # 1-based ranks i+1 .. j share the average (i+1+j)/2; store doubled
        double_rank[order[i:j]] = (i + 1) + j
        i = j
    num2 = int(double_rank[lab == 1].sum()) - n_pos * (n_pos + 1)
    return num2 / (2 * n_pos * n_neg)
