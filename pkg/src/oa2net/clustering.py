"""Dissimilarities, hierarchical clustering, and ordered matrix export.

The node dissimilarity is a corrected Euclidean distance between link
profiles: the plain row-profile distance with the two columns belonging to
the compared pair replaced by correction terms for their mutual cells and
their diagonal values,

    D[a,b]^2 = (m[a,b]-m[b,a])^2 + (m[a,a]-m[b,b])^2
               + sum over c != a,b of (m[a,c]-m[b,c])^2.

Clustering is standard agglomerative merging with Lance-Williams updates
(ward, complete, or average linkage) and fully deterministic tie-breaking:
among equally close cluster pairs the pair whose member labels come first
wins, and a dendrogram's children are ordered by their smallest leaf label.
Matrix weights are log2-transformed before clustering so link structure
and link strength both matter; absent cells enter as 0, which coincides
with the transform of a weight-1 link.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .coauthorship import CoMatrix
from .errors import DomainError
from .netmodel import NodePartition
from .pajek import format_number

LINKAGES = ("ward", "complete", "average")


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Symmetric non-negative dissimilarities with a zero diagonal."""

    codes: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"dissimilarity matrix must be square, got {v.shape}")
        if v.shape[0] != len(self.codes):
            raise ValueError("code list does not match matrix size")
        if not np.all(np.isfinite(v)):
            raise ValueError("dissimilarities must be finite")
        if v.size and (np.any(v < 0) or np.any(np.diag(v) != 0)):
            raise ValueError("dissimilarities must be non-negative with zero diagonal")
        if not np.array_equal(v, v.T):
            raise ValueError("dissimilarity matrix must be symmetric")

    @property
    def n(self) -> int:
        return len(self.codes)

    def get(self, a: str, b: str) -> float:
        pos = {c: i for i, c in enumerate(self.codes)}
        return float(self.values[pos[a], pos[b]])


def corrected_euclidean(
    values: np.ndarray, codes: Sequence[str]
) -> DissimilarityMatrix:
    """Corrected Euclidean distance between all row pairs of a square matrix.

    Absent cells must already be resolved to numbers. Asymmetric input is
    accepted; profiles are then compared row-wise, with the mutual-cell
    correction still applied.
    """
    m = np.asarray(values, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] != len(codes):
        raise ValueError("code list does not match matrix size")
    n = m.shape[0]
    if n == 0:
        return DissimilarityMatrix(tuple(codes), np.zeros((0, 0)))
    d = np.diag(m).copy()
    full = np.empty((n, n))
    for a in range(n):
        full[a] = ((m[a][None, :] - m) ** 2).sum(axis=1)
    drop_a = (d[:, None] - m.T) ** 2        # the c = a term of each row pair
    drop_b = (m - d[None, :]) ** 2          # the c = b term
    corr_mutual = (m - m.T) ** 2
    corr_diag = (d[:, None] - d[None, :]) ** 2
    # group symmetric pairs before combining so the result is exactly symmetric
    sq = full - (drop_a + drop_b) + (corr_mutual + corr_diag)
    np.fill_diagonal(sq, 0.0)
    out = np.sqrt(np.clip(sq, 0.0, None))
    return DissimilarityMatrix(tuple(codes), out)


def prepare_for_clustering(co: CoMatrix) -> np.ndarray:
    """log2-transformed dense array of a count matrix; absent cells become 0.

    Every present count must be at least 1, so transformed values are
    non-negative and a count of 1 coincides with absence by design.
    """
    out = np.zeros((co.n, co.n))
    pos = {c: i for i, c in enumerate(co.codes)}
    for a, b, v in co.items():
        if v < 1:
            raise DomainError(f"log2 transform needs counts >= 1; cell ({a},{b}) has {v}")
        out[pos[a], pos[b]] = out[pos[b], pos[a]] = math.log2(v)
    return out


def prepare_matrix(co: CoMatrix, transform: str = "log2") -> np.ndarray:
    """Dense array for clustering under the chosen transform (or none)."""
    if transform == "log2":
        return prepare_for_clustering(co)
    out = np.zeros((co.n, co.n))
    pos = {c: i for i, c in enumerate(co.codes)}
    for a, b, v in co.items():
        if transform == "sqrt":
            x = math.sqrt(v)
        elif transform == "none":
            x = float(v)
        else:
            raise ValueError(f"unknown transform {transform!r}")
        out[pos[a], pos[b]] = out[pos[b], pos[a]] = x
    return out


# ---------------------------------------------------------------------------
# agglomeration


@dataclass(frozen=True)
class Merge:
    """One agglomeration step; ids 0..n-1 are leaves, n-1+step internals."""

    step: int
    left: int
    right: int
    height: float


@dataclass(frozen=True)
class Dendrogram:
    codes: tuple[str, ...]
    merges: tuple[Merge, ...]

    @property
    def n_leaves(self) -> int:
        return len(self.codes)

    def _children(self) -> dict[int, tuple[int, int]]:
        n = self.n_leaves
        return {n - 1 + m.step: (m.left, m.right) for m in self.merges}

    def leaf_order(self) -> list[str]:
        """Left-to-right leaves; children ordered by smallest leaf label."""
        if not self.codes:
            return []
        children = self._children()
        root = self.n_leaves - 1 + len(self.merges) if self.merges else 0
        order: list[str] = []
        stack = [root]
        while stack:
            node = stack.pop()
            if node < self.n_leaves:
                order.append(self.codes[node])
            else:
                left, right = children[node]
                stack.append(right)
                stack.append(left)
        return order

    def cut(self, k: int) -> NodePartition:
        """Partition into k clusters by removing the k-1 highest merges.

        Cluster ids are assigned in leaf order of first appearance, starting
        at 1; values align to the dendrogram's code order.
        """
        n = self.n_leaves
        if not 1 <= k <= n:
            raise ValueError(f"k must be within 1..{n}, got {k}")
        removed = {
            n - 1 + m.step
            for m in sorted(self.merges, key=lambda m: (m.height, m.step))[
                len(self.merges) - (k - 1):
            ]
        }
        parent = list(range(n + len(self.merges)))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for m in self.merges:
            node = n - 1 + m.step
            if node in removed:
                continue
            for child in (m.left, m.right):
                parent[find(child)] = find(node)
        cluster_of_root: dict[int, int] = {}
        next_id = 1
        pos = {c: i for i, c in enumerate(self.codes)}
        values = [0] * n
        for code in self.leaf_order():
            leaf = pos[code]
            root = find(leaf)
            if root not in cluster_of_root:
                cluster_of_root[root] = next_id
                next_id += 1
            values[leaf] = cluster_of_root[root]
        if next_id - 1 != k:
            raise RuntimeError(
                f"cut produced {next_id - 1} clusters instead of {k}; "
                "merge heights are not monotone"
            )
        return NodePartition(values=tuple(values))

    # -- serialization ----------------------------------------------------

    def to_newick(self) -> str:
        """Parenthesized tree with merge heights, one line."""
        if not self.codes:
            return ";"
        children = self._children()
        heights = {self.n_leaves - 1 + m.step: m.height for m in self.merges}

        def render(node: int) -> str:
            if node < self.n_leaves:
                return self.codes[node]
            left, right = children[node]
            return f"({render(left)},{render(right)}):{format_number(heights[node])}"

        root = self.n_leaves - 1 + len(self.merges) if self.merges else 0
        return render(root) + ";"

    def merges_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "left", "right", "height"])
        for m in self.merges:
            writer.writerow([m.step, m.left, m.right, format_number(m.height)])
        return buf.getvalue()


def _pair_key(min_labels: dict[int, str], i: int, j: int) -> tuple[str, str]:
    a, b = min_labels[i], min_labels[j]
    return (a, b) if a <= b else (b, a)


def agglomerate(d: DissimilarityMatrix, linkage: str = "ward") -> Dendrogram:
    """Merge clusters until one remains, Lance-Williams style.

    At every step the closest active pair merges; exact ties resolve to the
    pair with the lexicographically smallest (min label, min label) key, and
    the recorded left child is the one holding the smaller minimum label.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; choose from {LINKAGES}")
    n = d.n
    codes = d.codes
    if n == 0:
        return Dendrogram(codes=codes, merges=())
    dist: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = float(d.values[i, j])
    size = {i: 1 for i in range(n)}
    min_label = {i: codes[i] for i in range(n)}
    active = set(range(n))
    merges: list[Merge] = []

    def get(i: int, j: int) -> float:
        return dist[(i, j) if i < j else (j, i)]

    for step in range(1, n):
        best = None
        acts = sorted(active)
        for a_pos, i in enumerate(acts):
            for j in acts[a_pos + 1:]:
                cand = (get(i, j), _pair_key(min_label, i, j))
                if best is None or cand < best[0]:
                    best = (cand, i, j)
        (height, _), i, j = best
        new = n - 1 + step
        li, lj = min_label[i], min_label[j]
        left, right = (i, j) if li <= lj else (j, i)
        merges.append(Merge(step=step, left=left, right=right, height=height))
        for c in active:
            if c in (i, j):
                continue
            dic, djc = get(i, c), get(j, c)
            if linkage == "complete":
                nd = max(dic, djc)
            elif linkage == "average":
                nd = (size[i] * dic + size[j] * djc) / (size[i] + size[j])
            else:  # ward
                si, sj, sc = size[i], size[j], size[c]
                nd = math.sqrt(
                    max(
                        0.0,
                        (
                            (si + sc) * dic * dic
                            + (sj + sc) * djc * djc
                            - sc * height * height
                        )
                        / (si + sj + sc),
                    )
                )
            dist[(c, new) if c < new else (new, c)] = nd
        size[new] = size[i] + size[j]
        min_label[new] = min(li, lj)
        active.discard(i)
        active.discard(j)
        active.add(new)
    return Dendrogram(codes=codes, merges=tuple(merges))


# ---------------------------------------------------------------------------
# ordered export


def block_boundaries(order: Sequence[str], partition: NodePartition,
                     codes: Sequence[str]) -> list[int]:
    """Positions along ``order`` where the cluster id changes."""
    pos = {c: i for i, c in enumerate(codes)}
    classes = [partition.values[pos[c]] for c in order]
    return [i for i in range(1, len(classes)) if classes[i] != classes[i - 1]]


def ordered_matrix_export(
    matrix,
    order: Sequence[str],
    partition: NodePartition | None = None,
    path=None,
    meta_path=None,
) -> tuple[str, dict]:
    """Permute a matrix into ``order`` and emit CSV plus sidecar metadata.

    ``matrix`` is anything with ``codes`` and ``get`` (counts or index
    values); absent cells serialize as empty fields. The metadata carries
    the ordering and, with a partition, the block boundary indices a
    renderer needs to draw cluster divisions.
    """
    order = list(order)
    if sorted(order) != sorted(matrix.codes):
        raise ValueError("order is not a permutation of the matrix codes")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + order)
    for a in order:
        row = [a]
        for b in order:
            v = matrix.get(a, b)
            row.append("" if v is None else format_number(v))
        writer.writerow(row)
    text = buf.getvalue()
    meta = {"order": order, "block_boundaries": []}
    if partition is not None:
        meta["block_boundaries"] = block_boundaries(order, partition, matrix.codes)
        meta["clusters"] = {
            code: int(partition.values[i]) for i, code in enumerate(matrix.codes)
        }
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    if meta_path is not None:
        Path(meta_path).write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return text, meta
