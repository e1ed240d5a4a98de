"""Cohesive cores and sparsifying skeletons for weighted networks.

Weighted-degree cores generalize k-cores: the core at level t is the
largest node set in which every member's weighted degree, counted inside
the set, is at least t. Levels are produced by repeatedly deleting a node
of minimum current weighted degree and recording the running maximum of the
minima seen so far; cores at any level are then recoverable as level
thresholds, and they are nested. All ties here and in the skeleton builders
break on ascending node label so results are reproducible.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DomainError
from .netmodel import WeightedNetwork
from .pajek import format_number


@dataclass(frozen=True)
class CoreDecomposition:
    """Per-node core levels plus the removal order that produced them."""

    labels: tuple[str, ...]
    level: dict[str, float]
    removal_order: tuple[str, ...]

    def core_at(self, t: float) -> set[str]:
        return {v for v in self.labels if self.level[v] >= t}

    def levels_used(self) -> list[float]:
        return sorted(set(self.level.values()))

    def main_core(self) -> set[str]:
        if not self.labels:
            return set()
        return self.core_at(max(self.level.values()))

    def to_vector(self) -> list[float]:
        return [self.level[v] for v in self.labels]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "level"])
        ranked = sorted(self.labels, key=lambda v: (-self.level[v], v))
        for v in ranked:
            writer.writerow([v, format_number(self.level[v])])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8", newline="")


def weighted_degree_cores(net: WeightedNetwork) -> CoreDecomposition:
    """Core levels for an undirected network; self-loops never count."""
    if net.directed:
        raise DomainError("weighted-degree cores are defined on undirected networks")
    labels = net.labels
    adj: dict[str, list[tuple[str, float]]] = {v: [] for v in labels}
    for (i, j), w in net.links.items():
        if i == j:
            continue
        a, b = labels[i - 1], labels[j - 1]
        adj[a].append((b, w))
        adj[b].append((a, w))

    remaining = set(labels)
    degree = {v: sum(w for _, w in adj[v]) for v in labels}
    level: dict[str, float] = {}
    order: list[str] = []
    running_max = 0.0
    while remaining:
        v = min(remaining, key=lambda u: (degree[u], u))
        running_max = max(running_max, degree[v])
        level[v] = running_max
        order.append(v)
        remaining.remove(v)
        for u, w in adj[v]:
            if u in remaining:
                degree[u] -= w
    return CoreDecomposition(labels=labels, level=level, removal_order=tuple(order))


def core_at_level(dec: CoreDecomposition, t: float) -> set[str]:
    return dec.core_at(t)


def k_neighbor_skeleton(net: WeightedNetwork, k: int = 1) -> WeightedNetwork:
    """Directed skeleton keeping each node's k heaviest incident links.

    Every node points at its k strongest neighbors (fewer when it has
    fewer), weights preserved; equal weights resolve to the smaller
    neighbor label. Isolated nodes stay isolated. The arc set depends only
    on the weight order, so any increasing weight transform leaves it
    unchanged.
    """
    if net.directed:
        raise DomainError("skeletons are taken from undirected networks")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    labels = net.labels
    incident: dict[str, list[tuple[str, float]]] = {v: [] for v in labels}
    for (i, j), w in net.links.items():
        if i == j:
            continue
        a, b = labels[i - 1], labels[j - 1]
        incident[a].append((b, w))
        incident[b].append((a, w))
    index = {v: i + 1 for i, v in enumerate(labels)}
    arcs = []
    for v in labels:
        ranked = sorted(incident[v], key=lambda uw: (-uw[1], uw[0]))
        for u, w in ranked[:k]:
            arcs.append((index[v], index[u], w))
    return WeightedNetwork(labels, arcs, directed=True)


def mutual_pairs(skeleton: WeightedNetwork) -> set[tuple[str, str]]:
    """Unordered label pairs linked by arcs in both directions."""
    if not skeleton.directed:
        raise DomainError("mutual pairs are defined on directed networks")
    labels = skeleton.labels
    pairs = set()
    links = skeleton.links
    for (i, j) in links:
        if i != j and (j, i) in links:
            a, b = labels[i - 1], labels[j - 1]
            pairs.add((a, b) if a <= b else (b, a))
    return pairs


def link_cut(net: WeightedNetwork, threshold: float) -> WeightedNetwork:
    """Same nodes, only links with weight at or above the threshold."""
    links = [(i, j, w) for (i, j), w in net.links.items() if w >= threshold]
    return WeightedNetwork(net.labels, links, directed=net.directed)


def with_isolates(net: WeightedNetwork, labels: Iterable[str]) -> WeightedNetwork:
    """Append any unseen labels as isolated nodes, preserving all links."""
    extended = list(net.labels)
    have = set(extended)
    for lab in labels:
        if lab not in have:
            extended.append(lab)
            have.add(lab)
    links = [(i, j, w) for (i, j), w in net.links.items()]
    return WeightedNetwork(extended, links, directed=net.directed)


def mutual_pairs_csv_text(skeleton: WeightedNetwork) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["a", "b", "weight"])
    for a, b in sorted(mutual_pairs(skeleton)):
        i, j = skeleton.index(a), skeleton.index(b)
        w = skeleton.weight(i, j)
        writer.writerow([a, b, format_number(w)])
    return buf.getvalue()
