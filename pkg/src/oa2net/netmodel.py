"""In-memory model for weighted one-mode and two-mode networks.

Vertices are numbered 1..n in label order, the numbering convention of the
Pajek file format. A missing link is a distinct state ("no link"), never
weight zero, and all stored weights are strictly positive. Instances are
treated as immutable: every structural operation returns a new network, so
values can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Sequence

from .errors import InvalidNodeError


def _check_labels(labels: Sequence[str]) -> tuple[str, ...]:
    out = tuple(str(x) for x in labels)
    if len(set(out)) != len(out):
        seen, dup = set(), None
        for x in out:
            if x in seen:
                dup = x
                break
            seen.add(x)
        raise ValueError(f"duplicate label {dup!r}")
    return out


class WeightedNetwork:
    """Labeled network with positive real link weights.

    Undirected networks store each unordered pair once; self-loops are
    representable in both modes (they are ignored by degree computations
    but survive round trips through files).
    """

    def __init__(
        self,
        labels: Sequence[str],
        links: Iterable[tuple[int, int, float]] = (),
        directed: bool = False,
    ):
        self._labels = _check_labels(labels)
        self._directed = bool(directed)
        self._index = {lab: i + 1 for i, lab in enumerate(self._labels)}
        n = len(self._labels)
        store: dict[tuple[int, int], float] = {}
        for i, j, w in links:
            if not (isinstance(i, int) and 1 <= i <= n):
                raise InvalidNodeError(f"link endpoint {i!r} not in 1..{n}")
            if not (isinstance(j, int) and 1 <= j <= n):
                raise InvalidNodeError(f"link endpoint {j!r} not in 1..{n}")
            w = float(w)
            if not w > 0:
                raise ValueError(f"link ({i},{j}) has non-positive weight {w}")
            key = (i, j) if self._directed or i <= j else (j, i)
            if key in store:
                raise ValueError(f"duplicate link between nodes {key[0]} and {key[1]}")
            store[key] = w
        self._links = store

    # -- basic accessors -------------------------------------------------

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def directed(self) -> bool:
        return self._directed

    @property
    def n(self) -> int:
        return len(self._labels)

    @property
    def links(self):
        """Read-only mapping (i, j) -> weight; undirected keys have i <= j."""
        return MappingProxyType(self._links)

    def label(self, i: int) -> str:
        if not 1 <= i <= self.n:
            raise InvalidNodeError(f"node id {i} not in 1..{self.n}")
        return self._labels[i - 1]

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise InvalidNodeError(f"unknown label {label!r}") from None

    def has_label(self, label: str) -> bool:
        return label in self._index

    def weight(self, i: int, j: int) -> float | None:
        """Weight of the link i-j (either order for undirected), or None."""
        if not 1 <= i <= self.n:
            raise InvalidNodeError(f"node id {i} not in 1..{self.n}")
        if not 1 <= j <= self.n:
            raise InvalidNodeError(f"node id {j} not in 1..{self.n}")
        if self._directed:
            return self._links.get((i, j))
        return self._links.get((i, j) if i <= j else (j, i))

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedNetwork):
            return NotImplemented
        return (
            self._labels == other._labels
            and self._directed == other._directed
            and self._links == other._links
        )

    def __repr__(self) -> str:
        kind = "directed" if self._directed else "undirected"
        return f"<WeightedNetwork {kind} n={self.n} links={len(self._links)}>"

    # -- structure -------------------------------------------------------

    def incident(self, v: int) -> Iterator[tuple[int, float]]:
        """Yield (other endpoint, weight) for links touching v, loops excluded.

        For directed networks both out- and in-links are reported; a mutual
        pair u<->v therefore appears twice with its two weights.
        """
        if not 1 <= v <= self.n:
            raise InvalidNodeError(f"node id {v} not in 1..{self.n}")
        for (i, j), w in self._links.items():
            if i == j:
                continue
            if i == v:
                yield j, w
            elif j == v:
                yield i, w

    def weighted_degree(self, v: int, within: Iterable[int] | None = None) -> float:
        """Sum of weights of links joining v to other nodes of ``within``.

        ``within`` defaults to all nodes. Self-loops never count; directed
        networks sum over both in- and out-links.
        """
        if within is None:
            members = None
        else:
            members = set(within)
            for u in members:
                if not 1 <= u <= self.n:
                    raise InvalidNodeError(f"node id {u} not in 1..{self.n}")
            if v not in members:
                raise InvalidNodeError(f"node {v} not inside the given node set")
        total = 0.0
        for u, w in self.incident(v):
            if members is None or u in members:
                total += w
        return total

    def subnetwork(self, keep: Iterable[int]) -> "WeightedNetwork":
        """Induced subnetwork on ``keep``, node ids re-compacted to 1..|keep|.

        Label order of the surviving nodes is preserved.
        """
        kept = sorted(set(keep))
        for u in kept:
            if not (isinstance(u, int) and 1 <= u <= self.n):
                raise InvalidNodeError(f"node id {u!r} not in 1..{self.n}")
        remap = {old: new + 1 for new, old in enumerate(kept)}
        labels = [self._labels[old - 1] for old in kept]
        links = [
            (remap[i], remap[j], w)
            for (i, j), w in self._links.items()
            if i in remap and j in remap
        ]
        return WeightedNetwork(labels, links, directed=self._directed)

    def ids_of(self, labels: Iterable[str]) -> set[int]:
        return {self.index(lab) for lab in labels}

    def total_link_weight(self) -> float:
        return sum(self._links.values())


class TwoModeNetwork:
    """Bipartite network: links join a row node to a column node only.

    Labels must be unique across both modes so the network can live in a
    single Pajek vertex list.
    """

    def __init__(
        self,
        row_labels: Sequence[str],
        col_labels: Sequence[str],
        links: Iterable[tuple[int, int, float]] = (),
    ):
        rows = _check_labels(row_labels)
        cols = _check_labels(col_labels)
        overlap = set(rows) & set(cols)
        if overlap:
            raise ValueError(f"labels shared between modes: {sorted(overlap)[:3]}")
        self._rows = rows
        self._cols = cols
        store: dict[tuple[int, int], float] = {}
        n1, n2 = len(rows), len(cols)
        for i, j, w in links:
            if not (isinstance(i, int) and 1 <= i <= n1):
                raise InvalidNodeError(f"row id {i!r} not in 1..{n1}")
            if not (isinstance(j, int) and 1 <= j <= n2):
                raise InvalidNodeError(f"column id {j!r} not in 1..{n2}")
            w = float(w)
            if not w > 0:
                raise ValueError(f"link ({i},{j}) has non-positive weight {w}")
            if (i, j) in store:
                raise ValueError(f"duplicate link ({i},{j})")
            store[(i, j)] = w
        self._links = store

    @property
    def row_labels(self) -> tuple[str, ...]:
        return self._rows

    @property
    def col_labels(self) -> tuple[str, ...]:
        return self._cols

    @property
    def links(self):
        return MappingProxyType(self._links)

    @property
    def n_rows(self) -> int:
        return len(self._rows)

    @property
    def n_cols(self) -> int:
        return len(self._cols)

    def weight(self, i: int, j: int) -> float | None:
        return self._links.get((i, j))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TwoModeNetwork):
            return NotImplemented
        return (
            self._rows == other._rows
            and self._cols == other._cols
            and self._links == other._links
        )

    def __repr__(self) -> str:
        return (
            f"<TwoModeNetwork {self.n_rows}x{self.n_cols} links={len(self._links)}>"
        )


@dataclass(frozen=True)
class NodeVector:
    """Per-node real values aligned to a network's label list."""

    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class NodePartition:
    """Per-node class ids aligned to a network's label list.

    Class 0 is the conventional "unknown" sentinel; ``legend`` maps class
    ids to human-readable names.
    """

    values: tuple[int, ...]
    legend: dict[int, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)
