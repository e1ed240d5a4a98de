"""Weight transforms and size normalizations for co-authorship matrices.

Raw co-authorship counts span several orders of magnitude and scale with
country size. Two remedies are provided: order-preserving weight
transforms (square root, base-2 log), and cellwise normalizations —
stochastic (row share), Jaccard (union share), Salton (cosine), plus the
expected-weight / activity-index pair. The activity index compares each
observed cell with the weight predicted from the marginals alone,

    expected[a,b] = R(a) * Q(b) / T
    activity[a,b] = observed[a,b] / expected[a,b]

so activity above 1 marks stronger collaboration than country sizes
explain. Its base-2 log symmetrizes the scale around 0; pairs that never
collaborate get log-activity 0 by convention and are flagged as imputed so
displays can tell "as expected" from "no link".

Marginals R, Q and the total T always include diagonal cells; the same
convention is used everywhere in this package.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .coauthorship import CoMatrix, matrix_csv_text, parse_matrix_csv
from .errors import DomainError, ParseError
from .netmodel import WeightedNetwork

TRANSFORMS: dict[str, Callable[[float], float]] = {
    "sqrt": math.sqrt,
    "log2": math.log2,
}


@dataclass
class IndexMatrix:
    """Real-valued square matrix over country codes with absent cells.

    ``kind`` names how the values were derived (stochastic, jaccard,
    salton, expected, activity, log-activity, sqrt, log2). ``imputed``
    lists cells whose value is a convention rather than a measurement.
    """

    codes: tuple[str, ...]
    cells: dict[tuple[str, str], float]
    kind: str
    imputed: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    def __post_init__(self):
        self.codes = tuple(self.codes)
        code_set = set(self.codes)
        for a, b in self.cells:
            if a not in code_set or b not in code_set:
                raise ValueError(f"cell ({a!r},{b!r}) outside the code list")

    def get(self, a: str, b: str) -> float | None:
        return self.cells.get((a, b))

    def items(self) -> Iterator[tuple[str, str, float]]:
        for (a, b), v in sorted(self.cells.items()):
            yield a, b, v

    @property
    def n(self) -> int:
        return len(self.codes)

    def to_array(self, fill: float = np.nan) -> np.ndarray:
        out = np.full((self.n, self.n), fill, dtype=float)
        pos = {c: i for i, c in enumerate(self.codes)}
        for (a, b), v in self.cells.items():
            out[pos[a], pos[b]] = v
        return out

    def to_csv_text(self) -> str:
        return matrix_csv_text(self.codes, self.get)

    def to_csv(self, path, flags_path=None) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8", newline="")
        if flags_path is not None:
            flag = lambda a, b: 1 if (a, b) in self.imputed else None
            Path(flags_path).write_text(
                matrix_csv_text(self.codes, flag), encoding="utf-8", newline=""
            )

    @classmethod
    def from_csv(cls, path, kind: str = "index") -> "IndexMatrix":
        text = Path(path).read_text(encoding="utf-8")
        codes, values = parse_matrix_csv(text, source=str(path))
        return cls(codes, {k: float(v) for k, v in values.items()}, kind=kind)


def _transform_fn(fn: str) -> Callable[[float], float]:
    try:
        return TRANSFORMS[fn]
    except KeyError:
        raise ValueError(f"unknown transform {fn!r}; choose from {sorted(TRANSFORMS)}")


def transform_weights(obj, fn: str):
    """Apply an increasing weight transform; absent cells stay absent.

    Accepts a WeightedNetwork (returns one) or a CoMatrix/IndexMatrix
    (returns an IndexMatrix tagged with the transform name). ``log2``
    requires every present weight to be at least 1 so results stay
    non-negative; the offending link or cell is named otherwise.
    """
    f = _transform_fn(fn)
    if isinstance(obj, WeightedNetwork):
        links = []
        for (i, j), w in obj.links.items():
            if fn == "log2" and w < 1:
                raise DomainError(
                    f"log2 transform needs weights >= 1; link "
                    f"{obj.label(i)}-{obj.label(j)} has {w}"
                )
            nw = f(w)
            if nw <= 0 and fn == "log2" and w == 1:
                # log2(1) = 0 cannot be a link weight: the link vanishes
                continue
            links.append((i, j, nw))
        return WeightedNetwork(obj.labels, links, directed=obj.directed)
    cells = {}
    for (a, b), v in _cell_items(obj):
        if fn == "log2" and v < 1:
            raise DomainError(
                f"log2 transform needs values >= 1; cell ({a},{b}) has {v}"
            )
        cells[(a, b)] = f(v)
    return IndexMatrix(obj.codes, cells, kind=fn)


def _cell_items(matrix) -> Iterator[tuple[tuple[str, str], float]]:
    """Full symmetric iteration over present cells of either matrix kind."""
    if isinstance(matrix, CoMatrix):
        for a, b, v in matrix.items():
            yield (a, b), float(v)
            if a != b:
                yield (b, a), float(v)
    else:
        for (a, b), v in matrix.cells.items():
            yield (a, b), float(v)


def normalize(co: CoMatrix, method: str) -> IndexMatrix:
    """Stochastic, Jaccard, or Salton rescaling of present cells."""
    if method not in ("stochastic", "jaccard", "salton"):
        raise ValueError(f"unknown normalization {method!r}")
    cells: dict[tuple[str, str], float] = {}
    bad: list[str] = []
    for (a, b), v in _cell_items(co):
        if method == "stochastic":
            den = co.R(a)
        elif method == "jaccard":
            caa, cbb = co.get(a, a), co.get(b, b)
            if caa is None or cbb is None:
                bad.append(f"({a},{b}): missing diagonal")
                continue
            den = caa + cbb - v
        else:
            caa, cbb = co.get(a, a), co.get(b, b)
            if caa is None or cbb is None:
                bad.append(f"({a},{b}): missing diagonal")
                continue
            den = math.sqrt(caa * cbb)
        if den <= 0:
            bad.append(f"({a},{b}): zero denominator")
            continue
        cells[(a, b)] = v / den
    if bad:
        raise DomainError(f"{method} normalization undefined for {', '.join(bad)}")
    return IndexMatrix(co.codes, cells, kind=method)


def expected_matrix(co: CoMatrix) -> IndexMatrix:
    """Expected weight R(a)*Q(b)/T for every cell, observed or not."""
    if co.T <= 0:
        raise DomainError("expected weights need a positive total weight")
    cells = {
        (a, b): co.R(a) * co.Q(b) / co.T
        for a in co.codes
        for b in co.codes
    }
    return IndexMatrix(co.codes, cells, kind="expected")


def activity_index(co: CoMatrix) -> IndexMatrix:
    """Observed over expected weight on present cells with positive counts."""
    if co.T <= 0:
        raise DomainError("activity index needs a positive total weight")
    cells: dict[tuple[str, str], float] = {}
    bad: list[str] = []
    for (a, b), v in _cell_items(co):
        if v == 0:
            continue  # a zero count behaves like a missing link downstream
        ra, qb = co.R(a), co.Q(b)
        if ra <= 0 or qb <= 0:
            bad.append(f"({a},{b}): zero marginal")
            continue
        cells[(a, b)] = v * co.T / (ra * qb)
    if bad:
        raise DomainError(f"activity index undefined for {', '.join(bad)}")
    return IndexMatrix(co.codes, cells, kind="activity")


def log_activity(activity: IndexMatrix) -> IndexMatrix:
    """Base-2 log of the activity index, dense over all code pairs.

    Cells without an activity value (no observed collaboration) become 0
    and are flagged imputed, so a stored 0 can mean either "exactly as
    expected" (not flagged) or "no link" (flagged).
    """
    if activity.kind != "activity":
        raise ValueError(f"expected an activity matrix, got kind={activity.kind!r}")
    cells: dict[tuple[str, str], float] = {}
    imputed = set()
    for a in activity.codes:
        for b in activity.codes:
            v = activity.get(a, b)
            if v is None or v <= 0:
                cells[(a, b)] = 0.0
                imputed.add((a, b))
            else:
                cells[(a, b)] = math.log2(v)
    return IndexMatrix(
        activity.codes, cells, kind="log-activity", imputed=frozenset(imputed)
    )
