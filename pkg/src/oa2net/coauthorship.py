"""Country-by-country co-authorship matrices.

A work contributes when authors from at least two different countries
appear on it. For such a work every unordered country pair on it increments
the off-diagonal cell once, and each of its countries increments its own
diagonal cell once, so the diagonal counts internationally co-authored
works per country. Cells for country pairs that never co-author are absent
(not zero), and absence survives CSV round trips as an empty field.

Matrices can also be assembled from per-country grouped query responses.
Those responses are capped at 200 entries by the API, so the assembler
fills gaps from the mirror entry on the other side; the data is symmetric,
which makes the repair exact whenever at least one side survived the cap.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .countries import ALL_CODES, is_country_code
from .errors import DomainError, ParseError, TransportError
from .netmodel import WeightedNetwork
from .openalex import WorksFilter
from .pajek import format_number


class CoMatrixConsistencyWarning(UserWarning):
    """Two grouped responses disagree on the same cell value."""


def _canon(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class CoMatrix:
    """Symmetric country co-authorship counts with explicit absent cells."""

    def __init__(self, codes: Sequence[str], cells: Mapping[tuple[str, str], int]):
        codes = tuple(codes)
        if len(set(codes)) != len(codes):
            raise ValueError("duplicate country codes")
        for c in codes:
            if not is_country_code(c):
                raise ValueError(f"invalid country code {c!r}")
        code_set = set(codes)
        store: dict[tuple[str, str], int] = {}
        for (a, b), v in cells.items():
            if a not in code_set or b not in code_set:
                raise ValueError(f"cell ({a!r},{b!r}) outside the code list")
            v = int(v)
            if v < 0:
                raise ValueError(f"negative count for cell ({a},{b})")
            key = _canon(a, b)
            if key in store and store[key] != v:
                raise ValueError(f"asymmetric values for cell ({a},{b})")
            store[key] = v
        self.codes = codes
        self._cells = store
        self._check_bounds()
        marg = {c: 0 for c in codes}
        for (a, b), v in store.items():
            marg[a] += v
            if a != b:
                marg[b] += v
        self._marginals = marg
        self.T = sum(marg.values())

    def _check_bounds(self):
        for (a, b), v in self._cells.items():
            if a == b:
                continue
            for d in (a, b):
                diag = self._cells.get((d, d))
                if diag is not None and v > diag:
                    raise ValueError(
                        f"cell ({a},{b})={v} exceeds diagonal ({d},{d})={diag}"
                    )

    # -- access ------------------------------------------------------------

    def get(self, a: str, b: str) -> int | None:
        for c in (a, b):
            if c not in self._marginals:
                raise KeyError(f"unknown country code {c!r}")
        return self._cells.get(_canon(a, b))

    def items(self) -> Iterator[tuple[str, str, int]]:
        """Present cells once each, as (a, b, count) with a <= b."""
        for (a, b), v in sorted(self._cells.items()):
            yield a, b, v

    def off_diagonal_items(self) -> Iterator[tuple[str, str, int]]:
        for a, b, v in self.items():
            if a != b:
                yield a, b, v

    def R(self, a: str) -> int:
        """Row sum over present cells, diagonal included."""
        try:
            return self._marginals[a]
        except KeyError:
            raise KeyError(f"unknown country code {a!r}") from None

    def Q(self, a: str) -> int:
        """Column sum; equals R(a) because the matrix is symmetric."""
        return self.R(a)

    @property
    def n(self) -> int:
        return len(self.codes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoMatrix):
            return NotImplemented
        return self.codes == other.codes and self._cells == other._cells

    def __repr__(self) -> str:
        return f"<CoMatrix {self.n} countries, {len(self._cells)} cells, T={self.T}>"

    def to_array(self, fill: float = np.nan) -> np.ndarray:
        out = np.full((self.n, self.n), fill, dtype=float)
        pos = {c: i for i, c in enumerate(self.codes)}
        for a, b, v in self.items():
            i, j = pos[a], pos[b]
            out[i, j] = v
            out[j, i] = v
        return out

    # -- derived matrices ----------------------------------------------------

    def submatrix(self, keep: Iterable[str]) -> "CoMatrix":
        kept = [c for c in self.codes if c in set(keep)]
        kept_set = set(kept)
        cells = {
            (a, b): v
            for (a, b), v in self._cells.items()
            if a in kept_set and b in kept_set
        }
        return CoMatrix(kept, cells)

    def without_isolates(self) -> "CoMatrix":
        """Drop countries that have no present off-diagonal cell."""
        linked = set()
        for a, b, _ in self.off_diagonal_items():
            linked.add(a)
            linked.add(b)
        return self.submatrix(linked)

    # -- CSV ----------------------------------------------------------------

    def to_csv_text(self) -> str:
        return matrix_csv_text(self.codes, self.get)

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8", newline="")

    @classmethod
    def from_csv_text(cls, text: str, source=None) -> "CoMatrix":
        codes, values = parse_matrix_csv(text, source=source)
        cells = {}
        for (a, b), raw in values.items():
            try:
                v = int(raw)
            except ValueError:
                raise ParseError(
                    f"non-integer count {raw!r} in cell ({a},{b})", source=source
                ) from None
            cells[(a, b)] = v
        try:
            return cls(codes, cells)
        except ValueError as exc:
            raise ParseError(str(exc), source=source) from None

    @classmethod
    def from_csv(cls, path) -> "CoMatrix":
        return cls.from_csv_text(
            Path(path).read_text(encoding="utf-8"), source=str(path)
        )


# ---------------------------------------------------------------------------
# shared CSV layout: header row of codes, row label first, absent cells empty


def matrix_csv_text(codes: Sequence[str], get) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + list(codes))
    for a in codes:
        row = [a]
        for b in codes:
            v = get(a, b)
            row.append("" if v is None else format_number(v))
        writer.writerow(row)
    return buf.getvalue()


def parse_matrix_csv(text: str, source=None):
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError("empty matrix CSV", source=source)
    codes = tuple(rows[0][1:])
    if len(rows) != len(codes) + 1:
        raise ParseError(
            f"matrix CSV has {len(rows) - 1} rows for {len(codes)} columns",
            source=source,
        )
    values: dict[tuple[str, str], str] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(codes) + 1:
            raise ParseError(
                f"row has {len(row) - 1} cells, expected {len(codes)}",
                source=source,
                line=lineno,
            )
        a = row[0]
        if a != codes[lineno - 2]:
            raise ParseError(
                f"row label {a!r} does not match column {codes[lineno - 2]!r}",
                source=source,
                line=lineno,
            )
        for b, cell in zip(codes, row[1:]):
            if cell != "":
                values[(a, b)] = cell
    for (a, b), v in list(values.items()):
        mirror = values.get((b, a))
        if mirror is None or float(mirror) != float(v):
            raise ParseError(
                f"matrix CSV is not symmetric at ({a},{b})", source=source
            )
    return codes, values


# ---------------------------------------------------------------------------
# building from works


def countries_of_work(record, invalid=None) -> frozenset[str]:
    """Distinct valid country codes on a work; bad codes are dropped.

    ``invalid`` may be a Counter-like mapping used to tally dropped codes.
    """
    out = set()
    for raw in record.countries:
        code = str(raw).strip().upper()
        if is_country_code(code):
            out.add(code)
        elif invalid is not None:
            invalid[code] = invalid.get(code, 0) + 1
    return frozenset(out)


def co_matrix_from_works(works: Iterable, invalid=None) -> CoMatrix:
    """Count country pair co-occurrences over internationally co-authored works."""
    diag: dict[str, int] = {}
    off: dict[tuple[str, str], int] = {}
    for record in works:
        codes = countries_of_work(record, invalid=invalid)
        if len(codes) < 2:
            continue
        ordered = sorted(codes)
        for i, a in enumerate(ordered):
            diag[a] = diag.get(a, 0) + 1
            for b in ordered[i + 1:]:
                key = (a, b)
                off[key] = off.get(key, 0) + 1
    cells: dict[tuple[str, str], int] = {(a, a): v for a, v in diag.items()}
    cells.update(off)
    return CoMatrix(sorted(diag), cells)


# ---------------------------------------------------------------------------
# building from grouped query responses


def _as_pairs(groups) -> list[tuple[str, int]]:
    pairs = []
    for g in groups:
        if hasattr(g, "key"):
            pairs.append((str(g.key), int(g.count)))
        else:
            k, v = g
            pairs.append((str(k), int(v)))
    return pairs


def co_matrix_from_groupby(
    responses: Mapping[str, Iterable], invalid=None
) -> CoMatrix:
    """Assemble a symmetric matrix from per-country grouped responses.

    ``responses`` maps each queried country to its group counts (GroupCount
    objects or plain (key, count) pairs). A cell missing on one side is
    filled from the other; when both sides are present but disagree the
    larger value wins — disagreement means one side was truncated — and a
    CoMatrixConsistencyWarning is emitted. Invalid focal codes and invalid
    keys are dropped (tallied into ``invalid`` when given).
    """
    view: dict[str, dict[str, int]] = {}
    for focal, groups in responses.items():
        focal_code = str(focal).strip().upper()
        if not is_country_code(focal_code):
            if invalid is not None:
                invalid[focal_code] = invalid.get(focal_code, 0) + 1
            continue
        row: dict[str, int] = {}
        for key, count in _as_pairs(groups):
            code = key.strip().upper()
            if not is_country_code(code):
                if invalid is not None:
                    invalid[code] = invalid.get(code, 0) + 1
                continue
            if count < 0:
                raise ValueError(f"negative count for ({focal_code},{code})")
            if code in row:
                raise ValueError(
                    f"duplicate key {code!r} in response for {focal_code}"
                )
            row[code] = count
        view[focal_code] = row

    codes = set(view)
    for row in view.values():
        codes.update(row)
    cells: dict[tuple[str, str], int] = {}
    for a in sorted(codes):
        row = view.get(a, {})
        for b, v in row.items():
            key = _canon(a, b)
            prior = cells.get(key)
            if prior is None:
                cells[key] = v
            elif prior != v:
                warnings.warn(
                    f"cell ({key[0]},{key[1]}) reported as both {prior} and {v}; "
                    "keeping the larger value",
                    CoMatrixConsistencyWarning,
                    stacklevel=2,
                )
                cells[key] = max(prior, v)
    # drop codes that ended up with no cells at all (e.g. empty responses)
    touched = set()
    for a, b in cells:
        touched.add(a)
        touched.add(b)
    return CoMatrix(sorted(touched), cells)


# ---------------------------------------------------------------------------
# temporal assembly


def group_by_filter(country: str, year: int | None = None) -> WorksFilter:
    """The canonical per-country (optionally per-year) grouped query."""
    filters: list[tuple[str, str]] = [("authorships.countries", country)]
    if year is not None:
        filters.append(("publication_year", str(year)))
    return WorksFilter(filters=tuple(filters), group_by="authorships.countries")


@dataclass
class TemporalCoSeries:
    """Year-indexed co-authorship matrices over a contiguous range."""

    year_from: int
    year_to: int
    matrices: dict[int, CoMatrix] = field(default_factory=dict)
    failures: dict[int, str] = field(default_factory=dict)

    def years(self) -> range:
        return range(self.year_from, self.year_to + 1)

    def get(self, year: int) -> CoMatrix | None:
        return self.matrices.get(year)

    def save(self, directory) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for year in self.years():
            m = self.matrices.get(year)
            if m is None:
                continue
            path = directory / f"co_{year}.csv"
            m.to_csv(path)
            paths.append(path)
        return paths


def yearly_series(
    year_from: int,
    year_to: int,
    client,
    countries: Sequence[str] | None = None,
    keep_isolates: bool = False,
) -> TemporalCoSeries:
    """Query one grouped response per country per year and assemble matrices.

    A transport or parse failure marks that year failed and the remaining
    years still run. Countries with no international co-authorship in a
    year are omitted from that year's matrix unless ``keep_isolates``.
    """
    if year_from > year_to:
        raise ValueError(f"year range {year_from}..{year_to} is empty")
    scope = tuple(countries) if countries is not None else ALL_CODES
    series = TemporalCoSeries(year_from=year_from, year_to=year_to)
    for year in range(year_from, year_to + 1):
        responses: dict[str, tuple] = {}
        try:
            for country in scope:
                result = client.fetch_group_counts(group_by_filter(country, year))
                if result.groups:
                    responses[country] = result.groups
        except (TransportError, ParseError) as exc:
            series.failures[year] = str(exc)
            continue
        matrix = co_matrix_from_groupby(responses)
        if not keep_isolates:
            matrix = matrix.without_isolates()
        series.matrices[year] = matrix
    return series


# ---------------------------------------------------------------------------
# bridge to networks


def matrix_to_network(
    matrix,
    include_loops: bool = False,
    universe: Sequence[str] | None = None,
) -> WeightedNetwork:
    """Undirected network with one edge per present off-diagonal cell.

    Works for count and index matrices alike (anything with ``codes`` and
    ``get``). Cells that are not positive cannot be edge weights and are
    skipped. ``universe`` appends extra codes as isolated nodes, which
    restores countries dropped for having no partners.
    """
    labels = list(matrix.codes)
    if universe is not None:
        have = set(labels)
        labels.extend(c for c in universe if c not in have)
    index = {c: i + 1 for i, c in enumerate(labels)}
    links = []
    codes = matrix.codes
    for i, a in enumerate(codes):
        for b in codes[i:]:
            if a == b and not include_loops:
                continue
            v = matrix.get(a, b)
            if v is not None and v > 0:
                links.append((index[a], index[b], float(v)))
    return WeightedNetwork(labels, links, directed=False)
