"""Assemble the full network collection for a set of works.

The collection holds a directed citation network plus four two-mode layers
(works against authors, sources, keywords, and countries) and per-work
property vectors and partitions. Every component shares one work label
list in one order, so Pajek can combine them freely.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import pajek
from .netmodel import NodePartition, NodeVector, TwoModeNetwork, WeightedNetwork
from .openalex import WorkRecord

TWO_MODE_LAYERS = ("authors", "sources", "keywords", "countries")


def _check_unique_ids(works: Sequence[WorkRecord]) -> None:
    seen = set()
    for w in works:
        if w.id in seen:
            raise ValueError(f"duplicate work id {w.id}")
        seen.add(w.id)


def build_citation(
    works: Sequence[WorkRecord], boundary: str = "internal"
) -> WeightedNetwork:
    """Directed citation network, one unit arc per citing-cited pair.

    ``boundary="internal"`` keeps only arcs between input works;
    ``boundary="cited"`` also adds cited-only works as terminal nodes, in
    first-appearance order after the input works.
    """
    if boundary not in ("internal", "cited"):
        raise ValueError(f"boundary must be 'internal' or 'cited', got {boundary!r}")
    _check_unique_ids(works)
    labels = [w.id for w in works]
    inside = set(labels)
    if boundary == "cited":
        for w in works:
            for ref in w.referenced_works:
                if ref not in inside:
                    inside.add(ref)
                    labels.append(ref)
    index = {lab: i + 1 for i, lab in enumerate(labels)}
    arcs = set()
    for w in works:
        for ref in w.referenced_works:
            if ref in index:
                arcs.add((index[w.id], index[ref]))
    return WeightedNetwork(labels, [(i, j, 1.0) for i, j in sorted(arcs)],
                           directed=True)


def boundary_partition(cite: WeightedNetwork,
                       works: Sequence[WorkRecord]) -> NodePartition:
    """Class 1 for input works, class 2 for cited-only boundary nodes."""
    inside = {w.id for w in works}
    values = tuple(1 if lab in inside else 2 for lab in cite.labels)
    return NodePartition(values=values, legend={1: "work", 2: "cited only"})


def _layer_values(work: WorkRecord, layer: str) -> list[str]:
    if layer == "authors":
        return list(work.author_ids)
    if layer == "sources":
        return [work.source_id] if work.source_id else []
    if layer == "keywords":
        return list(work.keywords)
    if layer == "countries":
        return list(work.countries)
    raise ValueError(f"unknown layer {layer!r}; choose from {TWO_MODE_LAYERS}")


def build_two_mode(works: Sequence[WorkRecord], layer: str) -> TwoModeNetwork:
    """Works against one attribute layer; weights carry multiplicity.

    A work with the same country (or author, ...) listed twice gets weight
    2 on that link, so projections can choose between binary and weighted.
    """
    _check_unique_ids(works)
    row_labels = [w.id for w in works]
    col_labels: list[str] = []
    col_index: dict[str, int] = {}
    links = []
    for i, w in enumerate(works, start=1):
        counts: dict[str, int] = {}
        for value in _layer_values(w, layer):
            counts[value] = counts.get(value, 0) + 1
        for value, mult in counts.items():
            if value not in col_index:
                col_labels.append(value)
                col_index[value] = len(col_labels)
            links.append((i, col_index[value], float(mult)))
    return TwoModeNetwork(row_labels, col_labels, links)


def build_vectors(works: Sequence[WorkRecord]):
    """Per-work property vectors and partitions, aligned to input order.

    Missing years become 0; missing types/languages get the sentinel class
    0 named "unknown" in the legend; a missing distinct-country count falls
    back to the number of distinct codes on the work.
    """
    _check_unique_ids(works)
    year = []
    cited = []
    distinct = []
    referenced = []
    type_values, type_legend, type_ids = [], {0: "unknown"}, {}
    lang_values, lang_legend, lang_ids = [], {0: "unknown"}, {}
    for w in works:
        year.append(float(w.publication_year or 0))
        cited.append(float(w.cited_by_count))
        if w.countries_distinct_count is not None:
            distinct.append(float(w.countries_distinct_count))
        else:
            distinct.append(float(len(set(w.countries))))
        referenced.append(float(len(w.referenced_works)))
        for raw, values, ids, legend in (
            (w.type, type_values, type_ids, type_legend),
            (w.language, lang_values, lang_ids, lang_legend),
        ):
            if raw is None:
                values.append(0)
            else:
                if raw not in ids:
                    ids[raw] = len(ids) + 1
                    legend[ids[raw]] = raw
                values.append(ids[raw])
    return (
        NodeVector(tuple(year)),
        NodeVector(tuple(cited)),
        NodeVector(tuple(distinct)),
        NodeVector(tuple(referenced)),
        NodePartition(tuple(type_values), legend=type_legend),
        NodePartition(tuple(lang_values), legend=lang_legend),
    )


@dataclass(frozen=True)
class NetworkCollection:
    cite: WeightedNetwork
    wa: TwoModeNetwork
    wj: TwoModeNetwork
    wk: TwoModeNetwork
    wc: TwoModeNetwork
    year: NodeVector
    cited: NodeVector
    distinct: NodeVector
    referenced: NodeVector
    work_type: NodePartition
    language: NodePartition


def build_collection(works: Sequence[WorkRecord]) -> NetworkCollection:
    year, cited, distinct, referenced, work_type, language = build_vectors(works)
    return NetworkCollection(
        cite=build_citation(works, boundary="internal"),
        wa=build_two_mode(works, "authors"),
        wj=build_two_mode(works, "sources"),
        wk=build_two_mode(works, "keywords"),
        wc=build_two_mode(works, "countries"),
        year=year,
        cited=cited,
        distinct=distinct,
        referenced=referenced,
        work_type=work_type,
        language=language,
    )


def _write_legend(legend: dict[int, str], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class", "label"])
        for cls in sorted(legend):
            writer.writerow([cls, legend[cls]])


def write_collection(coll: NetworkCollection, directory) -> list[Path]:
    """Emit the collection under its conventional file names."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, writer, obj):
        path = directory / name
        writer(obj, path)
        written.append(path)

    emit("Cite.net", pajek.write_network, coll.cite)
    emit("WA.net", pajek.write_network, coll.wa)
    emit("WJ.net", pajek.write_network, coll.wj)
    emit("WK.net", pajek.write_network, coll.wk)
    emit("WC.net", pajek.write_network, coll.wc)
    emit("year.vec", pajek.write_vector, coll.year)
    emit("cited.vec", pajek.write_vector, coll.cited)
    emit("distinct.vec", pajek.write_vector, coll.distinct)
    emit("referenced.vec", pajek.write_vector, coll.referenced)
    emit("type.clu", pajek.write_partition, coll.work_type)
    emit("language.clu", pajek.write_partition, coll.language)
    _write_legend(coll.work_type.legend, directory / "type.legend.csv")
    written.append(directory / "type.legend.csv")
    _write_legend(coll.language.legend, directory / "language.legend.csv")
    written.append(directory / "language.legend.csv")
    return written
