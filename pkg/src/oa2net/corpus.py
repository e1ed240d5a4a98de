"""Iterative growth of a work set along incoming citations.

Starting from a seed list, each round fetches the seed works, builds their
citation network including cited-but-unfetched works, ranks those outside
works by how many seed works cite them, and adds every work at or above a
chosen in-degree threshold to the list. The list grows monotonically and
the rounds stop once nothing new qualifies. Some corpora (e.g. everything
by one institution) don't need this phase at all; the direct path just
fetches a filter's results.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .collection import build_citation
from .errors import ParseError
from .netmodel import WeightedNetwork
from .openalex import WORK_ID_RE, WorkRecord, WorksFilter

ID_BATCH = 50  # the API caps OR-joined filter values at 50


def load_work_list(path) -> list[str]:
    """One work id per line; order kept, duplicates collapsed."""
    ids: list[str] = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            wid = line.strip()
            if not wid:
                continue
            if not WORK_ID_RE.match(wid):
                raise ParseError(f"not a work id: {wid!r}", source=str(path),
                                 line=lineno)
            if wid not in seen:
                seen.add(wid)
                ids.append(wid)
    return ids


def save_work_list(ids: Sequence[str], path) -> None:
    Path(path).write_text("\n".join(ids) + ("\n" if ids else ""), encoding="utf-8")


@dataclass(frozen=True)
class ExpansionRow:
    work_id: str
    indegree: int


@dataclass(frozen=True)
class ExpansionTable:
    """Outside works ranked by citations received from the known set."""

    rows: tuple[ExpansionRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["work_id", "indegree"])
        for row in self.rows:
            writer.writerow([row.work_id, row.indegree])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8", newline="")


def expansion_candidates(
    cite: WeightedNetwork, known: Iterable[str]
) -> ExpansionTable:
    """Rank works outside ``known`` by in-degree from inside ``known``.

    Only arcs whose source is a known work count; zero-in-degree works are
    omitted. Rows sort by descending in-degree, then ascending id.
    """
    known_set = set(known)
    labels = cite.labels
    indeg: dict[str, int] = {}
    for (i, j) in cite.links:
        src, dst = labels[i - 1], labels[j - 1]
        if src in known_set and dst not in known_set:
            indeg[dst] = indeg.get(dst, 0) + 1
    rows = sorted(indeg.items(), key=lambda kv: (-kv[1], kv[0]))
    return ExpansionTable(rows=tuple(ExpansionRow(w, d) for w, d in rows))


def apply_threshold(table: ExpansionTable, min_indegree: int) -> list[str]:
    """Ids of rows at or above the threshold, keeping table order."""
    if min_indegree < 1:
        raise ValueError(f"threshold must be at least 1, got {min_indegree}")
    return [row.work_id for row in table.rows if row.indegree >= min_indegree]


def join_lists(old: Sequence[str], new: Sequence[str]) -> list[str]:
    """Union keeping old order first, then unseen new ids in their order."""
    out = list(old)
    seen = set(out)
    for wid in new:
        if wid not in seen:
            seen.add(wid)
            out.append(wid)
    return out


def fetch_records(client, ids: Sequence[str]) -> tuple[list[WorkRecord], int]:
    """Fetch works by id in OR-batches; returns (records, skipped count)."""
    records: list[WorkRecord] = []
    skipped = 0
    for start in range(0, len(ids), ID_BATCH):
        batch = ids[start:start + ID_BATCH]
        flt = WorksFilter(filters=(("openalex", "|".join(batch)),))
        stream = client.fetch_works(flt)
        records.extend(stream)
        skipped += stream.skipped
    return records, skipped


@dataclass(frozen=True)
class SaturationStep:
    works: list[str]
    converged: bool
    table: ExpansionTable


def saturation_step(seed: Sequence[str], threshold: int, client) -> SaturationStep:
    """One expansion round: fetch, rank outside citations, join qualifiers."""
    if threshold < 1:
        raise ValueError(f"threshold must be at least 1, got {threshold}")
    records, _ = fetch_records(client, list(seed))
    cite = build_citation(records, boundary="cited")
    table = expansion_candidates(cite, seed)
    new_ids = apply_threshold(table, threshold)
    joined = join_lists(list(seed), new_ids)
    return SaturationStep(
        works=joined, converged=len(joined) == len(seed), table=table
    )


def saturate(
    seed: Sequence[str], threshold: int, client, max_rounds: int = 10
) -> tuple[list[str], int, SaturationStep]:
    """Run saturation rounds until converged or ``max_rounds`` is reached."""
    works = list(seed)
    last = None
    for round_no in range(1, max_rounds + 1):
        last = saturation_step(works, threshold, client)
        works = last.works
        if last.converged:
            return works, round_no, last
    return works, max_rounds, last
