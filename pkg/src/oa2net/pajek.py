"""Reader and writer for Pajek .net, .clu, and .vec files.

Output is byte-deterministic: LF line endings, UTF-8, labels always quoted
(embedded quotes doubled), link weights always written, links sorted by
node id. The reader accepts the subset this module writes plus CRLF input,
``%`` comment lines, unquoted single-token labels, and link lines with the
weight omitted (defaulting to 1, the Pajek convention).

A one-mode file may carry both ``*Arcs`` and ``*Edges`` sections (the
layout used when mutual arc pairs are merged into edges); it is read back
as a directed network with each edge expanded into its two arcs.
"""

from __future__ import annotations

import os
from typing import Sequence

from .errors import ParseError
from .netmodel import NodePartition, NodeVector, TwoModeNetwork, WeightedNetwork


def format_number(x: float) -> str:
    """Shortest decimal that round-trips; integral values print as integers."""
    x = float(x)
    if x.is_integer():
        return str(int(x))
    return repr(x)


def _quote(label: str) -> str:
    return '"' + label.replace('"', '""') + '"'


def _atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# writing


def network_to_text(net: WeightedNetwork | TwoModeNetwork) -> str:
    if isinstance(net, TwoModeNetwork):
        return _two_mode_text(net)
    return _one_mode_text(net)


def _one_mode_text(net: WeightedNetwork) -> str:
    lines = [f"*Vertices {net.n}"]
    if net.n == 0:
        return "\n".join(lines) + "\n"
    for i, lab in enumerate(net.labels, start=1):
        lines.append(f"{i} {_quote(lab)}")
    lines.append("*Arcs" if net.directed else "*Edges")
    for (i, j), w in sorted(net.links.items()):
        lines.append(f"{i} {j} {format_number(w)}")
    return "\n".join(lines) + "\n"


def _two_mode_text(net: TwoModeNetwork) -> str:
    n1, n2 = net.n_rows, net.n_cols
    lines = [f"*Vertices {n1 + n2} {n1}"]
    for i, lab in enumerate(net.row_labels, start=1):
        lines.append(f"{i} {_quote(lab)}")
    for j, lab in enumerate(net.col_labels, start=1):
        lines.append(f"{n1 + j} {_quote(lab)}")
    lines.append("*Edges")
    for (i, j), w in sorted(net.links.items()):
        lines.append(f"{i} {n1 + j} {format_number(w)}")
    return "\n".join(lines) + "\n"


def write_network(net: WeightedNetwork | TwoModeNetwork, path) -> None:
    _atomic_write(path, network_to_text(net))


def skeleton_to_text(net: WeightedNetwork, merge_mutual: bool = True) -> str:
    """Serialize a directed network, folding equal-weight mutual arc pairs.

    A pair a->b, b->a carrying the same weight is written once under
    ``*Edges``; the remaining arcs keep their ``*Arcs`` section. Reading
    the file back yields the original directed network.
    """
    if not net.directed:
        raise ValueError("skeleton serialization expects a directed network")
    if not merge_mutual:
        return network_to_text(net)
    arcs, edges = [], []
    links = net.links
    for (i, j), w in sorted(links.items()):
        back = links.get((j, i))
        if back is not None and back == w:
            if i < j:
                edges.append((i, j, w))
        else:
            arcs.append((i, j, w))
    lines = [f"*Vertices {net.n}"]
    for i, lab in enumerate(net.labels, start=1):
        lines.append(f"{i} {_quote(lab)}")
    lines.append("*Arcs")
    for i, j, w in arcs:
        lines.append(f"{i} {j} {format_number(w)}")
    lines.append("*Edges")
    for i, j, w in edges:
        lines.append(f"{i} {j} {format_number(w)}")
    return "\n".join(lines) + "\n"


def write_skeleton(net: WeightedNetwork, path, merge_mutual: bool = True) -> None:
    _atomic_write(path, skeleton_to_text(net, merge_mutual=merge_mutual))


def write_partition(values: Sequence[int] | NodePartition, path) -> None:
    if isinstance(values, NodePartition):
        values = values.values
    lines = ["*Partition", f"*Vertices {len(values)}"]
    lines.extend(str(int(v)) for v in values)
    _atomic_write(path, "\n".join(lines) + "\n")


def write_vector(values: Sequence[float] | NodeVector, path) -> None:
    if isinstance(values, NodeVector):
        values = values.values
    lines = ["*Vector", f"*Vertices {len(values)}"]
    lines.extend(format_number(v) for v in values)
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# reading


def _strip_lines(text: str):
    """Yield (lineno, content) skipping blanks and % comments; CRLF tolerated."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        yield lineno, line


def _parse_label(rest: str, path, lineno: int) -> str:
    rest = rest.strip()
    if not rest:
        raise ParseError("missing vertex label", source=path, line=lineno)
    if rest.startswith('"'):
        out = []
        k = 1
        while k < len(rest):
            ch = rest[k]
            if ch == '"':
                if k + 1 < len(rest) and rest[k + 1] == '"':
                    out.append('"')
                    k += 2
                    continue
                # closing quote; trailing Pajek attributes are ignored
                return "".join(out)
            out.append(ch)
            k += 1
        raise ParseError("unterminated quoted label", source=path, line=lineno)
    return rest.split()[0]


def _parse_link(line: str, path, lineno: int, n: int):
    parts = line.split()
    if len(parts) < 2:
        raise ParseError(f"malformed link line {line!r}", source=path, line=lineno)
    try:
        i, j = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(
            f"non-integer node id in link line {line!r}", source=path, line=lineno
        ) from None
    w = 1.0
    if len(parts) >= 3:
        try:
            w = float(parts[2])
        except ValueError:
            raise ParseError(
                f"non-numeric weight in link line {line!r}", source=path, line=lineno
            ) from None
    for x in (i, j):
        if not 1 <= x <= n:
            raise ParseError(
                f"link endpoint {x} outside 1..{n}", source=path, line=lineno
            )
    return i, j, w


def parse_network(text: str, path=None) -> WeightedNetwork | TwoModeNetwork:
    lines = list(_strip_lines(text))
    if not lines:
        raise ParseError("empty file", source=path)
    lineno, header = lines[0]
    parts = header.split()
    if parts[0].lower() != "*vertices":
        raise ParseError(
            f"expected *Vertices header, found {header!r}", source=path, line=lineno
        )
    try:
        n = int(parts[1])
        n1 = int(parts[2]) if len(parts) > 2 else None
    except (IndexError, ValueError):
        raise ParseError(
            f"malformed *Vertices header {header!r}", source=path, line=lineno
        ) from None
    if n < 0 or (n1 is not None and not 0 <= n1 <= n):
        raise ParseError(
            f"inconsistent vertex counts in {header!r}", source=path, line=lineno
        )

    labels: dict[int, str] = {}
    pos = 1
    while pos < len(lines) and not lines[pos][1].startswith("*"):
        lineno, line = lines[pos]
        parts = line.split(None, 1)
        try:
            idx = int(parts[0])
        except ValueError:
            raise ParseError(
                f"non-integer vertex id in {line!r}", source=path, line=lineno
            ) from None
        if not 1 <= idx <= n:
            raise ParseError(f"vertex id {idx} outside 1..{n}", source=path, line=lineno)
        if idx in labels:
            raise ParseError(f"vertex {idx} defined twice", source=path, line=lineno)
        labels[idx] = _parse_label(parts[1] if len(parts) > 1 else "", path, lineno)
        pos += 1
    if len(labels) != n:
        raise ParseError(
            f"header declares {n} vertices but {len(labels)} are listed",
            source=path,
            line=lines[pos][0] if pos < len(lines) else lines[-1][0],
        )
    label_list = [labels[i] for i in range(1, n + 1)]

    arcs: list[tuple[int, int, float]] = []
    edges: list[tuple[int, int, float]] = []
    saw_arcs = False
    section = None
    while pos < len(lines):
        lineno, line = lines[pos]
        if line.startswith("*"):
            word = line.split()[0].lower()
            if word == "*arcs":
                section = arcs
                saw_arcs = True
            elif word == "*edges":
                section = edges
            else:
                raise ParseError(
                    f"unsupported section {line!r}", source=path, line=lineno
                )
            pos += 1
            continue
        if section is None:
            raise ParseError(
                f"link line before a section header: {line!r}",
                source=path,
                line=lineno,
            )
        section.append(_parse_link(line, path, lineno, n))
        pos += 1

    if n1 is not None:
        return _assemble_two_mode(label_list, n1, arcs + edges, path)
    return _assemble_one_mode(label_list, arcs, edges, saw_arcs, path)


def _assemble_one_mode(labels, arcs, edges, saw_arcs, path) -> WeightedNetwork:
    if saw_arcs:
        links: dict[tuple[int, int], float] = {}
        for i, j, w in arcs:
            if (i, j) in links:
                raise ParseError(f"duplicate arc {i}->{j}", source=path)
            links[(i, j)] = w
        for i, j, w in edges:
            for key in ((i, j), (j, i)) if i != j else ((i, j),):
                if key in links:
                    raise ParseError(
                        f"edge {i}-{j} duplicates an arc", source=path
                    )
                links[key] = w
        return WeightedNetwork(labels, [(i, j, w) for (i, j), w in links.items()],
                               directed=True)
    seen: dict[tuple[int, int], float] = {}
    for i, j, w in edges:
        key = (i, j) if i <= j else (j, i)
        if key in seen:
            raise ParseError(f"duplicate edge {i}-{j}", source=path)
        seen[key] = w
    return WeightedNetwork(labels, [(i, j, w) for (i, j), w in seen.items()],
                           directed=False)


def _assemble_two_mode(labels, n1, raw_links, path) -> TwoModeNetwork:
    rows, cols = labels[:n1], labels[n1:]
    links = []
    seen = set()
    for i, j, w in raw_links:
        if i > n1 >= j:
            i, j = j, i
        if not (i <= n1 < j):
            raise ParseError(
                f"two-mode link ({i},{j}) does not join the two modes", source=path
            )
        key = (i, j - n1)
        if key in seen:
            raise ParseError(f"duplicate two-mode link ({i},{j})", source=path)
        seen.add(key)
        links.append((i, j - n1, w))
    return TwoModeNetwork(rows, cols, links)


def read_network(path) -> WeightedNetwork | TwoModeNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_network(fh.read(), path=str(path))


def _read_value_lines(path, header: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = list(_strip_lines(fh.read()))
    if lines and lines[0][1].split()[0].lower() == header:
        lines = lines[1:]
    if not lines:
        raise ParseError("missing *Vertices header", source=str(path))
    lineno, head = lines[0]
    parts = head.split()
    if parts[0].lower() != "*vertices":
        raise ParseError(
            f"expected *Vertices header, found {head!r}", source=str(path), line=lineno
        )
    try:
        n = int(parts[1])
    except (IndexError, ValueError):
        raise ParseError(
            f"malformed *Vertices header {head!r}", source=str(path), line=lineno
        ) from None
    values = [line for _, line in lines[1:]]
    if len(values) != n:
        raise ParseError(
            f"header declares {n} values but {len(values)} are listed",
            source=str(path),
        )
    return values


def read_partition(path) -> list[int]:
    try:
        return [int(v) for v in _read_value_lines(path, "*partition")]
    except ValueError as exc:
        raise ParseError(f"non-integer class value: {exc}", source=str(path)) from None


def read_vector(path) -> list[float]:
    try:
        return [float(v) for v in _read_value_lines(path, "*vector")]
    except ValueError as exc:
        raise ParseError(f"non-numeric value: {exc}", source=str(path)) from None
