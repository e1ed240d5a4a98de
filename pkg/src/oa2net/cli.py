"""Command line pipeline: fetch, build, analyze, export.

Every stage reads plain files written by earlier stages and writes its own
artifacts plus a ``<command>.manifest`` recording the configuration, so a
rerun with unchanged inputs reproduces outputs byte for byte. Exit codes:
0 success, 2 usage, 3 transport, 4 data/parse, 5 domain error.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import __version__, pajek
from .coauthorship import (
    CoMatrix,
    co_matrix_from_works,
    matrix_to_network,
    yearly_series,
)
from .clustering import agglomerate, corrected_euclidean, ordered_matrix_export, prepare_matrix
from .collection import boundary_partition, build_citation, build_collection, write_collection
from .corpus import fetch_records, load_work_list, saturate, save_work_list
from .countries import ALL_CODES, is_country_code
from .errors import DomainError, StageError, ToolError
from .normalization import activity_index, expected_matrix, log_activity, normalize, transform_weights
from .openalex import (
    DEFAULT_BASE_URL,
    OpenAlexClient,
    ResponseCache,
    WorksFilter,
    load_works_jsonl,
    save_works_jsonl,
)
from .reduction import k_neighbor_skeleton, link_cut, mutual_pairs_csv_text, weighted_degree_cores


class _NoNetworkSession:
    """Transport stand-in that refuses every request."""

    def get(self, url, **kwargs):
        from .errors import TransportError

        raise TransportError(f"network access disabled (--cache-only): {url}")


@dataclass
class RunConfig:
    out_dir: Path
    cache_dir: Path | None
    mailto: str | None
    rate_limit: float
    base_url: str
    cache_only: bool

    def client(self) -> OpenAlexClient:
        cache = ResponseCache(self.cache_dir) if self.cache_dir else None
        if self.cache_only and cache is None:
            raise click.UsageError("--cache-only requires --cache-dir (or OA2NET_CACHE)")
        return OpenAlexClient(
            base_url=self.base_url,
            mailto=self.mailto,
            rate_limit=self.rate_limit,
            cache=cache,
            offline=self.cache_only,
            session=_NoNetworkSession() if self.cache_only else None,
        )

    def resolve_input(self, name: str, produced_by: str) -> Path:
        """Find a stage input, trying the path as given then under out-dir."""
        p = Path(name)
        if p.exists():
            return p
        candidate = self.out_dir / name
        if candidate.exists():
            return candidate
        raise StageError(
            f"missing input {name!r}; run `oa2net {produced_by}` first"
        )

    def out_path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write_manifest(self, command: str, entries: dict) -> None:
        lines = [f"command = {command}", f"version = {__version__}"]
        for key in sorted(entries):
            lines.append(f"{key} = {entries[key]}")
        self.out_path(f"{command}.manifest").write_text(
            "\n".join(lines) + "\n", encoding="utf-8"
        )


def stage(fn):
    """Map library errors to exit codes with a machine-readable summary."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ToolError as exc:
            _fail(exc, exc.exit_code)
        except ValueError as exc:
            _fail(exc, DomainError.exit_code)

    return wrapper


def _fail(exc, code):
    click.echo(
        json.dumps({"error": type(exc).__name__, "message": str(exc)}), err=True
    )
    sys.exit(code)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__)
@click.option("--out-dir", default=".", show_default=True,
              type=click.Path(file_okay=False, path_type=Path),
              help="Directory stage outputs are written to.")
@click.option("--cache-dir", envvar="OA2NET_CACHE", default=None,
              type=click.Path(file_okay=False, path_type=Path),
              help="HTTP response cache directory.")
@click.option("--mailto", envvar="OA2NET_MAILTO", default=None,
              help="Contact email attached to API requests.")
@click.option("--rate-limit", default=8.0, show_default=True,
              type=click.FloatRange(min=0.01),
              help="Maximum API requests per second.")
@click.option("--base-url", envvar="OA2NET_BASE_URL", default=DEFAULT_BASE_URL,
              show_default=True, help="API root, overridable for test doubles.")
@click.option("--cache-only", is_flag=True,
              help="Serve everything from the cache; never touch the network.")
@click.pass_context
def main(ctx, out_dir, cache_dir, mailto, rate_limit, base_url, cache_only):
    ctx.obj = RunConfig(
        out_dir=out_dir,
        cache_dir=cache_dir,
        mailto=mailto,
        rate_limit=rate_limit,
        base_url=base_url,
        cache_only=cache_only,
    )


def _parse_filters(raw: tuple[str, ...]) -> tuple[tuple[str, str], ...]:
    pairs = []
    for item in raw:
        field, sep, value = item.partition(":")
        if not sep or not field:
            raise click.UsageError(f"filter {item!r} is not FIELD:VALUE")
        pairs.append((field, value))
    return tuple(pairs)


def _parse_country_scope(raw: str | None):
    if raw is None:
        return None
    codes = [c.strip().upper() for c in raw.split(",") if c.strip()]
    for c in codes:
        if not is_country_code(c):
            raise click.UsageError(f"unknown country code {c!r}")
    if not codes:
        raise click.UsageError("--countries given but empty")
    return codes


@main.command("fetch-works")
@click.option("--filter", "filters", multiple=True, required=True,
              metavar="FIELD:VALUE", help="Conjunctive works filter, repeatable.")
@click.option("--limit", type=click.IntRange(min=0), default=None,
              help="Stop after this many records.")
@click.option("--out", "out_name", default="works.jsonl", show_default=True)
@click.pass_obj
@stage
def fetch_works_cmd(cfg: RunConfig, filters, limit, out_name):
    """Download works matching the filters into a JSONL file."""
    flt = WorksFilter(filters=_parse_filters(filters))
    stream = cfg.client().fetch_works(flt, limit=limit)
    records = list(stream)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    save_works_jsonl(records, cfg.out_path(out_name))
    cfg.write_manifest("fetch-works", {
        "filters": ";".join(f"{k}:{v}" for k, v in flt.filters),
        "limit": "" if limit is None else limit,
        "records": len(records),
        "skipped": stream.skipped,
        "out": out_name,
    })
    click.echo(f"wrote {len(records)} works ({stream.skipped} skipped) to {out_name}")


@main.command("saturate")
@click.option("--seed", "seed_name", required=True,
              help="Text file with one work id per line.")
@click.option("--threshold", type=click.IntRange(min=1), required=True,
              help="Minimum citations from the current list to qualify.")
@click.option("--max-rounds", type=click.IntRange(min=1), default=10,
              show_default=True)
@click.option("--print-table", is_flag=True,
              help="Print the final expansion table for manual inspection.")
@click.option("--out", "out_name", default="works.txt", show_default=True)
@click.pass_obj
@stage
def saturate_cmd(cfg: RunConfig, seed_name, threshold, max_rounds, print_table, out_name):
    """Grow a work list by repeatedly adding highly cited outside works."""
    seed = load_work_list(cfg.resolve_input(seed_name, "fetch-works"))
    works, rounds, last = saturate(seed, threshold, cfg.client(), max_rounds=max_rounds)
    save_work_list(works, cfg.out_path(out_name))
    last.table.to_csv(cfg.out_path("expansion.csv"))
    if print_table:
        click.echo(last.table.to_csv_text(), nl=False)
    cfg.write_manifest("saturate", {
        "seed": seed_name,
        "threshold": threshold,
        "rounds": rounds,
        "converged": str(last.converged).lower(),
        "works": len(works),
        "out": out_name,
    })
    click.echo(
        f"{len(works)} works after {rounds} round(s)"
        f" ({'converged' if last.converged else 'round limit reached'})"
    )


@main.command("build-collection")
@click.option("--works", "works_name", default=None,
              help="Works JSONL from fetch-works.")
@click.option("--ids", "ids_name", default=None,
              help="Work id list (e.g. from saturate); records are fetched.")
@click.option("--dir", "coll_dir", default="collection", show_default=True)
@click.option("--cited-boundary", is_flag=True,
              help="Also write the citation net extended with cited-only works.")
@click.pass_obj
@stage
def build_collection_cmd(cfg: RunConfig, works_name, ids_name, coll_dir, cited_boundary):
    """Build the Cite/WA/WJ/WK/WC collection plus property vectors."""
    if bool(works_name) == bool(ids_name):
        raise click.UsageError("give exactly one of --works or --ids")
    if works_name:
        records = load_works_jsonl(cfg.resolve_input(works_name, "fetch-works"))
    else:
        ids = load_work_list(cfg.resolve_input(ids_name, "saturate"))
        records, _ = fetch_records(cfg.client(), ids)
    coll = build_collection(records)
    target = cfg.out_path(coll_dir)
    written = write_collection(coll, target)
    if cited_boundary:
        cite_ext = build_citation(records, boundary="cited")
        pajek.write_network(cite_ext, target / "CiteBoundary.net")
        pajek.write_partition(boundary_partition(cite_ext, records),
                              target / "boundary.clu")
        written.extend([target / "CiteBoundary.net", target / "boundary.clu"])
    cfg.write_manifest("build-collection", {
        "source": works_name or ids_name,
        "works": len(records),
        "dir": coll_dir,
        "cited_boundary": str(cited_boundary).lower(),
    })
    click.echo(f"wrote {len(written)} files to {target}")


@main.command("coauth")
@click.option("--from", "year_from", type=int, default=None,
              help="First publication year.")
@click.option("--to", "year_to", type=int, default=None,
              help="Last publication year.")
@click.option("--countries", default=None, metavar="CODES",
              help="Comma-separated focal country scope (default: all).")
@click.option("--works", "works_name", default=None,
              help="Build matrices from a works JSONL instead of grouped queries.")
@click.option("--loops", is_flag=True,
              help="Write diagonal cells as self-loops in .net outputs.")
@click.pass_obj
@stage
def coauth_cmd(cfg: RunConfig, year_from, year_to, countries, works_name, loops):
    """Build country co-authorship matrices (CSV and Pajek network)."""
    scope = _parse_country_scope(countries)
    manifest = {
        "countries": "" if scope is None else ",".join(scope),
        "loops": str(loops).lower(),
        "source": works_name or "api",
    }
    if works_name:
        records = load_works_jsonl(cfg.resolve_input(works_name, "fetch-works"))
        matrix = co_matrix_from_works(records)
        if scope is not None:
            matrix = matrix.submatrix(scope)
        matrix.to_csv(cfg.out_path("co.csv"))
        pajek.write_network(matrix_to_network(matrix, include_loops=loops),
                            cfg.out_path("co.net"))
        manifest["years"] = "all"
        cfg.write_manifest("coauth", manifest)
        click.echo(f"wrote co.csv and co.net ({matrix.n} countries)")
        return
    if year_from is None or year_to is None:
        raise click.UsageError("grouped-query mode needs --from and --to")
    if year_from > year_to:
        raise click.UsageError(f"--from {year_from} is after --to {year_to}")
    series = yearly_series(year_from, year_to, cfg.client(), countries=scope)
    for year in series.years():
        matrix = series.matrices.get(year)
        if matrix is None:
            continue
        matrix.to_csv(cfg.out_path(f"co_{year}.csv"))
        pajek.write_network(matrix_to_network(matrix, include_loops=loops),
                            cfg.out_path(f"co_{year}.net"))
    manifest["years"] = f"{year_from}..{year_to}"
    manifest["failed_years"] = ",".join(str(y) for y in sorted(series.failures))
    cfg.write_manifest("coauth", manifest)
    for year, reason in sorted(series.failures.items()):
        click.echo(f"year {year} failed: {reason}", err=True)
    if series.failures and not series.matrices:
        from .errors import TransportError

        raise TransportError("every requested year failed")
    done = sorted(series.matrices)
    click.echo(f"built {len(done)} yearly matrices"
               + (f" ({done[0]}..{done[-1]})" if done else ""))


def _read_one_mode(cfg: RunConfig, name: str, produced_by: str):
    net = pajek.read_network(cfg.resolve_input(name, produced_by))
    if not hasattr(net, "directed"):
        raise DomainError(f"{name} holds a two-mode network; expected one-mode")
    return net


@main.command("cores")
@click.option("--in", "in_name", required=True, help="Undirected .net input.")
@click.pass_obj
@stage
def cores_cmd(cfg: RunConfig, in_name):
    """Weighted-degree core levels of an undirected network."""
    net = _read_one_mode(cfg, in_name, "coauth")
    dec = weighted_degree_cores(net)
    stem = Path(in_name).stem
    pajek.write_vector(dec.to_vector(), cfg.out_path(f"{stem}.cores.vec"))
    dec.to_csv(cfg.out_path(f"{stem}.cores.csv"))
    top = max(dec.level.values()) if dec.level else 0
    cfg.write_manifest("cores", {"in": in_name, "nodes": net.n, "max_level": top})
    click.echo(f"wrote {stem}.cores.vec and {stem}.cores.csv (max level {top})")


@main.command("skeleton")
@click.option("--in", "in_name", required=True, help="Undirected .net input.")
@click.option("--k", type=click.IntRange(min=1), default=1, show_default=True,
              help="Keep each node's k heaviest links.")
@click.option("--cut", "cut_threshold", type=float, default=None,
              help="Keep links with weight >= this instead of k-neighbor arcs.")
@click.option("--merge-mutual/--no-merge-mutual", default=True, show_default=True,
              help="Fold mutual arc pairs into edges in the output file.")
@click.pass_obj
@stage
def skeleton_cmd(cfg: RunConfig, in_name, k, cut_threshold, merge_mutual):
    """Sparsify a network to its strongest-link skeleton or a link cut."""
    net = _read_one_mode(cfg, in_name, "coauth")
    stem = Path(in_name).stem
    if cut_threshold is not None:
        out = link_cut(net, cut_threshold)
        pajek.write_network(out, cfg.out_path(f"{stem}.cut.net"))
        cfg.write_manifest("skeleton", {
            "in": in_name, "method": "cut", "threshold": cut_threshold,
            "links": len(out.links),
        })
        click.echo(f"wrote {stem}.cut.net ({len(out.links)} links kept)")
        return
    skel = k_neighbor_skeleton(net, k)
    pajek.write_skeleton(skel, cfg.out_path(f"{stem}.skel{k}.net"),
                         merge_mutual=merge_mutual)
    mutual_csv = mutual_pairs_csv_text(skel)
    cfg.out_path(f"{stem}.skel{k}.mutual.csv").write_text(
        mutual_csv, encoding="utf-8", newline="")
    cfg.write_manifest("skeleton", {
        "in": in_name, "method": "k-neighbor", "k": k,
        "arcs": len(skel.links),
        "merge_mutual": str(merge_mutual).lower(),
    })
    click.echo(f"wrote {stem}.skel{k}.net and {stem}.skel{k}.mutual.csv")


@main.command("normalize")
@click.option("--in", "in_name", required=True, help="Co-authorship matrix CSV.")
@click.option("--method", required=True,
              type=click.Choice(["stochastic", "jaccard", "salton",
                                 "expected", "balassa"]))
@click.option("--log", "log_flag", is_flag=True,
              help="Base-2 log of the activity index (balassa only).")
@click.pass_obj
@stage
def normalize_cmd(cfg: RunConfig, in_name, method, log_flag):
    """Rescale a count matrix by size-aware normalization indices."""
    if log_flag and method != "balassa":
        raise click.UsageError("--log applies to --method balassa only")
    co = CoMatrix.from_csv(cfg.resolve_input(in_name, "coauth"))
    stem = Path(in_name).stem
    if method == "balassa":
        matrix = activity_index(co)
        name = "balassa"
        if log_flag:
            matrix = log_activity(matrix)
            name = "balassa-log"
    elif method == "expected":
        matrix = expected_matrix(co)
        name = "expected"
    else:
        matrix = normalize(co, method)
        name = method
    out_csv = cfg.out_path(f"{stem}.{name}.csv")
    flags = cfg.out_path(f"{stem}.{name}.flags.csv") if matrix.imputed else None
    matrix.to_csv(out_csv, flags_path=flags)
    cfg.write_manifest("normalize", {
        "in": in_name, "method": method, "log": str(log_flag).lower(),
        "cells": len(matrix.cells),
    })
    click.echo(f"wrote {out_csv.name}" + (f" and {flags.name}" if flags else ""))


@main.command("cluster")
@click.option("--in", "in_name", required=True, help="Co-authorship matrix CSV.")
@click.option("--linkage", type=click.Choice(["ward", "complete", "average"]),
              default="ward", show_default=True)
@click.option("--transform", type=click.Choice(["log2", "sqrt", "none"]),
              default="log2", show_default=True,
              help="Weight transform applied before the distance computation.")
@click.option("--k", "n_clusters", type=click.IntRange(min=1), default=None,
              help="Also cut the tree into this many clusters.")
@click.pass_obj
@stage
def cluster_cmd(cfg: RunConfig, in_name, linkage, transform, n_clusters):
    """Hierarchically cluster countries and export the reordered matrix."""
    co = CoMatrix.from_csv(cfg.resolve_input(in_name, "coauth"))
    if n_clusters is not None and n_clusters > co.n:
        raise click.UsageError(f"--k {n_clusters} exceeds the {co.n} countries")
    values = prepare_matrix(co, transform)
    dendro = agglomerate(corrected_euclidean(values, co.codes), linkage)
    order = dendro.leaf_order()
    partition = dendro.cut(n_clusters) if n_clusters is not None else None
    stem = Path(in_name).stem
    ordered_matrix_export(
        co, order, partition,
        path=cfg.out_path(f"{stem}.ordered.csv"),
        meta_path=cfg.out_path(f"{stem}.ordered.json"),
    )
    cfg.out_path(f"{stem}.dendrogram.txt").write_text(
        dendro.to_newick() + "\n", encoding="utf-8")
    cfg.out_path(f"{stem}.merges.csv").write_text(
        dendro.merges_csv_text(), encoding="utf-8", newline="")
    outputs = [f"{stem}.ordered.csv", f"{stem}.ordered.json",
               f"{stem}.dendrogram.txt", f"{stem}.merges.csv"]
    if partition is not None:
        pajek.write_partition(partition, cfg.out_path(f"{stem}.clusters.clu"))
        outputs.append(f"{stem}.clusters.clu")
    cfg.write_manifest("cluster", {
        "in": in_name, "linkage": linkage, "transform": transform,
        "k": "" if n_clusters is None else n_clusters,
    })
    click.echo(f"wrote {', '.join(outputs)}")


@main.command("export-pajek")
@click.option("--in", "in_name", required=True, help="Matrix CSV to convert.")
@click.option("--loops", is_flag=True, help="Write diagonal cells as self-loops.")
@click.option("--transform", type=click.Choice(["none", "log2", "sqrt"]),
              default="none", show_default=True)
@click.option("--full-universe", is_flag=True,
              help="Add every known country code as an isolated node.")
@click.pass_obj
@stage
def export_pajek_cmd(cfg: RunConfig, in_name, loops, transform, full_universe):
    """Convert a matrix CSV into a Pajek network file."""
    co = CoMatrix.from_csv(cfg.resolve_input(in_name, "coauth"))
    matrix = co if transform == "none" else transform_weights(co, transform)
    net = matrix_to_network(
        matrix,
        include_loops=loops,
        universe=ALL_CODES if full_universe else None,
    )
    stem = Path(in_name).stem
    pajek.write_network(net, cfg.out_path(f"{stem}.net"))
    cfg.write_manifest("export-pajek", {
        "in": in_name, "loops": str(loops).lower(), "transform": transform,
        "full_universe": str(full_universe).lower(),
        "nodes": net.n, "links": len(net.links),
    })
    click.echo(f"wrote {stem}.net ({net.n} nodes, {len(net.links)} links)")


if __name__ == "__main__":
    main()
