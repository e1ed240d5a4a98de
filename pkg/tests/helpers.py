"""Shared test machinery: independent oracles, generators, fake transports.

The oracles here deliberately avoid the code paths they check: cores are
certified by exhaustive subset search, agglomeration by a from-scratch
per-step recomputation over the original dissimilarities.
"""

from __future__ import annotations

import itertools
import json
import math
import random

from oa2net.coauthorship import co_matrix_from_works, countries_of_work
from oa2net.clustering import Merge
from oa2net.netmodel import WeightedNetwork
from oa2net.openalex import GroupCount, WorkRecord

# ---------------------------------------------------------------------------
# exhaustive weighted-degree core oracle


def exhaustive_core(net: WeightedNetwork, t: float) -> set[str]:
    """Largest node set where every member has within-set weighted degree >= t.

    Checks every subset; the qualifying subsets are closed under union, so
    their union is the unique maximal one.
    """
    labels = net.labels
    n = len(labels)
    ids = list(range(1, n + 1))
    union: set[int] = set()
    for mask in range(1, 2 ** n):
        subset = {ids[b] for b in range(n) if mask & (1 << b)}
        ok = all(net.weighted_degree(v, within=subset) >= t for v in subset)
        if ok:
            union |= subset
    if union:
        assert all(net.weighted_degree(v, within=union) >= t for v in union)
    return {labels[v - 1] for v in union}


# ---------------------------------------------------------------------------
# naive agglomeration reference (recomputes linkage from the original matrix)


def naive_agglomerate(codes, dvals, linkage):
    """O(n^3)-per-step reference; returns Merge tuples like the real one."""
    n = len(codes)
    members = {i: frozenset([i]) for i in range(n)}
    min_label = {i: codes[i] for i in range(n)}
    active = set(range(n))
    merges = []

    def d(x, y):
        return dvals[x][y]

    def ess(cluster):
        total = 0.0
        for x, y in itertools.combinations(sorted(cluster), 2):
            total += d(x, y) ** 2
        return total / len(cluster)

    def cluster_distance(a, b):
        ca, cb = members[a], members[b]
        if linkage == "complete":
            return max(d(x, y) for x in ca for y in cb)
        if linkage == "average":
            return sum(d(x, y) for x in ca for y in cb) / (len(ca) * len(cb))
        return math.sqrt(max(0.0, 2.0 * (ess(ca | cb) - ess(ca) - ess(cb))))

    for step in range(1, n):
        best = None
        acts = sorted(active)
        for pos, i in enumerate(acts):
            for j in acts[pos + 1:]:
                la, lb = min_label[i], min_label[j]
                key = (cluster_distance(i, j), (la, lb) if la <= lb else (lb, la))
                if best is None or key < best[0]:
                    best = (key, i, j)
        (height, _), i, j = best
        new = n - 1 + step
        li, lj = min_label[i], min_label[j]
        left, right = (i, j) if li <= lj else (j, i)
        merges.append(Merge(step=step, left=left, right=right, height=height))
        members[new] = members[i] | members[j]
        min_label[new] = min(li, lj)
        active -= {i, j}
        active.add(new)
    return merges


# ---------------------------------------------------------------------------
# random generators


def random_weight(rng: random.Random) -> float:
    # dyadic rationals keep incremental degree updates exact
    if rng.random() < 0.5:
        return float(rng.randint(1, 10))
    return rng.randint(1, 64) / 4.0


def random_undirected(rng: random.Random, max_n: int = 8,
                      min_n: int = 0) -> WeightedNetwork:
    n = rng.randint(min_n, max_n)
    labels = [f"N{i:02d}" for i in range(n)]
    links = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < 0.45:
                links.append((i, j, random_weight(rng)))
    return WeightedNetwork(labels, links, directed=False)


def random_any_network(rng: random.Random, max_n: int = 10) -> WeightedNetwork:
    n = rng.randint(0, max_n)
    directed = rng.random() < 0.5 and n > 0
    alphabet = 'ab "xé'
    labels = []
    for i in range(n):
        if rng.random() < 0.3:
            labels.append(f"{i} " + "".join(rng.choice(alphabet) for _ in range(3)))
        else:
            labels.append(f"v{i}")
    links = []
    seen = set()
    for _ in range(rng.randint(0, 2 * n)):
        i, j = rng.randint(1, n), rng.randint(1, n)
        key = (i, j) if directed or i <= j else (j, i)
        if key in seen:
            continue
        seen.add(key)
        w = random_weight(rng) if rng.random() < 0.7 else rng.random() * 50 + 0.001
        links.append((key[0], key[1], w))
    return WeightedNetwork(labels, links, directed=directed)


# ---------------------------------------------------------------------------
# grouped-response derivation (simulates the per-country aggregate queries)


def groupby_responses_from_works(works) -> dict[str, list[GroupCount]]:
    """The grouped response each country's query would return for ``works``."""
    international = [w for w in works if len(countries_of_work(w)) >= 2]
    responses: dict[str, list[GroupCount]] = {}
    countries = sorted({c for w in international for c in countries_of_work(w)})
    for a in countries:
        with_a = [w for w in international if a in countries_of_work(w)]
        counts: dict[str, int] = {}
        for w in with_a:
            for b in countries_of_work(w):
                counts[b] = counts.get(b, 0) + 1
        responses[a] = [
            GroupCount(key=b, count=c)
            for b, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        ]
    return responses


def random_works(rng: random.Random, n_works: int = 12,
                 codes=("AU", "DE", "ES", "IT", "SI", "US", "GB", "FR")) -> list[WorkRecord]:
    works = []
    for i in range(n_works):
        k = rng.randint(1, min(4, len(codes)))
        chosen = rng.sample(list(codes), k)
        multi = []
        for c in chosen:
            multi.extend([c] * rng.randint(1, 3))
        rng.shuffle(multi)
        works.append(WorkRecord(id=f"W{1000 + i}", countries=multi))
    return works


# ---------------------------------------------------------------------------
# fake transports


class FakeResponse:
    def __init__(self, status_code=200, body="", headers=None):
        self.status_code = status_code
        self.text = body
        self.headers = headers or {}


class FakeSession:
    """Scripted transport: URL (sans mailto) -> body or response sequence."""

    def __init__(self, bodies=None):
        self.bodies = dict(bodies or {})
        self.calls: list[tuple[float, str]] = []
        self.clock = None

    def add(self, url, body):
        self.bodies[url] = body

    def get(self, url, timeout=None):
        stamp = self.clock() if self.clock else 0.0
        self.calls.append((stamp, url))
        base = url.split("&mailto=")[0]
        try:
            body = self.bodies[base]
        except KeyError:
            return FakeResponse(status_code=404, body="not found")
        if isinstance(body, list):
            item = body.pop(0) if len(body) > 1 else body[0]
            return item if isinstance(item, FakeResponse) else FakeResponse(body=item)
        if isinstance(body, FakeResponse):
            return body
        return FakeResponse(body=body)


class PoisonSession:
    """Fails the test if any request reaches the network layer."""

    def get(self, url, timeout=None):
        raise AssertionError(f"unexpected network request: {url}")


def works_page(works, next_cursor=None):
    return json.dumps({
        "meta": {"next_cursor": next_cursor, "count": len(works)},
        "results": works,
    })


def group_body(pairs, extra_meta=None):
    return json.dumps({
        "meta": dict(extra_meta or {}),
        "group_by": [{"key": k, "key_display_name": k, "count": c} for k, c in pairs],
    })


def table1_work_dicts():
    """The six worked-example records as raw API-shaped objects."""
    rows = [
        ("W2001947224", ["SI", "US", "SI"]),
        ("W2021064255", ["ES", "SI", "ES", "ES"]),
        ("W1984191816", ["AU", "SI", "AU", "AU", "AU", "SI"]),
        ("W2096814473", ["SI", "DE", "IT", "IT", "IT", "IT"]),
        ("W2514227811", ["ES", "ES", "ES", "SI", "ES"]),
        ("W1981385379", ["US", "SI", "SI"]),
    ]
    out = []
    for wid, codes in rows:
        out.append({
            "id": f"https://openalex.org/{wid}",
            "publication_year": 2000,
            "type": "article",
            "language": "en",
            "cited_by_count": 1,
            "referenced_works": [],
            "countries_distinct_count": len(set(codes)),
            "authorships": [{"countries": [c], "author": {"id": None}} for c in codes],
            "keywords": [],
        })
    return out
