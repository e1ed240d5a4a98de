"""HTTP client for the OpenAlex works endpoint.

Supports plain filtered queries with cursor pagination, grouped (aggregate)
queries, bounded retries with backoff, a global request rate limit, and a
verbatim response cache keyed by the canonical request URL. With a warm
cache the client runs fully offline (``offline=True`` forbids network use
outright), which keeps every downstream analysis replayable.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Sequence
from urllib.parse import quote

import requests

from .errors import ParseError, TransportError

DEFAULT_BASE_URL = "https://api.openalex.org"
DEFAULT_RATE_LIMIT = 8.0
MAX_GROUPS_PER_RESPONSE = 200  # the API caps group-by responses at 200 groups

WORK_ID_RE = re.compile(r"^W\d+$")


def _tail(value: str) -> str:
    """Entity id from a full OpenAlex URL ("https://.../W123" -> "W123")."""
    return value.rsplit("/", 1)[-1]


@dataclass(frozen=True)
class WorksFilter:
    """Conjunctive field filters plus an optional group-by field."""

    filters: tuple[tuple[str, str], ...]
    group_by: str | None = None

    def __post_init__(self):
        norm = tuple((str(k), str(v)) for k, v in self.filters)
        for k, _ in norm:
            if not k:
                raise ValueError("empty filter field path")
        object.__setattr__(self, "filters", norm)


@dataclass(frozen=True)
class GroupCount:
    key: str
    count: int


@dataclass(frozen=True)
class GroupResult:
    """Parsed group-by response plus the flag downstream symmetry repair needs."""

    groups: tuple[GroupCount, ...]
    possibly_truncated: bool
    url: str


@dataclass
class WorkRecord:
    """The fields of one work this toolkit consumes."""

    id: str
    publication_year: int | None = None
    type: str | None = None
    language: str | None = None
    cited_by_count: int = 0
    referenced_works: list[str] = field(default_factory=list)
    countries: list[str] = field(default_factory=list)
    source_id: str | None = None
    author_ids: list[str] = field(default_factory=list)
    keywords: list[str] = field(default_factory=list)
    countries_distinct_count: int | None = None

    def to_json_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "WorkRecord":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in obj.items() if k in known})


def parse_work(obj: dict) -> WorkRecord:
    """Extract a WorkRecord from one API work object.

    The caller guarantees a usable ``id``; everything else degrades to the
    documented sentinels when missing.
    """
    authorships = obj.get("authorships") or []
    countries: list[str] = []
    author_ids: list[str] = []
    for a in authorships:
        countries.extend(a.get("countries") or [])
        author = a.get("author") or {}
        if author.get("id"):
            author_ids.append(_tail(author["id"]))
    source_id = None
    loc = obj.get("primary_location") or {}
    source = loc.get("source") or {}
    if source.get("id"):
        source_id = _tail(source["id"])
    keywords = []
    for kw in obj.get("keywords") or []:
        if isinstance(kw, str):
            keywords.append(kw)
        elif kw.get("display_name"):
            keywords.append(kw["display_name"])
        elif kw.get("id"):
            keywords.append(_tail(kw["id"]))
    year = obj.get("publication_year")
    cdc = obj.get("countries_distinct_count")
    return WorkRecord(
        id=_tail(obj["id"]),
        publication_year=int(year) if year is not None else None,
        type=obj.get("type"),
        language=obj.get("language"),
        cited_by_count=int(obj.get("cited_by_count") or 0),
        referenced_works=[_tail(r) for r in obj.get("referenced_works") or []],
        countries=[str(c) for c in countries],
        source_id=source_id,
        author_ids=author_ids,
        keywords=keywords,
        countries_distinct_count=int(cdc) if cdc is not None else None,
    )


def build_query_url(
    flt: WorksFilter,
    cursor: str | None = None,
    per_page: int | None = None,
    mailto: str | None = None,
    base_url: str = DEFAULT_BASE_URL,
) -> str:
    """Deterministic works-endpoint URL for the given filter.

    Filters are joined by commas in their given order; parameter order is
    fixed (filter, group-by, per-page, cursor, mailto) so equal queries
    yield byte-equal URLs.
    """
    if not flt.filters:
        raise ValueError("a works query needs at least one filter")
    if per_page is not None and not 1 <= per_page <= 200:
        raise ValueError(f"per_page {per_page} outside 1..200")
    joined = ",".join(f"{k}:{quote(v, safe='|+')}" for k, v in flt.filters)
    url = f"{base_url}/works?filter={joined}"
    if flt.group_by:
        url += f"&group-by={quote(flt.group_by, safe='.')}"
    if per_page is not None:
        url += f"&per-page={per_page}"
    if cursor is not None:
        url += f"&cursor={quote(cursor, safe='')}"
    if mailto:
        url += f"&mailto={quote(mailto, safe='@')}"
    return url


class ResponseCache:
    """One verbatim body file per canonical URL, hash-named, plus a sidecar.

    The sidecar records the source URL, HTTP status and fetch time. Writes
    go through a temp file and an atomic rename so concurrent readers never
    observe a partial body.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _key(self, url: str) -> str:
        return hashlib.sha256(url.encode("utf-8")).hexdigest()

    def body_path(self, url: str) -> Path:
        return self.directory / f"{self._key(url)}.body"

    def get(self, url: str) -> str | None:
        path = self.body_path(url)
        if not path.exists():
            return None
        return path.read_bytes().decode("utf-8")

    def put(self, url: str, body: str, status: int = 200) -> None:
        key = self._key(url)
        body_path = self.directory / f"{key}.body"
        tmp = self.directory / f"{key}.body.tmp"
        tmp.write_bytes(body.encode("utf-8"))
        tmp.replace(body_path)
        meta = {
            "url": url,
            "status": status,
            "fetched_at": datetime.now(timezone.utc).isoformat(),
        }
        mtmp = self.directory / f"{key}.meta.json.tmp"
        mtmp.write_text(json.dumps(meta, sort_keys=True), encoding="utf-8")
        mtmp.replace(self.directory / f"{key}.meta.json")


class RateLimiter:
    """Serializes request issuance to at most ``rate`` calls per second."""

    def __init__(self, rate: float, clock=time.monotonic, sleep=time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self._interval = 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next: float | None = None

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            if self._next is not None and now < self._next:
                self._sleep(self._next - now)
                now = self._next
            self._next = now + self._interval


class WorkStream:
    """Single-use iterator over paged work results.

    ``skipped`` counts records dropped for a missing or malformed id and is
    final once iteration ends.
    """

    def __init__(self, client: "OpenAlexClient", flt: WorksFilter,
                 limit: int | None, per_page: int):
        self._client = client
        self._flt = flt
        self._limit = limit
        self._per_page = per_page
        self._consumed = False
        self.skipped = 0
        self.pages = 0

    def __iter__(self) -> Iterator[WorkRecord]:
        if self._consumed:
            raise RuntimeError("a WorkStream can only be iterated once")
        self._consumed = True
        if self._limit is not None and self._limit <= 0:
            return
        yielded = 0
        cursor: str | None = "*"
        while cursor:
            url = self._client.canonical_url(
                self._flt, cursor=cursor, per_page=self._per_page
            )
            data = self._client.fetch_json(url)
            results = data.get("results")
            if results is None:
                raise ParseError("response lacks a results list", source=url)
            self.pages += 1
            for obj in results:
                raw_id = obj.get("id")
                if not raw_id or not WORK_ID_RE.match(_tail(str(raw_id))):
                    self.skipped += 1
                    continue
                yield parse_work(obj)
                yielded += 1
                if self._limit is not None and yielded >= self._limit:
                    return
            if not results:
                break
            cursor = (data.get("meta") or {}).get("next_cursor")


class OpenAlexClient:
    """Cache-backed, rate-limited access to the works endpoint.

    ``session`` only needs a ``get(url, timeout=...)`` method, which keeps
    transports mockable; ``clock``/``sleep`` are injectable for the same
    reason. ``offline=True`` turns any cache miss into a TransportError
    without touching the network.
    """

    def __init__(
        self,
        base_url: str = DEFAULT_BASE_URL,
        mailto: str | None = None,
        rate_limit: float = DEFAULT_RATE_LIMIT,
        cache: ResponseCache | None = None,
        session=None,
        offline: bool = False,
        max_attempts: int = 3,
        backoff: float = 0.5,
        timeout: float = 30.0,
        clock=time.monotonic,
        sleep=time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.mailto = mailto
        self.cache = cache
        self.offline = offline
        self._session = session
        self._max_attempts = max_attempts
        self._backoff = backoff
        self._timeout = timeout
        self._sleep = sleep
        self._limiter = RateLimiter(rate_limit, clock=clock, sleep=sleep)

    def _http(self):
        if self._session is None:
            self._session = requests.Session()
        return self._session

    def canonical_url(self, flt: WorksFilter, cursor: str | None = None,
                      per_page: int | None = None) -> str:
        """Cache key URL: the full query minus the politeness parameter."""
        return build_query_url(flt, cursor=cursor, per_page=per_page,
                               base_url=self.base_url)

    def fetch_body(self, url: str) -> str:
        """Body for a canonical URL, from cache when possible."""
        if self.cache is not None:
            hit = self.cache.get(url)
            if hit is not None:
                return hit
        if self.offline:
            raise TransportError(f"cache-only mode and no cached response for {url}")
        request_url = url
        if self.mailto:
            request_url += f"&mailto={quote(self.mailto, safe='@')}"
        last = ""
        attempts = 0
        for attempt in range(self._max_attempts):
            attempts += 1
            self._limiter.wait()
            retry_after = None
            try:
                resp = self._http().get(request_url, timeout=self._timeout)
            except requests.RequestException as exc:
                last = str(exc)
                retryable = True
            else:
                if resp.status_code == 200:
                    body = resp.text
                    if self.cache is not None:
                        self.cache.put(url, body, resp.status_code)
                    return body
                last = f"HTTP {resp.status_code}"
                retryable = resp.status_code == 429 or resp.status_code >= 500
                header = getattr(resp, "headers", {}).get("Retry-After")
                if header is not None:
                    try:
                        retry_after = float(header)
                    except ValueError:
                        retry_after = None
            if not retryable or attempt == self._max_attempts - 1:
                break
            self._sleep(retry_after if retry_after is not None
                        else self._backoff * 2 ** attempt)
        raise TransportError(f"GET {url} failed after {attempts} attempt(s): {last}")

    def fetch_json(self, url: str) -> dict:
        body = self.fetch_body(url)
        try:
            return json.loads(body)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON body: {exc}", source=url) from None

    def fetch_group_counts(self, flt: WorksFilter) -> GroupResult:
        """Run a grouped query and parse its (at most 200) group counts."""
        if not flt.group_by:
            raise ValueError("fetch_group_counts needs a filter with group_by set")
        url = self.canonical_url(flt)
        data = self.fetch_json(url)
        raw = data.get("group_by")
        if raw is None:
            raise ParseError("response lacks a group_by list", source=url)
        groups = []
        seen = set()
        for entry in raw:
            try:
                key = str(entry["key"])
                count = int(entry["count"])
            except (KeyError, TypeError, ValueError):
                raise ParseError(f"malformed group entry {entry!r}", source=url) from None
            if count < 0:
                raise ParseError(f"negative group count for {key!r}", source=url)
            if key in seen:
                raise ParseError(f"duplicate group key {key!r}", source=url)
            seen.add(key)
            groups.append(GroupCount(key=key, count=count))
        return GroupResult(
            groups=tuple(groups),
            possibly_truncated=len(groups) >= MAX_GROUPS_PER_RESPONSE,
            url=url,
        )

    def fetch_works(self, flt: WorksFilter, limit: int | None = None,
                    per_page: int = 200) -> WorkStream:
        """Stream WorkRecords across cursor pages; see WorkStream for skips."""
        if flt.group_by:
            raise ValueError("fetch_works cannot take a group_by filter")
        return WorkStream(self, flt, limit, per_page)


def save_works_jsonl(works: Sequence[WorkRecord], path) -> None:
    lines = [json.dumps(w.to_json_dict(), sort_keys=True) for w in works]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_works_jsonl(path) -> list[WorkRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(WorkRecord.from_json_dict(json.loads(line)))
            except (json.JSONDecodeError, TypeError) as exc:
                raise ParseError(f"bad work record: {exc}", source=str(path),
                                 line=lineno) from None
    return records
