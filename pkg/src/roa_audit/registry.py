"""Registry ingestion and the HTTP reachability probe.

The registry is a CSV with header ``broker_name,url``. Probing fetches
each URL once (plus any configured retries) with bounded redirects and
classifies the site as reachable or unreachable; the filter mirrors how a
dataset of audit targets is narrowed to the sites that can actually be
visited. The probe is HTTP-level on purpose: reachability is a dataset
filter here, not a rendering check.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence
from urllib.parse import urlparse

import requests

__all__ = [
    "ProbeResult",
    "RegistryEntry",
    "RegistryError",
    "parse_registry",
    "probe",
]

MAX_REDIRECTS = 5


class RegistryError(ValueError):
    pass


class ProbeResult(str, Enum):
    REACHABLE = "reachable"
    UNREACHABLE = "unreachable"
    PENDING = "pending"


@dataclass(frozen=True)
class RegistryEntry:
    broker_name: str
    url: str
    probe_result: ProbeResult = ProbeResult.PENDING


def _valid_url(url: str) -> bool:
    parsed = urlparse(url)
    return parsed.scheme in ("http", "https") and bool(parsed.netloc)


def parse_registry(text: str) -> list[RegistryEntry]:
    """Parses the CSV registry; every URL must be syntactically valid
    before probing, so malformed rows are rejected outright."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
        "broker_name",
        "url",
    ]:
        raise RegistryError(
            "registry CSV must carry the header 'broker_name,url'"
        )
    entries = []
    for i, row in enumerate(reader, start=2):
        name = (row.get("broker_name") or "").strip()
        url = (row.get("url") or "").strip()
        if not name or not url:
            raise RegistryError(f"registry line {i}: empty broker_name or url")
        if not _valid_url(url):
            raise RegistryError(f"registry line {i}: invalid url {url!r}")
        entries.append(RegistryEntry(broker_name=name, url=url))
    return entries


def _probe_one(
    entry: RegistryEntry, timeout: float, retries: int
) -> RegistryEntry:
    attempts = 1 + max(0, retries)
    for attempt in range(attempts):
        session = requests.Session()
        session.max_redirects = MAX_REDIRECTS
        try:
            response = session.get(entry.url, timeout=timeout, allow_redirects=True)
        except requests.RequestException:
            continue
        finally:
            session.close()
        # Any response below 500 proves the site answers; server errors and
        # network failures count as unreachable.
        if response.status_code < 500:
            return replace(entry, probe_result=ProbeResult.REACHABLE)
        if attempt == attempts - 1:
            return replace(entry, probe_result=ProbeResult.UNREACHABLE)
    return replace(entry, probe_result=ProbeResult.UNREACHABLE)


def probe(
    entries: Sequence[RegistryEntry],
    timeout: float = 10.0,
    concurrency: int = 8,
    retries: int = 0,
) -> list[RegistryEntry]:
    """Fetches every entry's URL and fills in its probe result.

    Per-entry failures become ``unreachable`` results, never exceptions.
    Order is preserved. An empty entry list is a usage error.
    """
    if not entries:
        raise RegistryError("probe requires at least one registry entry")
    if concurrency < 1:
        raise RegistryError("concurrency must be >= 1")
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(
            pool.map(lambda e: _probe_one(e, timeout, retries), entries)
        )
