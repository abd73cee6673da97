"""Per-account classifier scores: fixture provider, cache, and batch scoring."""

from __future__ import annotations

import json
import math
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Protocol

from boostnet.graph import NetworkSnapshot, ScoreTriple, check_account_id
from boostnet.providers import (
    ACCOUNT_ERRORS,
    NotFoundError,
    RetriesExhausted,
    RetryPolicy,
    call_with_retry,
)


class ScoreFixtureError(ValueError):
    def __init__(self, message: str, lineno: int | None = None, account_id: str | None = None):
        super().__init__(message)
        self.lineno = lineno
        self.account_id = account_id


class ScoreProvider(Protocol):
    def scores(self, account_id: str) -> tuple[float, float, float]: ...


class FixtureScoreProvider:
    def __init__(self, table: dict[str, ScoreTriple]):
        self.table = table
        self.calls = 0
        self._lock = threading.Lock()

    def scores(self, account_id):
        with self._lock:
            self.calls += 1
        try:
            return self.table[account_id].as_tuple()
        except KeyError:
            raise NotFoundError(account_id) from None


def parse_score_fixture(text: str, path="<scores>") -> dict[str, ScoreTriple]:
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ScoreFixtureError(f"{path}:{lineno}: expected '<id> <temporal> <network> <friend>'", lineno)
        aid = parts[0]
        try:
            vals = [float(p) for p in parts[1:]]
        except ValueError:
            raise ScoreFixtureError(f"{path}:{lineno}: non-numeric score", lineno) from None
        if not all(math.isfinite(v) and 0.0 <= v <= 1.0 for v in vals):
            raise ScoreFixtureError(f"{path}:{lineno}: score for {aid} outside [0, 1]", lineno, aid)
        table[aid] = ScoreTriple(*vals)
    return table


def open_score_fixture(path) -> FixtureScoreProvider:
    path = Path(path)
    return FixtureScoreProvider(parse_score_fixture(path.read_text(encoding="utf-8"), path))


@dataclass(frozen=True)
class ScoreCacheEntry:
    id: str
    scores: ScoreTriple
    fetched_at: datetime

    def to_json(self) -> str:
        return json.dumps(
            {"id": self.id, "scores": self.scores.to_dict(), "fetched_at": self.fetched_at.isoformat()},
            sort_keys=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "ScoreCacheEntry":
        d = json.loads(line)
        s = d["scores"]
        return cls(check_account_id(d["id"]), ScoreTriple(s["temporal"], s["network"], s["friend"]),
                   datetime.fromisoformat(d["fetched_at"]))


@dataclass
class ScoreCache:
    entries: dict[str, ScoreCacheEntry] = field(default_factory=dict)

    def __post_init__(self):
        self._lock = threading.Lock()

    def get(self, account_id: str) -> ScoreTriple | None:
        entry = self.entries.get(account_id)
        return entry.scores if entry else None

    def put(self, account_id: str, scores: ScoreTriple):
        with self._lock:
            self.entries[account_id] = ScoreCacheEntry(account_id, scores, datetime.now(timezone.utc))

    def __contains__(self, account_id):
        return account_id in self.entries

    def __len__(self):
        return len(self.entries)

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for key in sorted(self.entries):
                fh.write(self.entries[key].to_json() + "\n")

    @classmethod
    def load(cls, path) -> "ScoreCache":
        cache = cls()
        p = Path(path)
        if p.exists():
            for line in p.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    entry = ScoreCacheEntry.from_json(line)
                    cache.entries[entry.id] = entry
        return cache


def score_accounts(
    provider: ScoreProvider,
    ids: Iterable[str],
    cache: ScoreCache | None = None,
    *,
    retry: RetryPolicy = RetryPolicy(),
    max_in_flight: int = 4,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> dict[str, ScoreTriple | str]:
    """Look up scores for ``ids``; cache hits skip the provider.

    Accounts the provider cannot score map to a fetch status string
    (``not_found``, ``protected``, ``suspended`` or ``error``). Values outside
    [0, 1] are recorded as ``error`` rather than clamped.
    """
    ids = list(ids)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids passed to score_accounts")
    cache = cache if cache is not None else ScoreCache()
    rng = rng or random.Random(0)
    result: dict[str, ScoreTriple | str] = {}
    misses = []
    for i in ids:
        hit = cache.get(i)
        if hit is not None:
            result[i] = hit
        else:
            misses.append(i)

    def one(aid):
        try:
            raw = call_with_retry(lambda: provider.scores(aid), retry, sleep=sleep, rng=rng)
        except ACCOUNT_ERRORS + (RetriesExhausted,) as exc:
            return aid, exc.status
        try:
            triple = raw if isinstance(raw, ScoreTriple) else ScoreTriple(*raw)
        except (TypeError, ValueError):
            return aid, "error"
        cache.put(aid, triple)
        return aid, triple

    if max_in_flight > 1 and len(misses) > 1:
        with ThreadPoolExecutor(max_in_flight) as pool:
            fetched = list(pool.map(one, misses))
    else:
        fetched = [one(a) for a in misses]
    result.update(fetched)
    return {i: result[i] for i in ids}


def annotate_scores(snapshot: NetworkSnapshot, scored: dict[str, ScoreTriple | str]) -> NetworkSnapshot:
    """Attach scores (or failure statuses) from ``score_accounts`` to snapshot records."""
    updated = []
    for aid, value in scored.items():
        rec = snapshot.accounts.get(aid)
        if rec is None:
            continue
        if isinstance(value, ScoreTriple):
            updated.append(replace(rec, scores=value))
        else:
            status = value if rec.fetch_status == "ok" else rec.fetch_status
            updated.append(replace(rec, scores=None, label="unknown", fetch_status=status))
    return snapshot.with_accounts(updated)
