"""Seed expansion: collect followers (and followees) through a paginated provider.

A provider exposes ``followers(id, cursor)`` and ``followees(id, cursor)``, each
returning a :class:`ProviderPage`. ``cursor=None`` asks for the first page and a
page whose ``next_cursor`` is ``None`` is the last one.
"""

from __future__ import annotations

import json
import logging
import random
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

from boostnet.graph import AccountRecord, DirectedEdge, GraphError, check_account_id
from boostnet.providers import (
    ACCOUNT_ERRORS,
    NotFoundError,
    ProtectedError,
    RateLimitedError,
    RetriesExhausted,
    RetryPolicy,
    SuspendedError,
    TransientError,
    call_with_retry,
)

log = logging.getLogger(__name__)

FOLLOWERS = "followers"
FOLLOWEES = "followees"
RELATIONS = (FOLLOWERS, FOLLOWEES)
STATE_VERSION = 1


class FixtureParseError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


class CorruptStateError(ValueError):
    pass


@dataclass(frozen=True)
class ProviderPage:
    ids: tuple[str, ...]
    next_cursor: str | None = None

    def __post_init__(self):
        if not self.ids and self.next_cursor is not None:
            raise ValueError("empty page must carry the end marker")
        for i in self.ids:
            check_account_id(i)


class GraphProvider(Protocol):
    def followers(self, account_id: str, cursor: str | None) -> ProviderPage: ...

    def followees(self, account_id: str, cursor: str | None) -> ProviderPage: ...


def fetch_followers(provider: GraphProvider, account_id: str, cursor: str | None = None) -> ProviderPage:
    return provider.followers(account_id, cursor)


def fetch_followees(provider: GraphProvider, account_id: str, cursor: str | None = None) -> ProviderPage:
    return provider.followees(account_id, cursor)


class FixtureProvider:
    """In-memory provider serving a declared adjacency with offset cursors.

    Accounts are known if they appear anywhere in the adjacency; unknown ids raise
    ``NotFoundError``. ``transient_rate`` and ``rate_limit_rate`` inject faults per
    call from a seeded generator. Every call is appended to ``calls`` as
    ``(relation, id, cursor, outcome)``.
    """

    def __init__(
        self,
        followers: dict[str, list[str]] | None = None,
        followees: dict[str, list[str]] | None = None,
        *,
        protected: Iterable[str] = (),
        suspended: Iterable[str] = (),
        page_size: int = 5000,
        transient_rate: float = 0.0,
        rate_limit_rate: float = 0.0,
        retry_after: float = 1.0,
        fault_seed: int | None = None,
    ):
        if page_size < 1:
            raise ValueError("page_size must be positive")
        self.adjacency = {
            FOLLOWERS: {k: list(dict.fromkeys(v)) for k, v in (followers or {}).items()},
            FOLLOWEES: {k: list(dict.fromkeys(v)) for k, v in (followees or {}).items()},
        }
        self.protected = set(protected)
        self.suspended = set(suspended)
        self.known = set(self.protected) | self.suspended
        for rel in self.adjacency.values():
            for k, v in rel.items():
                self.known.add(k)
                self.known.update(v)
        self.page_size = page_size
        self.transient_rate = transient_rate
        self.rate_limit_rate = rate_limit_rate
        self.retry_after = retry_after
        self._rng = random.Random(fault_seed)
        self._lock = threading.Lock()
        self.calls: list[tuple[str, str, str | None, str]] = []

    def _log(self, *entry):
        with self._lock:
            self.calls.append(entry)

    def _page(self, relation: str, account_id: str, cursor: str | None) -> ProviderPage:
        with self._lock:
            roll = self._rng.random() if (self.transient_rate or self.rate_limit_rate) else 1.0
        if roll < self.rate_limit_rate:
            self._log(relation, account_id, cursor, "rate_limited")
            raise RateLimitedError(self.retry_after)
        if roll < self.rate_limit_rate + self.transient_rate:
            self._log(relation, account_id, cursor, "transient")
            raise TransientError(f"injected fault on {relation}({account_id})")
        if account_id not in self.known:
            self._log(relation, account_id, cursor, "not_found")
            raise NotFoundError(account_id)
        if account_id in self.suspended:
            self._log(relation, account_id, cursor, "suspended")
            raise SuspendedError(account_id)
        if account_id in self.protected:
            self._log(relation, account_id, cursor, "protected")
            raise ProtectedError(account_id)
        ids = self.adjacency[relation].get(account_id, [])
        start = int(cursor) if cursor is not None else 0
        if start < 0 or start > len(ids):
            raise ValueError(f"bad cursor {cursor!r}")
        stop = start + self.page_size
        nxt = str(stop) if stop < len(ids) else None
        self._log(relation, account_id, cursor, "end" if nxt is None else "page")
        return ProviderPage(tuple(ids[start:stop]), nxt)

    def followers(self, account_id, cursor=None):
        return self._page(FOLLOWERS, account_id, cursor)

    def followees(self, account_id, cursor=None):
        return self._page(FOLLOWEES, account_id, cursor)


def parse_graph_fixture(text: str, path="<fixture>") -> dict:
    """Parse the line-oriented adjacency format.

    ``followers <id> <ids...>`` and ``followees <id> <ids...>`` declare relations;
    ``protected <id>`` and ``suspended <id>`` mark restricted accounts. ``#`` starts
    a comment.
    """
    out = {FOLLOWERS: {}, FOLLOWEES: {}, "protected": [], "suspended": []}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *rest = line.split()
        if kind in RELATIONS:
            if not rest:
                raise FixtureParseError(path, lineno, f"'{kind}' needs an account id")
            if rest[0] in rest[1:]:
                raise FixtureParseError(path, lineno, f"account {rest[0]} lists itself")
            out[kind].setdefault(rest[0], []).extend(rest[1:])
        elif kind in ("protected", "suspended"):
            if len(rest) != 1:
                raise FixtureParseError(path, lineno, f"'{kind}' takes exactly one id")
            out[kind].append(rest[0])
        else:
            raise FixtureParseError(path, lineno, f"unknown directive {kind!r}")
    return out


def open_fixture_provider(path, **kwargs) -> FixtureProvider:
    path = Path(path)
    parsed = parse_graph_fixture(path.read_text(encoding="utf-8"), path)
    return FixtureProvider(
        parsed[FOLLOWERS],
        parsed[FOLLOWEES],
        protected=parsed["protected"],
        suspended=parsed["suspended"],
        **kwargs,
    )


@dataclass(frozen=True)
class ExpansionPolicy:
    follower_depth: int = 1
    collect_followees_of_seeds: bool = True
    per_account_page_limit: int | None = None

    def __post_init__(self):
        if self.follower_depth not in (1, 2):
            raise ValueError("follower_depth must be 1 or 2")
        if self.per_account_page_limit is not None and self.per_account_page_limit < 1:
            raise ValueError("per_account_page_limit must be positive or None")

    def to_dict(self) -> dict:
        return {
            "follower_depth": self.follower_depth,
            "collect_followees_of_seeds": self.collect_followees_of_seeds,
            "per_account_page_limit": self.per_account_page_limit,
        }


def seed_set(ids: Iterable[str]) -> tuple[str, ...]:
    ids = list(ids)
    if not ids:
        raise ValueError("seed set is empty")
    if len(set(ids)) != len(ids):
        raise ValueError("seed set contains duplicates")
    for i in ids:
        check_account_id(i)
    return tuple(ids)


@dataclass
class FrontierItem:
    account_id: str
    relation: str
    cursor: str | None = None
    hop: int = 0
    pages: int = 0

    @property
    def key(self) -> tuple[str, str]:
        return (self.account_id, self.relation)


@dataclass
class CrawlState:
    seeds: tuple[str, ...]
    policy: ExpansionPolicy
    frontier: deque[FrontierItem] = field(default_factory=deque)
    visited: set[tuple[str, str]] = field(default_factory=set)
    accounts: dict[str, str] = field(default_factory=dict)
    edges: set[DirectedEdge] = field(default_factory=set)

    @classmethod
    def initial(cls, seeds: Iterable[str], policy: ExpansionPolicy) -> "CrawlState":
        seeds = seed_set(seeds)
        state = cls(seeds=seeds, policy=policy)
        for s in seeds:
            state.accounts[s] = "ok"
            state.frontier.append(FrontierItem(s, FOLLOWERS))
        if policy.collect_followees_of_seeds:
            for s in seeds:
                state.frontier.append(FrontierItem(s, FOLLOWEES))
        return state

    @property
    def done(self) -> bool:
        return not self.frontier

    def queued(self) -> set[tuple[str, str]]:
        return {item.key for item in self.frontier}

    def check(self):
        keys = [item.key for item in self.frontier]
        if len(set(keys)) != len(keys):
            raise CorruptStateError("duplicate frontier entries")
        if set(keys) & self.visited:
            raise CorruptStateError("frontier and visited overlap")
        for e in self.edges:
            if e.follower not in self.accounts or e.followee not in self.accounts:
                raise CorruptStateError(f"edge {e.follower}->{e.followee} references unknown account")
        for s in self.seeds:
            if s not in self.accounts:
                raise CorruptStateError(f"seed {s} missing from accounts")
        for item in self.frontier:
            if item.relation not in RELATIONS:
                raise CorruptStateError(f"bad relation {item.relation!r}")

    def to_json(self) -> str:
        doc = {
            "version": STATE_VERSION,
            "seeds": list(self.seeds),
            "policy": self.policy.to_dict(),
            "frontier": [[i.account_id, i.relation, i.cursor, i.hop, i.pages] for i in self.frontier],
            "visited": sorted([list(k) for k in self.visited]),
            "accounts": dict(sorted(self.accounts.items())),
            "edges": sorted([e.follower, e.followee] for e in self.edges),
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CrawlState":
        try:
            doc = json.loads(text)
            if doc.get("version") != STATE_VERSION:
                raise CorruptStateError(f"unsupported crawl state version {doc.get('version')!r}")
            state = cls(
                seeds=seed_set(doc["seeds"]),
                policy=ExpansionPolicy(**doc["policy"]),
                frontier=deque(FrontierItem(*row) for row in doc["frontier"]),
                visited={tuple(k) for k in doc["visited"]},
                accounts=dict(doc["accounts"]),
                edges={DirectedEdge(f, g) for f, g in doc["edges"]},
            )
        except CorruptStateError:
            raise
        except (KeyError, TypeError, ValueError, GraphError) as exc:
            raise CorruptStateError(f"unreadable crawl state: {exc}") from exc
        state.check()
        return state

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CrawlState":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


class Crawler:
    """Drives a :class:`CrawlState` to completion against a provider.

    Each round takes up to ``max_in_flight`` frontier heads, fetches one page for
    each concurrently, and applies the results in completion order. The state is
    consistent between rounds, so it can be saved after any ``run`` call.
    """

    def __init__(
        self,
        provider: GraphProvider,
        state: CrawlState,
        *,
        retry: RetryPolicy = RetryPolicy(),
        max_in_flight: int = 4,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be positive")
        self.provider = provider
        self.state = state
        self.retry = retry
        self.max_in_flight = max_in_flight
        self.sleep = sleep
        self.rng = rng or random.Random(0)
        self.requests = 0
        self._in_flight: set[tuple[str, str]] = set()

    def _fetch(self, item: FrontierItem):
        fn = self.provider.followers if item.relation == FOLLOWERS else self.provider.followees
        try:
            return call_with_retry(lambda: fn(item.account_id, item.cursor), self.retry, sleep=self.sleep, rng=self.rng)
        except ACCOUNT_ERRORS + (RetriesExhausted,) as exc:
            return exc

    def _apply(self, item: FrontierItem, outcome) -> bool:
        """Fold one fetch outcome into the state; return True if ``item`` is finished."""
        st = self.state
        if isinstance(outcome, Exception):
            log.info("%s(%s) failed: %s", item.relation, item.account_id, outcome)
            if st.accounts.get(item.account_id, "ok") == "ok":
                st.accounts[item.account_id] = outcome.status
            st.visited.add(item.key)
            return True
        queued = None
        for other in outcome.ids:
            st.accounts.setdefault(other, "ok")
            if item.relation == FOLLOWERS:
                st.edges.add(DirectedEdge(other, item.account_id))
                if item.hop + 1 < st.policy.follower_depth:
                    queued = queued if queued is not None else st.queued() | self._in_flight
                    key = (other, FOLLOWERS)
                    if key not in st.visited and key not in queued:
                        st.frontier.append(FrontierItem(other, FOLLOWERS, hop=item.hop + 1))
                        queued.add(key)
            else:
                st.edges.add(DirectedEdge(item.account_id, other))
        item.pages += 1
        limit = st.policy.per_account_page_limit
        if outcome.next_cursor is None or (limit is not None and item.pages >= limit):
            st.visited.add(item.key)
            return True
        item.cursor = outcome.next_cursor
        return False

    def run(self, max_requests: int | None = None) -> bool:
        """Fetch pages until the frontier is empty or ``max_requests`` pages are done.

        Returns True when the crawl is complete.
        """
        st = self.state
        budget = max_requests
        pool = ThreadPoolExecutor(self.max_in_flight) if self.max_in_flight > 1 else None
        try:
            while st.frontier and (budget is None or budget > 0):
                k = self.max_in_flight if budget is None else min(self.max_in_flight, budget)
                batch = [st.frontier.popleft() for _ in range(min(k, len(st.frontier)))]
                self._in_flight = {item.key for item in batch}
                if pool is None:
                    outcomes = [self._safe_fetch(batch[0])]
                else:
                    outcomes = list(pool.map(self._safe_fetch, batch))
                unfinished = []
                fatal = None
                for item, (ok, outcome) in zip(batch, outcomes):
                    if not ok:
                        fatal = fatal or outcome
                        unfinished.append(item)
                    elif not self._apply(item, outcome):
                        unfinished.append(item)
                st.frontier.extendleft(reversed(unfinished))
                self._in_flight = set()
                if fatal is not None:
                    raise fatal
                self.requests += len(batch)
                if budget is not None:
                    budget -= len(batch)
        finally:
            if pool is not None:
                pool.shutdown()
        return st.done

    def _safe_fetch(self, item):
        try:
            return True, self._fetch(item)
        except Exception as exc:  # fatal errors re-raised after the round is folded in
            return False, exc

    def result(self) -> tuple[list[AccountRecord], set[DirectedEdge]]:
        st = self.state
        seeds = set(st.seeds)
        accounts = [
            AccountRecord(i, is_seed=i in seeds, fetch_status=status)
            for i, status in sorted(st.accounts.items())
        ]
        return accounts, set(st.edges)


def expand_seeds(provider: GraphProvider, seeds: Iterable[str], policy: ExpansionPolicy = ExpansionPolicy(), **crawler_kw):
    """Run a full expansion; returns ``(accounts, edges, final_state)``."""
    crawler = Crawler(provider, CrawlState.initial(seeds, policy), **crawler_kw)
    crawler.run()
    accounts, edges = crawler.result()
    return accounts, edges, crawler.state


def resume_crawl(provider: GraphProvider, saved: CrawlState | str | Path, **crawler_kw):
    """Continue a saved crawl (state object or path to its JSON) to completion."""
    state = saved if isinstance(saved, CrawlState) else CrawlState.load(saved)
    state.check()
    crawler = Crawler(provider, state, **crawler_kw)
    crawler.run()
    accounts, edges = crawler.result()
    return accounts, edges, crawler.state
