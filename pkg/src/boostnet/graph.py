"""Account, edge and snapshot types plus the graph analytics run on them."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Mapping

LABELS = ("unknown", "human", "socialbot")
FETCH_STATUSES = ("ok", "protected", "suspended", "not_found", "error")


class GraphError(ValueError):
    """Raised when accounts, edges or seeds violate the snapshot invariants."""


def check_account_id(value: str) -> str:
    if not isinstance(value, str) or not value:
        raise GraphError(f"account id must be a non-empty string, got {value!r}")
    if any(ch.isspace() for ch in value):
        raise GraphError(f"account id {value!r} contains whitespace")
    return value


@dataclass(frozen=True)
class ScoreTriple:
    temporal: float
    network: float
    friend: float

    def __post_init__(self):
        for name in ("temporal", "network", "friend"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v) or not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} score {v!r} outside [0, 1]")
            object.__setattr__(self, name, float(v))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.temporal, self.network, self.friend)

    def to_dict(self) -> dict:
        return {"temporal": self.temporal, "network": self.network, "friend": self.friend}


@dataclass(frozen=True)
class AccountRecord:
    id: str
    is_seed: bool = False
    scores: ScoreTriple | None = None
    label: str = "unknown"
    fetch_status: str = "ok"

    def __post_init__(self):
        check_account_id(self.id)
        if self.label not in LABELS:
            raise GraphError(f"unknown label {self.label!r} for {self.id}")
        if self.fetch_status not in FETCH_STATUSES:
            raise GraphError(f"unknown fetch status {self.fetch_status!r} for {self.id}")
        if self.label != "unknown" and self.scores is None:
            raise GraphError(f"account {self.id} is labeled {self.label} but has no scores")


@dataclass(frozen=True, order=True)
class DirectedEdge:
    """``follower`` follows ``followee``."""

    follower: str
    followee: str

    def __post_init__(self):
        check_account_id(self.follower)
        check_account_id(self.followee)
        if self.follower == self.followee:
            raise GraphError(f"self-follow edge on {self.follower}")


@dataclass(frozen=True)
class NetworkSnapshot:
    accounts: Mapping[str, AccountRecord]
    edges: frozenset[DirectedEdge]
    seeds: tuple[str, ...]
    created_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    expansion_depth: int = 1

    def __post_init__(self):
        for key, rec in self.accounts.items():
            if key != rec.id:
                raise GraphError(f"account keyed {key!r} has id {rec.id!r}")
        for e in self.edges:
            for end in (e.follower, e.followee):
                if end not in self.accounts:
                    raise GraphError(f"edge endpoint {end} missing from accounts")
        for s in self.seeds:
            rec = self.accounts.get(s)
            if rec is None or not rec.is_seed:
                raise GraphError(f"seed {s} missing or not flagged as seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise GraphError("duplicate seed ids")
        if self.expansion_depth < 1:
            raise GraphError("expansion_depth must be positive")

    def __len__(self):
        return len(self.accounts)

    def degrees(self) -> dict[str, int]:
        deg = dict.fromkeys(self.accounts, 0)
        for e in self.edges:
            deg[e.follower] += 1
            deg[e.followee] += 1
        return deg

    def with_accounts(self, accounts: Iterable[AccountRecord]) -> "NetworkSnapshot":
        """Copy of the snapshot with account records replaced (edges and seeds kept)."""
        recs = dict(self.accounts)
        for rec in accounts:
            if rec.id not in recs:
                raise GraphError(f"account {rec.id} not in snapshot")
            recs[rec.id] = rec
        return replace(self, accounts=recs)


@dataclass(frozen=True)
class CommunityAssignment:
    mapping: Mapping[str, int]
    community_count: int

    def __post_init__(self):
        if set(self.mapping.values()) != set(range(self.community_count)):
            raise GraphError("community indices are not dense 0..count-1")


def build_network(
    accounts: Iterable[AccountRecord],
    edges: Iterable[DirectedEdge | tuple[str, str]],
    seeds: Iterable[str],
    depth: int = 1,
    created_at: datetime | None = None,
) -> NetworkSnapshot:
    """Assemble a validated snapshot.

    Duplicate account records resolve last-write-wins; duplicate edges collapse.
    Seed records are forced to ``is_seed=True``.
    """
    seeds = tuple(dict.fromkeys(seeds))
    if not seeds:
        raise GraphError("seed list is empty")
    recs: dict[str, AccountRecord] = {}
    for rec in accounts:
        recs[rec.id] = rec
    for s in seeds:
        if s not in recs:
            raise GraphError(f"seed {s} missing from accounts")
        if not recs[s].is_seed:
            recs[s] = replace(recs[s], is_seed=True)
    edge_set = set()
    for e in edges:
        if not isinstance(e, DirectedEdge):
            e = DirectedEdge(*e)
        for end in (e.follower, e.followee):
            if end not in recs:
                raise GraphError(f"edge {e.follower}->{e.followee} references missing account {end}")
        edge_set.add(e)
    return NetworkSnapshot(
        accounts=recs,
        edges=frozenset(edge_set),
        seeds=seeds,
        created_at=created_at or datetime.now(timezone.utc),
        expansion_depth=depth,
    )


def network_stats(snapshot: NetworkSnapshot) -> dict:
    hist = Counter(snapshot.degrees().values())
    return {
        "node_count": len(snapshot.accounts),
        "edge_count": len(snapshot.edges),
        "degree_histogram": dict(sorted(hist.items())),
    }


def degree_filter(snapshot: NetworkSnapshot, min_degree: int) -> NetworkSnapshot:
    """Keep nodes whose total degree in ``snapshot`` is at least ``min_degree``.

    Edges survive only when both endpoints do. Seeds that are dropped are removed
    from the seed list of the result.
    """
    if min_degree < 0:
        raise ValueError("min_degree must be non-negative")
    deg = snapshot.degrees()
    keep = {a for a, d in deg.items() if d >= min_degree}
    return replace(
        snapshot,
        accounts={a: r for a, r in snapshot.accounts.items() if a in keep},
        edges=frozenset(e for e in snapshot.edges if e.follower in keep and e.followee in keep),
        seeds=tuple(s for s in snapshot.seeds if s in keep),
    )


def percentage_of(part: int, whole: int) -> str:
    """Format ``100 * part / whole`` as ``"X.XX %"``, rounding half to even exactly."""
    if whole == 0:
        raise ZeroDivisionError("percentage of an empty whole")
    if not 0 <= part <= whole:
        raise ValueError(f"part {part} outside [0, {whole}]")
    q, r = divmod(10000 * part, whole)
    if 2 * r > whole or (2 * r == whole and q % 2 == 1):
        q += 1
    return f"{q // 100}.{q % 100:02d} %"


def detect_communities(snapshot: NetworkSnapshot, rng_seed: int = 0, max_iter: int = 100) -> CommunityAssignment:
    """Synchronous label propagation on the undirected view of the snapshot.

    Initial labels are a seeded permutation; each round every node adopts the most
    frequent label in its closed neighbourhood, lowest label winning ties. Stops on
    a fixed point, a period-2 oscillation, or ``max_iter`` rounds.
    """
    if not snapshot.accounts:
        raise GraphError("cannot detect communities on an empty snapshot")
    ids = sorted(snapshot.accounts)
    index = {a: i for i, a in enumerate(ids)}
    nbrs: list[set[int]] = [set() for _ in ids]
    for e in snapshot.edges:
        u, v = index[e.follower], index[e.followee]
        nbrs[u].add(v)
        nbrs[v].add(u)
    adj = [sorted(s) for s in nbrs]

    labels = list(range(len(ids)))
    random.Random(rng_seed).shuffle(labels)
    previous = None
    for _ in range(max_iter):
        new = []
        for i, ns in enumerate(adj):
            if not ns:
                new.append(labels[i])
                continue
            counts = Counter(labels[j] for j in ns)
            counts[labels[i]] += 1
            top = max(counts.values())
            new.append(min(lab for lab, c in counts.items() if c == top))
        if new == labels or new == previous:
            labels = new
            break
        previous, labels = labels, new

    dense: dict[int, int] = {}
    mapping = {}
    for a, lab in zip(ids, labels):
        mapping[a] = dense.setdefault(lab, len(dense))
    return CommunityAssignment(mapping=mapping, community_count=len(dense))


def intersect_snapshots(a: NetworkSnapshot, b: NetworkSnapshot) -> dict[str, set[str]]:
    shared = set(a.accounts) & set(b.accounts)
    bots = {
        i for i in shared
        if a.accounts[i].label == "socialbot" and b.accounts[i].label == "socialbot"
    }
    return {"shared_ids": shared, "shared_bot_ids": bots}
