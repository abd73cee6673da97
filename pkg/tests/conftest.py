import random

import pytest

from boostnet.acquisition import FixtureProvider
from boostnet.graph import AccountRecord, ScoreTriple, build_network

_acceptance_lines = []


def random_follow_graph(n, p, seed, prefix="u"):
    """Directed Erdos-Renyi follow graph as (ids, edge set of (follower, followee))."""
    rng = random.Random(seed)
    ids = [f"{prefix}{i}" for i in range(n)]
    edges = {(a, b) for a in ids for b in ids if a != b and rng.random() < p}
    return ids, edges


def adjacency(ids, edges):
    followers = {i: [] for i in ids}
    followees = {i: [] for i in ids}
    for f, g in sorted(edges):
        followers[g].append(f)
        followees[f].append(g)
    return followers, followees


def fixture_text(ids, edges):
    followers, followees = adjacency(ids, edges)
    lines = []
    for i in ids:
        lines.append(" ".join(["followers", i, *followers[i]]))
        lines.append(" ".join(["followees", i, *followees[i]]))
    return "\n".join(lines) + "\n"


def provider_for(ids, edges, **kw):
    followers, followees = adjacency(ids, edges)
    return FixtureProvider(followers, followees, **kw)


def no_sleep(_seconds):
    pass


def snapshot_from(ids, edges, seeds=None, scores=None, labels=None):
    scores = scores or {}
    labels = labels or {}
    recs = [AccountRecord(i, scores=scores.get(i), label=labels.get(i, "unknown")) for i in ids]
    return build_network(recs, edges, seeds or [ids[0]])


def random_scored_snapshot(n, seed, bot_fraction=0.2):
    rng = random.Random(seed)
    ids, edges = random_follow_graph(n, 0.02, seed)
    scores, labels = {}, {}
    for i in ids:
        if rng.random() < 0.9:
            scores[i] = ScoreTriple(rng.random(), rng.random(), rng.random())
            labels[i] = "socialbot" if rng.random() < bot_fraction else "human"
    return snapshot_from(ids, edges, scores=scores, labels=labels)


@pytest.fixture
def sleepless():
    return no_sleep


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    title = dict(report.user_properties).get("criterion")
    if title:
        status = "PASS" if report.passed else "FAIL"
        _acceptance_lines.append(f"[{status}] {title}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("] ")[1].split(".")[0])):
            terminalreporter.write_line(line)
