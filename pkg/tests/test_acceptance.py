"""Acceptance suite: one test per criterion, each tagged so the run prints a pass/fail line."""

import json
import math
import time
from collections import deque

import networkx as nx
import numpy as np
import pytest

import test_properties
from boostnet.acquisition import (
    Crawler,
    CrawlState,
    ExpansionPolicy,
    expand_seeds,
    open_fixture_provider,
    resume_crawl,
)
from boostnet.cli import main
from boostnet.export import (
    SummaryReport,
    export_accounts_jsonl,
    export_edges_csv,
    export_graphml,
    read_accounts_jsonl,
    read_edges_csv,
)
from boostnet.graph import build_network, detect_communities, percentage_of
from boostnet.kde import bandwidth_scott, evaluate_kde1d, evaluate_kde2d, kde1d, kde2d
from boostnet.synth import estimate_user_base

from conftest import adjacency, fixture_text, no_sleep, provider_for, random_follow_graph, random_scored_snapshot
from test_export import FIXTURES
from test_kde import brute_kde1d, brute_kde2d

pytestmark = pytest.mark.acceptance


@pytest.fixture
def criterion(record_property):
    def tag(title):
        record_property("criterion", title)
    return tag


def test_kde_oracle_equivalence(criterion):
    criterion("1. KDE matches brute-force kernel sums")
    start = time.perf_counter()
    rng = np.random.default_rng(1000)
    x = rng.beta(2, 5, 1000)
    xy = np.column_stack([x, rng.beta(5, 2, 1000)])
    h = bandwidth_scott(x)
    hxy = (bandwidth_scott(xy[:, 0], 2), bandwidth_scott(xy[:, 1], 2))

    pts = rng.uniform(-0.1, 1.1, 100)
    np.testing.assert_allclose(evaluate_kde1d(x, h, pts), [brute_kde1d(x, h, p) for p in pts], rtol=1e-12, atol=0)
    pts2 = rng.uniform(-0.1, 1.1, (100, 2))
    np.testing.assert_allclose(evaluate_kde2d(xy, hxy, pts2), [brute_kde2d(xy, *hxy, a, b) for a, b in pts2],
                               rtol=1e-12, atol=0)

    # the grid builders are checked on 100 randomly drawn grid nodes
    g1 = kde1d(x, h, (0, 1), 512)
    idx = rng.choice(512, 100, replace=False)
    np.testing.assert_allclose(g1.density[idx], [brute_kde1d(x, h, g1.coords()[i]) for i in idx], rtol=1e-12)
    g2 = kde2d(xy, hxy, ((0, 1), (0, 1)), 256)
    ij = rng.choice(256 * 256, 100, replace=False)
    cx, cy = g2.coords(0), g2.coords(1)
    want = [brute_kde2d(xy, *hxy, cx[k // 256], cy[k % 256]) for k in ij]
    np.testing.assert_allclose(g2.density.ravel()[ij], want, rtol=1e-12)
    assert time.perf_counter() - start < 5.0


def test_density_normalization(criterion):
    criterion("2. 2D density integrates to one on a padded grid")
    for seed in range(10):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(50, 2000))
        xy = np.column_stack([rng.beta(rng.uniform(0.5, 5), rng.uniform(0.5, 5), n) for _ in range(2)])
        hx, hy = bandwidth_scott(xy[:, 0], 2), bandwidth_scott(xy[:, 1], 2)
        ranges = ((xy[:, 0].min() - 3 * hx, xy[:, 0].max() + 3 * hx),
                  (xy[:, 1].min() - 3 * hy, xy[:, 1].max() + 3 * hy))
        grid = kde2d(xy, (hx, hy), ranges, 256)
        total = np.trapezoid(np.trapezoid(grid.density, grid.coords(1), axis=1), grid.coords(0))
        assert 0.98 <= total <= 1.02, (seed, total)


def test_planted_botnet_recovery(criterion, tmp_path, capsys):
    criterion("3. planted botnet recovered end to end")
    start = time.perf_counter()
    data, snap = tmp_path / "data", tmp_path / "snap"
    assert main(["synth", "--out", str(data)]) == 0
    assert main(["expand", "--seeds", str(data / "seeds.txt"), "--provider", f"fixture:{data / 'graph.txt'}",
                 "--depth", "2", "--out", str(snap)]) == 0
    assert main(["score", str(snap), "--scores", f"fixture:{data / 'scores.txt'}"]) == 0
    assert main(["detect", str(snap), "--out", str(tmp_path / "model.json")]) == 0
    assert main(["classify", str(snap), "--model", str(tmp_path / "model.json")]) == 0
    assert main(["eval", str(snap), "--truth", str(data / "truth.csv"), "--out", str(tmp_path / "eval.json")]) == 0
    elapsed = time.perf_counter() - start

    cfg = json.loads((data / "synth_config.json").read_text())
    assert (cfg["n_humans"], cfg["n_bots"], cfg["rng_seed"]) == (5000, 1000, 42)
    model = json.loads((tmp_path / "model.json").read_text())
    report = json.loads((tmp_path / "eval.json").read_text())
    with capsys.disabled():
        print(f"\n  thresholds {model['thresholds']}  precision {report['precision']}  recall {report['recall']}"
              f"  {elapsed:.1f} s")
    assert all(0.40 <= t <= 0.65 for t in model["thresholds"].values())
    assert set(model["confidence"].values()) == {"bimodal"}
    assert report["precision"] >= 0.95 and report["recall"] >= 0.95
    assert elapsed < 30.0


def test_visibility_percentages(criterion):
    criterion("4. filtered-view percentages")
    assert percentage_of(14, 35208) == "0.04 %"
    assert percentage_of(100, 59471) == "0.17 %"


def test_summary_table_reference(criterion):
    criterion("5. summary table matches reference fixture")
    rep = SummaryReport((("April", 35208, 3009), ("November", 12044, 2154)), (3688, 646))
    assert rep.render().encode("utf-8") == (FIXTURES / "summary_table.txt").read_bytes()


def test_user_base_extrapolation(criterion):
    criterion("6. user-base extrapolation")
    est = estimate_user_base(4_500_000, 0.0524)
    assert est == 235_800
    assert abs(250_000 - est) / est <= 0.10


def _fixture_200(tmp_path):
    ids, edges = random_follow_graph(200, 0.015, seed=200)
    path = tmp_path / "graph200.txt"
    path.write_text(fixture_text(ids, edges), encoding="utf-8")
    return ids, path


def test_crawl_resumability(criterion, tmp_path):
    criterion("7. crawl resumes after every request")
    ids, path = _fixture_200(tmp_path)
    seeds, policy = ids[:3], ExpansionPolicy(2, True)

    def edges_bytes(accounts, edges, name):
        snap = build_network(accounts, edges, seeds, 2)
        return export_edges_csv(snap, tmp_path / name).read_bytes()

    full = open_fixture_provider(path, page_size=2)
    acc, edges, _ = expand_seeds(full, seeds, policy, sleep=no_sleep)
    want = edges_bytes(acc, edges, "full.csv")

    state_path = tmp_path / "state.json"
    CrawlState.initial(seeds, policy).save(state_path)
    steps = 0
    while True:
        state = CrawlState.load(state_path)
        if state.done:
            break
        Crawler(open_fixture_provider(path, page_size=2), state, max_in_flight=1, sleep=no_sleep).run(max_requests=1)
        state.save(state_path)
        steps += 1
    acc2, edges2, _ = resume_crawl(open_fixture_provider(path, page_size=2), state_path, sleep=no_sleep)
    assert steps == len(full.calls)  # one request per interruption
    assert edges_bytes(acc2, edges2, "resumed.csv") == want


def bfs_nodes(ids, edges, seeds, depth):
    """Hop-limited BFS over the follower relation, plus the seeds' followees."""
    followers, followees = adjacency(ids, edges)
    seen = set(seeds)
    queue = deque((s, 0) for s in seeds)
    while queue:
        node, hop = queue.popleft()
        if hop == depth:
            continue
        for f in followers[node]:
            if f not in seen:
                seen.add(f)
                queue.append((f, hop + 1))
    for s in seeds:
        seen.update(followees[s])
    return seen


def test_expansion_matches_bfs(criterion):
    criterion("8. expansion node sets match BFS")
    for seed in range(20):
        ids, edges = random_follow_graph(120, 0.02, seed=seed)
        seeds = ids[:3]
        for depth in (1, 2):
            acc, _, _ = expand_seeds(provider_for(ids, edges, page_size=7), seeds, ExpansionPolicy(depth, True), sleep=no_sleep)
            assert {a.id for a in acc} == bfs_nodes(ids, edges, seeds, depth), (seed, depth)


def test_export_roundtrips(criterion, tmp_path):
    criterion("9. JSONL, CSV and GraphML round-trips")
    snap = random_scored_snapshot(500, seed=9)
    accounts = read_accounts_jsonl(export_accounts_jsonl(snap, tmp_path / "a.jsonl"))
    assert {r.id: r for r in accounts} == dict(snap.accounts)
    assert read_edges_csv(export_edges_csv(snap, tmp_path / "e.csv")) == snap.edges

    g = nx.read_graphml(export_graphml(snap, tmp_path / "n.graphml", detect_communities(snap, 0)))
    assert set(g.nodes) == set(snap.accounts)
    assert set(g.edges) == {(e.follower, e.followee) for e in snap.edges}
    for aid, data in g.nodes(data=True):
        rec = snap.accounts[aid]
        assert data["label"] == rec.label
        if rec.scores is not None:
            assert math.isclose(float(data["temporal"]), rec.scores.temporal, rel_tol=0, abs_tol=0)


def test_invariant_suites(criterion):
    criterion("10. invariant property suites")
    tests = [getattr(test_properties, n) for n in dir(test_properties) if n.startswith("test_")]
    assert len(tests) >= 20
    for fn in tests:
        fn()
