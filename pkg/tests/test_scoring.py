import random

import pytest

from boostnet.graph import AccountRecord, ScoreTriple, build_network
from boostnet.providers import ProtectedError, TransientError
from boostnet.scoring import (
    FixtureScoreProvider,
    ScoreCache,
    ScoreFixtureError,
    annotate_scores,
    open_score_fixture,
    parse_score_fixture,
    score_accounts,
)

from conftest import no_sleep


def test_parse_line():
    table = parse_score_fixture("# header\n12345 0.10 0.20 0.30\n")
    assert table == {"12345": ScoreTriple(0.10, 0.20, 0.30)}
    assert table["12345"].temporal == 0.10 and table["12345"].friend == 0.30


def test_out_of_range_names_id():
    with pytest.raises(ScoreFixtureError, match="777") as info:
        parse_score_fixture("1 0.1 0.1 0.1\n777 1.5 0.2 0.3\n")
    assert info.value.account_id == "777" and info.value.lineno == 2


@pytest.mark.parametrize("line", ["1 0.1 0.2", "1 a b c", "1 0.1 0.2 0.3 0.4"])
def test_parse_errors_carry_line(line):
    with pytest.raises(ScoreFixtureError) as info:
        parse_score_fixture("# ok\n" + line + "\n")
    assert info.value.lineno == 2


def test_large_fixture_spot_check(tmp_path):
    rng = random.Random(47)
    rows = {str(10**9 + i): tuple(round(rng.random(), 6) for _ in range(3)) for i in range(47_000)}
    p = tmp_path / "scores.txt"
    p.write_text("".join(f"{k} {a:.6f} {b:.6f} {c:.6f}\n" for k, (a, b, c) in rows.items()))
    prov = open_score_fixture(p)
    assert len(prov.table) == 47_000
    for k in rng.sample(sorted(rows), 100):
        assert prov.scores(k) == pytest.approx(rows[k], abs=0)


def test_cached_ids_skip_provider():
    prov = FixtureScoreProvider({"a": ScoreTriple(0.1, 0.2, 0.3)})
    cache = ScoreCache()
    cache.put("a", ScoreTriple(0.5, 0.5, 0.5))
    out = score_accounts(prov, ["a"], cache)
    assert prov.calls == 0
    assert out == {"a": ScoreTriple(0.5, 0.5, 0.5)}


def test_empty_ids():
    assert score_accounts(FixtureScoreProvider({}), []) == {}


def test_thousand_ids_ten_percent_unknown():
    rng = random.Random(1)
    ids = [str(i) for i in range(1000)]
    unknown = set(rng.sample(ids, 100))
    table = {i: ScoreTriple(rng.random(), rng.random(), rng.random()) for i in ids if i not in unknown}
    prov = FixtureScoreProvider(table)
    cache = ScoreCache()
    out = score_accounts(prov, ids, cache)
    assert prov.calls == 1000
    assert sum(isinstance(v, ScoreTriple) for v in out.values()) == 900
    assert {k for k, v in out.items() if v == "not_found"} == unknown
    # warm cache: only the unknown ids go back to the provider
    again = score_accounts(prov, ids, cache)
    assert again == out
    assert prov.calls == 1100


def test_warm_cache_idempotent():
    table = {str(i): ScoreTriple(0.1, 0.2, 0.3) for i in range(50)}
    prov = FixtureScoreProvider(table)
    cache = ScoreCache()
    first = score_accounts(prov, list(table), cache)
    calls = prov.calls
    assert score_accounts(prov, list(table), cache) == first
    assert prov.calls == calls


class RawProvider:
    def __init__(self, values):
        self.values = values

    def scores(self, aid):
        v = self.values[aid]
        if isinstance(v, Exception):
            raise v
        return v


def test_out_of_range_provider_values_are_errors_not_clamped():
    prov = RawProvider({"ok": (0.1, 0.2, 0.3), "hot": (1.2, 0.5, 0.5), "nan": (float("nan"), 0, 0),
                        "lock": ProtectedError("lock"), "down": TransientError("x")})
    cache = ScoreCache()
    out = score_accounts(prov, ["ok", "hot", "nan", "lock", "down"], cache, sleep=no_sleep)
    assert out == {"ok": ScoreTriple(0.1, 0.2, 0.3), "hot": "error", "nan": "error", "lock": "protected",
                   "down": "error"}
    assert "hot" not in cache and "ok" in cache


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        score_accounts(FixtureScoreProvider({}), ["a", "a"])


def test_cache_file_roundtrip(tmp_path):
    cache = ScoreCache()
    cache.put("9", ScoreTriple(0.25, 0.5, 0.75))
    cache.put("1", ScoreTriple(0.0, 1.0, 0.3333333333333333))
    p = tmp_path / "cache.jsonl"
    cache.save(p)
    loaded = ScoreCache.load(p)
    assert loaded.entries == cache.entries
    assert p.read_text().splitlines()[0].startswith('{"id": "1"')
    assert len(ScoreCache.load(tmp_path / "missing.jsonl")) == 0


def test_annotate_scores():
    snap = build_network([AccountRecord("a"), AccountRecord("b")], [], ["a"])
    out = annotate_scores(snap, {"a": ScoreTriple(0.1, 0.1, 0.1), "b": "not_found"})
    assert out.accounts["a"].scores == ScoreTriple(0.1, 0.1, 0.1)
    assert out.accounts["b"].scores is None and out.accounts["b"].fetch_status == "not_found"
    assert snap.accounts["a"].scores is None
