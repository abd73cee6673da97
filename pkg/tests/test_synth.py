import random

import numpy as np
import pytest

from boostnet.acquisition import parse_graph_fixture
from boostnet.graph import AccountRecord, ScoreTriple, build_network
from boostnet.scoring import parse_score_fixture
from boostnet.synth import (
    GroundTruth,
    SyntheticConfig,
    UnknownAccountError,
    confusion_report,
    estimate_user_base,
    evaluate_detection,
    generate_synthetic,
    truncated_normal,
)

SMALL = dict(n_humans=500, n_bots=100, n_seeds=5, rng_seed=42)


def test_counts_and_determinism(tmp_path):
    a = generate_synthetic(SyntheticConfig(**SMALL))
    b = generate_synthetic(SyntheticConfig(**SMALL))
    assert len(a.truth.labels) == 600
    assert a.graph_text == b.graph_text and a.scores_text == b.scores_text
    pa = a.write(tmp_path / "a")
    pb = b.write(tmp_path / "b")
    for key in pa:
        assert pa[key].read_bytes() == pb[key].read_bytes()
    parsed = parse_graph_fixture(a.graph_text)
    assert len(parsed["followers"]) == 600
    assert len(parse_score_fixture(a.scores_text)) == 600


def test_different_seed_differs():
    assert generate_synthetic(SyntheticConfig(**SMALL)).graph_text != generate_synthetic(
        SyntheticConfig(**{**SMALL, "rng_seed": 43})).graph_text


def test_seeds_are_bots():
    ds = generate_synthetic(SyntheticConfig(**SMALL))
    assert len(ds.seeds) == 5
    assert all(ds.truth.labels[s] == "socialbot" for s in ds.seeds)


def test_human_seed_contamination():
    ds = generate_synthetic(SyntheticConfig(**SMALL, n_human_seeds=2))
    assert sorted(ds.truth.labels[s] for s in ds.seeds) == ["human"] * 2 + ["socialbot"] * 5


def test_bots_follow_bots_more_than_humans_follow_bots():
    cfg = SyntheticConfig(n_humans=500, n_bots=100, p_bot_follows_bot=0.2, p_cross=0.001, rng_seed=1)
    ds = generate_synthetic(cfg)
    parsed = parse_graph_fixture(ds.graph_text)
    lab = ds.truth.labels
    bb = hb = 0
    for src, outs in parsed["followees"].items():
        for dst in outs:
            if lab[dst] == "socialbot":
                if lab[src] == "socialbot":
                    bb += 1
                else:
                    hb += 1
    assert bb / 100 > hb / 500


def test_fixture_consistency():
    ds = generate_synthetic(SyntheticConfig(**SMALL))
    parsed = parse_graph_fixture(ds.graph_text)
    from_followers = {(f, g) for g, fs in parsed["followers"].items() for f in fs}
    from_followees = {(f, g) for f, gs in parsed["followees"].items() for g in gs}
    assert from_followers == from_followees == ds.edges


def test_score_distributions():
    ds = generate_synthetic(SyntheticConfig(n_humans=3000, n_bots=1000, rng_seed=5))
    bots = np.array([ds.scores[i] for i, lab in ds.truth.labels.items() if lab == "socialbot"])
    humans = np.array([ds.scores[i] for i, lab in ds.truth.labels.items() if lab == "human"])
    assert np.all((bots >= 0) & (bots <= 1)) and np.all((humans >= 0) & (humans <= 1))
    assert np.allclose(bots.mean(axis=0), 0.85, atol=0.02)
    assert np.allclose(humans.mean(axis=0), 0.2, atol=0.02)


def test_truncated_normal_clamps_pathological():
    out = truncated_normal(np.random.default_rng(0), 5.0, 0.01, 10)
    assert np.all(out == 1.0)


@pytest.mark.parametrize(
    "bad",
    [dict(n_seeds=0), dict(n_seeds=101), dict(p_cross=1.5), dict(bot_score_sd=0), dict(human_score_mean=1.2),
     dict(n_humans=0)],
)
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SyntheticConfig(**{**SMALL, **bad})


def test_config_dict_roundtrip():
    cfg = SyntheticConfig(**SMALL, bot_score_mean=(0.8, 0.85, 0.9))
    assert SyntheticConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        SyntheticConfig.from_dict({"n_people": 4})


def _labeled(pairs):
    """pairs: id -> predicted label (or 'unknown')."""
    recs = [AccountRecord(i, scores=None if lab == "unknown" else ScoreTriple(0.5, 0.5, 0.5), label=lab)
            for i, lab in pairs.items()]
    return build_network(recs, [], [next(iter(pairs))])


def test_perfect_labels():
    truth = GroundTruth({"a": "socialbot", "b": "human"})
    rep = evaluate_detection(_labeled({"a": "socialbot", "b": "human"}), truth)
    assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)


def test_formula_case():
    rep = confusion_report(90, 10, 10, 890)
    assert rep.precision == pytest.approx(0.9) and rep.recall == pytest.approx(0.9) and rep.f1 == pytest.approx(0.9)


def test_undefined_metrics_absent():
    rep = confusion_report(0, 0, 5, 10)
    assert rep.precision is None and rep.recall == 0.0 and rep.f1 is None
    assert confusion_report(0, 0, 0, 3).recall is None


def test_unknown_labels_skipped_and_missing_truth_rejected():
    truth = GroundTruth({"a": "socialbot", "b": "human"})
    rep = evaluate_detection(_labeled({"a": "socialbot", "b": "human", "c": "unknown"}), truth)
    assert rep.tp + rep.fp + rep.fn + rep.tn == 2
    with pytest.raises(UnknownAccountError, match="zz"):
        evaluate_detection(_labeled({"a": "socialbot", "zz": "human"}), truth)


def test_random_labels_recount():
    rng = random.Random(13)
    ids = [f"x{i}" for i in range(400)]
    truth = GroundTruth({i: rng.choice(["human", "socialbot"]) for i in ids})
    pred = {i: rng.choice(["human", "socialbot", "unknown"]) for i in ids}
    rep = evaluate_detection(_labeled(pred), truth)
    counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for i in ids:
        p, t = pred[i], truth.labels[i]
        if p == "unknown":
            continue
        key = ("t" if (p == "socialbot") == (t == "socialbot") else "f") + ("p" if p == "socialbot" else "n")
        counts[key] += 1
    assert (rep.tp, rep.fp, rep.fn, rep.tn) == (counts["tp"], counts["fp"], counts["fn"], counts["tn"])


def test_truth_csv_roundtrip():
    truth = GroundTruth({"2": "human", "1": "socialbot"})
    text = truth.to_csv()
    assert text == "id,label\n1,socialbot\n2,human\n"
    assert GroundTruth.from_csv(text).labels == truth.labels


def test_user_base():
    assert estimate_user_base(4_500_000, 0.0524) == 235_800
    assert abs(250_000 - 235_800) / 235_800 <= 0.10
    assert estimate_user_base(123_457, 1.0) == 123_457
    assert estimate_user_base(1_000_000, 0.0524) == 52_400
    with pytest.raises(ValueError):
        estimate_user_base(100, 0.0)
