"""End-to-end glue: crawl, score, infer thresholds, label."""

from __future__ import annotations

from boostnet.acquisition import ExpansionPolicy, GraphProvider, expand_seeds
from boostnet.graph import NetworkSnapshot, build_network
from boostnet.kde import DetectionConfig, ThresholdModel, classify_accounts, derive_threshold_model, scored_triples
from boostnet.scoring import ScoreCache, ScoreProvider, annotate_scores, score_accounts


def crawl_snapshot(provider: GraphProvider, seeds, policy: ExpansionPolicy = ExpansionPolicy(), **crawler_kw) -> NetworkSnapshot:
    accounts, edges, state = expand_seeds(provider, seeds, policy, **crawler_kw)
    return build_network(accounts, edges, state.seeds, policy.follower_depth)


def score_snapshot(snapshot: NetworkSnapshot, provider: ScoreProvider, cache: ScoreCache | None = None,
                   **kw) -> NetworkSnapshot:
    scored = score_accounts(provider, sorted(snapshot.accounts), cache, **kw)
    return annotate_scores(snapshot, scored)


def detect(snapshot: NetworkSnapshot, config: DetectionConfig = DetectionConfig(),
           rule: str = "all") -> tuple[NetworkSnapshot, ThresholdModel]:
    model = derive_threshold_model(scored_triples(snapshot), config)
    return classify_accounts(snapshot, model, rule), model
