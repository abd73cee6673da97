"""Command-line entry point.

Every subcommand reads and writes files so the stages compose::

    boostnet synth --out data
    boostnet expand --seeds data/seeds.txt --provider fixture:data/graph.txt --depth 2 --out snap
    boostnet score snap --scores fixture:data/scores.txt --out snap
    boostnet detect snap --out model.json
    boostnet classify snap --model model.json --out snap
    boostnet eval snap --truth data/truth.csv
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from boostnet.acquisition import (
    CorruptStateError,
    Crawler,
    CrawlState,
    ExpansionPolicy,
    FixtureParseError,
    open_fixture_provider,
)
from boostnet.export import (
    SnapshotFormatError,
    emit_density_artifacts,
    export_accounts_jsonl,
    export_edges_csv,
    export_graphml,
    load_snapshot,
    save_snapshot,
    summary_report,
)
from boostnet.graph import (
    GraphError,
    build_network,
    degree_filter,
    detect_communities,
    network_stats,
    percentage_of,
)
from boostnet.kde import (
    DetectionConfig,
    InsufficientDataError,
    ThresholdModel,
    classify_accounts,
    derive_threshold_model,
    pairwise_density_grids,
    scored_triples,
)
from boostnet.providers import ProviderError
from boostnet.scoring import ScoreCache, ScoreFixtureError, annotate_scores, open_score_fixture, score_accounts
from boostnet.synth import GroundTruth, SyntheticConfig, evaluate_detection, generate_synthetic

log = logging.getLogger("boostnet")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_PROVIDER = 4
EXIT_INSUFFICIENT = 5

DEFAULTS = {
    "depth": 1,
    "followees": "on",
    "rule": "all",
    "min_degree": 0,
    "rng_seed": 0,
    "page_size": 5000,
    "max_in_flight": 4,
    "detection": {},
    "synth": {},
}


class UsageError(Exception):
    pass


def _provider_spec(spec: str) -> tuple[str, str]:
    kind, sep, target = spec.partition(":")
    if not sep or kind not in ("fixture", "rest") or not target:
        raise UsageError(f"provider spec must look like fixture:PATH, got {spec!r}")
    return kind, target


def effective_config(args: argparse.Namespace, keys) -> dict:
    """Flags beat the ``--config`` JSON document, which beats built-in defaults."""
    cfg = {k: DEFAULTS[k] for k in keys if k in DEFAULTS}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        cfg.update({k: v for k, v in doc.items() if k in keys})
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _provenance(command: str, cfg: dict) -> dict:
    return {"command": command, "config": cfg}


def _detection_config(cfg: dict) -> DetectionConfig:
    d = dict(cfg.get("detection") or {})
    if "score_range" in d:
        d["score_range"] = tuple(d["score_range"])
    try:
        return DetectionConfig(**d)
    except TypeError as exc:
        raise UsageError(f"bad detection config: {exc}") from exc


def cmd_synth(args):
    cfg = effective_config(args, ["synth"])
    synth = dict(cfg["synth"])
    if args.rng_seed is not None:
        synth["rng_seed"] = args.rng_seed
    try:
        config = SyntheticConfig.from_dict(synth)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    paths = generate_synthetic(config).write(args.out)
    (Path(args.out) / "synth_config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
    for name, p in paths.items():
        print(f"{name}: {p}")


def cmd_expand(args):
    cfg = effective_config(args, ["depth", "followees", "page_size", "max_in_flight", "seeds", "provider"])
    if not cfg.get("seeds") or not cfg.get("provider"):
        raise UsageError("expand needs --seeds and --provider")
    if cfg["followees"] not in ("on", "off"):
        raise UsageError("--followees must be on or off")
    kind, target = _provider_spec(cfg["provider"])
    if kind == "fixture":
        provider = open_fixture_provider(target, page_size=int(cfg["page_size"]))
    else:
        from boostnet.rest import RestGraphProvider
        provider = RestGraphProvider(target)
    seeds = [ln.split("#", 1)[0].strip() for ln in Path(cfg["seeds"]).read_text(encoding="utf-8").splitlines()]
    seeds = [s for s in seeds if s]
    policy = ExpansionPolicy(follower_depth=int(cfg["depth"]), collect_followees_of_seeds=cfg["followees"] == "on")
    if args.state and Path(args.state).exists():
        state = CrawlState.load(args.state)
    else:
        state = CrawlState.initial(seeds, policy)
    crawler = Crawler(provider, state, max_in_flight=int(cfg["max_in_flight"]))
    try:
        crawler.run(args.max_requests)
    finally:
        if args.state:
            state.save(args.state)
    if not state.done:
        print(f"crawl paused with {len(state.frontier)} pending fetches; state in {args.state}")
        return
    accounts, edges = crawler.result()
    snap = build_network(accounts, edges, state.seeds, state.policy.follower_depth)
    save_snapshot(snap, args.out, _provenance("expand", cfg))
    print(f"{len(snap.accounts)} accounts, {len(snap.edges)} edges -> {args.out}")


def cmd_score(args):
    cfg = effective_config(args, ["scores", "cache", "max_in_flight"])
    if not cfg.get("scores"):
        raise UsageError("score needs --scores")
    kind, target = _provider_spec(cfg["scores"])
    if kind != "fixture":
        raise UsageError("only fixture score providers are supported")
    provider = open_score_fixture(target)
    snap = load_snapshot(args.snapshot)
    cache = ScoreCache.load(cfg["cache"]) if cfg.get("cache") else ScoreCache()
    scored = score_accounts(provider, sorted(snap.accounts), cache, max_in_flight=int(cfg["max_in_flight"]))
    if cfg.get("cache"):
        cache.save(cfg["cache"])
    snap = annotate_scores(snap, scored)
    save_snapshot(snap, args.out or args.snapshot, _provenance("score", cfg))
    n = sum(r.scores is not None for r in snap.accounts.values())
    print(f"scored {n} of {len(snap.accounts)} accounts")


def cmd_detect(args):
    cfg = effective_config(args, ["detection"])
    snap = load_snapshot(args.snapshot)
    model = derive_threshold_model(scored_triples(snap), _detection_config(cfg))
    text = model.to_json(provenance=_provenance("detect", cfg))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_model(path) -> ThresholdModel:
    try:
        return ThresholdModel.from_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError) as exc:
        raise SnapshotFormatError(f"cannot read threshold model {path}: {exc}") from exc


def cmd_classify(args):
    cfg = effective_config(args, ["rule"])
    if cfg["rule"] not in ("all", "two-of-three"):
        raise UsageError("--rule must be all or two-of-three")
    snap = load_snapshot(args.snapshot)
    labeled = classify_accounts(snap, _load_model(args.model), cfg["rule"])
    save_snapshot(labeled, args.out or args.snapshot, _provenance("classify", cfg))
    bots = sum(r.label == "socialbot" for r in labeled.accounts.values())
    print(f"{bots} socialbots among {len(labeled.accounts)} accounts")


def cmd_report(args):
    names = args.name or []
    snaps = [load_snapshot(p) for p in args.snapshots]
    datasets = [(names[i] if i < len(names) else Path(p).name, s) for i, (p, s) in enumerate(zip(args.snapshots, snaps))]
    text = summary_report(datasets).render()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_export(args):
    cfg = effective_config(args, ["min_degree", "rng_seed"])
    snap = load_snapshot(args.snapshot)
    full = network_stats(snap)
    view = degree_filter(snap, int(cfg["min_degree"]))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_accounts_jsonl(view, out / "accounts.jsonl")
    export_edges_csv(view, out / "edges.csv")
    community = detect_communities(view, int(cfg["rng_seed"])) if view.accounts else None
    export_graphml(view, out / "network.graphml", community)
    stats = {
        "full": full,
        "filtered": network_stats(view),
        "min_degree": int(cfg["min_degree"]),
        "visible_nodes": percentage_of(len(view.accounts), full["node_count"]) if full["node_count"] else None,
        "visible_edges": percentage_of(len(view.edges), full["edge_count"]) if full["edge_count"] else None,
        "community_count": community.community_count if community else 0,
        "provenance": _provenance("export", cfg),
    }
    (out / "stats.json").write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    print(f"{len(view.accounts)} nodes ({stats['visible_nodes']}), {len(view.edges)} edges ({stats['visible_edges']})")


def cmd_density(args):
    cfg = effective_config(args, ["detection"])
    snap = load_snapshot(args.snapshot)
    grids = pairwise_density_grids(scored_triples(snap), _detection_config(cfg))
    model = _load_model(args.model) if args.model else None
    for p in emit_density_artifacts(grids, args.out, model, _provenance("density", cfg)):
        print(p)


def cmd_eval(args):
    snap = load_snapshot(args.snapshot)
    truth = GroundTruth.from_csv(Path(args.truth).read_text(encoding="utf-8"))
    report = evaluate_detection(snap, truth).to_dict()
    report["provenance"] = _provenance("eval", {"truth": args.truth})
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boostnet", description="Socialbot network bootstrapping and detection.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON config document; flags override it")
        sp.set_defaults(func=fn)
        return sp

    sp = add("synth", cmd_synth, "generate a planted-botnet fixture set")
    sp.add_argument("--out", required=True)
    sp.add_argument("--rng-seed", dest="rng_seed", type=int)

    sp = add("expand", cmd_expand, "expand seed accounts into a follower network")
    sp.add_argument("--seeds")
    sp.add_argument("--provider", help="fixture:PATH or rest:URL")
    sp.add_argument("--depth", type=int, choices=(1, 2))
    sp.add_argument("--followees", choices=("on", "off"))
    sp.add_argument("--page-size", dest="page_size", type=int)
    sp.add_argument("--max-in-flight", dest="max_in_flight", type=int)
    sp.add_argument("--state", help="crawl state JSON; resumed if present, saved on exit")
    sp.add_argument("--max-requests", dest="max_requests", type=int, help="pause after this many page fetches")
    sp.add_argument("--out", required=True)

    sp = add("score", cmd_score, "attach classifier scores to a snapshot")
    sp.add_argument("snapshot")
    sp.add_argument("--scores", help="fixture:PATH")
    sp.add_argument("--cache")
    sp.add_argument("--max-in-flight", dest="max_in_flight", type=int)
    sp.add_argument("--out")

    sp = add("detect", cmd_detect, "infer per-axis thresholds")
    sp.add_argument("snapshot")
    sp.add_argument("--out")

    sp = add("classify", cmd_classify, "label accounts with a threshold model")
    sp.add_argument("snapshot")
    sp.add_argument("--model", required=True)
    sp.add_argument("--rule", choices=("all", "two-of-three"))
    sp.add_argument("--out")

    sp = add("report", cmd_report, "render the accounts/bots summary table")
    sp.add_argument("snapshots", nargs="+")
    sp.add_argument("--name", action="append", help="dataset name, once per snapshot")
    sp.add_argument("--out")

    sp = add("export", cmd_export, "write JSONL, CSV, GraphML and stats")
    sp.add_argument("snapshot")
    sp.add_argument("--min-degree", dest="min_degree", type=int)
    sp.add_argument("--rng-seed", dest="rng_seed", type=int)
    sp.add_argument("--out", required=True)

    sp = add("density", cmd_density, "write pairwise density CSV and SVG heatmaps")
    sp.add_argument("snapshot")
    sp.add_argument("--model")
    sp.add_argument("--out", required=True)

    sp = add("eval", cmd_eval, "compare labels against ground truth")
    sp.add_argument("snapshot")
    sp.add_argument("--truth", required=True)
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "report" and len(args.snapshots) > 2:
        print("report takes one or two snapshots", file=sys.stderr)
        return EXIT_USAGE
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (FixtureParseError, ScoreFixtureError, CorruptStateError, SnapshotFormatError, GraphError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
