"""Planted-botnet generator, detection scoring against ground truth, user-base arithmetic."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from boostnet.graph import NetworkSnapshot

ID_BASE = 100_000_000


def _triple(v) -> tuple[float, float, float]:
    if isinstance(v, (int, float)):
        return (float(v),) * 3
    t = tuple(float(x) for x in v)
    if len(t) != 3:
        raise ValueError("per-axis values need exactly three entries")
    return t


@dataclass(frozen=True)
class SyntheticConfig:
    """Block-model follower graph with a planted botnet.

    Bots follow each other densely and pile onto the seeds; humans follow humans
    and rarely follow bots (``p_cross`` applies in both directions). Score means
    and sds are (temporal, network, friend) triples or one scalar for all axes.
    """

    n_humans: int = 5000
    n_bots: int = 1000
    p_human_follows_human: float = 0.002
    p_bot_follows_bot: float = 0.02
    p_bot_follows_seed: float = 0.5
    p_cross: float = 0.001
    human_score_mean: tuple[float, float, float] | float = 0.2
    human_score_sd: tuple[float, float, float] | float = 0.1
    bot_score_mean: tuple[float, float, float] | float = 0.85
    bot_score_sd: tuple[float, float, float] | float = 0.07
    n_seeds: int = 19
    n_human_seeds: int = 0
    rng_seed: int = 42

    def __post_init__(self):
        for name in ("human_score_mean", "human_score_sd", "bot_score_mean", "bot_score_sd"):
            object.__setattr__(self, name, _triple(getattr(self, name)))
        if self.n_humans < 1 or self.n_bots < 1:
            raise ValueError("n_humans and n_bots must be positive")
        if not 1 <= self.n_seeds <= self.n_bots:
            raise ValueError("n_seeds must lie in [1, n_bots]")
        if not 0 <= self.n_human_seeds <= self.n_humans:
            raise ValueError("n_human_seeds must lie in [0, n_humans]")
        for name in ("p_human_follows_human", "p_bot_follows_bot", "p_bot_follows_seed", "p_cross"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for m in self.human_score_mean + self.bot_score_mean:
            if not 0.0 <= m <= 1.0:
                raise ValueError("score means must lie in [0, 1]")
        for s in self.human_score_sd + self.bot_score_sd:
            if not s > 0:
                raise ValueError("score sds must be positive")

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown synthetic config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class GroundTruth:
    labels: dict[str, str]
    seeds: tuple[str, ...] = ()

    def __post_init__(self):
        for k, v in self.labels.items():
            if v not in ("human", "socialbot"):
                raise ValueError(f"bad truth label {v!r} for {k}")
        for s in self.seeds:
            if s not in self.labels:
                raise ValueError(f"seed {s} has no truth label")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "label"])
        for k in sorted(self.labels):
            w.writerow([k, self.labels[k]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GroundTruth":
        rows = csv.DictReader(io.StringIO(text))
        return cls({r["id"]: r["label"] for r in rows})


@dataclass
class SyntheticDataset:
    config: SyntheticConfig
    truth: GroundTruth
    seeds: tuple[str, ...]
    edges: set[tuple[str, str]]
    scores: dict[str, tuple[float, float, float]]
    graph_text: str = field(repr=False, default="")
    scores_text: str = field(repr=False, default="")

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "graph": out / "graph.txt",
            "scores": out / "scores.txt",
            "truth": out / "truth.csv",
            "seeds": out / "seeds.txt",
        }
        paths["graph"].write_text(self.graph_text, encoding="utf-8")
        paths["scores"].write_text(self.scores_text, encoding="utf-8")
        paths["truth"].write_text(self.truth.to_csv(), encoding="utf-8")
        paths["seeds"].write_text("".join(s + "\n" for s in self.seeds), encoding="utf-8")
        return paths


def truncated_normal(rng: np.random.Generator, mean: float, sd: float, size: int, max_attempts: int = 100) -> np.ndarray:
    """Normal draws restricted to [0, 1] by resampling; leftovers are clamped."""
    out = rng.normal(mean, sd, size)
    for _ in range(max_attempts):
        bad = (out < 0.0) | (out > 1.0)
        if not bad.any():
            return out
        out[bad] = rng.normal(mean, sd, int(bad.sum()))
    return np.clip(out, 0.0, 1.0)


def _follow_block(rng, sources, targets, p, edges):
    if p <= 0:
        return
    tgt = np.asarray(targets)
    for s in sources:
        k = rng.binomial(len(tgt), p)
        if k == 0:
            continue
        for t in rng.choice(len(tgt), size=k, replace=False):
            t = int(tgt[t])
            if t != s:
                edges.add((int(s), t))


def generate_synthetic(config: SyntheticConfig = SyntheticConfig()) -> SyntheticDataset:
    rng = np.random.default_rng(config.rng_seed)
    nb, nh = config.n_bots, config.n_humans
    total = nb + nh
    ids = [str(ID_BASE + int(x)) for x in rng.permutation(total)]
    bots = list(range(nb))
    humans = list(range(nb, total))
    seed_idx = bots[: config.n_seeds] + humans[: config.n_human_seeds]

    edges: set[tuple[int, int]] = set()
    _follow_block(rng, humans, humans, config.p_human_follows_human, edges)
    _follow_block(rng, bots, bots, config.p_bot_follows_bot, edges)
    _follow_block(rng, bots, seed_idx, config.p_bot_follows_seed, edges)
    _follow_block(rng, humans, bots, config.p_cross, edges)
    _follow_block(rng, bots, humans, config.p_cross, edges)

    cols = []
    for axis in range(3):
        b = truncated_normal(rng, config.bot_score_mean[axis], config.bot_score_sd[axis], nb)
        h = truncated_normal(rng, config.human_score_mean[axis], config.human_score_sd[axis], nh)
        cols.append(np.concatenate([b, h]))
    score_mat = np.column_stack(cols)

    labels = {ids[i]: ("socialbot" if i < nb else "human") for i in range(total)}
    seeds = tuple(ids[i] for i in seed_idx)
    str_edges = {(ids[f], ids[g]) for f, g in edges}
    scores = {ids[i]: tuple(float(v) for v in score_mat[i]) for i in range(total)}

    followers: dict[str, list[str]] = {i: [] for i in ids}
    followees: dict[str, list[str]] = {i: [] for i in ids}
    for f, g in str_edges:
        followers[g].append(f)
        followees[f].append(g)
    lines = [f"# synthetic planted botnet, rng_seed={config.rng_seed}"]
    for a in sorted(ids):
        lines.append(" ".join(["followers", a, *sorted(followers[a])]))
        lines.append(" ".join(["followees", a, *sorted(followees[a])]))
    graph_text = "\n".join(lines) + "\n"
    score_lines = [f"{a} {s[0]:.6f} {s[1]:.6f} {s[2]:.6f}" for a, s in sorted(scores.items())]
    scores_text = "# id temporal network friend\n" + "\n".join(score_lines) + "\n"

    return SyntheticDataset(
        config=config,
        truth=GroundTruth(labels, seeds),
        seeds=seeds,
        edges=str_edges,
        scores=scores,
        graph_text=graph_text,
        scores_text=scores_text,
    )


class UnknownAccountError(KeyError):
    pass


@dataclass(frozen=True)
class EvaluationReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float | None
    recall: float | None
    f1: float | None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("tp", "fp", "fn", "tn", "precision", "recall", "f1")}


def confusion_report(tp: int, fp: int, fn: int, tn: int) -> EvaluationReport:
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    f1 = None
    if precision is not None and recall is not None:
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvaluationReport(tp, fp, fn, tn, precision, recall, f1)


def evaluate_detection(labeled: NetworkSnapshot, truth: GroundTruth) -> EvaluationReport:
    """Confusion counts over accounts carrying a human/socialbot label."""
    tp = fp = fn = tn = 0
    for aid, rec in labeled.accounts.items():
        if rec.label == "unknown":
            continue
        if aid not in truth.labels:
            raise UnknownAccountError(f"account {aid} has no ground-truth label")
        pred = rec.label == "socialbot"
        real = truth.labels[aid] == "socialbot"
        if pred and real:
            tp += 1
        elif pred:
            fp += 1
        elif real:
            fn += 1
        else:
            tn += 1
    return confusion_report(tp, fp, fn, tn)


def estimate_user_base(internet_users: int, platform_fraction: float) -> int:
    """Platform users implied by an internet population and an adoption share."""
    if internet_users <= 0:
        raise ValueError("internet_users must be positive")
    if not 0.0 < platform_fraction <= 1.0:
        raise ValueError("platform_fraction must lie in (0, 1]")
    return int(round(internet_users * platform_fraction))
